//! Front end for the `afalg` library: file formats, reports, subcommands and
//! the verification suite.

pub mod checks;
pub mod commands;
pub mod files;
pub mod report;
