use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use afalg::ToleranceProfile;
use afalg_cli::commands::*;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Parser)]
#[command(name = "afalg", version, about = "Embeddings of finitely acting operator algebras and their invariants")]
struct Cli {
    /// Report tolerance (overrides the default 1e-6).
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Time limit in seconds for bounded searches.
    #[arg(long, global = true, default_value_t = 10.0)]
    deadline: f64,
    /// Report zero runtimes, making output byte-stable for a fixed seed.
    #[arg(long, global = true)]
    no_timings: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Partial endomorphism counts, the order-preserving grid and recurrences.
    Enumerate {
        #[arg(long, default_value_t = 8)]
        r: usize,
        /// Also list the elements at the largest r.
        #[arg(long)]
        list: bool,
    },
    /// Compose two maps (files or construction names such as `phi_alpha:0.6`): THEN ∘ FIRST.
    Compose {
        first: String,
        then: String,
        /// Write the composed map description here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split a map into indecomposable summands.
    Decompose { map: String },
    /// Inner unitary equivalence of two maps.
    Equiv { first: String, second: String },
    /// Limit invariants of a system description, optionally compared with another.
    Dimmod {
        file: PathBuf,
        #[arg(long)]
        against: Option<PathBuf>,
    },
    /// Run the verification suite.
    VerifyPaper {
        /// Criterion number, check id fragment, or topic keyword.
        #[arg(long)]
        section: Option<String>,
        /// Restrict the bipartite lifting check to this n.
        #[arg(long)]
        n: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tol = match cli.tol {
        None => ToleranceProfile::default(),
        Some(t) => match ToleranceProfile::with_report(t) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("afalg: {e}");
                return ExitCode::from(1);
            }
        },
    };
    let common = Common { tol, seed: cli.seed, deadline: Duration::from_secs_f64(cli.deadline.max(0.0)) };
    let mut report = match &cli.cmd {
        Cmd::Enumerate { r, list } => cmd_enumerate(*r, *list),
        Cmd::Compose { first, then, out } => cmd_compose(first, then, out.as_deref(), &common),
        Cmd::Decompose { map } => cmd_decompose(map, &common),
        Cmd::Equiv { first, second } => cmd_equiv(first, second, &common),
        Cmd::Dimmod { file, against } => cmd_dimmod(file, against.as_deref(), &common),
        Cmd::VerifyPaper { section, n } => cmd_verify_paper(section.as_deref(), *n, &common),
    };
    if cli.no_timings {
        report = report.without_timings();
    }
    let text = match cli.format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json() + "\n",
    };
    // A closed pipe (e.g. `| head`) is not an error worth a panic.
    let _ = std::io::stdout().write_all(text.as_bytes());
    ExitCode::from(report.exit_code as u8)
}
