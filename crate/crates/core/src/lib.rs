//! Finitely acting operator algebras and their star-extendible embeddings.
//!
//! Algebras are concrete subspaces of block-diagonal complex matrices and maps
//! are given by the images of generators together with the induced
//! C*-extension on matrix units. On top of that sit Krull–Schmidt
//! decomposition, equivalence testing, embedding semirings, exact
//! combinatorics of interval partial maps and dimension modules of
//! stationary systems.

pub mod algebra;
pub mod combinat;
pub mod constructions;
pub mod dimmod;
pub mod error;
pub mod homkit;
pub mod numkit;
pub mod semiring;

pub use error::{Error, Result};
pub use numkit::{ComplexMatrix, SpectralClass, ToleranceProfile, C64};
