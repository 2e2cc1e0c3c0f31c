use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid tolerance profile: {0}")]
    InvalidTolerance(String),
    #[error("matrix is not hermitian (residual {0:.3e})")]
    NotHermitian(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("quiver is not connected")]
    DisconnectedQuiver,
    #[error("invalid digraph: {0}")]
    InvalidDigraph(String),
    #[error("not star-extendible: relation {relation} has residual {residual:.3e}")]
    NotStarExtendible { relation: String, residual: f64 },
    #[error("generated C*-algebra of the domain is not simple")]
    NonSimpleDomain,
    #[error("wrong algebra kind: {0}")]
    WrongAlgebraKind(String),
    #[error("tolerance ambiguity: {0}")]
    ToleranceAmbiguity(String),
    #[error("rank did not stabilize within {0} steps")]
    NonStabilizing(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
