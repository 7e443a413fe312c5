use thiserror::Error;

/// Failure modes shared by every module of the crate.
///
/// Variants split into two families: input validation (the request itself is
/// malformed) and numerical failures (the request is well formed but hits a
/// singularity, a branch point or a truncation limit). [`Error::is_validation`]
/// tells them apart.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular extension at point {index}: 1 + V/2m vanishes")]
    SingularExtension { index: usize },

    #[error("interaction matrix U is numerically singular")]
    SingularU,

    #[error("determinant is numerically zero")]
    SingularDet,

    #[error("determinant {re} + {im}i lies on the branch cut of the square root")]
    BranchAmbiguity { re: f64, im: f64 },

    #[error("degenerate parameter: 1 + mu vanishes")]
    DegenerateMu,

    #[error("alpha vanishes: element has no normal-ordered form")]
    AlphaZero,

    #[error("form factor index ({k}, {l}) outside the stable range (max {max})")]
    Overflow { k: usize, l: usize, max: usize },

    #[error("fusion of insertions {pair} and {} is singular (1 - nu*lambda vanishes)", pair + 1)]
    FusionSingular { pair: usize },

    #[error("truncated Fock computation not converged at dimension {dim} (change {change:e})")]
    TruncationNotConverged { dim: usize, change: f64 },

    #[error("subspaces {pair} are not transverse")]
    NotTransverse { pair: String },

    #[error("Wronskian vanishes: E lies in the point spectrum")]
    ZeroWronskian,

    #[error("singular input matrix: {0}")]
    SingularInput(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
}

impl Error {
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidInput(_))
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::SingularExtension { .. } => "SingularExtension",
            Error::SingularU => "SingularU",
            Error::SingularDet => "SingularDet",
            Error::BranchAmbiguity { .. } => "BranchAmbiguity",
            Error::DegenerateMu => "DegenerateMu",
            Error::AlphaZero => "AlphaZero",
            Error::Overflow { .. } => "Overflow",
            Error::FusionSingular { .. } => "FusionSingular",
            Error::TruncationNotConverged { .. } => "TruncationNotConverged",
            Error::NotTransverse { .. } => "NotTransverse",
            Error::ZeroWronskian => "ZeroWronskian",
            Error::SingularInput(_) => "SingularInput",
            Error::NotPositiveDefinite(_) => "NotPositiveDefinite",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
