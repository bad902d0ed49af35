use thiserror::Error;

/// Errors raised by the simulation modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("all amplitudes are zero")]
    ZeroVector,
    #[error("mode {label} lies outside the OAM truncation |m| <= {m_max}")]
    Truncation { label: String, m_max: u32 },
    #[error("truncation mismatch: {0} vs {1}")]
    TruncationMismatch(u32, u32),
    #[error("state has no weight on the logical qubit span")]
    DegenerateProjection,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },
    #[error("post-selection on coincidences is empty (p_cd = 0)")]
    EmptyPostSelection,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),
    #[error("histogram estimation failed: {0}")]
    Estimation(String),
    #[error("measurement set is not informationally complete (rank {rank} < {needed})")]
    Incomplete { rank: usize, needed: usize },
    #[error("budget configuration: {0}")]
    Configuration(String),
    #[error("data line {line}: {message}")]
    Data { line: usize, message: String },
}

impl Error {
    /// Name of the module a physics error originates from.
    pub fn module(&self) -> &'static str {
        match self {
            Error::ZeroVector
            | Error::Truncation { .. }
            | Error::TruncationMismatch(..)
            | Error::DegenerateProjection => "modes",
            Error::Parse { .. } => "elements",
            Error::EmptyPostSelection | Error::NotDensityMatrix(_) | Error::Dimension { .. } => {
                "gate"
            }
            Error::Estimation(_) => "fock2",
            Error::Incomplete { .. } => "tomo",
            Error::Configuration(_) => "budget",
            Error::Parameter(_) => "params",
            Error::Data { .. } => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
