use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite gradient component at index {index}: {value}")]
    NonFiniteGradient { index: usize, value: f64 },

    #[error("hyper-parameter {name} = {value} out of range at t = {t}")]
    InvalidHyperParameter { name: &'static str, value: f64, t: u64 },

    #[error("iteration index must be 1-based, got t = 0")]
    ZeroIteration,

    #[error("unknown schedule kind `{0}`")]
    UnknownSchedule(String),

    #[error("empty feasible box: lower > upper at index {index}")]
    EmptyBox { index: usize },

    #[error("projection weight at index {index} is not positive")]
    NonPositiveWeight { index: usize },

    #[error("degenerate gain matrix at beta={beta}, mu={mu}, tau={tau}")]
    DegeneratePoint { beta: f64, mu: f64, tau: f64 },

    #[error("stationary variance diverges: gain factor {gain} >= 1")]
    DivergentVariance { gain: f64 },

    #[error("imaginary residue {residue:e} exceeds tolerance")]
    ImaginaryResidue { residue: f64 },

    #[error("{what}: precondition violated: {}", failures.join("; "))]
    PreconditionViolated { what: &'static str, failures: Vec<String> },

    #[error("empty or inverted range [{lo}, {hi}]")]
    EmptyRange { lo: f64, hi: f64 },

    #[error("no convergent tau in [{lo}, {hi}]")]
    NoConvergentTau { lo: f64, hi: f64 },

    #[error("insufficient loss history: need {needed}, have {found}")]
    InsufficientHistory { needed: usize, found: usize },

    #[error("boost rejected: {0}")]
    BoostRejected(String),

    #[error("label {label} out of range (line {line})")]
    InvalidLabel { label: i64, line: usize },

    #[error("invalid batch index {index} for dataset of size {n}")]
    InvalidIndex { index: usize, n: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("ragged row at line {line}: expected {expected} fields, found {found}")]
    RaggedRow { line: usize, expected: usize, found: usize },

    #[error("empty dataset: {0}")]
    EmptyDataset(PathBuf),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("run diverged at t = {t}: {reason}")]
    Diverged { t: u64, reason: String },

    #[error("all grid entries diverged")]
    AllDiverged,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Diverged { .. } | Error::AllDiverged | Error::NonFiniteGradient { .. } => 3,
            Error::Io(_) => 4,
            Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => 4,
            _ => 2,
        }
    }
}
