use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("precision overflow: rounding produced a non-finite value")]
    PrecisionOverflow,

    #[error("invalid precision: {0}")]
    InvalidPrecision(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("budget infeasible: {op} needs log2(1/u) >= {required_bits:.1}, machine provides {available_bits:.1}")]
    BudgetInfeasible {
        op: &'static str,
        required_bits: f64,
        available_bits: f64,
    },

    #[error("singular to working precision ({0})")]
    Singular(String),

    #[error("iteration diverged: {0}")]
    Diverged(String),

    #[error("loss of positive-definiteness: {0}")]
    NotPositiveDefinite(String),

    #[error("did not converge after {attempts} attempts: {reason}")]
    NoConvergence { attempts: usize, reason: String },

    #[error("bit budget exhausted: next step needs {required_bits:.1} bits, {available_bits:.1} available")]
    BitBudgetExhausted { required_bits: f64, available_bits: f64 },

    #[error("gap too large, rescale input (gap estimate {0})")]
    GapTooLarge(f64),

    #[error("alpha out of range: 1 - alpha = {0} must lie in (0, 1/100)")]
    AlphaOutOfRange(f64),

    #[error("no resolvable Fermi gap: {0}")]
    NoFermiGap(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error once stage wrappers are removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
