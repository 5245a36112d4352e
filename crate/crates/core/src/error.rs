use thiserror::Error;

pub type Result<T> = std::result::Result<T, MdLassoError>;

#[derive(Debug, Error)]
pub enum MdLassoError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("predictor column {index} is constant and cannot be standardized")]
    ConstantColumn { index: usize },

    #[error("need at least {needed} observations, found {found}")]
    TooFewObservations { needed: usize, found: usize },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("csv error at row {row}, column {column}: {message}")]
    CsvCell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("csv error: {0}")]
    Csv(String),

    #[error("response column `{0}` not found")]
    MissingResponse(String),

    #[error("unknown estimator `{0}`")]
    UnknownEstimator(String),

    #[error("trimming leaves {remaining} observations; at least 2 are required")]
    TrimmingTooSevere { remaining: usize },

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error(
        "tail condition violated: kappa at sqrt(c)/2 is {kappa:.6}, threshold is {threshold:.6}"
    )]
    TailCondition { kappa: f64, threshold: f64 },

    #[error("quadrature did not converge (estimate {estimate}, error {error_estimate})")]
    Quadrature { estimate: f64, error_estimate: f64 },

    #[error("no feasible scaling parameter in [{lo}, {hi}]")]
    NoFeasibleScale { lo: f64, hi: f64 },

    #[error("{0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for MdLassoError {
    fn from(e: csv::Error) -> Self {
        MdLassoError::Csv(e.to_string())
    }
}

impl MdLassoError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        MdLassoError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(MdLassoError::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
