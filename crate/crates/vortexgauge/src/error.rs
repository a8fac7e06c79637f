use thiserror::Error;

/// Errors raised across the crate. Each variant carries a stable machine
/// readable code through [`Error::code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("mesh refinement error: {0}")]
    Refinement(String),
    #[error("singular gauge: {0}")]
    SingularGauge(String),
    #[error("inconsistent discretization: {0}")]
    InconsistentDiscretization(String),
    #[error("incompatible fields: {0}")]
    Incompatible(String),
    #[error("iteration limit reached: {0}")]
    IterationLimit(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("non-admissible bundle: {0}")]
    NonAdmissible(String),
    #[error("step size error at s = {s}: {msg}")]
    StepSize { s: f64, msg: String },
    #[error("bifurcation solve failed: {0}")]
    Bifurcation(String),
    #[error("conditioning error: {0}")]
    Conditioning(String),
    #[error("path error: {0}")]
    Path(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "E_DOMAIN",
            Error::Refinement(_) => "E_REFINEMENT",
            Error::SingularGauge(_) => "E_SINGULAR_GAUGE",
            Error::InconsistentDiscretization(_) => "E_DISCRETIZATION",
            Error::Incompatible(_) => "E_INCOMPATIBLE",
            Error::IterationLimit(_) => "E_ITERATION_LIMIT",
            Error::Resolution(_) => "E_RESOLUTION",
            Error::Solver(_) => "E_SOLVER",
            Error::NonAdmissible(_) => "E_NON_ADMISSIBLE",
            Error::StepSize { .. } => "E_STEP_SIZE",
            Error::Bifurcation(_) => "E_BIFURCATION",
            Error::Conditioning(_) => "E_CONDITIONING",
            Error::Path(_) => "E_PATH",
            Error::Config(_) => "E_CONFIG",
            Error::Usage(_) => "E_USAGE",
            Error::Verification(_) => "E_VERIFY",
            Error::Io(_) => "E_IO",
            Error::Json(_) => "E_JSON",
            Error::Csv(_) => "E_CSV",
        }
    }

    /// Process exit status used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
