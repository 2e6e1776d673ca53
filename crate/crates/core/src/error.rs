use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("promise bound system has only the trivial root (trace of Q-hat {trace:.6} does not exceed 1)")]
    NoNontrivialBound { trace: f64 },

    #[error("autarky is the only sustainable allocation: {0}")]
    AutarkyOnly(String),

    #[error("{what} = {value} outside domain [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("value iteration did not converge after {sweeps} sweeps (last residual {last:.3e})")]
    NotConverged {
        sweeps: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("initial target {target} exceeds the largest sustainable promise {omega_max}")]
    InfeasibleTarget { target: f64, omega_max: f64 },

    #[error("shooting failed: {0}")]
    ShootDiverged(String),

    #[error("assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("empty support")]
    EmptySupport,

    #[error("return undefined: bond revenue is zero at d = {0}")]
    UndefinedReturn(f64),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by inputs rather than by numerical trouble.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameters(_)
                | Error::NoNontrivialBound { .. }
                | Error::AutarkyOnly(_)
                | Error::Domain { .. }
                | Error::InfeasibleTarget { .. }
                | Error::AssumptionViolation(_)
                | Error::Undefined(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
