use thiserror::Error;

use crate::integrator::StiffnessReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("unsupported nonlinear term (k={k}, n={n}); k and n must lie in 1..=3")]
    UnsupportedTerm { k: u32, n: u32 },

    #[error("k*n = 1 defines no fundamental length or energy scale")]
    NoFundamentalLength,

    #[error("time step failed at t={t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error(
        "step size fell below dt_min at t={}: dt={:e}, max|h_i|={:e}, spectral radius ~ {:e}",
        .0.t, .0.dt, .0.max_abs_h_i, .0.spectral_radius
    )]
    Stiffness(Box<StiffnessReport>),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
