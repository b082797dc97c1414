use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (residual {residual:.3e}, allowed {allowed:.3e})")]
    NotHermitian { residual: f64, allowed: f64 },

    #[error("not a density matrix: {0}")]
    NotDensity(String),

    #[error("eigendecomposition did not converge")]
    EigenConvergence,

    #[error("function is undefined at eigenvalue {0:e}")]
    Domain(f64),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("multiplier search did not converge after {0} iterations")]
    RootFinding(usize),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("score matrix is not traceless (trace {0:e})")]
    NotTraceless(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("step size underflow at t = {0}")]
    StepSizeUnderflow(f64),

    #[error("step budget exhausted at t = {0}")]
    TooManySteps(f64),

    #[error("boundary collision at t = {t}: {detail}")]
    BoundaryCollision { t: f64, detail: String },

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors raised while stepping an ODE rather than while validating input.
    pub fn is_integration_failure(&self) -> bool {
        matches!(
            self,
            Error::StepSizeUnderflow(_)
                | Error::TooManySteps(_)
                | Error::BoundaryCollision { .. }
                | Error::RootFinding(_)
                | Error::EigenConvergence
        )
    }
}
