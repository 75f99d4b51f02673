use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the simulator.
///
/// Variants fall in two broad classes, see [`Error::is_numerical_guard`]:
/// malformed input (bad arguments, unparseable configuration) and numerical
/// guards that refuse to produce an untrustworthy result.
#[derive(Debug, Error)]
pub enum Error {
    #[error("truncation too small: n_max = {n_max} leaves tail mass {tail_mass:.3e}")]
    TruncationTooSmall { n_max: usize, tail_mass: f64 },

    #[error("projection has vanishing probability {prob:.3e}")]
    ZeroNormProjection { prob: f64 },

    #[error("|gamma| = {gamma_abs:.4} is outside the controlled region |gamma| < sqrt({n_max})")]
    PhasePointOutOfRange { gamma_abs: f64, n_max: usize },

    #[error("grid of {points} points exceeds the limit of {limit}")]
    GridTooLarge { points: usize, limit: usize },

    #[error("integrator step too coarse: kappa*dt*n_max = {value:.4} > {limit}")]
    StepSizeGuard { value: f64, limit: f64 },

    #[error("need at least {need} samples, got {got}")]
    InsufficientSamples { got: usize, need: usize },

    #[error("no Q-function zero for (n1, n2) = ({n1}, {n2}): {reason}")]
    QZeroConstraint { n1: u32, n2: u32, reason: &'static str },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot parse {what} from {input:?}")]
    Parse { what: &'static str, input: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors raised by a numerical guard rather than by bad input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::TruncationTooSmall { .. }
                | Error::ZeroNormProjection { .. }
                | Error::PhasePointOutOfRange { .. }
                | Error::GridTooLarge { .. }
                | Error::StepSizeGuard { .. }
        )
    }
}
