use thiserror::Error;

/// A single violated parameter constraint, reported by `model::validate_params`.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamViolation {
    /// `alpha < 0`: the vertex rotational stiffness must be nonnegative.
    AlphaNegative(f64),
    /// `kappa < 0`: the feedback gain must be nonnegative.
    KappaNegative(f64),
    /// `beta` outside `(0, 1)`: the mass ratio is a proper fraction.
    BetaOutOfRange(f64),
    /// `eta < 0`: the flow speed must be nonnegative.
    EtaNegative(f64),
    /// `gamma <= 0`: the tension coefficient must be positive.
    GammaNotPositive(f64),
    /// `gamma <= eta^2`: the effective tension `gamma - eta^2` must stay positive.
    TensionNonpositive { gamma: f64, eta: f64 },
    /// A parameter is NaN or infinite.
    NonFinite(&'static str),
}

impl std::fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::AlphaNegative(a) => write!(f, "alpha must be >= 0, got {a}"),
            Self::KappaNegative(k) => write!(f, "kappa must be >= 0, got {k}"),
            Self::BetaOutOfRange(b) => write!(f, "beta must lie in (0, 1), got {b}"),
            Self::EtaNegative(e) => write!(f, "eta must be >= 0, got {e}"),
            Self::GammaNotPositive(g) => write!(f, "gamma must be > 0, got {g}"),
            Self::TensionNonpositive { gamma, eta } => {
                write!(f, "gamma must exceed eta^2, got gamma = {gamma}, eta = {eta}")
            }
            Self::NonFinite(name) => write!(f, "{name} is not finite"),
        }
    }
}

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {}", format_violations(.0))]
    InvalidParams(Vec<ParamViolation>),

    #[error("edge grid needs at least {min} points, got {got}")]
    GridTooCoarse { got: usize, min: usize },

    #[error("states live on different grids")]
    GridMismatch,

    #[error("edge array length {got} does not match grid size {expected}")]
    ShapeMismatch { got: usize, expected: usize },

    #[error("state violates vertex conditions: {0}")]
    VertexConditions(String),

    #[error("step-size underflow at s = {s:.6e}")]
    StepSizeUnderflow { s: f64 },

    #[error("integrator exceeded the step budget")]
    TooManySteps,

    #[error("iteration failed to converge: {0}")]
    Nonconvergence(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),

    #[error("contour passes too close to a root of the characteristic function")]
    BoundaryTooClose,

    #[error("winding number {0:.3} is not close to an integer")]
    NonIntegralWinding(f64),

    #[error("singular linear system in {0}")]
    SingularSystem(&'static str),

    #[error("fundamental data carries no dense trajectories")]
    MissingTrajectories,

    #[error("energy is not positive at t = {t:.6e}; cannot fit a decay rate")]
    NonpositiveEnergy { t: f64 },

    #[error("malformed CSV at line {line}: {message}")]
    CsvFormat { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(violations: &[ParamViolation]) -> String {
    violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
