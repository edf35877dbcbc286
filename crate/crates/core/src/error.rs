//! Error type shared by all engine operations.

use thiserror::Error;

/// Failure modes of the engine. Numerical payloads are reported in `f64`
/// regardless of the scalar type used for the computation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),
    #[error("gamma is not a unit vector (|gamma| = {0})")]
    NonUnitGamma(f64),
    #[error("theta = {0} lies outside (0, pi)")]
    ThetaOutOfRange(f64),
    #[error("|gamma3| = {0} exceeds 1")]
    Gamma3OutOfRange(f64),
    #[error("state lies on a pole (sin theta = 0)")]
    PoleState,
    #[error("invalid initial state: {0}")]
    InvalidState(String),
    #[error("pole reached with nonzero kappa")]
    PoleWithNonzeroKappa,
    #[error("pole gluing requires kappa = 0 and a state within 1e-8 of a pole")]
    InvalidGlue,
    #[error("singular inertia tensor")]
    SingularTensor,
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("maximum number of steps ({0}) exceeded")]
    MaxSteps(usize),
    #[error("non-finite state encountered at t = {t}")]
    NonFinite { t: f64 },
    #[error("(kappa, eps) = ({kappa}, {eps}) lies outside the region of possible motions")]
    OutsideRpm { kappa: f64, eps: f64 },
    #[error("branch {branch} requested but the level set has {count} component(s)")]
    NoSuchBranch { branch: usize, count: usize },
    #[error("orbit degenerates to a fixed point at theta = {theta}")]
    FixedPoint { theta: f64 },
    #[error("(theta, 0) is not a fixed point of the reduced system (G0 = {0})")]
    NotFixedPoint(f64),
    #[error("evaluation at the equator or at a pole is undefined here")]
    EquatorOrPole,
    #[error("inadmissible inclination: omega0^2 = {0} < 0")]
    Inadmissible(f64),
    #[error("operation requires alpha = 0")]
    RequiresBalanced,
    #[error("root finding failed: {0}")]
    RootFinding(String),
    #[error("configuration error: {0}")]
    Config(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;
