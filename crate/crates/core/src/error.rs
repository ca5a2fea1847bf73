use thiserror::Error;

/// Errors produced by curve validation, geometry, stepping, and series checks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("curve has {nodes} nodes; at least {min} required")]
    TooFewNodes { nodes: usize, min: usize },

    #[error("consecutive nodes {index} and {next} coincide")]
    DegenerateSegment { index: usize, next: usize },

    #[error("mesh ratio {ratio:.3} exceeds limit {limit:.3}")]
    MeshQuality { ratio: f64, limit: f64 },

    #[error("mesh degraded beyond limit after redistribution: ratio {ratio:.3} > {limit:.3}")]
    MeshDegraded { ratio: f64, limit: f64 },

    #[error("ambiguous turning number: integral {value:.4} is farther than {tol} from any integer")]
    AmbiguousTurningNumber { value: f64, tol: f64 },

    #[error("field has nonzero average {average:.3e}")]
    NonzeroAverage { average: f64 },

    #[error("curve is not immersed: {0}")]
    NotImmersed(String),

    #[error("linear solve residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    SolveResidual { residual: f64, tol: f64 },

    #[error("singular linear system: zero pivot at row {row}")]
    SingularSystem { row: usize },

    #[error("time step underflow: dt = {dt:.3e} at t = {t:.6e}")]
    StepUnderflow { dt: f64, t: f64 },

    #[error("step rejected with fixed dt = {dt:.3e}: {reason}")]
    FixedStepRejected { dt: f64, reason: String },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("series too short: {len} records, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("root finding failed: {0}")]
    RootFind(String),
}

pub type Result<T> = std::result::Result<T, Error>;
