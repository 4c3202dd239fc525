use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("query inside obstacle at cell ({0}, {1})")]
    InsideObstacle(usize, usize),
    #[error("degenerate offset")]
    DegenerateOffset,
    #[error("density out of range: {0}")]
    DensityOutOfRange(f64),
    #[error("perception point outside region: r_p = {rp}, delta = {delta}")]
    OutsideRegion { rp: f64, delta: f64 },
    #[error("outside visual field: |alpha| = {alpha} rad exceeds half-angle {half_angle} rad")]
    OutsideVisualField { alpha: f64, half_angle: f64 },
    #[error("potential solve did not converge: residual {residual:.3e} after {iters} sweeps")]
    NotConverged { residual: f64, iters: usize },
    #[error("domain has no exit segment")]
    NoExit,
    #[error("transport CFL violated: displacement {0:.3} cells exceeds 1")]
    CflViolated(f64),
    #[error("NaN detected in {field} at step {step}")]
    NanDetected { field: &'static str, step: u64 },
    #[error("step limit reached at t = {t} after {steps} steps (collapsed time step?)")]
    StepLimit { t: f64, steps: u64 },
    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),
    #[error("invalid scenario:\n{}", .0.join("\n"))]
    InvalidScenario(Vec<String>),
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
