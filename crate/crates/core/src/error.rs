use thiserror::Error;

/// Failures reported by the simulator. Numerical failures carry enough
/// context to tell the caller what to change.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{field}` must be strictly positive and finite, got {value}")]
    NonPositive { field: &'static str, value: f64 },

    #[error("contradictory delay specification: cavity ratio implies T = {implied}, explicit delay is {explicit}")]
    ContradictoryDelay { implied: f64, explicit: f64 },

    #[error("operation requires a mirror (round-trip delay) but the line is open")]
    MirrorRequired,

    #[error("frequency grid must be positive and strictly increasing (offending index {index})")]
    InvalidGrid { index: usize },

    #[error("fit window [{lo}, {hi}] holds {points} grid points, at least {min} are required")]
    TooFewPoints {
        lo: f64,
        hi: f64,
        points: usize,
        min: usize,
    },

    #[error("Lorentzian fit did not converge after {iterations} iterations")]
    FitDidNotConverge { iterations: usize },

    #[error("time step {dt} exceeds the limit {limit}")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("energy grew to {ratio} times its initial value at t = {t}; the time-domain system is not dissipative")]
    EnergyGrowth { t: f64, ratio: f64 },

    #[error("dark-state condition ω_0 T = 2πn is not met (ω_0 T / 2π = {cycles})")]
    NotDarkState { cycles: f64 },

    #[error("a zero of the characteristic function lies on the contour near {re} {im:+}i")]
    BoundaryZero { re: f64, im: f64 },

    #[error("winding number {value} is not within 1e-3 of an integer")]
    NonIntegerWinding { value: f64 },

    #[error("sub-cell winding numbers do not add up ({children} vs parent {parent})")]
    InconsistentCount { parent: i64, children: i64 },

    #[error("Newton polishing failed in cell re=[{re_lo}, {re_hi}], im=[{im_lo}, {im_hi}]")]
    NewtonFailed {
        re_lo: f64,
        re_hi: f64,
        im_lo: f64,
        im_hi: f64,
    },

    #[error("reconstructed initial conditions miss by {mismatch} (limit {limit}); widen the pole window")]
    TruncationInsufficient { mismatch: f64, limit: f64 },

    #[error("eigenproblem is defective: eigenvalue {value} has no independent eigenvector")]
    Defective { value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
