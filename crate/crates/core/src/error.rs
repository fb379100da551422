use thiserror::Error;

/// Errors raised by the analytic solvers, the simulator and parameter validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("root count mismatch: expected {expected} roots in {region}, found {found}")]
    RootCountMismatch {
        expected: usize,
        found: usize,
        region: &'static str,
    },

    #[error("root with modulus {modulus} lies within the boundary band of the unit circle")]
    Degenerate { modulus: f64 },

    #[error("repeated root detected (min pairwise distance {distance:e}); confluent basis not supported")]
    RepeatedRoot { distance: f64 },

    #[error("Lundberg root {root} collides with pole {pole}")]
    PoleCollision { root: String, pole: f64 },

    #[error("Cauchy system is numerically singular (min pairwise distance {distance:e})")]
    NearSingular { distance: f64 },

    #[error("closed-form and direct Cauchy solutions disagree (relative difference {relative:e})")]
    CauchyMismatch { relative: f64 },

    #[error("boundary linear system of size {size} is numerically singular")]
    SingularSystem { size: usize },

    #[error("capital {0} is not an integer; the lattice solver only accepts integer capital (use the stochastic-reward solver for continuous capital)")]
    NonIntegerCapital(f64),

    #[error("net profit condition violated: {0}")]
    NetProfitViolated(String),

    #[error("no negative solution of the adjustment equation found ({0})")]
    NoNegativeRoot(String),

    #[error("no positive solution of the adjustment equation found ({0})")]
    NoPositiveRoot(String),

    #[error("Abel-Gontcharov polynomial of degree {degree} needs {degree} nodes, got {available}")]
    InsufficientNodes { degree: usize, available: usize },

    #[error("parameters exceed the small-scale guard: v_N = {index} > {limit}")]
    ScaleGuard { index: u64, limit: u64 },

    #[error("Abel-Gontcharov recursion unstable at degree {degree} (|G| = {magnitude:e})")]
    InstabilityDetected { degree: usize, magnitude: f64 },

    #[error("roots are not closed under conjugation (defect {defect:e})")]
    ConjugateClosure { defect: f64 },

    #[error("root residual {residual:e} exceeds tolerance {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },

    #[error("root finder did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
