use thiserror::Error;

/// Errors shared across the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown function id `{0}`")]
    UnknownId(String),
    #[error("invalid parameters for `{id}`: {reason}")]
    InvalidParams { id: String, reason: String },
    #[error("gamma pole at non-positive integer {0}")]
    PoleAtNonpositiveInteger(f64),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("no closed-form kernel for `{0}`")]
    NoClosedForm(String),
    #[error("no closed-form oracle for `{0}`")]
    NoOracle(String),
    #[error("function is not inner; shifted-line transform unavailable")]
    NotInner,
    #[error("continuation strip too narrow for shift c = {0}")]
    StripTooNarrow(f64),
    #[error("delta at {location} reflects off the grid lattice (offset {offset:.3e} of a cell)")]
    DeltaOffGrid { location: f64, offset: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("operator norm {norm} violates the margin {margin} at t = {t}")]
    NearSingular { t: f64, norm: f64, margin: f64 },
    #[error("solve residual {residual:.3e} exceeds {bound:.3e}")]
    ResidualCheck { residual: f64, bound: f64 },
    #[error("diagonal value too small: |{which}(t,t)| = {value:.3e} (condition K3)")]
    K3Violation { which: &'static str, value: f64 },
    #[error("Re(Phi(t,t) conj(Psi(t,t))) = {0:.3e} is not positive (condition K7)")]
    K7Violation(f64),
    #[error("Re(Phi(t,t) conj(Psi(t,t))) vanishes; Hamiltonian undefined")]
    DegenerateDiagonal,
    #[error("delta component at {0} lies inside the compression window; solve unsupported")]
    DeltaInCompression(f64),
    #[error("delta located at the diagonal evaluation point x = t = {0}")]
    DeltaAtDiagonal(f64),
    #[error("tail has not decayed at the window edge: {0}")]
    TailNotDecayed(String),
    #[error("oscillation under-resolved: h*|z| = {0:.3e} exceeds the cap {1:.3e}")]
    OscillationUnderResolved(f64, f64),
    #[error("ODE step too coarse: step-doubling estimate {estimate:.3e} exceeds budget {budget:.3e}")]
    StepSizeTooCoarse { estimate: f64, budget: f64 },
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    #[error("diagonal singularity: |w - conj(z)| = {0:.3e}")]
    DiagonalSingularity(f64),
    #[error("operator norms decrease along the scan: norm({t_prev}) = {prev:.6e} > norm({t}) = {cur:.6e}")]
    NormMonotonicityViolated {
        t_prev: f64,
        prev: f64,
        t: f64,
        cur: f64,
    },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
