//! Crate-wide error type.

/// Everything that can go wrong while building kernels or running a scenario.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A constructor received a parameter outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A Theorem-3 (or per-lemma) hypothesis failed; the message names it.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    /// Explicit-scheme stability constraint violated.
    #[error("CFL violation: dt = {dt} exceeds limit {limit}")]
    Cfl { dt: f64, limit: f64 },
    /// A field picked up NaN/∞ — the simulation blew up.
    #[error("non-finite field value at t = {t}")]
    NonFinite { t: f64 },
    /// History lookup outside the retained window.
    #[error("history query t = {t} outside stored span [{lo}, {hi}]")]
    HistorySpan { t: f64, lo: f64, hi: f64 },
    /// The observability matrix stacked from (g₁(0), g₁(0)S_η) is singular.
    #[error("singular observability matrix T: pair (S_eta, g1(0)) not observable")]
    SingularT,
    /// The closed-form g-kernel denominator (2c₂−1)e^{−λ} − e^{λ} vanished.
    #[error("degenerate denominator in g-kernel closed form (omega = {omega}, c2 = {c2})")]
    DegenerateDenominator { omega: f64, c2: f64 },
    /// A complex intermediate that must be real was not.
    #[error("complex residual {residual} above tolerance in {context}")]
    ComplexResidual { context: &'static str, residual: f64 },
    /// Scenario file syntax/contents problem.
    #[error("scenario parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// Decay fitting needs at least 5 envelope peaks in the window.
    #[error("insufficient envelope peaks in fit window: found {found}, need {need}")]
    InsufficientPeaks { found: usize, need: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
