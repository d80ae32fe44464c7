use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Dini integral diverges: {0}")]
    DiniDivergent(String),
    #[error("profile increases between samples {0:?}")]
    NonMonotone(Vec<(usize, usize)>),
    #[error("profile is not strictly positive at r = {0}")]
    NonPositiveProfile(f64),
    #[error("coefficient {which} exceeds the envelope at node {node}")]
    EnvelopeViolation { node: usize, which: &'static str },
    #[error("tau = {tau} is below alpha = {alpha}")]
    BadTau { tau: f64, alpha: f64 },
    #[error("order alpha = {alpha} outside (0, {upper}) for n = {n}")]
    BadOrder { n: usize, alpha: f64, upper: f64 },
    #[error("angular mean is infinite on the diagonal r = s; use the principal-value path")]
    SingularDiagonal,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid too coarse: principal-value correction is {ratio:.3} of the off-diagonal mass in row {row}")]
    GridTooCoarse { row: usize, ratio: f64 },
    #[error("function and operator live on different grids")]
    GridMismatch,
    #[error("operator assembly supports n = 1 and n = 3, got n = {0}")]
    UnsupportedDimension(usize),
    #[error("source tail power {tail_power} must exceed alpha = {alpha}")]
    NonIntegrableTail { tail_power: f64, alpha: f64 },
    #[error("source must vanish at infinity, limit is {0}")]
    NonzeroSourceLimit(f64),
    #[error("non-positive value at node {index}")]
    NonPositiveValues { index: usize },
    #[error("need at least {needed} nodes in the fitting range, found {found}")]
    InsufficientNodes { found: usize, needed: usize },
    #[error("no positive constant C satisfies the budget")]
    CannotFitBudget,
    #[error("sub/supersolution pair is not ordered at node {node}")]
    NotOrdered { node: usize },
    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),
    #[error("no convergence after {iterations} iterations (last update {last_update:.3e})")]
    NoConvergence { iterations: usize, last_update: f64 },
    #[error("tail has not settled: last increment {last:.3e} vs previous {previous:.3e}")]
    TailNotSettled { last: f64, previous: f64 },
    #[error("quadrature did not reach tolerance (estimate {estimate:.3e}, error {error:.3e})")]
    QuadratureFailure { estimate: f64, error: f64 },
    #[error("no positive theta passes the residual checks (residual at theta = 0 is {residual:.3e})")]
    NoAdmissibleTheta { residual: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

impl Error {
    /// Failures of the numerics itself, as opposed to rejected inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::TailNotSettled { .. }
                | Error::LinearSolveFailure(_)
                | Error::QuadratureFailure { .. }
                | Error::GridTooCoarse { .. }
                | Error::CannotFitBudget
                | Error::NoAdmissibleTheta { .. }
        )
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
