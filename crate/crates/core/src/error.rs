use thiserror::Error;

/// Errors produced by the model, solvers and simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rate `{0}` must be strictly positive")]
    NonPositiveRate(&'static str),

    #[error("rate `{0}` is not finite")]
    NonFinite(&'static str),

    #[error("rate `{0}` is zero; the closed form divides by it")]
    DegenerateRate(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("exponent {exponent:.3} exceeds the saturation threshold {limit:.3}")]
    Saturated { exponent: f64, limit: f64 },

    #[error("rates are not balanced: |lambda - a - b| = {gap:e}")]
    NotBalanced { gap: f64 },

    #[error("no sign change found while bracketing (last probe {last_probe})")]
    BracketFailure { last_probe: f64 },

    #[error("quadrature did not converge after {refinements} refinements (last change {change:e})")]
    QuadratureDivergence { refinements: u32, change: f64 },

    #[error("population cap {cap} exceeded")]
    PopulationCapExceeded { cap: u64 },

    #[error("node budget {budget} exceeded")]
    NodeBudgetExceeded { budget: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
