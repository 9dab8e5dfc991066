use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Domain(String),

    #[error("{what} did not converge after {terms} terms (last estimate {estimate:e})")]
    NonConvergence { what: &'static str, terms: usize, estimate: f64 },

    #[error("branch ambiguity between k = {k_prev:e} and k = {k:e}: phase jump {jump:.3} rad")]
    BranchAmbiguity { k_prev: f64, k: f64, jump: f64 },

    #[error("fit of {what} failed: max residual {residual:e} exceeds {tolerance:e}")]
    FitFailure { what: &'static str, residual: f64, tolerance: f64 },

    #[error("accuracy loss in {what}: estimate {estimate:e} exceeds {tolerance:e}")]
    AccuracyLoss { what: &'static str, estimate: f64, tolerance: f64 },

    #[error("kernel evaluated outside its validated domain at x = {0}")]
    KernelRange(f64),

    #[error("singular system: |R[{index}][{index}]| = {pivot:e}")]
    SingularSystem { index: usize, pivot: f64 },

    #[error("integral-equation residual {residual:e} at r = {r} exceeds {tolerance:e}")]
    ResidualExceeded { r: f64, residual: f64, tolerance: f64 },

    #[error("unknown {kind} strategy `{name}`")]
    UnknownStrategy { kind: &'static str, name: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
