use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid emitter array: {0}")]
    InvalidArray(String),

    #[error("invalid deformation: {0}")]
    InvalidDeformation(String),

    #[error("invalid source model: {0}")]
    InvalidModel(String),

    #[error(
        "series truncated at n_max = {n_max}: tail bound {tail:e} exceeds tolerance {tolerance:e}"
    )]
    TruncationTooSmall {
        n_max: usize,
        tail: f64,
        tolerance: f64,
    },

    #[error("array of {n_sources} source(s) is degenerate; at least {required} required")]
    DegenerateArray { n_sources: usize, required: usize },

    #[error("QFI is zero; the Cramér-Rao bound is unbounded")]
    ZeroInformation,

    #[error("{engine} engine supports at most {max} sources, got {n_sources}")]
    EngineLimit {
        engine: &'static str,
        n_sources: usize,
        max: usize,
    },

    #[error("permanent supports dimension at most {max}, got {dim}")]
    DimensionLimit { dim: usize, max: usize },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error(
        "identity {identity} violated for permutation {permutation:?}: deviation {deviation:e}"
    )]
    IdentityViolation {
        identity: String,
        permutation: Vec<usize>,
        deviation: f64,
    },

    #[error("fidelity step ladder too coarse: successive estimates differ by {relative_change:.3} (limit 0.1)")]
    StepTooLarge { relative_change: f64 },

    #[error("invalid step ladder: {0}")]
    InvalidSteps(String),

    #[error("quadrature did not converge: successive refinements differ by {relative_change:e}")]
    QuadratureDivergence { relative_change: f64 },

    #[error("estimator check requires stretch 1, got {0}")]
    UnsupportedStretch(f64),
}
