use thiserror::Error;

/// Errors shared across the algebra, layer, and training modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension cap exceeded: p+q+r = {n} > {cap}")]
    DimensionCap { n: usize, cap: usize },

    #[error("signature mismatch: left is {left}, right is {right}")]
    SignatureMismatch { left: String, right: String },

    #[error("grade {grade} out of range for an algebra of dimension {n}")]
    GradeOutOfRange { grade: usize, n: usize },

    #[error("not a versor-normable element: reverse(x)*x has non-scalar mass {mass:.3e}")]
    NotVersorNormable { mass: f64 },

    #[error("non-invertible (null) element: |scalar(reverse(u)*u)| = {scalar:.3e}")]
    NullVersor { scalar: f64 },

    #[error("expected a grade-1 versor (plane), got grades {grades:?}")]
    NotAPlane { grades: Vec<usize> },

    #[error("point has near-zero homogeneous weight {weight:.3e}")]
    ZeroWeightPoint { weight: f64 },

    #[error("action blade outside the configured mask: blade index {blade}")]
    MaskViolation { blade: usize },

    #[error("non-invertible action at output channel {out_channel}, input channel {in_channel}")]
    NonInvertibleAction {
        out_channel: usize,
        in_channel: usize,
    },

    #[error("shape mismatch: {context}")]
    ShapeMismatch { context: String },

    #[error("spatial dims {h}x{w} smaller than kernel {k}x{k} without padding")]
    KernelTooLarge { h: usize, w: usize, k: usize },

    #[error("non-finite gradient in parameter '{param}' at step {step}")]
    NonFiniteGradient { param: String, step: u64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
