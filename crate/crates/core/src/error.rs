use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },
    #[error("label at row {index} is {value}, expected 0 or 1")]
    InvalidLabel { index: usize, value: u8 },
    #[error("row {index} is labeled (s = 1) but its true class is negative")]
    ScarViolation { index: usize },
    #[error("observed labels are all equal; need both labeled and unlabeled rows")]
    DegenerateLabels,
    #[error("no labeled (s = 1) examples")]
    NoLabeledExamples,
    #[error("ground-truth labels are required")]
    MissingTruth,
    #[error("ground truth contains a single class")]
    SingleClassTruth,
    #[error("direction vector is zero")]
    ZeroDirection,
    #[error("zero vector")]
    ZeroVector,
    #[error("label frequency {0} outside (0, 1]")]
    COutOfRange(f64),
    #[error("complete separation detected (|score| > 30 with no ridge)")]
    SeparationDetected,
    #[error("Hessian system could not be solved")]
    SingularHessian,
    #[error("every JOINT restart failed")]
    AllRestartsFailed,
    #[error("feature {index} ({name}) is constant")]
    ConstantFeature { index: usize, name: String },
    #[error("split leaves an empty partition (train {train}, test {test})")]
    EmptySplit { train: usize, test: usize },
    #[error("invalid case weights: {0}")]
    InvalidWeights(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}
