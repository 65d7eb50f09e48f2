use thiserror::Error;

/// Errors raised while building or validating domain values.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("trajectory needs at least 3 samples, got {0}")]
    TooShort(usize),
    #[error("sampling period must be positive and finite, got {0}")]
    BadPeriod(f64),
    #[error("{field} row {row} has {got} columns, expected {expected}")]
    RaggedRow {
        field: &'static str,
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("{field} has {got} rows, expected {expected}")]
    LengthMismatch {
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("non-finite value in {field} at row {row}")]
    NonFinite { field: &'static str, row: usize },
    #[error("invalid segmentation: {0}")]
    Segmentation(String),
    #[error("invalid stiffness: {0}")]
    Stiffness(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("integration diverged at step {step}")]
    Diverged { step: usize },
    #[error("invalid simulator input: {0}")]
    Invalid(String),
}

impl SimError {
    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            SimError::Diverged { .. } => SimError::Diverged { step },
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SegmentError {
    #[error("cannot fit {m} segments to {interior} interior samples")]
    InfeasibleM { m: usize, interior: usize },
    #[error("time index {t} out of range for residual (valid 1..={max})")]
    IndexOutOfRange { t: usize, max: usize },
    #[error("mixture component {component} collapsed (weight {weight:e})")]
    DegenerateComponent { component: usize, weight: f64 },
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurrogateError {
    #[error("kernel matrix not positive definite even with jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },
    #[error("surrogate needs at least one training point")]
    Empty,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("segmentation failed: {0}")]
    Segment(#[from] SegmentError),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<PipelineError>,
    },
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: unexpected column `{column}`")]
    Schema { path: String, column: String },
    #[error("{path}: {source}")]
    Data {
        path: String,
        #[source]
        source: DataError,
    },
}
