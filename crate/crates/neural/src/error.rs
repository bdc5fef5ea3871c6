use thiserror::Error;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
    #[error("target label {0} is not in the legal set")]
    TargetNotLegal(usize),
    #[error("legal label set is empty")]
    EmptyLegalSet,
    #[error("loss is not finite ({0})")]
    NonFiniteLoss(f64),
    #[error("weight file: {0}")]
    Format(String),
    #[error("tensor `{0}` not found in weight file")]
    MissingTensor(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl NeuralError {
    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        NeuralError::ShapeMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
