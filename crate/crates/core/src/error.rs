use thiserror::Error;

pub type Result<T> = std::result::Result<T, TmpnnError>;

#[derive(Debug, Error)]
pub enum TmpnnError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    /// A non-finite value reached a place where only finite values are allowed.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// The iterated map overflowed. `step` is the layer index (0-based) whose
    /// input produced a non-finite output, `row` the sample row when known.
    #[error("forward pass diverged{}{}: layer input {input:?}",
        .step.map(|s| format!(" at step {s}")).unwrap_or_default(),
        .row.map(|r| format!(" on row {r}")).unwrap_or_default())]
    Divergence {
        step: Option<usize>,
        row: Option<usize>,
        input: Vec<f64>,
    },

    #[error(
        "training diverged in every batch of epoch {epoch}; \
         standardize the features or lower the learning rate"
    )]
    DivergentTraining { epoch: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("unknown column `{name}`; available columns: {}", .available.join(", "))]
    UnknownColumn {
        name: String,
        available: Vec<String>,
    },

    #[error("R² is undefined for a constant target column ({column})")]
    UndefinedR2 { column: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl TmpnnError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        TmpnnError::InvalidArgument(msg.into())
    }

    /// Attach a layer index to a divergence error.
    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            TmpnnError::Divergence { row, input, .. } => TmpnnError::Divergence {
                step: Some(step),
                row,
                input,
            },
            other => other,
        }
    }

    pub(crate) fn at_row(self, row: usize) -> Self {
        match self {
            TmpnnError::Divergence { step, input, .. } => TmpnnError::Divergence {
                step,
                row: Some(row),
                input,
            },
            other => other,
        }
    }

    pub fn is_divergence(&self) -> bool {
        matches!(self, TmpnnError::Divergence { .. })
    }
}
