//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or operation shapes do not conform.
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    /// Backward pass requested from a non-scalar node.
    #[error("backward requires a scalar output node, got shape {shape:?}")]
    NonScalarOutput { shape: Vec<usize> },

    /// Value outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Contract violation (preconditions, invalid arguments).
    #[error("{0}")]
    Contract(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// CSV row with the wrong number of fields.
    #[error("malformed row at line {line}: expected {expected} fields, got {got}")]
    RowArity {
        line: u64,
        expected: usize,
        got: usize,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("no data rows")]
    NoDataRows,

    /// Continuous column with zero spread cannot be standardized.
    #[error("constant continuous column {column:?} (stddev 0)")]
    ConstantColumn { column: String },

    #[error("protected column {column:?} has no category {value:?}")]
    UnseenProtectedValue { column: String, value: String },

    #[error("unknown column {0:?}")]
    UnknownColumn(String),

    #[error("unknown feature group {0:?}")]
    UnknownGroup(String),

    /// Categorical value absent from the fitted vocabulary.
    #[error("out-of-vocabulary value {value:?} in column {column:?} at row {row}")]
    OutOfVocabulary {
        column: String,
        value: String,
        row: usize,
    },

    #[error("cannot parse {value:?} in column {column:?} at row {row} as a number")]
    NonNumeric {
        column: String,
        value: String,
        row: usize,
    },

    #[error("split fraction {0} would leave an empty side")]
    DegenerateSplit(f64),

    /// A metric was asked about a group with no members.
    #[error("empty {0} group")]
    EmptyGroup(&'static str),

    /// Disparate impact with a zero privileged positive rate.
    #[error("disparate impact undefined: privileged positive rate is 0")]
    UndefinedRatio,

    #[error("non-finite loss at epoch {epoch}, batch {batch} (learning rate blowup?)")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("model file format version {got} unsupported (expected {expected})")]
    FormatVersion { expected: u32, got: u32 },

    /// The model was trained against a different schema.
    #[error("schema fingerprint mismatch: model has {model}, data has {data}")]
    FingerprintMismatch { model: String, data: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
