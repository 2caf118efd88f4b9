use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column {col} ({column}): cannot read {value:?} as a number")]
    Parse {
        /// 1-based data row (the header is row 0).
        row: usize,
        /// 1-based column.
        col: usize,
        column: String,
        value: String,
    },

    #[error("label error at row {row}: {value:?} is not 0 or 1")]
    Label { row: usize, value: String },

    #[error("dataset has no data rows")]
    EmptyDataset,

    #[error("dataset contains {count} missing or non-finite values; drop or impute them before training")]
    MissingValues { count: usize },

    #[error("training requires both classes, found {positives} positive and {negatives} negative rows")]
    DegenerateLabels { positives: usize, negatives: usize },

    #[error("minority class has {minority} rows, fewer than the {k} folds requested")]
    InsufficientMinority { minority: usize, k: usize },

    #[error("need k < number of points, got k={k} with {n} points")]
    NeighborCount { k: usize, n: usize },

    #[error("SMOTE needs at least two minority rows, found {0}")]
    SmoteUnderflow(usize),

    #[error("requested {k} clusters but only {distinct} distinct points")]
    ClusterCount { k: usize, distinct: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("training diverged (non-finite loss at epoch {epoch}); try a smaller learning rate")]
    Divergence { epoch: usize },

    #[error("AUC is undefined when only one class is present")]
    UndefinedAuc,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("out-of-fold leakage: row {row_id} was in the training set of the model that scored it (base {base}, fold {fold})")]
    Leakage { row_id: u64, base: usize, fold: usize },

    #[error("model format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
