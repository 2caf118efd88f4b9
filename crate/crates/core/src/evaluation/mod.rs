//! Threshold metrics, ROC/AUC and the outer cross-validation driver.

mod crossval;
mod export;
mod metrics;
mod roc;

pub use crossval::{
    crossval_audited, crossval_evaluate, crossval_with, Estimator, EvalReport, Fitted, FoldAudit, FoldMetrics,
    MetricSummary, Protocol, SamplerChoice, DEFAULT_THRESHOLD,
};
pub use export::{auc_grid_csv, auc_grid_markdown, metrics_csv, metrics_table_markdown, roc_tsv, GridCell};
pub use metrics::{basic_metrics, confusion, BasicMetrics, ConfusionCounts};
pub use roc::{roc_auc, RocPoint};
