//! Metrics, paired significance tests, cross-validation and the HA-window
//! grid search, plus their record and table output.

mod crossval;
mod grid;
mod metrics;
mod report;
mod stats;

pub use crossval::{crossval, run_fold, ExperimentConfig, FoldResult, Method};
pub use grid::{ha_grid_search, parse_range, CornerComparison, GridCell, GridResult, GridSpec};
pub use metrics::{compute_metrics, AggregateMetrics, LabelMap, Metrics};
pub use report::{fold_records, format_table, FoldRecord, TableRow};
pub use stats::{paired_t_test, t_two_sided_p, ComparisonResult};
