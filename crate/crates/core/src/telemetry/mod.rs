//! Telemetry plumbing: the append-only record store, day-based k-fold
//! splits, RANSAC outlier filtering, cleaning, and MAPE.

mod clean;
mod folds;
mod metrics;
mod ransac;
mod store;

pub use clean::{clean_records, CleanConfig, CleanReport};
pub use folds::{kfold_by_days, FoldError, FoldSplit};
pub use metrics::{mape, MetricError};
pub use ransac::{ransac_filter, RansacError, RansacFit};
pub use store::{read_records, RecordStore, StoreError};
