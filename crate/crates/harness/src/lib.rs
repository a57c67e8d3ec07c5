//! Replication harness over the `spillover` crate: scenario configuration,
//! the cell-grid simulation engine, and evaluation metrics.

pub mod config;
pub mod metrics;
pub mod presets;
pub mod scenario;
