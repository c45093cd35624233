//! Voxel-level segmentation metrics, gap injection into ground-truth
//! skeletons, endpoint-level gap-closing metrics and parameter sweeps.

mod inject;
mod metrics;
mod sweep;

pub use inject::{inject_gaps, GapInjectionConfig, GapInjectionRecord, RemovedRun};
pub use metrics::{voxel_metrics, MetricsReport};
pub use sweep::{endpoint_connection_metrics, parameter_sweep, parameter_sweep_with, spearman, z_scale, Metric, SweepSurface};
