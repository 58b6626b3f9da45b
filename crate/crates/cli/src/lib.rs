//! Comparison pipeline behind the `sheetflat` command: loads or generates
//! meshes, flattens each with the requested algorithms, measures distortion,
//! renders textures and heatmaps, and writes a JSON plus text report.

pub mod config;
pub mod pipeline;
pub mod report;
pub mod synthetic;

pub use config::{ConfigError, HeatmapMetric, MeshSource, RunConfig};
pub use pipeline::run_pipeline;
pub use report::ComparisonReport;

/// Process exit status for a finished run.
pub fn exit_code(report: &ComparisonReport) -> i32 {
    if report.all_succeeded() {
        0
    } else {
        2
    }
}
