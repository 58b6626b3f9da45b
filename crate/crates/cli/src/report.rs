//! The comparison report: a versioned JSON document and its plain-text
//! rendering as four mesh × algorithm tables.

use std::fmt::Write as _;

use serde::Serialize;
use sheetflat_core::{Algorithm, MetricsReport};

use crate::config::MeshSource;

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub format_version: u32,
    pub toolkit_version: String,
    pub algorithms: Vec<Algorithm>,
    pub meshes: Vec<MeshSummary>,
    /// One entry per (mesh, algorithm), meshes in input order, algorithms in
    /// requested order.
    pub results: Vec<PairResult>,
    pub timings: RunTimings,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshSummary {
    pub name: String,
    pub source: MeshSource,
    pub vertex_count: usize,
    pub face_count: usize,
    pub surface_area: f64,
    pub isolated_vertices: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Ok {
        metrics: Box<MetricsReport>,
        diagnostics: Diagnostics,
    },
    Failed(FailureRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRecord {
    /// Error variant name, e.g. `SolverFailure`.
    pub kind: String,
    pub message: String,
    /// Stage that failed: `flatten`, `metrics` or `raster`.
    pub stage: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "algorithm")]
pub enum Diagnostics {
    #[serde(rename = "LSCM")]
    Lscm { pins: [usize; 2], pin_distance: f64 },
    #[serde(rename = "ABF")]
    Abf {
        iterations: usize,
        converged: bool,
        face_sum_residual: f64,
        vertex_sum_residual: f64,
        sine_product_residual: f64,
        gradient_inf: f64,
        angle_inconsistencies: usize,
    },
    #[serde(rename = "MM")]
    Mm {
        converged: bool,
        steps: u64,
        kinetic_energy: f64,
        residual_force: f64,
        max_abs_z: f64,
        edge_length_rms_error: f64,
        fold_face_ids: Vec<usize>,
    },
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct StageTimings {
    pub flatten_s: f64,
    pub metrics_s: f64,
    pub raster_s: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunTimings {
    pub total_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairResult {
    pub mesh: String,
    pub algorithm: Algorithm,
    #[serde(flatten)]
    pub outcome: Outcome,
    /// Files written for this pair, relative to the output directory.
    pub artifacts: Vec<String>,
    pub timings: StageTimings,
}

impl PairResult {
    pub fn metrics(&self) -> Option<&MetricsReport> {
        match &self.outcome {
            Outcome::Ok { metrics, .. } => Some(metrics),
            Outcome::Failed(_) => None,
        }
    }

    pub fn failure(&self) -> Option<&FailureRecord> {
        match &self.outcome {
            Outcome::Failed(f) => Some(f),
            Outcome::Ok { .. } => None,
        }
    }
}

impl ComparisonReport {
    pub fn all_succeeded(&self) -> bool {
        self.results.iter().all(|r| r.failure().is_none())
    }

    pub fn get(&self, mesh: &str, algorithm: Algorithm) -> Option<&PairResult> {
        self.results
            .iter()
            .find(|r| r.mesh == mesh && r.algorithm == algorithm)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Four tables (L², L∞, F(M), E(M)) with one row per mesh and one
    /// column per algorithm; failed pairs show `---`.
    pub fn to_text(&self) -> String {
        type Pick = fn(&MetricsReport) -> f64;
        let tables: [(&str, Pick); 4] = [
            ("L2 stretch error", |m| m.l2_mesh),
            ("Linf stretch error", |m| m.linf_mesh),
            ("F(M) angular error", |m| m.f_mesh),
            ("E(M) area error", |m| m.e_mesh),
        ];
        let name_w = self.meshes.iter().map(|m| m.name.len()).max().unwrap_or(0).max(4);
        let col_w = 12;
        let mut out = String::new();
        let _ = writeln!(out, "sheetflat {} comparison report (format {})", self.toolkit_version, self.format_version);
        for (title, pick) in tables {
            let _ = writeln!(out, "\n{title}");
            let _ = write!(out, "{:<name_w$}", "Mesh");
            for a in &self.algorithms {
                let _ = write!(out, " {:>col_w$}", a.as_str());
            }
            let _ = writeln!(out);
            let _ = writeln!(out, "{}", "-".repeat(name_w + (col_w + 1) * self.algorithms.len()));
            for mesh in &self.meshes {
                let _ = write!(out, "{:<name_w$}", mesh.name);
                for &a in &self.algorithms {
                    let cell = match self.get(&mesh.name, a).and_then(PairResult::metrics) {
                        Some(m) => format!("{:.5}", pick(m)),
                        None => "---".to_string(),
                    };
                    let _ = write!(out, " {cell:>col_w$}");
                }
                let _ = writeln!(out);
            }
        }
        let failures: Vec<&PairResult> = self.results.iter().filter(|r| r.failure().is_some()).collect();
        if !failures.is_empty() {
            let _ = writeln!(out, "\nFailures");
            for r in failures {
                let f = r.failure().unwrap();
                let _ = writeln!(out, "{} / {}: {} during {}: {}", r.mesh, r.algorithm, f.kind, f.stage, f.message);
            }
        }
        out
    }
}

/// Copy of a report's JSON with every `timings` object removed, for
/// comparing runs.
pub fn strip_timings(json: &serde_json::Value) -> serde_json::Value {
    match json {
        serde_json::Value::Object(map) => serde_json::Value::Object(
            map.iter()
                .filter(|(k, _)| k.as_str() != "timings")
                .map(|(k, v)| (k.clone(), strip_timings(v)))
                .collect(),
        ),
        serde_json::Value::Array(items) => serde_json::Value::Array(items.iter().map(strip_timings).collect()),
        other => other.clone(),
    }
}
