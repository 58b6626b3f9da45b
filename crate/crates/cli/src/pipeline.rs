use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};
use sheetflat_core::io::{load_mesh, positions_obj_string, uv_obj_string, write_obj};
use sheetflat_core::mm::edge_length_rms_error;
use sheetflat_core::{
    abf_flatten, compute_metrics, detect_folds, heatmap, lscm_flatten, rasterize_texture, select_pins, Algorithm,
    Channels, Error, MMConfig, MetricsReport, Point3, SpringSystem, TriMesh3, UVMap,
};

use crate::config::{HeatmapMetric, MeshSource, RunConfig};
use crate::report::{
    ComparisonReport, Diagnostics, FailureRecord, MeshSummary, Outcome, PairResult, RunTimings, StageTimings,
};
use crate::synthetic;

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";

struct LoadedMesh {
    name: String,
    source: MeshSource,
    mesh: Arc<TriMesh3>,
}

/// Names safe for file names and unique within the run.
fn unique_name(base: &str, taken: &[LoadedMesh]) -> String {
    let clean: String = base
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    let mut name = clean.clone();
    let mut k = 2;
    while taken.iter().any(|m| m.name == name) {
        name = format!("{clean}_{k}");
        k += 1;
    }
    name
}

fn load_inputs(config: &RunConfig) -> Result<Vec<LoadedMesh>> {
    let mut out: Vec<LoadedMesh> = Vec::new();
    for source in &config.inputs {
        let name = unique_name(&source.default_name(), &out);
        let mesh = match source {
            MeshSource::File { path } => {
                load_mesh(path, None).with_context(|| format!("loading {}", path.display()))?
            }
            MeshSource::Synthetic { generator, n } => {
                let mesh = synthetic::generate(*generator, *n)?;
                write_obj(&mesh, config.out_dir.join(format!("{name}.obj")))?;
                mesh
            }
        };
        out.push(LoadedMesh {
            name,
            source: source.clone(),
            mesh: Arc::new(mesh),
        });
    }
    Ok(out)
}

fn failure(err: &Error, stage: &str) -> FailureRecord {
    FailureRecord {
        kind: err.kind().to_string(),
        message: err.to_string(),
        stage: stage.to_string(),
    }
}

/// Spring simulation with optional OBJ snapshots every `every` steps.
fn run_mm(
    mesh: &Arc<TriMesh3>,
    config: &MMConfig,
    dump: Option<(u64, &Path)>,
) -> Result<sheetflat_core::Result<(UVMap, Diagnostics)>> {
    let mut system = match SpringSystem::new(mesh, config.clone()) {
        Ok(s) => s,
        Err(e) => return Ok(Err(e)),
    };
    let mut io_error: Option<std::io::Error> = None;
    let snapshot = |s: &SpringSystem, dir: &Path| -> std::io::Result<()> {
        let points: Vec<Point3<f64>> = s.positions.iter().map(|&p| Point3::from(p)).collect();
        fs::write(
            dir.join(format!("step_{:08}.obj", s.step_count())),
            positions_obj_string(&points, s.mesh().faces()),
        )
    };
    if let Some((_, dir)) = dump {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        snapshot(&system, dir)?;
    }
    let outcome = system.simulate_with(|s| {
        if let Some((every, dir)) = dump {
            if s.step_count() % every == 0 && io_error.is_none() {
                io_error = snapshot(s, dir).err();
            }
        }
    });
    if let Some(e) = io_error {
        return Err(e).context("writing trajectory snapshot");
    }
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => return Ok(Err(e)),
    };
    let projection = match system.project_to_plane() {
        Ok(p) => p,
        Err(e) => return Ok(Err(e)),
    };
    let diagnostics = Diagnostics::Mm {
        converged: outcome.converged,
        steps: outcome.steps,
        kinetic_energy: outcome.kinetic_energy,
        residual_force: outcome.residual_force,
        max_abs_z: projection.max_abs_z,
        edge_length_rms_error: edge_length_rms_error(&projection.uv),
        fold_face_ids: detect_folds(&projection.uv),
    };
    Ok(Ok((projection.uv, diagnostics)))
}

fn flatten(
    mesh: &Arc<TriMesh3>,
    algorithm: Algorithm,
    config: &RunConfig,
    name: &str,
) -> Result<sheetflat_core::Result<(UVMap, Diagnostics)>> {
    Ok(match algorithm {
        Algorithm::Lscm => select_pins(mesh).and_then(|pins| {
            let uv = lscm_flatten(mesh, &pins)?;
            Ok((
                uv,
                Diagnostics::Lscm {
                    pins: [pins.a, pins.b],
                    pin_distance: (pins.pos_b - pins.pos_a).norm(),
                },
            ))
        }),
        Algorithm::Abf => abf_flatten(mesh).map(|(sol, rec)| {
            let diagnostics = Diagnostics::Abf {
                iterations: sol.iterations,
                converged: sol.converged,
                face_sum_residual: sol.residuals.face_sum,
                vertex_sum_residual: sol.residuals.vertex_sum,
                sine_product_residual: sol.residuals.sine_product,
                gradient_inf: sol.gradient_inf,
                angle_inconsistencies: rec.inconsistencies.len(),
            };
            (rec.uv, diagnostics)
        }),
        Algorithm::Mm => {
            let dir = config.out_dir.join("trajectory").join(name);
            return run_mm(mesh, &config.mm, config.dump_trajectory.map(|k| (k, dir.as_path())));
        }
    })
}

fn heatmap_values(metrics: &MetricsReport, metric: HeatmapMetric) -> Vec<f64> {
    match metric {
        HeatmapMetric::Angular => metrics.face_angular_error(),
        HeatmapMetric::Area => metrics.face_area_error.clone(),
        HeatmapMetric::Stretch => metrics.face_l2.clone(),
    }
}

/// Color range shared by every algorithm's heatmap of one mesh.
fn heatmap_range(metric: HeatmapMetric, values: &[Vec<f64>]) -> (f64, f64) {
    let max = values.iter().flatten().fold(0.0f64, |m, &v| m.max(v));
    match metric {
        HeatmapMetric::Area => (0.0, 1.0),
        HeatmapMetric::Angular => (0.0, max.max(1e-12)),
        HeatmapMetric::Stretch => (1.0, max.max(1.0 + 1e-12)),
    }
}

struct Pending {
    result: PairResult,
    uv: Option<UVMap>,
}

fn write_artifact(out_dir: &Path, name: String, bytes: &[u8], artifacts: &mut Vec<String>) -> Result<()> {
    let path = out_dir.join(&name);
    fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    artifacts.push(name);
    Ok(())
}

/// Flattens every input with every requested algorithm, measures, renders
/// and writes the report. Pair failures are recorded in the report; only
/// configuration and I/O problems are errors.
pub fn run_pipeline(config: &RunConfig) -> Result<ComparisonReport> {
    config.validate()?;
    let started = Instant::now();
    fs::create_dir_all(&config.out_dir)
        .with_context(|| format!("creating output directory {}", config.out_dir.display()))?;
    let meshes = load_inputs(config)?;

    let mut results = Vec::new();
    for loaded in &meshes {
        let mut pending: Vec<Pending> = Vec::new();
        for &algorithm in &config.algorithms {
            let prefix = format!("{}_{}", loaded.name, algorithm.as_str().to_ascii_lowercase());
            let mut timings = StageTimings::default();
            let mut artifacts = Vec::new();

            let t = Instant::now();
            let flattened = flatten(&loaded.mesh, algorithm, config, &loaded.name)?;
            timings.flatten_s = t.elapsed().as_secs_f64();

            let t = Instant::now();
            let measured = flattened.and_then(|(uv, diag)| Ok((compute_metrics(&uv)?, uv, diag)));
            timings.metrics_s = t.elapsed().as_secs_f64();

            let (outcome, uv) = match measured {
                Ok((metrics, uv, diagnostics)) => {
                    write_artifact(&config.out_dir, format!("{prefix}_uv.obj"), uv_obj_string(&uv).as_bytes(), &mut artifacts)?;
                    (
                        Outcome::Ok {
                            metrics: Box::new(metrics),
                            diagnostics,
                        },
                        Some(uv),
                    )
                }
                Err(e) => {
                    let stage = if matches!(e, Error::DegenerateParameterization { .. }) { "metrics" } else { "flatten" };
                    (Outcome::Failed(failure(&e, stage)), None)
                }
            };
            pending.push(Pending {
                result: PairResult {
                    mesh: loaded.name.clone(),
                    algorithm,
                    outcome,
                    artifacts,
                    timings,
                },
                uv,
            });
        }

        let ranges: Vec<(HeatmapMetric, (f64, f64))> = config
            .heatmaps
            .iter()
            .map(|&metric| {
                let values: Vec<Vec<f64>> = pending
                    .iter()
                    .filter_map(|p| p.result.metrics().map(|m| heatmap_values(m, metric)))
                    .collect();
                (metric, heatmap_range(metric, &values))
            })
            .collect();

        for p in &mut pending {
            let Some(uv) = p.uv.take() else { continue };
            let prefix = format!("{}_{}", loaded.name, p.result.algorithm.as_str().to_ascii_lowercase());
            let t = Instant::now();
            let mut artifacts = std::mem::take(&mut p.result.artifacts);
            let rendered = render(config, &uv, p.result.metrics().unwrap(), &ranges, &prefix, &mut artifacts)?;
            p.result.artifacts = artifacts;
            if let Err(e) = rendered {
                p.result.outcome = Outcome::Failed(failure(&e, "raster"));
            }
            p.result.timings.raster_s = t.elapsed().as_secs_f64();
        }
        results.extend(pending.into_iter().map(|p| p.result));
    }

    let report = ComparisonReport {
        format_version: config.format_version,
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        algorithms: config.algorithms.clone(),
        meshes: meshes
            .iter()
            .map(|m| MeshSummary {
                name: m.name.clone(),
                source: m.source.clone(),
                vertex_count: m.mesh.vertex_count(),
                face_count: m.mesh.face_count(),
                surface_area: m.mesh.total_area(),
                isolated_vertices: m.mesh.report().isolated_vertices.clone(),
            })
            .collect(),
        results,
        timings: RunTimings {
            total_s: started.elapsed().as_secs_f64(),
        },
    };
    let json_path = config.out_dir.join(REPORT_JSON);
    fs::write(&json_path, report.to_json()).with_context(|| format!("writing {}", json_path.display()))?;
    let text_path = config.out_dir.join(REPORT_TEXT);
    fs::write(&text_path, report.to_text()).with_context(|| format!("writing {}", text_path.display()))?;
    Ok(report)
}

/// Texture, fold mask and heatmaps of one pair. The outer error is I/O, the
/// inner one a rendering failure recorded against the pair.
fn render(
    config: &RunConfig,
    uv: &UVMap,
    metrics: &MetricsReport,
    ranges: &[(HeatmapMetric, (f64, f64))],
    prefix: &str,
    artifacts: &mut Vec<String>,
) -> Result<sheetflat_core::Result<()>> {
    let mesh = uv.mesh();
    if mesh.intensity().is_some() || mesh.texture().is_some() {
        let render = match rasterize_texture(uv, config.resolution) {
            Ok(r) => r,
            Err(e) => return Ok(Err(e)),
        };
        let ext = match render.image.channels() {
            Channels::Gray => "pgm",
            Channels::Rgb => "ppm",
        };
        write_artifact(&config.out_dir, format!("{prefix}_texture.{ext}"), &render.image.to_pnm_bytes(), artifacts)?;
        write_artifact(&config.out_dir, format!("{prefix}_folds.pgm"), &render.fold_mask.to_pnm_bytes(), artifacts)?;
    }
    for &(metric, range) in ranges {
        let image = match heatmap(uv, &heatmap_values(metrics, metric), range, config.resolution) {
            Ok(i) => i,
            Err(e) => return Ok(Err(e)),
        };
        write_artifact(&config.out_dir, format!("{prefix}_{}.ppm", metric.as_str()), &image.to_pnm_bytes(), artifacts)?;
    }
    Ok(Ok(()))
}
