use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::Parser;
use sheetflat_cli::config::load_mm_config;
use sheetflat_cli::synthetic::SyntheticKind;
use sheetflat_cli::{exit_code, run_pipeline, HeatmapMetric, MeshSource, RunConfig};
use sheetflat_core::{Algorithm, MMConfig};

/// Flatten triangulated surface patches with LSCM, ABF and a mass-spring
/// model, and compare their distortion.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// Mesh files (.obj or .ply).
    inputs: Vec<PathBuf>,

    /// Comma-separated subset of lscm, abf, mm.
    #[arg(long, value_delimiter = ',', default_value = "abf,lscm,mm")]
    algorithms: Vec<Algorithm>,

    #[arg(long, default_value = "sheetflat-out")]
    out_dir: PathBuf,

    /// Raster resolution in pixels per UV unit.
    #[arg(long, default_value_t = 50.0)]
    resolution: f64,

    /// Generate a test surface: plane, cylinder_sector, hemisphere_cap or ripple. Repeatable.
    #[arg(long, num_args = 2, value_names = ["KIND", "N"], action = clap::ArgAction::Append)]
    synthetic: Vec<String>,

    /// Write an OBJ snapshot of the spring simulation every K steps.
    #[arg(long, value_name = "K")]
    dump_trajectory: Option<u64>,

    /// Heatmaps to render.
    #[arg(long, value_delimiter = ',', default_value = "angular,area")]
    heatmaps: Vec<HeatmapMetric>,

    /// TOML file with spring-model settings; --mm-* flags override it.
    #[arg(long)]
    mm_config: Option<PathBuf>,
    #[arg(long)]
    mm_vertex_mass: Option<f64>,
    #[arg(long)]
    mm_stiffness: Option<f64>,
    #[arg(long)]
    mm_damping: Option<f64>,
    #[arg(long)]
    mm_gravity: Option<f64>,
    #[arg(long)]
    mm_timestep: Option<f64>,
    #[arg(long)]
    mm_ke_threshold: Option<f64>,
    #[arg(long)]
    mm_force_threshold: Option<f64>,
    #[arg(long)]
    mm_max_steps: Option<u64>,
    #[arg(long)]
    mm_collision_restitution: Option<f64>,
}

impl Cli {
    fn mm_config(&self) -> Result<MMConfig> {
        let mut mm = match &self.mm_config {
            Some(path) => load_mm_config(path)?,
            None => MMConfig::default(),
        };
        macro_rules! apply {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag { mm.$field = v; })*
            };
        }
        apply!(
            mm_vertex_mass => vertex_mass,
            mm_stiffness => stiffness,
            mm_damping => damping,
            mm_gravity => gravity,
            mm_timestep => timestep,
            mm_force_threshold => force_threshold,
            mm_max_steps => max_steps,
            mm_collision_restitution => collision_restitution
        );
        if let Some(v) = self.mm_ke_threshold {
            mm.ke_threshold = Some(v);
        }
        Ok(mm)
    }

    fn into_config(self) -> Result<RunConfig> {
        let mut inputs: Vec<MeshSource> = self.inputs.iter().map(|p| MeshSource::File { path: p.clone() }).collect();
        for pair in self.synthetic.chunks(2) {
            let generator: SyntheticKind = pair[0].parse().map_err(anyhow::Error::msg)?;
            let Ok(n) = pair[1].parse::<usize>() else {
                bail!("synthetic size `{}` is not a non-negative integer", pair[1]);
            };
            inputs.push(MeshSource::Synthetic { generator, n });
        }
        let mut config = RunConfig::new(inputs, self.out_dir.clone());
        config.mm = self.mm_config()?;
        config.algorithms = self.algorithms.clone();
        config.resolution = self.resolution;
        config.heatmaps = self.heatmaps.clone();
        config.dump_trajectory = self.dump_trajectory;
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<i32> {
    let config = cli.into_config()?;
    let report = run_pipeline(&config)?;
    print!("{}", report.to_text());
    eprintln!("report written to {}", config.out_dir.join(sheetflat_cli::pipeline::REPORT_JSON).display());
    Ok(exit_code(&report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
