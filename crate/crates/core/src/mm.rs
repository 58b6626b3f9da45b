//! Material-model flattening: the mesh is simulated as a damped mass-spring
//! sheet that falls under gravity onto the plane `z = 0`, and the settled
//! positions are read off as UV coordinates.
//!
//! Only edge springs are modeled. Without bending or area terms the sheet is
//! free to fold over itself, which [`detect_folds`] reports.

use std::sync::Arc;

use nalgebra::{Matrix3, Point2, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TriMesh3;
use crate::uv::{Algorithm, UVMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MMConfig {
    pub vertex_mass: f64,
    /// Spring constant, force per unit length.
    pub stiffness: f64,
    /// Velocity damping coefficient.
    pub damping: f64,
    /// Acceleration toward the plane.
    pub gravity: f64,
    pub timestep: f64,
    /// Kinetic energy below which the sheet counts as settled; `None` means
    /// `1e-8` per vertex.
    pub ke_threshold: Option<f64>,
    /// Largest net force on any vertex (plane reaction excluded) for the
    /// sheet to count as settled.
    pub force_threshold: f64,
    pub max_steps: u64,
    /// Fraction of the normal velocity kept (reversed) on plane contact.
    pub collision_restitution: f64,
}

impl Default for MMConfig {
    fn default() -> Self {
        MMConfig {
            vertex_mass: 1.0,
            stiffness: 1000.0,
            damping: 5.0,
            gravity: 10.0,
            timestep: 1e-3,
            ke_threshold: None,
            force_threshold: 1e-2,
            max_steps: 500_000,
            collision_restitution: 0.0,
        }
    }
}

impl MMConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("vertex_mass", self.vertex_mass),
            ("stiffness", self.stiffness),
            ("damping", self.damping),
            ("timestep", self.timestep),
            ("force_threshold", self.force_threshold),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.gravity >= 0.0 && self.gravity.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "gravity must be non-negative, got {}",
                self.gravity
            )));
        }
        if let Some(t) = self.ke_threshold {
            if !(t > 0.0) {
                return Err(Error::InvalidConfig(format!("ke_threshold must be positive, got {t}")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.collision_restitution) {
            return Err(Error::InvalidConfig(format!(
                "collision_restitution must lie in [0, 1], got {}",
                self.collision_restitution
            )));
        }
        let bound = 2.0 * (self.vertex_mass / self.stiffness).sqrt();
        if !(self.timestep < bound) {
            return Err(Error::InvalidConfig(format!(
                "timestep {} violates the stability bound 2·sqrt(mass/k) = {bound}",
                self.timestep
            )));
        }
        Ok(())
    }

    fn ke_threshold_for(&self, n_vertices: usize) -> f64 {
        self.ke_threshold.unwrap_or(1e-8 * n_vertices as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spring {
    pub i: usize,
    pub j: usize,
    pub rest_length: f64,
}

#[derive(Debug, Clone)]
pub struct SpringSystem {
    mesh: Arc<TriMesh3>,
    pub positions: Vec<Vector3<f64>>,
    pub velocities: Vec<Vector3<f64>>,
    springs: Vec<Spring>,
    config: MMConfig,
    step_count: u64,
    forces: Vec<Vector3<f64>>,
    /// Largest net force (plane reaction excluded) at the start of the last step.
    residual_force: f64,
}

/// Result of [`SpringSystem::simulate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationOutcome {
    pub converged: bool,
    pub steps: u64,
    pub kinetic_energy: f64,
    pub residual_force: f64,
    pub max_abs_z: f64,
}

/// Rotation taking the smallest principal axis of the vertex covariance to
/// `+z`, with the sign chosen so the area-weighted normal points up.
fn plane_alignment(mesh: &TriMesh3) -> Rotation3<f64> {
    let v = mesh.vertices();
    let n = v.len().max(1) as f64;
    let centroid = v.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) / n;
    let mut cov = Matrix3::zeros();
    for p in v {
        let d = p.coords - centroid;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigen();
    let (k, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, &e)| if e < best.1 { (i, e) } else { best });
    let mut normal = eig.eigenvectors.column(k).into_owned();
    let area_normal = mesh.faces().iter().fold(Vector3::zeros(), |acc, f| {
        acc + (v[f[1]] - v[f[0]]).cross(&(v[f[2]] - v[f[0]]))
    });
    if normal.dot(&area_normal) < 0.0 {
        normal = -normal;
    }
    let z = Vector3::z();
    let cross = normal.cross(&z);
    let sin = cross.norm();
    let cos = normal.dot(&z);
    if sin < 1e-15 {
        return if cos > 0.0 {
            Rotation3::identity()
        } else {
            Rotation3::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI)
        };
    }
    Rotation3::from_axis_angle(&Unit::new_normalize(cross), sin.atan2(cos))
}

impl SpringSystem {
    /// One mass per vertex, one spring per unique edge at its 3D length.
    /// The mesh is rotated so its best-fit plane is horizontal and lifted so
    /// its lowest vertex touches `z = 0`.
    pub fn new(mesh: &Arc<TriMesh3>, config: MMConfig) -> Result<Self> {
        config.validate()?;
        let rotation = plane_alignment(mesh);
        let mut positions: Vec<Vector3<f64>> = mesh
            .vertices()
            .iter()
            .map(|p| if rotation == Rotation3::identity() { p.coords } else { rotation * p.coords })
            .collect();
        let lowest = positions.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
        if lowest.is_finite() && lowest != 0.0 {
            for p in &mut positions {
                p.z -= lowest;
            }
        }
        let springs = mesh
            .edges()
            .iter()
            .map(|&[i, j]| Spring {
                i,
                j,
                rest_length: (mesh.vertices()[j] - mesh.vertices()[i]).norm(),
            })
            .collect();
        let n = positions.len();
        Ok(SpringSystem {
            mesh: Arc::clone(mesh),
            positions,
            velocities: vec![Vector3::zeros(); n],
            springs,
            config,
            step_count: 0,
            forces: vec![Vector3::zeros(); n],
            residual_force: f64::INFINITY,
        })
    }

    pub fn mesh(&self) -> &Arc<TriMesh3> {
        &self.mesh
    }

    pub fn springs(&self) -> &[Spring] {
        &self.springs
    }

    pub fn config(&self) -> &MMConfig {
        &self.config
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.config.vertex_mass * self.velocities.iter().map(|v| v.norm_squared()).sum::<f64>()
    }

    pub fn spring_energy(&self) -> f64 {
        self.springs
            .iter()
            .map(|s| {
                let stretch = (self.positions[s.j] - self.positions[s.i]).norm() - s.rest_length;
                0.5 * self.config.stiffness * stretch * stretch
            })
            .sum()
    }

    pub fn gravitational_energy(&self) -> f64 {
        self.config.vertex_mass * self.config.gravity * self.positions.iter().map(|p| p.z).sum::<f64>()
    }

    /// Kinetic plus spring plus gravitational energy.
    pub fn total_energy(&self) -> f64 {
        self.kinetic_energy() + self.spring_energy() + self.gravitational_energy()
    }

    pub fn max_abs_z(&self) -> f64 {
        self.positions.iter().fold(0.0, |m, p| m.max(p.z.abs()))
    }

    /// Net force on every vertex at the current state.
    pub fn compute_forces(&mut self) -> &[Vector3<f64>] {
        let c = &self.config;
        for (f, v) in self.forces.iter_mut().zip(&self.velocities) {
            *f = -c.damping * v - Vector3::new(0.0, 0.0, c.vertex_mass * c.gravity);
        }
        for s in &self.springs {
            let d = self.positions[s.j] - self.positions[s.i];
            let len = d.norm();
            if len > 0.0 {
                let f = d * (c.stiffness * (len - s.rest_length) / len);
                self.forces[s.i] += f;
                self.forces[s.j] -= f;
            }
        }
        &self.forces
    }

    /// One semi-implicit Euler step followed by plane collision.
    pub fn step(&mut self) -> Result<()> {
        self.compute_forces();
        let c = self.config.clone();
        let mut residual: f64 = 0.0;
        for i in 0..self.positions.len() {
            let mut f = self.forces[i];
            if self.positions[i].z <= 0.0 && f.z < 0.0 {
                f.z = 0.0;
            }
            residual = residual.max(f.norm());

            self.velocities[i] += self.forces[i] * (c.timestep / c.vertex_mass);
            self.positions[i] += self.velocities[i] * c.timestep;
            if self.positions[i].z < 0.0 {
                self.positions[i].z = 0.0;
                if self.velocities[i].z < 0.0 {
                    self.velocities[i].z *= -c.collision_restitution;
                }
            }
        }
        self.residual_force = residual;
        self.step_count += 1;
        let finite = self
            .positions
            .iter()
            .chain(&self.velocities)
            .all(|v| v.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(Error::Diverged { step: self.step_count });
        }
        Ok(())
    }

    fn is_settled(&self) -> bool {
        self.kinetic_energy() <= self.config.ke_threshold_for(self.positions.len())
            && self.residual_force <= self.config.force_threshold
    }

    /// Steps until settled or `max_steps` is reached.
    pub fn simulate(&mut self) -> Result<SimulationOutcome> {
        self.simulate_with(|_| {})
    }

    /// Like [`SpringSystem::simulate`], calling `observer` after every step.
    pub fn simulate_with(&mut self, mut observer: impl FnMut(&SpringSystem)) -> Result<SimulationOutcome> {
        let mut converged = false;
        while self.step_count < self.config.max_steps {
            self.step()?;
            observer(self);
            if self.is_settled() {
                converged = true;
                break;
            }
        }
        Ok(SimulationOutcome {
            converged,
            steps: self.step_count,
            kinetic_energy: self.kinetic_energy(),
            residual_force: self.residual_force,
            max_abs_z: self.max_abs_z(),
        })
    }

    /// Drops `z` from the current positions.
    pub fn project_to_plane(&self) -> Result<Projection> {
        let uv = self.positions.iter().map(|p| Point2::new(p.x, p.y)).collect();
        Ok(Projection {
            uv: UVMap::new(Arc::clone(&self.mesh), uv, Algorithm::Mm)?,
            max_abs_z: self.max_abs_z(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub uv: UVMap,
    /// Largest distance from the plane discarded by the projection.
    pub max_abs_z: f64,
}

pub fn build_spring_system(mesh: &Arc<TriMesh3>, config: MMConfig) -> Result<SpringSystem> {
    SpringSystem::new(mesh, config)
}

/// Faces folded over in parameter space (orientation opposite the majority).
pub fn detect_folds(uv: &UVMap) -> Vec<usize> {
    uv.flipped_faces()
}

#[derive(Debug, Clone)]
pub struct MmResult {
    pub uv: UVMap,
    pub outcome: SimulationOutcome,
    pub max_abs_z: f64,
    pub folds: Vec<usize>,
}

pub fn mm_flatten(mesh: &Arc<TriMesh3>, config: MMConfig) -> Result<MmResult> {
    let mut system = SpringSystem::new(mesh, config)?;
    let outcome = system.simulate()?;
    let projection = system.project_to_plane()?;
    let folds = detect_folds(&projection.uv);
    Ok(MmResult {
        uv: projection.uv,
        outcome,
        max_abs_z: projection.max_abs_z,
        folds,
    })
}

/// RMS of `|2D length − rest length|` over all springs.
pub fn edge_length_rms_error(uv: &UVMap) -> f64 {
    let mesh = uv.mesh();
    let p = uv.coords();
    let edges = mesh.edges();
    if edges.is_empty() {
        return 0.0;
    }
    let sum: f64 = edges
        .iter()
        .map(|&[i, j]| {
            let rest = (mesh.vertices()[j] - mesh.vertices()[i]).norm();
            ((p[j] - p[i]).norm() - rest).powi(2)
        })
        .sum();
    (sum / edges.len() as f64).sqrt()
}
