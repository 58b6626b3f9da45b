//! Angle-based flattening.
//!
//! Corner angles are indexed `3 * face + k`, where `k` is the position of the
//! corner's vertex in the face. The solver minimizes
//! `Σ w (α − φ)²` subject to, for every face, `Σ α = π` and, for every
//! interior vertex, `Σ α = 2π` and the wheel condition
//! `Π sin α_next = Π sin α_prev`. The wheel condition is linearized in its
//! logarithmic form, whose Hessian is diagonal, so each Lagrange–Newton step
//! reduces the KKT system to a sparse Schur complement in the multipliers.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Point2, Vector2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::TriMesh3;
use crate::sparse::{conjugate_gradient, norm2, norm_inf, CsrMatrix};
use crate::uv::{Algorithm, UVMap};

/// Lower clamp for optimal angles; the upper clamp is `π − MIN_ANGLE`.
pub const MIN_ANGLE: f64 = 1e-5;

pub const DEFAULT_TOLERANCE: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 100;
/// Revisited vertices further than this fraction of the scale edge length
/// from their first placement are reported as inconsistent.
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-3;

const MIN_STEP: f64 = 1.0 / 64.0;
/// Lower bound on the Hessian diagonal as a fraction of `2w`.
const HESSIAN_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleSet {
    /// 3D corner angles.
    pub beta: Vec<f64>,
    /// Optimal angles.
    pub phi: Vec<f64>,
    /// Solved parameter-space angles.
    pub alpha: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ConstraintResiduals {
    pub face_sum: f64,
    pub vertex_sum: f64,
    /// `max |Π sin α_next − Π sin α_prev|` over interior vertices.
    pub sine_product: f64,
}

impl ConstraintResiduals {
    pub fn max(&self) -> f64 {
        self.face_sum.max(self.vertex_sum).max(self.sine_product)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AbfSolution {
    pub angles: AngleSet,
    pub residuals: ConstraintResiduals,
    pub constraint_residual_inf: f64,
    pub gradient_inf: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `F(α)` at the start and after every Newton step.
    pub objective_history: Vec<f64>,
}

impl AbfSolution {
    pub fn objective(&self) -> f64 {
        objective(&self.angles.alpha, &self.angles.phi, &self.angles.weights)
    }
}

/// Flattens per-face angle triples to the corner layout used here.
pub fn corner_angles_flat(mesh: &TriMesh3) -> Vec<f64> {
    mesh.corner_angles().into_iter().flatten().collect()
}

/// Interior corners are rescaled so the angles around their vertex sum to
/// 2π; boundary corners keep their 3D angle. All results are clamped to
/// `[MIN_ANGLE, π − MIN_ANGLE]`.
pub fn optimal_angles(beta: &[f64], mesh: &TriMesh3) -> Vec<f64> {
    let mut vertex_sum = vec![0.0; mesh.vertex_count()];
    for (f, face) in mesh.faces().iter().enumerate() {
        for k in 0..3 {
            vertex_sum[face[k]] += beta[3 * f + k];
        }
    }
    let mut phi = Vec::with_capacity(beta.len());
    for (f, face) in mesh.faces().iter().enumerate() {
        for k in 0..3 {
            let v = face[k];
            let b = beta[3 * f + k];
            let scaled = if mesh.is_interior_vertex(v) {
                b * (2.0 * PI / vertex_sum[v])
            } else {
                b
            };
            phi.push(scaled.clamp(MIN_ANGLE, PI - MIN_ANGLE));
        }
    }
    phi
}

/// `w = φ⁻²`.
pub fn default_weights(phi: &[f64]) -> Vec<f64> {
    phi.iter().map(|p| 1.0 / (p * p)).collect()
}

pub fn objective(alpha: &[f64], phi: &[f64], weights: &[f64]) -> f64 {
    alpha
        .iter()
        .zip(phi)
        .zip(weights)
        .map(|((a, p), w)| w * (a - p) * (a - p))
        .sum()
}

/// Row layout of the constraint Jacobian.
struct Layout {
    n_faces: usize,
    /// Compact index of each interior vertex.
    interior: Vec<Option<usize>>,
    n_interior: usize,
}

impl Layout {
    fn new(mesh: &TriMesh3) -> Self {
        let mut interior = vec![None; mesh.vertex_count()];
        let mut n_interior = 0;
        for (v, slot) in interior.iter_mut().enumerate() {
            if mesh.is_interior_vertex(v) {
                *slot = Some(n_interior);
                n_interior += 1;
            }
        }
        Layout {
            n_faces: mesh.face_count(),
            interior,
            n_interior,
        }
    }

    fn n_rows(&self) -> usize {
        self.n_faces + 2 * self.n_interior
    }

    fn vertex_row(&self, v: usize) -> Option<usize> {
        self.interior[v].map(|i| self.n_faces + i)
    }

    fn wheel_row(&self, v: usize) -> Option<usize> {
        self.interior[v].map(|i| self.n_faces + self.n_interior + i)
    }
}

/// Jacobian entries of one corner: `(row, coefficient)` plus, separately, the
/// wheel rows where the corner enters as `next` (+) and as `prev` (−).
struct CornerRows {
    face: usize,
    vertex: Option<usize>,
    wheel_next: Option<usize>,
    wheel_prev: Option<usize>,
}

fn corner_rows(mesh: &TriMesh3, layout: &Layout) -> Vec<CornerRows> {
    let mut out = Vec::with_capacity(3 * mesh.face_count());
    for (f, face) in mesh.faces().iter().enumerate() {
        for k in 0..3 {
            let v = face[k];
            let prev_vertex = face[(k + 2) % 3];
            let next_vertex = face[(k + 1) % 3];
            out.push(CornerRows {
                face: f,
                vertex: layout.vertex_row(v),
                // The corner follows `prev_vertex` in this face, so it is the
                // `next` angle of that vertex's wheel, and the `prev` angle
                // of `next_vertex`'s wheel.
                wheel_next: layout.wheel_row(prev_vertex),
                wheel_prev: layout.wheel_row(next_vertex),
            });
        }
    }
    out
}

/// Constraint values with the wheel condition in logarithmic form.
fn constraint_values(alpha: &[f64], rows: &[CornerRows], layout: &Layout) -> Vec<f64> {
    let mut c = vec![0.0; layout.n_rows()];
    for r in c.iter_mut().take(layout.n_faces) {
        *r = -PI;
    }
    for r in c.iter_mut().skip(layout.n_faces).take(layout.n_interior) {
        *r = -2.0 * PI;
    }
    for (a, cr) in alpha.iter().zip(rows) {
        c[cr.face] += a;
        if let Some(r) = cr.vertex {
            c[r] += a;
        }
        let log_sin = a.sin().ln();
        if let Some(r) = cr.wheel_next {
            c[r] += log_sin;
        }
        if let Some(r) = cr.wheel_prev {
            c[r] -= log_sin;
        }
    }
    c
}

/// Residuals of the three constraint families, sine condition in product form.
pub fn constraint_residuals(mesh: &TriMesh3, alpha: &[f64]) -> ConstraintResiduals {
    let layout = Layout::new(mesh);
    let rows = corner_rows(mesh, &layout);
    let c = constraint_values(alpha, &rows, &layout);
    let mut next_product = vec![1.0; layout.n_interior];
    let mut prev_product = vec![1.0; layout.n_interior];
    let wheel0 = layout.n_faces + layout.n_interior;
    for (a, cr) in alpha.iter().zip(&rows) {
        if let Some(r) = cr.wheel_next {
            next_product[r - wheel0] *= a.sin();
        }
        if let Some(r) = cr.wheel_prev {
            prev_product[r - wheel0] *= a.sin();
        }
    }
    ConstraintResiduals {
        face_sum: norm_inf(&c[..layout.n_faces]),
        vertex_sum: norm_inf(&c[layout.n_faces..wheel0]),
        sine_product: next_product
            .iter()
            .zip(&prev_product)
            .fold(0.0, |m, (n, p)| m.max((n - p).abs())),
    }
}

struct Iterate {
    alpha: Vec<f64>,
    lambda: Vec<f64>,
    gradient: Vec<f64>,
    constraints: Vec<f64>,
}

impl Iterate {
    fn merit(&self) -> f64 {
        (norm2(&self.gradient).powi(2) + norm2(&self.constraints).powi(2)).sqrt()
    }
}

fn evaluate(
    alpha: Vec<f64>,
    lambda: Vec<f64>,
    phi: &[f64],
    weights: &[f64],
    rows: &[CornerRows],
    layout: &Layout,
) -> Iterate {
    let constraints = constraint_values(&alpha, rows, layout);
    let gradient = alpha
        .iter()
        .enumerate()
        .map(|(c, a)| {
            let cr = &rows[c];
            let cot = 1.0 / a.tan();
            let mut g = 2.0 * weights[c] * (a - phi[c]) + lambda[cr.face];
            if let Some(r) = cr.vertex {
                g += lambda[r];
            }
            if let Some(r) = cr.wheel_next {
                g += lambda[r] * cot;
            }
            if let Some(r) = cr.wheel_prev {
                g -= lambda[r] * cot;
            }
            g
        })
        .collect();
    Iterate {
        alpha,
        lambda,
        gradient,
        constraints,
    }
}

/// One Lagrange–Newton direction `(dα, dλ)`.
fn newton_direction(it: &Iterate, weights: &[f64], rows: &[CornerRows], layout: &Layout) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = layout.n_rows();
    let n = it.alpha.len();

    let mut hessian = vec![0.0; n];
    let mut jac: Vec<[(usize, f64); 4]> = Vec::with_capacity(n);
    for (c, a) in it.alpha.iter().enumerate() {
        let cr = &rows[c];
        let (s, cot) = (a.sin(), 1.0 / a.tan());
        let curvature = 1.0 / (s * s);
        let mut h = 2.0 * weights[c];
        let mut entries = [(usize::MAX, 0.0); 4];
        entries[0] = (cr.face, 1.0);
        if let Some(r) = cr.vertex {
            entries[1] = (r, 1.0);
        }
        if let Some(r) = cr.wheel_next {
            entries[2] = (r, cot);
            h -= it.lambda[r] * curvature;
        }
        if let Some(r) = cr.wheel_prev {
            entries[3] = (r, -cot);
            h += it.lambda[r] * curvature;
        }
        hessian[c] = h.max(HESSIAN_FLOOR * 2.0 * weights[c]);
        jac.push(entries);
    }

    // S = J H⁻¹ Jᵀ, rhs = c − J H⁻¹ g.
    let mut triplets = Vec::with_capacity(n * 16);
    let mut rhs = it.constraints.clone();
    for (c, entries) in jac.iter().enumerate() {
        let inv_h = 1.0 / hessian[c];
        for &(ri, vi) in entries.iter().filter(|e| e.0 != usize::MAX) {
            rhs[ri] -= vi * inv_h * it.gradient[c];
            for &(rj, vj) in entries.iter().filter(|e| e.0 != usize::MAX) {
                triplets.push((ri, rj, vi * vj * inv_h));
            }
        }
    }
    let schur = CsrMatrix::from_triplets(m, m, &mut triplets);
    let outcome = conjugate_gradient(&schur, &rhs, None, 1e-13, 20 * m.max(1));
    if outcome.x.iter().any(|x| !x.is_finite()) {
        return Err(Error::solver(Algorithm::Abf, "KKT solve produced non-finite multipliers"));
    }
    let d_lambda = outcome.x;

    let mut d_alpha = vec![0.0; n];
    for (c, entries) in jac.iter().enumerate() {
        let jt_dl: f64 = entries
            .iter()
            .filter(|e| e.0 != usize::MAX)
            .map(|&(r, v)| v * d_lambda[r])
            .sum();
        d_alpha[c] = -(it.gradient[c] + jt_dl) / hessian[c];
    }
    Ok((d_alpha, d_lambda))
}

/// Minimizes the weighted angle deviation under the validity constraints.
///
/// Returns [`Error::SolverFailure`] when `max_iter` Newton steps do not bring
/// both the constraint residual and the Lagrangian gradient below `tol`.
pub fn abf_solve(mesh: &TriMesh3, phi: &[f64], weights: &[f64], tol: f64, max_iter: usize) -> Result<AbfSolution> {
    let fail = |reason: String| Error::solver(Algorithm::Abf, reason);
    mesh.boundary_loop()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {tol}")));
    }
    let n = 3 * mesh.face_count();
    if phi.len() != n || weights.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: phi.len().min(weights.len()),
        });
    }

    let layout = Layout::new(mesh);
    let rows = corner_rows(mesh, &layout);
    let mut it = evaluate(phi.to_vec(), vec![0.0; layout.n_rows()], phi, weights, &rows, &layout);
    let mut history = vec![objective(&it.alpha, phi, weights)];
    let mut iterations = 0;

    loop {
        let residuals = constraint_residuals(mesh, &it.alpha);
        let log_residual = norm_inf(&it.constraints);
        let constraint_inf = residuals.max().max(log_residual);
        let gradient_inf = norm_inf(&it.gradient);
        if constraint_inf <= tol && gradient_inf <= tol {
            let beta = corner_angles_flat(mesh);
            return Ok(AbfSolution {
                angles: AngleSet {
                    beta,
                    phi: phi.to_vec(),
                    alpha: it.alpha,
                    weights: weights.to_vec(),
                },
                residuals,
                constraint_residual_inf: constraint_inf,
                gradient_inf,
                iterations,
                converged: true,
                objective_history: history,
            });
        }
        if iterations >= max_iter {
            return Err(fail(format!(
                "no convergence after {iterations} iterations (constraint residual {constraint_inf:.3e}, gradient {gradient_inf:.3e})"
            )));
        }

        let (d_alpha, d_lambda) = newton_direction(&it, weights, &rows, &layout)?;
        let merit = it.merit();
        let mut step = 1.0;
        let next = loop {
            let alpha: Vec<f64> = it.alpha.iter().zip(&d_alpha).map(|(a, d)| a + step * d).collect();
            let lambda: Vec<f64> = it.lambda.iter().zip(&d_lambda).map(|(l, d)| l + step * d).collect();
            let valid = alpha.iter().all(|a| *a > 0.0 && *a < PI);
            if valid {
                let trial = evaluate(alpha, lambda, phi, weights, &rows, &layout);
                if trial.merit() <= merit || step <= MIN_STEP {
                    break trial;
                }
            } else if step <= MIN_STEP {
                return Err(fail(format!(
                    "Newton step leaves (0, π) even at damping {MIN_STEP} (iteration {iterations})"
                )));
            }
            step *= 0.5;
        };
        it = next;
        iterations += 1;
        history.push(objective(&it.alpha, phi, weights));
        if it.alpha.iter().chain(&it.lambda).any(|x| !x.is_finite()) {
            return Err(fail(format!("iterate became non-finite at iteration {iterations}")));
        }
    }
}

/// A vertex whose position predicted from one face disagrees with where it
/// was first placed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleInconsistency {
    pub vertex: usize,
    pub face: usize,
    pub deviation: f64,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub uv: UVMap,
    /// Non-fatal diagnostics; empty when the angles are consistent.
    pub inconsistencies: Vec<AngleInconsistency>,
}

/// Lays out the mesh from its parameter-space angles.
///
/// `scale_edge` indexes the boundary loop: edge `i` runs from `loop[i]` to
/// `loop[i + 1]` and is placed at `(0, 0)`–`(L, 0)` with `L` its 3D length.
/// Triangles are then unfolded breadth-first with the law of sines; the first
/// placement of a vertex wins.
pub fn reconstruct_uv(mesh: &Arc<TriMesh3>, alpha: &[f64], scale_edge: usize) -> Result<Reconstruction> {
    let boundary = mesh.boundary_loop()?;
    if alpha.len() != 3 * mesh.face_count() {
        return Err(Error::LengthMismatch {
            expected: 3 * mesh.face_count(),
            actual: alpha.len(),
        });
    }
    let a = boundary[scale_edge % boundary.len()];
    let b = boundary[(scale_edge + 1) % boundary.len()];
    let length = (mesh.vertices()[b] - mesh.vertices()[a]).norm();
    let faces = mesh.faces();

    let start = faces
        .iter()
        .enumerate()
        .find_map(|(f, face)| (0..3).find(|&k| face[k] == a && face[(k + 1) % 3] == b).map(|k| (f, k)))
        .ok_or_else(|| Error::solver(Algorithm::Abf, format!("no face carries boundary edge ({a}, {b})")))?;

    let mut placed: Vec<Option<Point2<f64>>> = vec![None; mesh.vertex_count()];
    placed[a] = Some(Point2::origin());
    placed[b] = Some(Point2::new(length, 0.0));
    let mut visited = vec![false; faces.len()];
    let mut queue = VecDeque::from([start]);
    visited[start.0] = true;
    let mut inconsistencies = Vec::new();
    let tolerance = RECONSTRUCTION_TOLERANCE * length;

    while let Some((f, k)) = queue.pop_front() {
        let face = faces[f];
        let (i, j, l) = (face[k], face[(k + 1) % 3], face[(k + 2) % 3]);
        let (pi, pj) = (placed[i].unwrap(), placed[j].unwrap());
        let (ai, aj, al) = (alpha[3 * f + k], alpha[3 * f + (k + 1) % 3], alpha[3 * f + (k + 2) % 3]);
        let edge = pj - pi;
        let dist = edge.norm() * aj.sin() / al.sin();
        let (s, c) = ai.sin_cos();
        let dir = edge / edge.norm();
        let predicted = pi + dist * Vector2::new(c * dir.x - s * dir.y, s * dir.x + c * dir.y);
        match placed[l] {
            None => placed[l] = Some(predicted),
            Some(existing) => {
                let deviation = (existing - predicted).norm();
                if !(deviation <= tolerance) {
                    inconsistencies.push(AngleInconsistency { vertex: l, face: f, deviation });
                }
            }
        }
        for (e, nb) in mesh.face_neighbors(f).iter().enumerate() {
            let Some(g) = *nb else { continue };
            if visited[g] {
                continue;
            }
            visited[g] = true;
            // The shared edge runs (face[e+1] -> face[e]) in g.
            let from = face[(e + 1) % 3];
            let kg = faces[g].iter().position(|&v| v == from).unwrap();
            queue.push_back((g, kg));
        }
    }

    let unplaced: Vec<usize> = (0..placed.len()).filter(|&v| placed[v].is_none()).collect();
    if !unplaced.is_empty() {
        return Err(Error::UnplacedVertices { vertices: unplaced });
    }
    let uv = placed.into_iter().map(Option::unwrap).collect();
    Ok(Reconstruction {
        uv: UVMap::new(Arc::clone(mesh), uv, Algorithm::Abf)?,
        inconsistencies,
    })
}

/// Full ABF pipeline with default weights, tolerance and iteration cap,
/// reconstructing from the first boundary edge.
pub fn abf_flatten(mesh: &Arc<TriMesh3>) -> Result<(AbfSolution, Reconstruction)> {
    let beta = corner_angles_flat(mesh);
    let phi = optimal_angles(&beta, mesh);
    let weights = default_weights(&phi);
    let solution = abf_solve(mesh, &phi, &weights, DEFAULT_TOLERANCE, DEFAULT_MAX_ITER)?;
    let reconstruction = reconstruct_uv(mesh, &solution.angles.alpha, 0)?;
    Ok((solution, reconstruction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn triangle() -> Arc<TriMesh3> {
        Arc::new(
            TriMesh3::new(
                vec![
                    Point3::new(0.0, 0.0, 0.0),
                    Point3::new(1.0, 0.0, 0.0),
                    Point3::new(0.0, 1.0, 0.0),
                ],
                vec![[0, 1, 2]],
            )
            .unwrap(),
        )
    }

    /// Hexagonal fan around vertex 0, lifted into a cone when `apex > 0`.
    fn fan(apex: f64) -> Arc<TriMesh3> {
        let mut v = vec![Point3::new(0.0, 0.0, apex)];
        for i in 0..6 {
            let t = i as f64 * PI / 3.0;
            v.push(Point3::new(t.cos(), t.sin(), 0.0));
        }
        let faces = (0..6).map(|i| [0, 1 + i, 1 + (i + 1) % 6]).collect();
        Arc::new(TriMesh3::new(v, faces).unwrap())
    }

    #[test]
    fn flat_vertex_keeps_its_angles() {
        let m = fan(0.0);
        let beta = corner_angles_flat(&m);
        let phi = optimal_angles(&beta, &m);
        for (b, p) in beta.iter().zip(&phi) {
            assert!((b - p).abs() < 1e-14);
        }
    }

    #[test]
    fn cone_vertex_with_half_turn_doubles() {
        // Apex height chosen so the six apex angles sum to π: each is π/6,
        // i.e. half-angle π/12 over a unit half-chord of 1/2 → slant 1/(2 sin(π/12)).
        let slant: f64 = 0.5 / (PI / 12.0).sin();
        let m = fan((slant * slant - 1.0).sqrt());
        let beta = corner_angles_flat(&m);
        let apex_sum: f64 = (0..6).map(|f| beta[3 * f]).sum();
        assert!((apex_sum - PI).abs() < 1e-12);
        let phi = optimal_angles(&beta, &m);
        for f in 0..6 {
            assert!((phi[3 * f] - 2.0 * beta[3 * f]).abs() < 1e-12);
            // rim corners are boundary corners
            assert_eq!(phi[3 * f + 1], beta[3 * f + 1]);
        }
    }

    #[test]
    fn boundary_corner_is_unchanged() {
        let v = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.7f64.cos(), 0.7f64.sin(), 0.0),
        ];
        let m = TriMesh3::new(v, vec![[0, 1, 2]]).unwrap();
        let phi = optimal_angles(&corner_angles_flat(&m), &m);
        assert!((phi[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn planar_fan_needs_no_iterations() {
        let m = fan(0.0);
        let beta = corner_angles_flat(&m);
        let phi = optimal_angles(&beta, &m);
        let w = default_weights(&phi);
        let sol = abf_solve(&m, &phi, &w, DEFAULT_TOLERANCE, DEFAULT_MAX_ITER).unwrap();
        assert!(sol.iterations <= 1);
        assert!(sol.objective() < 1e-20);
    }

    #[test]
    fn cone_converges_and_satisfies_constraints() {
        let m = fan(0.4);
        let beta = corner_angles_flat(&m);
        let phi = optimal_angles(&beta, &m);
        let w = default_weights(&phi);
        let sol = abf_solve(&m, &phi, &w, DEFAULT_TOLERANCE, DEFAULT_MAX_ITER).unwrap();
        let r = constraint_residuals(&m, &sol.angles.alpha);
        assert!(r.max() <= 1e-7, "{r:?}");
        // By symmetry every solved angle of the six faces is π/3.
        for a in &sol.angles.alpha {
            assert!((a - PI / 3.0).abs() < 1e-7);
        }
        assert!(sol.objective() > 0.0);
        let rec = reconstruct_uv(&m, &sol.angles.alpha, 0).unwrap();
        assert!(rec.inconsistencies.is_empty());
        assert!(rec.uv.flipped_faces().is_empty());
    }

    #[test]
    fn right_isoceles_reconstruction() {
        let m = triangle();
        let alpha = [FRAC_PI_2, FRAC_PI_4, FRAC_PI_4];
        let rec = reconstruct_uv(&m, &alpha, 0).unwrap();
        let uv = rec.uv.coords();
        // Law of sines: |02| = |01| sin(π/4) / sin(π/4) = 1, at angle π/2 from 0→1.
        assert_eq!(uv[0], Point2::origin());
        assert_eq!(uv[1], Point2::new(1.0, 0.0));
        assert!((uv[2] - Point2::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn inconsistent_angles_are_reported() {
        let m = fan(0.0);
        let mut alpha = corner_angles_flat(&m);
        alpha[0] += 0.1;
        let rec = reconstruct_uv(&m, &alpha, 0).unwrap();
        assert!(!rec.inconsistencies.is_empty());
    }

    #[test]
    fn isolated_vertex_cannot_be_placed() {
        let f = fan(0.0);
        let mut v = f.vertices().to_vec();
        v.push(Point3::new(4.0, 4.0, 0.0));
        let m = Arc::new(TriMesh3::new(v, f.faces().to_vec()).unwrap());
        match abf_flatten(&m) {
            Err(Error::UnplacedVertices { vertices }) => assert_eq!(vertices, vec![7]),
            other => panic!("expected UnplacedVertices, got {other:?}"),
        }
    }

    #[test]
    fn iteration_cap_is_a_solver_failure() {
        let m = fan(0.4);
        let beta = corner_angles_flat(&m);
        let mut phi = optimal_angles(&beta, &m);
        // Break the symmetry so the optimal angles violate the constraints.
        phi[1] += 0.2;
        let w = default_weights(&phi);
        assert!(matches!(
            abf_solve(&m, &phi, &w, DEFAULT_TOLERANCE, 0),
            Err(Error::SolverFailure { algorithm: Algorithm::Abf, .. })
        ));
        assert!(abf_solve(&m, &phi, &w, DEFAULT_TOLERANCE, DEFAULT_MAX_ITER).is_ok());
    }
}
