//! Least squares conformal maps.
//!
//! Each triangle is expressed in a local orthonormal frame (first edge along
//! the x axis). The per-triangle energy is the area-weighted squared
//! Cauchy–Riemann residual of the linear map from that frame to UV space,
//! which vanishes exactly for orientation-preserving similarities. Two pinned
//! boundary vertices remove the similarity gauge, leaving a symmetric
//! positive definite system in the free coordinates.

use std::sync::Arc;

use nalgebra::{Point2, Point3};

use crate::error::{Error, Result};
use crate::mesh::TriMesh3;
use crate::sparse::{conjugate_gradient, norm_inf, CsrMatrix};
use crate::uv::{Algorithm, UVMap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinPair {
    pub a: usize,
    pub b: usize,
    pub pos_a: Point2<f64>,
    pub pos_b: Point2<f64>,
}

#[derive(Debug, Clone)]
pub struct LscmOptions {
    /// Relative residual target of the conjugate gradient solve.
    pub cg_tolerance: f64,
    /// Iteration cap as a multiple of the number of free unknowns.
    pub max_iter_factor: usize,
    /// Accepted `‖gradient‖∞ / ‖rhs‖∞` of the normal equations.
    pub residual_bound: f64,
}

impl Default for LscmOptions {
    fn default() -> Self {
        LscmOptions {
            cg_tolerance: 1e-10,
            max_iter_factor: 10,
            residual_bound: 1e-8,
        }
    }
}

/// Boundary vertices at maximal 3D separation, pinned to `(0, 0)` and `(d, 0)`.
///
/// Pairs are scanned in lexicographic `(a, b)` order with `a < b` and a strict
/// comparison, so exact ties resolve to the lowest pair.
pub fn select_pins(mesh: &TriMesh3) -> Result<PinPair> {
    let boundary = sorted_boundary(mesh)?;
    let v = mesh.vertices();
    let mut best = (boundary[0], boundary[1 % boundary.len()], -1.0);
    for (i, &a) in boundary.iter().enumerate() {
        for &b in &boundary[i + 1..] {
            let d2 = (v[a] - v[b]).norm_squared();
            if d2 > best.2 {
                best = (a, b, d2);
            }
        }
    }
    let (a, b, d2) = best;
    Ok(PinPair {
        a,
        b,
        pos_a: Point2::origin(),
        pos_b: Point2::new(d2.sqrt(), 0.0),
    })
}

fn sorted_boundary(mesh: &TriMesh3) -> Result<Vec<usize>> {
    let mut boundary = mesh.boundary_loop()?.to_vec();
    boundary.sort_unstable();
    Ok(boundary)
}

/// Coefficients of the two residual rows of one triangle, over
/// `(u0, u1, u2, v0, v1, v2)`.
fn triangle_rows(p: [&Point3<f64>; 3]) -> Option<[[f64; 6]; 2]> {
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    let len = e1.norm();
    let normal = e1.cross(&e2);
    let double_area = normal.norm();
    if !(len > 0.0 && double_area > 0.0) {
        return None;
    }
    let x_axis = e1 / len;
    let y_axis = normal.cross(&e1) / (double_area * len);
    let x = [0.0, len, e2.dot(&x_axis)];
    let y = [0.0, 0.0, e2.dot(&y_axis)];
    let scale = 1.0 / (2.0 * double_area).sqrt();
    let mut rows = [[0.0; 6]; 2];
    for j in 0..3 {
        let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
        let a = (y[j1] - y[j2]) * scale;
        let b = (x[j2] - x[j1]) * scale;
        // u_x - v_y and u_y + v_x, each times 2A.
        rows[0][j] = a;
        rows[0][3 + j] = -b;
        rows[1][j] = b;
        rows[1][3 + j] = a;
    }
    Some(rows)
}

/// Conformal energy of `uv` on `mesh`; zero iff every triangle maps by a
/// similarity.
pub fn conformal_energy(mesh: &TriMesh3, uv: &[Point2<f64>]) -> f64 {
    let v = mesh.vertices();
    mesh.faces()
        .iter()
        .filter_map(|f| {
            let rows = triangle_rows([&v[f[0]], &v[f[1]], &v[f[2]]])?;
            let vals = [uv[f[0]].x, uv[f[1]].x, uv[f[2]].x, uv[f[0]].y, uv[f[1]].y, uv[f[2]].y];
            Some(
                rows.iter()
                    .map(|r| r.iter().zip(&vals).map(|(c, x)| c * x).sum::<f64>().powi(2))
                    .sum::<f64>(),
            )
        })
        .sum()
}

pub fn lscm_flatten(mesh: &Arc<TriMesh3>, pins: &PinPair) -> Result<UVMap> {
    lscm_flatten_with(mesh, pins, &LscmOptions::default())
}

pub fn lscm_flatten_with(mesh: &Arc<TriMesh3>, pins: &PinPair, options: &LscmOptions) -> Result<UVMap> {
    let fail = |reason: String| Error::solver(Algorithm::Lscm, reason);
    let boundary = sorted_boundary(mesh)?;
    if pins.a == pins.b {
        return Err(fail("pins must be two distinct vertices".into()));
    }
    for pin in [pins.a, pins.b] {
        if boundary.binary_search(&pin).is_err() {
            return Err(fail(format!("pin {pin} is not a boundary vertex")));
        }
    }
    if pins.pos_a == pins.pos_b {
        return Err(fail("pins share one target position".into()));
    }

    let n = mesh.vertex_count();
    // Unknown index: u_i -> 2i, v_i -> 2i + 1.
    let pinned = |k: usize| k / 2 == pins.a || k / 2 == pins.b;
    let pin_value = |k: usize| {
        let p = if k / 2 == pins.a { pins.pos_a } else { pins.pos_b };
        if k % 2 == 0 {
            p.x
        } else {
            p.y
        }
    };
    let mut free_index = vec![usize::MAX; 2 * n];
    let mut n_free = 0;
    for (k, slot) in free_index.iter_mut().enumerate() {
        if !pinned(k) {
            *slot = n_free;
            n_free += 1;
        }
    }

    let v = mesh.vertices();
    let mut triplets = Vec::with_capacity(mesh.face_count() * 36);
    let mut rhs = vec![0.0; n_free];
    for (fi, f) in mesh.faces().iter().enumerate() {
        let rows = triangle_rows([&v[f[0]], &v[f[1]], &v[f[2]]])
            .ok_or_else(|| fail(format!("triangle {fi} has no area in 3D")))?;
        let unknowns = [2 * f[0], 2 * f[1], 2 * f[2], 2 * f[0] + 1, 2 * f[1] + 1, 2 * f[2] + 1];
        for row in &rows {
            for (i, &ki) in unknowns.iter().enumerate() {
                if pinned(ki) {
                    continue;
                }
                let fi_row = free_index[ki];
                for (j, &kj) in unknowns.iter().enumerate() {
                    let value = row[i] * row[j];
                    if pinned(kj) {
                        rhs[fi_row] -= value * pin_value(kj);
                    } else {
                        triplets.push((fi_row, free_index[kj], value));
                    }
                }
            }
        }
    }
    let system = CsrMatrix::from_triplets(n_free, n_free, &mut triplets);

    if let Some(k) = system.diagonal().iter().position(|&d| !(d > 0.0)) {
        let vertex = (0..2 * n).find(|&g| free_index[g] == k).unwrap_or(0) / 2;
        return Err(fail(format!(
            "normal equations are rank-deficient: vertex {vertex} has no incident triangles"
        )));
    }

    let outcome = conjugate_gradient(
        &system,
        &rhs,
        None,
        options.cg_tolerance,
        options.max_iter_factor * n_free.max(1),
    );
    let gradient: Vec<f64> = system
        .mul_vec(&outcome.x)
        .iter()
        .zip(&rhs)
        .map(|(ax, b)| ax - b)
        .collect();
    let relative = norm_inf(&gradient) / norm_inf(&rhs).max(f64::MIN_POSITIVE);
    if !(relative <= options.residual_bound) {
        return Err(fail(format!(
            "linear solve did not converge: relative residual {relative:.3e} after {} iterations",
            outcome.iterations
        )));
    }

    let mut uv = vec![Point2::origin(); n];
    for (i, p) in uv.iter_mut().enumerate() {
        let coord = |k: usize| {
            if pinned(k) {
                pin_value(k)
            } else {
                outcome.x[free_index[k]]
            }
        };
        *p = Point2::new(coord(2 * i), coord(2 * i + 1));
    }
    UVMap::new(Arc::clone(mesh), uv, Algorithm::Lscm)
}
