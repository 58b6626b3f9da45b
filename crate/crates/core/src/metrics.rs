//! Distortion measures of a parameterization against its source surface:
//! Sander's texture stretch (L², L∞), the weighted angular error F(M) and
//! the relative area error E(M).

use nalgebra::{Point2, Point3, Vector3};
use serde::Serialize;

use crate::abf::{corner_angles_flat, default_weights, optimal_angles};
use crate::error::{Error, Result};
use crate::uv::UVMap;

/// Faces whose |2D area| falls below this fraction of the mean are degenerate.
pub const DEGENERATE_UV_RATIO: f64 = 1e-12;

/// Singular values of the affine map from parameter space to the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriangleStretch {
    /// Largest singular value Γ.
    pub sigma_max: f64,
    /// Smallest singular value γ.
    pub sigma_min: f64,
    pub l2: f64,
    pub linf: f64,
}

/// Stretch of the map `p_i ↦ q_i`, or `None` when the 2D triangle has zero
/// area. Orientation is ignored.
pub fn triangle_stretch(q: [&Point3<f64>; 3], p: [&Point2<f64>; 3]) -> Option<TriangleStretch> {
    let [q1, q2, q3] = q;
    let [p1, p2, p3] = p;
    let (s1, t1, s2, t2, s3, t3) = (p1.x, p1.y, p2.x, p2.y, p3.x, p3.y);
    let two_a = (s2 - s1) * (t3 - t1) - (s3 - s1) * (t2 - t1);
    if two_a == 0.0 || !two_a.is_finite() {
        return None;
    }
    let ss: Vector3<f64> = (q1.coords * (t2 - t3) + q2.coords * (t3 - t1) + q3.coords * (t1 - t2)) / two_a;
    let st: Vector3<f64> = (q1.coords * (s3 - s2) + q2.coords * (s1 - s3) + q3.coords * (s2 - s1)) / two_a;
    let a = ss.dot(&ss);
    let b = ss.dot(&st);
    let c = st.dot(&st);
    // Eigenvalues of [[a, b], [b, c]].
    let mean = 0.5 * (a + c);
    let radius = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let big = mean + radius;
    // Product form avoids cancellation in the small eigenvalue.
    let det = (a * c - b * b).max(0.0);
    let small = if big > 0.0 { det / big } else { 0.0 };
    let sigma_max = big.sqrt();
    let sigma_min = small.sqrt().min(sigma_max);
    Some(TriangleStretch {
        sigma_max,
        sigma_min,
        l2: (0.5 * (big + small)).sqrt(),
        linf: sigma_max,
    })
}

/// Scales `uv` uniformly so its total absolute area equals the mesh area.
/// Returns the scaled map and the factor applied.
pub fn normalize_scale(uv: &UVMap) -> Result<(UVMap, f64)> {
    let a2 = uv.total_area();
    let a3 = uv.mesh().total_area();
    if !(a2 > 0.0) {
        return Err(Error::DegenerateParameterization {
            faces: (0..uv.mesh().face_count()).collect(),
        });
    }
    let factor = (a3 / a2).sqrt();
    if factor == 1.0 {
        return Ok((uv.clone(), 1.0));
    }
    Ok((uv.scaled(factor), factor))
}

fn degenerate_faces(uv: &UVMap) -> Vec<usize> {
    let n = uv.mesh().face_count();
    if n == 0 {
        return Vec::new();
    }
    let mean = uv.total_area() / n as f64;
    (0..n)
        .filter(|&f| !(uv.signed_area(f).abs() > DEGENERATE_UV_RATIO * mean))
        .collect()
}

/// Per-face stretch. Fails with the ids of all degenerate faces.
pub fn face_stretches(uv: &UVMap) -> Result<Vec<TriangleStretch>> {
    let bad = degenerate_faces(uv);
    if !bad.is_empty() {
        return Err(Error::DegenerateParameterization { faces: bad });
    }
    let mesh = uv.mesh();
    let v = mesh.vertices();
    let p = uv.coords();
    mesh.faces()
        .iter()
        .enumerate()
        .map(|(f, &[i, j, k])| {
            triangle_stretch([&v[i], &v[j], &v[k]], [&p[i], &p[j], &p[k]])
                .ok_or(Error::DegenerateParameterization { faces: vec![f] })
        })
        .collect()
}

fn l2_from(uv: &UVMap, stretch: &[TriangleStretch]) -> f64 {
    let mesh = uv.mesh();
    let (num, den) = stretch.iter().enumerate().fold((0.0, 0.0), |(n, d), (f, s)| {
        let a = mesh.face_area(f);
        (n + s.l2 * s.l2 * a, d + a)
    });
    (num / den).sqrt()
}

/// 3D-area-weighted RMS of per-face L². Expects scale-normalized UV.
pub fn l2_mesh(uv: &UVMap) -> Result<f64> {
    Ok(l2_from(uv, &face_stretches(uv)?))
}

/// Largest per-face L∞.
pub fn linf_mesh(uv: &UVMap) -> Result<f64> {
    Ok(face_stretches(uv)?.iter().fold(0.0, |m, s| m.max(s.linf)))
}

/// `(f_alpha, f_mesh)`: weighted squared deviation of `alpha` from `phi`,
/// and its mean per corner. `f_mesh` divides by `alpha.len()`, i.e. three
/// corners per face.
pub fn angular_error(phi: &[f64], alpha: &[f64], weights: &[f64]) -> (f64, f64) {
    assert!(phi.len() == alpha.len() && phi.len() == weights.len());
    let f_alpha: f64 = alpha
        .iter()
        .zip(phi)
        .zip(weights)
        .map(|((a, p), w)| w * (a - p) * (a - p))
        .sum();
    let corners = alpha.len();
    (f_alpha, if corners == 0 { 0.0 } else { f_alpha / corners as f64 })
}

/// Per-face relative area error in `[0, 1)` and its mean.
pub fn area_error(uv: &UVMap) -> Result<(Vec<f64>, f64)> {
    let bad = degenerate_faces(uv);
    if !bad.is_empty() {
        return Err(Error::DegenerateParameterization { faces: bad });
    }
    let mesh = uv.mesh();
    let a3 = mesh.total_area();
    let a2 = uv.total_area();
    let per_face: Vec<f64> = (0..mesh.face_count())
        .map(|f| {
            let alpha = mesh.face_area(f) / a3;
            let beta = uv.signed_area(f).abs() / a2;
            if alpha > beta {
                1.0 - beta / alpha
            } else {
                1.0 - alpha / beta
            }
        })
        .collect();
    let mean = if per_face.is_empty() {
        0.0
    } else {
        per_face.iter().sum::<f64>() / per_face.len() as f64
    };
    Ok((per_face, mean))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub l2_mesh: f64,
    pub linf_mesh: f64,
    pub f_alpha: f64,
    pub f_mesh: f64,
    pub e_mesh: f64,
    pub face_l2: Vec<f64>,
    pub face_linf: Vec<f64>,
    pub face_area_error: Vec<f64>,
    /// `w (α − φ)²` per corner, indexed `3 * face + k`.
    pub corner_angular_error: Vec<f64>,
    pub flipped_face_ids: Vec<usize>,
    /// Factor applied to the UV before measuring.
    pub scale_factor: f64,
}

impl MetricsReport {
    /// Mean angular error per face, for heatmaps.
    pub fn face_angular_error(&self) -> Vec<f64> {
        self.corner_angular_error
            .chunks_exact(3)
            .map(|c| (c[0] + c[1] + c[2]) / 3.0)
            .collect()
    }
}

/// Normalizes the scale of `uv`, then evaluates every metric. Angular error
/// is measured against the optimal angles of the source mesh with `φ⁻²`
/// weights, whichever algorithm produced the map.
pub fn compute_metrics(uv: &UVMap) -> Result<MetricsReport> {
    let (normalized, scale_factor) = normalize_scale(uv)?;
    let stretch = face_stretches(&normalized)?;
    let (face_area_error, e_mesh) = area_error(&normalized)?;

    let mesh = normalized.mesh();
    let phi = optimal_angles(&corner_angles_flat(mesh), mesh);
    let weights = default_weights(&phi);
    let alpha: Vec<f64> = normalized.corner_angles().into_iter().flatten().collect();
    let (f_alpha, f_mesh) = angular_error(&phi, &alpha, &weights);
    let corner_angular_error = alpha
        .iter()
        .zip(&phi)
        .zip(&weights)
        .map(|((a, p), w)| w * (a - p) * (a - p))
        .collect();

    Ok(MetricsReport {
        l2_mesh: l2_from(&normalized, &stretch),
        linf_mesh: stretch.iter().fold(0.0, |m, s| m.max(s.linf)),
        f_alpha,
        f_mesh,
        e_mesh,
        face_l2: stretch.iter().map(|s| s.l2).collect(),
        face_linf: stretch.iter().map(|s| s.linf).collect(),
        face_area_error,
        corner_angular_error,
        flipped_face_ids: normalized.flipped_faces(),
        scale_factor,
    })
}
