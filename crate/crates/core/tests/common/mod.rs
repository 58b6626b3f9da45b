#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use sheetflat_core::{Point2, Point3, TriMesh3};

pub fn grid_faces(n: usize) -> Vec<[usize; 3]> {
    let mut faces = Vec::new();
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let v = j * n + i;
            faces.push([v, v + 1, v + n + 1]);
            faces.push([v, v + n + 1, v + n]);
        }
    }
    faces
}

/// `n × n` vertices mapped through `f(s, t)` for `s, t ∈ [0, 1]`.
pub fn param_grid(n: usize, f: impl Fn(f64, f64) -> Point3<f64>) -> Arc<TriMesh3> {
    let step = 1.0 / (n - 1) as f64;
    let vertices = (0..n * n)
        .map(|v| f((v % n) as f64 * step, (v / n) as f64 * step))
        .collect();
    Arc::new(TriMesh3::new(vertices, grid_faces(n)).unwrap())
}

/// Unit-spaced planar grid of `n × n` vertices.
pub fn plane(n: usize) -> Arc<TriMesh3> {
    let e = (n - 1) as f64;
    param_grid(n, |s, t| Point3::new(s * e, t * e, 0.0))
}

/// Quarter cylinder of radius 1 and height 1 and its arc-length unroll.
pub fn cylinder(n: usize) -> (Arc<TriMesh3>, Vec<Point2<f64>>) {
    let theta = |s: f64| -PI / 4.0 + s * PI / 2.0;
    let mesh = param_grid(n, |s, t| Point3::new(theta(s).sin(), t, theta(s).cos()));
    let step = 1.0 / (n - 1) as f64;
    let unroll = (0..n * n)
        .map(|v| Point2::new(theta((v % n) as f64 * step), (v / n) as f64 * step))
        .collect();
    (mesh, unroll)
}

/// Spherical cap (polar angle 60°) with rings of `6k` vertices.
pub fn cap(n: usize) -> Arc<TriMesh3> {
    let mut vertices = vec![Point3::new(0.0, 0.0, 1.0)];
    let mut start = vec![0];
    for k in 1..=n {
        start.push(vertices.len());
        let polar = PI / 3.0 * k as f64 / n as f64;
        for m in 0..6 * k {
            let az = 2.0 * PI * m as f64 / (6 * k) as f64;
            vertices.push(Point3::new(polar.sin() * az.cos(), polar.sin() * az.sin(), polar.cos()));
        }
    }
    let at = |k: usize, m: usize| if k == 0 { 0 } else { start[k] + m % (6 * k) };
    let mut faces = Vec::new();
    for k in 1..=n {
        for s in 0..6 {
            for i in 0..k {
                faces.push([at(k, s * k + i), at(k, s * k + i + 1), at(k - 1, s * (k - 1) + i)]);
            }
            for i in 0..k - 1 {
                faces.push([at(k - 1, s * (k - 1) + i), at(k, s * k + i + 1), at(k - 1, s * (k - 1) + i + 1)]);
            }
        }
    }
    Arc::new(TriMesh3::new(vertices, faces).unwrap())
}

/// RMS distance between `target` and the best orientation-preserving
/// similarity transform of `source`, found in closed form by treating
/// points as complex numbers.
pub fn similarity_rms(source: &[Point2<f64>], target: &[Point2<f64>]) -> f64 {
    let n = source.len() as f64;
    let mean = |p: &[Point2<f64>]| p.iter().fold((0.0, 0.0), |(x, y), q| (x + q.x / n, y + q.y / n));
    let (sx, sy) = mean(source);
    let (tx, ty) = mean(target);
    // a = Σ conj(z)·w / Σ |z|² with z, w centered.
    let (mut re, mut im, mut norm) = (0.0, 0.0, 0.0);
    for (s, t) in source.iter().zip(target) {
        let (zx, zy) = (s.x - sx, s.y - sy);
        let (wx, wy) = (t.x - tx, t.y - ty);
        re += zx * wx + zy * wy;
        im += zx * wy - zy * wx;
        norm += zx * zx + zy * zy;
    }
    let (ar, ai) = (re / norm, im / norm);
    let sq: f64 = source
        .iter()
        .zip(target)
        .map(|(s, t)| {
            let (zx, zy) = (s.x - sx, s.y - sy);
            let px = ar * zx - ai * zy + tx;
            let py = ar * zy + ai * zx + ty;
            (px - t.x).powi(2) + (py - t.y).powi(2)
        })
        .sum();
    (sq / n).sqrt()
}

/// Same as [`similarity_rms`] but with the scale fixed to 1.
pub fn rigid_rms(source: &[Point2<f64>], target: &[Point2<f64>]) -> f64 {
    let n = source.len() as f64;
    let mean = |p: &[Point2<f64>]| p.iter().fold((0.0, 0.0), |(x, y), q| (x + q.x / n, y + q.y / n));
    let (sx, sy) = mean(source);
    let (tx, ty) = mean(target);
    let (mut re, mut im) = (0.0, 0.0);
    for (s, t) in source.iter().zip(target) {
        let (zx, zy) = (s.x - sx, s.y - sy);
        let (wx, wy) = (t.x - tx, t.y - ty);
        re += zx * wx + zy * wy;
        im += zx * wy - zy * wx;
    }
    let angle = im.atan2(re);
    let (sn, cs) = angle.sin_cos();
    let sq: f64 = source
        .iter()
        .zip(target)
        .map(|(s, t)| {
            let (zx, zy) = (s.x - sx, s.y - sy);
            let px = cs * zx - sn * zy + tx;
            let py = cs * zy + sn * zx + ty;
            (px - t.x).powi(2) + (py - t.y).powi(2)
        })
        .sum();
    (sq / n).sqrt()
}
