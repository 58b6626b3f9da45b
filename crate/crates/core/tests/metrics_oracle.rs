mod common;

use std::sync::Arc;

use nalgebra::{Matrix2, Matrix3x2, Point2, Point3, Vector2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sheetflat_core::metrics::{area_error, face_stretches, l2_mesh, normalize_scale};
use sheetflat_core::{compute_metrics, triangle_stretch, Algorithm, TriMesh3, UVMap};

/// Affine interpolant of the 3D corners over the 2D triangle, evaluated via
/// barycentric coordinates.
fn interpolate(q: &[Point3<f64>; 3], p: &[Point2<f64>; 3], x: &Point2<f64>) -> Point3<f64> {
    let m = Matrix2::from_columns(&[p[1] - p[0], p[2] - p[0]]);
    let l = m.try_inverse().unwrap() * (x - p[0]);
    Point3::from(q[0].coords * (1.0 - l.x - l.y) + q[1].coords * l.x + q[2].coords * l.y)
}

/// Singular values of the Jacobian assembled by central differences.
fn oracle(q: &[Point3<f64>; 3], p: &[Point2<f64>; 3]) -> (f64, f64) {
    let c = Point2::from((p[0].coords + p[1].coords + p[2].coords) / 3.0);
    let h = 0.5;
    let col = |d: Vector2<f64>| (interpolate(q, p, &(c + d * h)) - interpolate(q, p, &(c - d * h))) / (2.0 * h);
    let j = Matrix3x2::from_columns(&[col(Vector2::x()), col(Vector2::y())]);
    let sv = j.svd(false, false).singular_values;
    (sv.max(), sv.min())
}

fn min_angle_2d(p: &[Point2<f64>; 3]) -> f64 {
    (0..3)
        .map(|k| {
            let a = p[(k + 1) % 3] - p[k];
            let b = p[(k + 2) % 3] - p[k];
            (a.perp(&b)).abs().atan2(a.dot(&b))
        })
        .fold(f64::INFINITY, f64::min)
}

fn min_angle_3d(q: &[Point3<f64>; 3]) -> f64 {
    (0..3)
        .map(|k| {
            let a = q[(k + 1) % 3] - q[k];
            let b = q[(k + 2) % 3] - q[k];
            a.cross(&b).norm().atan2(a.dot(&b))
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn stretch_matches_numeric_jacobian_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let min_angle = 5f64.to_radians();
    let mut checked = 0;
    while checked < 10_000 {
        let q: [Point3<f64>; 3] =
            std::array::from_fn(|_| Point3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)));
        let p: [Point2<f64>; 3] = std::array::from_fn(|_| Point2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)));
        if min_angle_2d(&p) < min_angle || min_angle_3d(&q) < min_angle {
            continue;
        }
        let s = triangle_stretch([&q[0], &q[1], &q[2]], [&p[0], &p[1], &p[2]]).unwrap();
        let (big, small) = oracle(&q, &p);
        assert!((s.sigma_max - big).abs() <= 1e-9 * big, "{} vs {big}", s.sigma_max);
        assert!((s.sigma_min - small).abs() <= 1e-9 * big.max(small), "{} vs {small}", s.sigma_min);
        assert!(s.linf >= s.l2 && s.l2 >= s.sigma_min);
        checked += 1;
    }
}

fn ripple(n: usize) -> Arc<TriMesh3> {
    common::param_grid(n, |s, t| Point3::new(s, t, 0.1 * (3.0 * s).sin() * (2.0 * t).cos()))
}

fn jittered_uv(mesh: &Arc<TriMesh3>, seed: u64, amount: f64) -> UVMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uv = mesh
        .vertices()
        .iter()
        .map(|v| Point2::new(v.x + rng.random_range(-amount..amount), v.y + rng.random_range(-amount..amount)))
        .collect();
    UVMap::new(Arc::clone(mesh), uv, Algorithm::Mm).unwrap()
}

#[test]
fn stretch_scales_inversely_with_uv() {
    let mesh = ripple(8);
    let uv = jittered_uv(&mesh, 1, 0.01);
    let base = face_stretches(&uv).unwrap();
    for s in [0.5, 3.0, 17.25] {
        let scaled = face_stretches(&uv.scaled(s)).unwrap();
        for (a, b) in base.iter().zip(&scaled) {
            assert!((b.sigma_max * s - a.sigma_max).abs() <= 1e-12 * a.sigma_max);
            assert!((b.sigma_min * s - a.sigma_min).abs() <= 1e-12 * a.sigma_max);
        }
    }
}

#[test]
fn normalization_is_idempotent_and_area_matching() {
    let mesh = ripple(8);
    let uv = jittered_uv(&mesh, 2, 0.02).scaled(0.37);
    let (n, factor) = normalize_scale(&uv).unwrap();
    assert!((n.total_area() - mesh.total_area()).abs() <= 1e-9 * mesh.total_area());
    assert!(factor > 1.0);
    let (again, f2) = normalize_scale(&n).unwrap();
    assert!((f2 - 1.0).abs() < 1e-12);
    let a = l2_mesh(&n).unwrap();
    let b = l2_mesh(&again).unwrap();
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn area_error_is_exactly_scale_invariant() {
    let mesh = ripple(8);
    let uv = jittered_uv(&mesh, 3, 0.02);
    let (base, _) = area_error(&uv).unwrap();
    // Powers of two keep every product exact.
    for s in [0.25, 2.0, 64.0] {
        assert_eq!(area_error(&uv.scaled(s)).unwrap().0, base);
    }
}

fn rotate3(mesh: &TriMesh3, axis: nalgebra::Vector3<f64>, angle: f64, shift: nalgebra::Vector3<f64>) -> Arc<TriMesh3> {
    let r = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
    Arc::new(mesh.map_vertices(|p| r * p + shift))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metrics_are_rigid_invariant(seed in 0u64..1000, angle in -3.0f64..3.0, dx in -5.0f64..5.0, dy in -5.0f64..5.0) {
        let mesh = ripple(6);
        let uv = jittered_uv(&mesh, seed, 0.03);
        let base = compute_metrics(&uv).unwrap();
        let moved = compute_metrics(&uv.rotated(angle).translated(Vector2::new(dx, dy))).unwrap();
        let mesh_moved = rotate3(&mesh, nalgebra::Vector3::new(dx, 1.0, dy), angle, nalgebra::Vector3::new(dy, dx, 1.0));
        let in_space = compute_metrics(&UVMap::new(mesh_moved, uv.coords().to_vec(), Algorithm::Mm).unwrap()).unwrap();
        for other in [&moved, &in_space] {
            prop_assert!((base.l2_mesh - other.l2_mesh).abs() < 1e-9);
            prop_assert!((base.linf_mesh - other.linf_mesh).abs() < 1e-9);
            prop_assert!((base.f_mesh - other.f_mesh).abs() < 1e-9);
            prop_assert!((base.e_mesh - other.e_mesh).abs() < 1e-9);
        }
    }

    #[test]
    fn normalized_stretch_is_at_least_one(seed in 0u64..1000, amount in 0.0f64..0.04) {
        let mesh = ripple(7);
        let m = compute_metrics(&jittered_uv(&mesh, seed, amount)).unwrap();
        prop_assert!(m.linf_mesh >= m.l2_mesh);
        prop_assert!(m.l2_mesh >= 1.0 - 1e-12);
        prop_assert!((0.0..1.0).contains(&m.e_mesh));
    }
}
