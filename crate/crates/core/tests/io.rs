mod common;

use std::fs;
use std::sync::Arc;

use nalgebra::{Point2, Point3};
use sheetflat_core::io::{load_mesh, read_uv_obj, write_obj, write_uv_obj, MeshFormat};
use sheetflat_core::raster::Channels;
use sheetflat_core::{rasterize_texture, Algorithm, Error, RasterImage, TriMesh3, UVMap};

fn wavy() -> TriMesh3 {
    let m = common::param_grid(6, |s, t| Point3::new(s * 1.3, t / 3.0, 0.1 * (s * 7.0).sin() * t));
    let n = m.vertex_count();
    (*m).clone().with_intensity((0..n).map(|i| i as f64 / (n - 1) as f64).collect()).unwrap()
}

#[test]
fn obj_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wavy.obj");
    let mesh = wavy();
    write_obj(&mesh, &path).unwrap();
    let back = load_mesh(&path, None).unwrap();
    assert_eq!(back, mesh);
}

#[test]
fn uv_obj_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("uv.obj");
    let mesh = Arc::new(wavy());
    let coords: Vec<Point2<f64>> = mesh.vertices().iter().map(|p| Point2::new(p.x * 0.1 + 1e-17, p.y / 7.0)).collect();
    write_uv_obj(&UVMap::new(mesh, coords.clone(), Algorithm::Abf).unwrap(), &path).unwrap();
    assert_eq!(read_uv_obj(&path).unwrap(), coords);
}

#[test]
fn sidecar_intensity_overrides_colors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tri.obj");
    fs::write(&path, "v 0 0 0 1 1 1\nv 1 0 0 1 1 1\nv 0 1 0 1 1 1\nf 1 2 3\n").unwrap();
    fs::write(dir.path().join("tri.intensity"), "0.25\n0.5\n0.75\n").unwrap();
    let mesh = load_mesh(&path, None).unwrap();
    assert_eq!(mesh.intensity().unwrap(), &[0.25, 0.5, 0.75]);
    fs::write(dir.path().join("tri.intensity"), "0.25\n0.5\n").unwrap();
    assert!(matches!(load_mesh(&path, None), Err(Error::LengthMismatch { expected: 3, actual: 2 })));
}

#[test]
fn ply_with_explicit_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("quad.mesh");
    fs::write(
        &path,
        "ply\nformat ascii 1.0\nelement vertex 4\nproperty double x\nproperty double y\nproperty double z\n\
element face 2\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n3 0 1 2\n3 0 2 3\n",
    )
    .unwrap();
    assert!(matches!(load_mesh(&path, None), Err(Error::Parse { .. })));
    let mesh = load_mesh(&path, Some(MeshFormat::Ply)).unwrap();
    assert_eq!(mesh.face_count(), 2);
    assert!(mesh.is_disk());
}

#[test]
fn non_disk_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("two.obj");
    // Two separate triangles.
    fs::write(&path, "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 5 0 0\nv 6 0 0\nv 5 1 0\nf 1 2 3\nf 4 5 6\n").unwrap();
    match load_mesh(&path, None) {
        Err(Error::InvalidMesh(report)) => assert_eq!(report.component_count, 2),
        other => panic!("expected InvalidMesh, got {other:?}"),
    }
}

#[test]
fn degenerate_face_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.obj");
    fs::write(&path, "v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n").unwrap();
    assert!(matches!(load_mesh(&path, None), Err(Error::InvalidMesh(_))));
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(load_mesh("/nonexistent/x.obj", None), Err(Error::Io { .. })));
}

#[test]
fn textured_obj_renders_from_the_source_image() {
    let dir = tempfile::tempdir().unwrap();
    // 2x2 RGB checker: red, green / blue, white.
    let img = RasterImage::new(2, 2, Channels::Rgb, vec![255, 0, 0, 0, 255, 0, 0, 0, 255, 255, 255, 255]).unwrap();
    img.save(dir.path().join("tex.ppm")).unwrap();
    fs::write(dir.path().join("m.mtl"), "newmtl paper\nmap_Kd tex.ppm\n").unwrap();
    let path = dir.path().join("sq.obj");
    fs::write(
        &path,
        "mtllib m.mtl\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\nusemtl paper\n\
f 1/1 2/2 3/3\nf 1/1 3/3 4/4\n",
    )
    .unwrap();
    let mesh = Arc::new(load_mesh(&path, None).unwrap());
    assert!(mesh.texture().is_some() && mesh.intensity().is_none());
    let uv = UVMap::new(Arc::clone(&mesh), mesh.texture().unwrap().source_uv.clone(), Algorithm::Lscm).unwrap();
    let r = rasterize_texture(&uv, 40.0).unwrap();
    assert_eq!(r.image.channels(), Channels::Rgb);
    // Top-left of the square is the top-left texel (red), bottom-right is white.
    let (x, y) = r.image.uv_to_pixel(&Point2::new(0.05, 0.95));
    assert_eq!(r.image.pixel(x as usize, y as usize), &[255, 0, 0]);
    let (x, y) = r.image.uv_to_pixel(&Point2::new(0.95, 0.05));
    assert_eq!(r.image.pixel(x as usize, y as usize), &[255, 255, 255]);
}
