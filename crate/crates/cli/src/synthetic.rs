//! Deterministic parametric test surfaces, each carrying a stripe pattern
//! that reads like lines of text so distortion is visible in the renders.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use sheetflat_core::{Point2, Point3, Result, TriMesh3};

/// Half-angle of the cylinder sector, radians.
pub const CYLINDER_HALF_ANGLE: f64 = PI / 4.0;
/// Polar angle of the spherical cap rim, radians.
pub const CAP_POLAR_ANGLE: f64 = PI / 3.0;
/// Height of the ripple bumps.
pub const RIPPLE_AMPLITUDE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    Plane,
    CylinderSector,
    HemisphereCap,
    Ripple,
}

impl SyntheticKind {
    pub const ALL: [SyntheticKind; 4] = [
        SyntheticKind::Plane,
        SyntheticKind::CylinderSector,
        SyntheticKind::HemisphereCap,
        SyntheticKind::Ripple,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SyntheticKind::Plane => "plane",
            SyntheticKind::CylinderSector => "cylinder_sector",
            SyntheticKind::HemisphereCap => "hemisphere_cap",
            SyntheticKind::Ripple => "ripple",
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SyntheticKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        SyntheticKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.to_ascii_lowercase().replace('-', "_"))
            .ok_or_else(|| format!("unknown synthetic mesh `{s}` (expected plane, cylinder_sector, hemisphere_cap or ripple)"))
    }
}

/// Dark glyph dashes on light paper, laid out in rows over `[0, 1]²`.
pub fn text_pattern(s: f64, t: f64) -> f64 {
    const ROWS: f64 = 6.0;
    let row = (t * ROWS).floor();
    let in_row = (t * ROWS).fract();
    if !(0.25..0.75).contains(&in_row) {
        return 0.9;
    }
    // Shift dashes per row so columns do not line up.
    let phase = (s * 9.0 + 0.37 * row).fract();
    if phase < 0.55 {
        0.1
    } else {
        0.9
    }
}

/// Quad grid of `n × n` vertices, each quad split along the same diagonal;
/// vertex `(i, j)` has index `j * n + i`.
fn grid_faces(n: usize) -> Vec<[usize; 3]> {
    let mut faces = Vec::with_capacity(2 * (n - 1) * (n - 1));
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let v = j * n + i;
            faces.push([v, v + 1, v + n + 1]);
            faces.push([v, v + n + 1, v + n]);
        }
    }
    faces
}

fn grid_mesh(n: usize, point: impl Fn(f64, f64) -> Point3<f64>) -> Result<TriMesh3> {
    let step = 1.0 / (n - 1) as f64;
    let mut vertices = Vec::with_capacity(n * n);
    let mut intensity = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let (s, t) = (i as f64 * step, j as f64 * step);
            vertices.push(point(s, t));
            intensity.push(text_pattern(s, t));
        }
    }
    TriMesh3::new(vertices, grid_faces(n))?.with_intensity(intensity)
}

/// Grid of `n × n` vertices with unit spacing in `z = 0`.
pub fn plane(n: usize) -> Result<TriMesh3> {
    let extent = (n - 1) as f64;
    grid_mesh(n, |s, t| Point3::new(s * extent, t * extent, 0.0))
}

/// Quarter of a unit-radius cylinder of height 1, convex side toward `+z`.
pub fn cylinder_sector(n: usize) -> Result<TriMesh3> {
    grid_mesh(n, |s, t| {
        let theta = -CYLINDER_HALF_ANGLE + s * 2.0 * CYLINDER_HALF_ANGLE;
        Point3::new(theta.sin(), t, theta.cos())
    })
}

/// Arc-length unroll of [`cylinder_sector`]: the isometric flattening.
pub fn cylinder_sector_unroll(n: usize) -> Vec<Point2<f64>> {
    let step = 1.0 / (n - 1) as f64;
    (0..n * n)
        .map(|v| {
            let (s, t) = ((v % n) as f64 * step, (v / n) as f64 * step);
            Point2::new(-CYLINDER_HALF_ANGLE + s * 2.0 * CYLINDER_HALF_ANGLE, t)
        })
        .collect()
}

/// Unit sphere cap around `+z` out to [`CAP_POLAR_ANGLE`], built from `n`
/// concentric rings with `6k` vertices on ring `k`.
pub fn hemisphere_cap(n: usize) -> Result<TriMesh3> {
    let mut vertices = vec![Point3::new(0.0, 0.0, 1.0)];
    let mut ring_start = vec![0usize];
    for k in 1..=n {
        ring_start.push(vertices.len());
        let polar = CAP_POLAR_ANGLE * k as f64 / n as f64;
        for m in 0..6 * k {
            let azimuth = 2.0 * PI * m as f64 / (6 * k) as f64;
            vertices.push(Point3::new(
                polar.sin() * azimuth.cos(),
                polar.sin() * azimuth.sin(),
                polar.cos(),
            ));
        }
    }
    let ring = |k: usize, m: usize| {
        if k == 0 {
            0
        } else {
            ring_start[k] + m % (6 * k)
        }
    };
    let mut faces = Vec::with_capacity(6 * n * n);
    for k in 1..=n {
        for sector in 0..6 {
            let outer = |i: usize| ring(k, sector * k + i);
            let inner = |i: usize| ring(k - 1, sector * (k - 1) + i);
            for i in 0..k {
                faces.push([outer(i), outer(i + 1), inner(i)]);
            }
            for i in 0..k - 1 {
                faces.push([inner(i), outer(i + 1), inner(i + 1)]);
            }
        }
    }
    let rim = CAP_POLAR_ANGLE.sin();
    let intensity = vertices
        .iter()
        .map(|p| text_pattern(0.5 + 0.5 * p.x / rim, 0.5 + 0.5 * p.y / rim))
        .collect();
    TriMesh3::new(vertices, faces)?.with_intensity(intensity)
}

/// Unit square with `z = A sin(2πx) sin(2πy)`.
pub fn ripple(n: usize) -> Result<TriMesh3> {
    grid_mesh(n, |s, t| {
        Point3::new(s, t, RIPPLE_AMPLITUDE * (2.0 * PI * s).sin() * (2.0 * PI * t).sin())
    })
}

/// # Panics
/// If `n < 2` (`n < 1` for the cap).
pub fn generate(kind: SyntheticKind, n: usize) -> Result<TriMesh3> {
    assert!(n >= 2, "synthetic meshes need n >= 2");
    match kind {
        SyntheticKind::Plane => plane(n),
        SyntheticKind::CylinderSector => cylinder_sector(n),
        SyntheticKind::HemisphereCap => hemisphere_cap(n),
        SyntheticKind::Ripple => ripple(n),
    }
}

/// The same mesh with one extra vertex no face references. LSCM and ABF
/// cannot place it; the spring model simply drops it onto the plane.
pub fn with_isolated_vertex(mesh: &TriMesh3) -> Result<TriMesh3> {
    let mut vertices = mesh.vertices().to_vec();
    let far = vertices
        .iter()
        .fold(Point3::origin(), |m: Point3<f64>, p| Point3::new(m.x.max(p.x), m.y.max(p.y), m.z.max(p.z)));
    vertices.push(Point3::new(far.x + 1.0, far.y + 1.0, far.z));
    let mut out = TriMesh3::new(vertices, mesh.faces().to_vec())?;
    if let Some(i) = mesh.intensity() {
        let mut i = i.to_vec();
        i.push(0.5);
        out = out.with_intensity(i)?;
    }
    Ok(out)
}
