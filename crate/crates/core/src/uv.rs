use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{corner_angle_2d, TriMesh3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "LSCM")]
    Lscm,
    #[serde(rename = "ABF")]
    Abf,
    #[serde(rename = "MM")]
    Mm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Abf, Algorithm::Lscm, Algorithm::Mm];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Lscm => "LSCM",
            Algorithm::Abf => "ABF",
            Algorithm::Mm => "MM",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lscm" => Ok(Algorithm::Lscm),
            "abf" => Ok(Algorithm::Abf),
            "mm" => Ok(Algorithm::Mm),
            other => Err(format!("unknown algorithm `{other}` (expected lscm, abf or mm)")),
        }
    }
}

/// Per-vertex parameter coordinates sharing the connectivity of a source mesh.
#[derive(Debug, Clone)]
pub struct UVMap {
    mesh: Arc<TriMesh3>,
    uv: Vec<Point2<f64>>,
    algorithm: Algorithm,
}

impl UVMap {
    pub fn new(mesh: Arc<TriMesh3>, uv: Vec<Point2<f64>>, algorithm: Algorithm) -> Result<Self> {
        if uv.len() != mesh.vertex_count() {
            return Err(Error::LengthMismatch {
                expected: mesh.vertex_count(),
                actual: uv.len(),
            });
        }
        if let Some(v) = uv.iter().position(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::solver(
                algorithm,
                format!("non-finite coordinate at vertex {v}"),
            ));
        }
        Ok(UVMap { mesh, uv, algorithm })
    }

    pub fn mesh(&self) -> &Arc<TriMesh3> {
        &self.mesh
    }

    pub fn coords(&self) -> &[Point2<f64>] {
        &self.uv
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn face_points(&self, face: usize) -> [Point2<f64>; 3] {
        let [a, b, c] = self.mesh.faces()[face];
        [self.uv[a], self.uv[b], self.uv[c]]
    }

    /// Signed area; positive for counter-clockwise faces.
    pub fn signed_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.face_points(face);
        signed_area_2d(&a, &b, &c)
    }

    /// Sum of absolute face areas.
    pub fn total_area(&self) -> f64 {
        (0..self.mesh.face_count())
            .map(|f| self.signed_area(f).abs())
            .sum()
    }

    /// Faces whose orientation disagrees with the majority orientation.
    ///
    /// Ties resolve to counter-clockwise as the majority. Zero-area faces are
    /// never reported.
    pub fn flipped_faces(&self) -> Vec<usize> {
        let areas: Vec<f64> = (0..self.mesh.face_count())
            .map(|f| self.signed_area(f))
            .collect();
        let positive = areas.iter().filter(|&&a| a > 0.0).count();
        let negative = areas.iter().filter(|&&a| a < 0.0).count();
        let majority_positive = positive >= negative;
        areas
            .iter()
            .enumerate()
            .filter(|(_, &a)| if majority_positive { a < 0.0 } else { a > 0.0 })
            .map(|(i, _)| i)
            .collect()
    }

    /// Interior angles of every face in parameter space, in face order.
    pub fn corner_angles(&self) -> Vec<[f64; 3]> {
        (0..self.mesh.face_count())
            .map(|f| {
                let [a, b, c] = self.face_points(f);
                [
                    corner_angle_2d(&a, &b, &c),
                    corner_angle_2d(&b, &c, &a),
                    corner_angle_2d(&c, &a, &b),
                ]
            })
            .collect()
    }

    /// Axis-aligned bounds `(min, max)`, or `None` for an empty map.
    pub fn bounds(&self) -> Option<(Point2<f64>, Point2<f64>)> {
        let first = *self.uv.first()?;
        Some(self.uv.iter().fold((first, first), |(lo, hi), p| {
            (
                Point2::new(lo.x.min(p.x), lo.y.min(p.y)),
                Point2::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        }))
    }

    pub fn scaled(&self, factor: f64) -> UVMap {
        self.with_coords(self.uv.iter().map(|p| Point2::from(p.coords * factor)).collect())
    }

    pub fn translated(&self, offset: Vector2<f64>) -> UVMap {
        self.with_coords(self.uv.iter().map(|p| p + offset).collect())
    }

    pub fn rotated(&self, angle: f64) -> UVMap {
        let (s, c) = angle.sin_cos();
        self.with_coords(
            self.uv
                .iter()
                .map(|p| Point2::new(c * p.x - s * p.y, s * p.x + c * p.y))
                .collect(),
        )
    }

    /// Same mesh and algorithm with replaced coordinates.
    ///
    /// # Panics
    /// If `uv` does not have one entry per vertex.
    pub fn with_coords(&self, uv: Vec<Point2<f64>>) -> UVMap {
        assert_eq!(uv.len(), self.uv.len());
        UVMap {
            mesh: Arc::clone(&self.mesh),
            uv,
            algorithm: self.algorithm,
        }
    }
}

pub fn signed_area_2d(a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>) -> f64 {
    let u = b - a;
    let v = c - a;
    0.5 * (u.x * v.y - u.y * v.x)
}
