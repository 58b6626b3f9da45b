//! Immutable triangulated surface patches and their topological queries.
//!
//! A [`TriMesh3`] is checked once at construction (index ranges, repeated
//! vertices, degenerate area, edge manifoldness, consistent winding) and never
//! mutated afterwards, so it can be shared freely between flatteners.
//! Disk topology is reported by [`validate`] and enforced by the consumers
//! that need it.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{Point2, Point3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::RasterImage;

/// Faces with 3D area below this fraction of the mean face area are degenerate.
pub const DEGENERATE_AREA_RATIO: f64 = 1e-9;

/// Source texture carried by a mesh: an image and one source UV per vertex.
///
/// Source UVs follow the OBJ convention: `(0, 0)` is the bottom-left corner
/// of the image, `(1, 1)` the top-right.
#[derive(Debug, Clone, PartialEq)]
pub struct Texture {
    pub image: RasterImage,
    pub source_uv: Vec<Point2<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub vertex_count: usize,
    pub face_count: usize,
    pub boundary_loop_count: usize,
    pub degenerate_face_ids: Vec<usize>,
    /// Faces referencing an out-of-range vertex or repeating a vertex.
    pub malformed_face_ids: Vec<usize>,
    /// Edges bordered by more than two faces, or by two faces that traverse
    /// them in the same direction.
    pub non_manifold_edges: Vec<[usize; 2]>,
    pub component_count: usize,
    pub euler_characteristic: i64,
    /// Vertices not referenced by any face. Informational only.
    pub isolated_vertices: Vec<usize>,
    pub is_disk: bool,
}

impl ValidationReport {
    /// True when the mesh satisfies the structural invariants of [`TriMesh3`].
    pub fn is_structurally_valid(&self) -> bool {
        self.malformed_face_ids.is_empty()
            && self.degenerate_face_ids.is_empty()
            && self.non_manifold_edges.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} vertices, {} faces, {} boundary loop(s), {} component(s), disk: {}",
            self.vertex_count,
            self.face_count,
            self.boundary_loop_count,
            self.component_count,
            self.is_disk
        )?;
        if !self.malformed_face_ids.is_empty() {
            write!(f, "; malformed faces {:?}", self.malformed_face_ids)?;
        }
        if !self.degenerate_face_ids.is_empty() {
            write!(f, "; degenerate faces {:?}", self.degenerate_face_ids)?;
        }
        if !self.non_manifold_edges.is_empty() {
            write!(f, "; non-manifold edges {:?}", self.non_manifold_edges)?;
        }
        Ok(())
    }
}

/// Connectivity derived from the face list.
#[derive(Debug, Clone, Default)]
struct Topology {
    /// Neighbor across edge `(f[k], f[k+1])`, if that edge is interior.
    face_neighbors: Vec<[Option<usize>; 3]>,
    /// Unique undirected edges, sorted by `(min, max)`.
    edges: Vec<[usize; 2]>,
    is_boundary_vertex: Vec<bool>,
    loops: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct TriMesh3 {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    intensity: Option<Vec<f64>>,
    texture: Option<Texture>,
    topology: Topology,
    report: ValidationReport,
}

impl PartialEq for TriMesh3 {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
            && self.faces == other.faces
            && self.intensity == other.intensity
            && self.texture == other.texture
    }
}

impl TriMesh3 {
    /// Builds a mesh, rejecting malformed, degenerate or non-manifold input.
    ///
    /// Closed or multi-loop surfaces are accepted here; see [`TriMesh3::is_disk`].
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self::new_unchecked(vertices, faces)?;
        if !mesh.report.degenerate_face_ids.is_empty() {
            return Err(Error::InvalidMesh(Box::new(mesh.report)));
        }
        Ok(mesh)
    }

    /// Like [`TriMesh3::new`] but tolerates degenerate (zero-area) faces.
    ///
    /// Index and manifold checks still apply. Used for diagnostics and to
    /// exercise solver failure paths.
    pub fn new_unchecked(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let report = validate_raw(&vertices, &faces);
        if !report.malformed_face_ids.is_empty() || !report.non_manifold_edges.is_empty() {
            return Err(Error::InvalidMesh(Box::new(report)));
        }
        let topology = build_topology(vertices.len(), &faces).0;
        Ok(TriMesh3 {
            vertices,
            faces,
            intensity: None,
            texture: None,
            topology,
            report,
        })
    }

    /// Attaches per-vertex intensity in `[0, 1]`.
    pub fn with_intensity(mut self, intensity: Vec<f64>) -> Result<Self> {
        if intensity.len() != self.vertices.len() {
            return Err(Error::LengthMismatch {
                expected: self.vertices.len(),
                actual: intensity.len(),
            });
        }
        if let Some(bad) = intensity.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidConfig(format!(
                "intensity of vertex {bad} is {} (expected [0, 1])",
                intensity[bad]
            )));
        }
        self.intensity = Some(intensity);
        Ok(self)
    }

    pub fn with_texture(mut self, texture: Texture) -> Result<Self> {
        if texture.source_uv.len() != self.vertices.len() {
            return Err(Error::LengthMismatch {
                expected: self.vertices.len(),
                actual: texture.source_uv.len(),
            });
        }
        self.texture = Some(texture);
        Ok(self)
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn intensity(&self) -> Option<&[f64]> {
        self.intensity.as_deref()
    }

    pub fn texture(&self) -> Option<&Texture> {
        self.texture.as_ref()
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    pub fn is_disk(&self) -> bool {
        self.report.is_disk
    }

    /// Unique undirected edges sorted by `(min, max)` vertex id.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.topology.edges
    }

    /// Neighbor faces across the edges `(f[0], f[1])`, `(f[1], f[2])`, `(f[2], f[0])`.
    pub fn face_neighbors(&self, face: usize) -> [Option<usize>; 3] {
        self.topology.face_neighbors[face]
    }

    pub fn is_boundary_vertex(&self, vertex: usize) -> bool {
        self.topology.is_boundary_vertex[vertex]
    }

    /// A vertex is interior when it has incident faces and lies on no boundary edge.
    pub fn is_interior_vertex(&self, vertex: usize) -> bool {
        !self.topology.is_boundary_vertex[vertex] && !self.is_isolated(vertex)
    }

    fn is_isolated(&self, vertex: usize) -> bool {
        self.report.isolated_vertices.binary_search(&vertex).is_ok()
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.faces[face];
        triangle_area_3d(&self.vertices[a], &self.vertices[b], &self.vertices[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Interior angles at the three corners of every face, in face order.
    pub fn corner_angles(&self) -> Vec<[f64; 3]> {
        self.faces
            .iter()
            .map(|&[a, b, c]| {
                let (pa, pb, pc) = (&self.vertices[a], &self.vertices[b], &self.vertices[c]);
                [
                    corner_angle(pa, pb, pc),
                    corner_angle(pb, pc, pa),
                    corner_angle(pc, pa, pb),
                ]
            })
            .collect()
    }

    /// The single boundary loop, interior on the left, starting at the
    /// lowest-id boundary vertex.
    pub fn boundary_loop(&self) -> Result<&[usize]> {
        if !self.report.is_disk {
            return Err(Error::NotADisk {
                boundary_loops: self.report.boundary_loop_count,
            });
        }
        Ok(&self.topology.loops[0])
    }

    /// Rigidly transformed copy; topology and attributes are kept.
    pub fn map_vertices(&self, f: impl Fn(&Point3<f64>) -> Point3<f64>) -> TriMesh3 {
        let mut out = self.clone();
        out.vertices = self.vertices.iter().map(f).collect();
        out
    }
}

pub fn validate(mesh: &TriMesh3) -> ValidationReport {
    mesh.report.clone()
}

/// Half the cross-product magnitude.
pub fn triangle_area_3d(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Angle at `apex` of the triangle `(apex, b, c)`.
pub fn corner_angle(apex: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    let u = b - apex;
    let v = c - apex;
    u.cross(&v).norm().atan2(u.dot(&v))
}

/// Angle at `apex` of a planar triangle, always in `[0, π]`.
pub fn corner_angle_2d(apex: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>) -> f64 {
    let u = b - apex;
    let v = c - apex;
    (u.x * v.y - u.y * v.x).abs().atan2(u.dot(&v))
}

fn validate_raw(vertices: &[Point3<f64>], faces: &[[usize; 3]]) -> ValidationReport {
    let n = vertices.len();
    let mut report = ValidationReport {
        vertex_count: n,
        face_count: faces.len(),
        ..Default::default()
    };

    for (fi, f) in faces.iter().enumerate() {
        let out_of_range = f.iter().any(|&v| v >= n);
        let repeated = f[0] == f[1] || f[1] == f[2] || f[0] == f[2];
        if out_of_range || repeated {
            report.malformed_face_ids.push(fi);
        }
    }
    if !report.malformed_face_ids.is_empty() {
        return report;
    }

    let areas: Vec<f64> = faces
        .iter()
        .map(|&[a, b, c]| triangle_area_3d(&vertices[a], &vertices[b], &vertices[c]))
        .collect();
    if !areas.is_empty() {
        let mean = areas.iter().sum::<f64>() / areas.len() as f64;
        let threshold = DEGENERATE_AREA_RATIO * mean;
        report.degenerate_face_ids = areas
            .iter()
            .enumerate()
            .filter(|(_, &a)| !(a > 0.0 && a >= threshold))
            .map(|(i, _)| i)
            .collect();
    }

    let (topology, bad_edges) = build_topology(n, faces);
    report.non_manifold_edges = bad_edges;

    let mut referenced = vec![false; n];
    for f in faces {
        for &v in f {
            referenced[v] = true;
        }
    }
    report.isolated_vertices = (0..n).filter(|&v| !referenced[v]).collect();
    report.boundary_loop_count = topology.loops.len();
    report.component_count = count_components(faces, &topology.face_neighbors);
    let used_vertices = (n - report.isolated_vertices.len()) as i64;
    report.euler_characteristic =
        used_vertices - topology.edges.len() as i64 + faces.len() as i64;
    report.is_disk = report.boundary_loop_count == 1
        && report.non_manifold_edges.is_empty()
        && report.component_count == 1
        && report.euler_characteristic == 1;
    report
}

/// Builds adjacency; returns the offending edges when the surface is not an
/// oriented 2-manifold along its edges.
fn build_topology(n: usize, faces: &[[usize; 3]]) -> (Topology, Vec<[usize; 2]>) {
    // (min, max) -> list of (face, local edge index, traversed min->max)
    type EdgeUses = Vec<(usize, usize, bool)>;
    let mut edge_map: BTreeMap<(usize, usize), EdgeUses> = BTreeMap::new();
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            edge_map.entry(key).or_default().push((fi, k, a < b));
        }
    }

    let mut face_neighbors = vec![[None; 3]; faces.len()];
    let mut is_boundary_vertex = vec![false; n];
    let mut bad = Vec::new();
    let mut edges = Vec::with_capacity(edge_map.len());
    for (&(a, b), incident) in &edge_map {
        edges.push([a, b]);
        match incident.as_slice() {
            [_] => {
                is_boundary_vertex[a] = true;
                is_boundary_vertex[b] = true;
            }
            [(f0, k0, d0), (f1, k1, d1)] if d0 != d1 => {
                face_neighbors[*f0][*k0] = Some(*f1);
                face_neighbors[*f1][*k1] = Some(*f0);
            }
            _ => bad.push([a, b]),
        }
    }

    let loops = if bad.is_empty() {
        trace_boundary_loops(faces, &face_neighbors)
    } else {
        Vec::new()
    };

    (
        Topology {
            face_neighbors,
            edges,
            is_boundary_vertex,
            loops,
        },
        bad,
    )
}

/// Follows boundary half-edges, rotating through the face fan at each vertex
/// so that a vertex shared by two separate fans starts two separate loops.
fn trace_boundary_loops(
    faces: &[[usize; 3]],
    neighbors: &[[Option<usize>; 3]],
) -> Vec<Vec<usize>> {
    // Boundary half-edges keyed by (face, local index).
    let mut boundary: BTreeMap<(usize, usize), bool> = BTreeMap::new();
    for (fi, nb) in neighbors.iter().enumerate() {
        for (k, n) in nb.iter().enumerate() {
            if n.is_none() {
                boundary.insert((fi, k), false);
            }
        }
    }

    let local_index = |f: usize, v: usize| faces[f].iter().position(|&x| x == v);
    let max_rotation = faces.len() + 1;

    let mut loops = Vec::new();
    let starts: Vec<(usize, usize)> = boundary.keys().copied().collect();
    for start in starts {
        if boundary[&start] {
            continue;
        }
        let mut lp = Vec::new();
        let mut cur = start;
        loop {
            *boundary.get_mut(&cur).unwrap() = true;
            let (f, k) = cur;
            lp.push(faces[f][k]);
            let v = faces[f][(k + 1) % 3];
            // Walk the fan around v until the next boundary half-edge is found.
            let mut g = f;
            let mut next = None;
            for _ in 0..max_rotation {
                let Some(kv) = local_index(g, v) else { break };
                match neighbors[g][kv] {
                    None => {
                        next = Some((g, kv));
                        break;
                    }
                    Some(h) => g = h,
                }
            }
            match next {
                Some(nx) if nx == start => break,
                Some(nx) if !boundary[&nx] => cur = nx,
                _ => break,
            }
        }
        loops.push(lp);
    }

    for lp in &mut loops {
        if let Some(pos) = lp.iter().enumerate().min_by_key(|(_, &v)| v).map(|(i, _)| i) {
            lp.rotate_left(pos);
        }
    }
    loops.sort_by_key(|lp| lp.first().copied());
    loops
}

fn count_components(faces: &[[usize; 3]], neighbors: &[[Option<usize>; 3]]) -> usize {
    // Faces that only share a vertex are still one component.
    let n = faces.iter().flatten().copied().max().map_or(0, |m| m + 1);
    let mut parent: Vec<usize> = (0..faces.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let union = |p: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(p, a), find(p, b));
        if ra != rb {
            p[ra.max(rb)] = ra.min(rb);
        }
    };
    for (fi, nb) in neighbors.iter().enumerate() {
        for g in nb.iter().flatten() {
            union(&mut parent, fi, *g);
        }
    }
    let mut first_face = vec![usize::MAX; n];
    for (fi, f) in faces.iter().enumerate() {
        for &v in f {
            if first_face[v] == usize::MAX {
                first_face[v] = fi;
            } else {
                union(&mut parent, first_face[v], fi);
            }
        }
    }
    (0..faces.len())
        .filter(|&f| find(&mut parent, f) == f)
        .count()
}
