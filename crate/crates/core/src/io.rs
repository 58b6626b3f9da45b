//! Wavefront OBJ and Stanford PLY input, OBJ output.
//!
//! Per-vertex intensity comes from (in order of precedence) a sidecar file
//! next to the mesh with the extension `.intensity` holding one value per
//! line, OBJ `v x y z r g b` colors or PLY `red/green/blue` or `intensity`
//! properties. Colors are reduced to luminance.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{Point2, Point3};

use crate::error::{Error, Result};
use crate::mesh::{Texture, TriMesh3};
use crate::raster::RasterImage;
use crate::uv::UVMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<MeshFormat> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Some(MeshFormat::Obj),
            "ply" => Some(MeshFormat::Ply),
            _ => None,
        }
    }
}

impl FromStr for MeshFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "obj" => Ok(MeshFormat::Obj),
            "ply" => Ok(MeshFormat::Ply),
            other => Err(format!("unknown mesh format `{other}`")),
        }
    }
}

/// Geometry and attributes as read from disk, before validation.
#[derive(Debug, Clone, Default)]
pub struct RawMesh {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<[usize; 3]>,
    pub intensity: Option<Vec<f64>>,
    pub source_uv: Option<Vec<Point2<f64>>>,
    pub texture_image: Option<PathBuf>,
}

fn luminance(rgb: [f64; 3]) -> f64 {
    if rgb[0] == rgb[1] && rgb[1] == rgb[2] {
        return rgb[0];
    }
    0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]
}

/// Loads, attaches intensity or texture, and validates a mesh. The result
/// is guaranteed to be a manifold topological disk without degenerate faces.
pub fn load_mesh(path: impl AsRef<Path>, format: Option<MeshFormat>) -> Result<TriMesh3> {
    let path = path.as_ref();
    let format = match format.or_else(|| MeshFormat::from_path(path)) {
        Some(f) => f,
        None => return Err(Error::parse(path, 0, "cannot infer mesh format from the file extension")),
    };
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut raw = match format {
        MeshFormat::Obj => parse_obj(&String::from_utf8_lossy(&text), path)?,
        MeshFormat::Ply => parse_ply(&text, path)?,
    };
    let sidecar = path.with_extension("intensity");
    if sidecar.is_file() {
        raw.intensity = Some(read_intensity(&sidecar)?);
    }
    let mesh = build_mesh(raw)?;
    if !mesh.is_disk() {
        return Err(Error::InvalidMesh(Box::new(mesh.report().clone())));
    }
    Ok(mesh)
}

fn build_mesh(raw: RawMesh) -> Result<TriMesh3> {
    let mut mesh = TriMesh3::new(raw.vertices, raw.faces)?;
    if let Some(intensity) = raw.intensity {
        mesh = mesh.with_intensity(intensity)?;
    } else if let (Some(uv), Some(image)) = (raw.source_uv, raw.texture_image) {
        let image = RasterImage::load(&image)?;
        mesh = mesh.with_texture(Texture { image, source_uv: uv })?;
    }
    Ok(mesh)
}

pub fn read_intensity(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let v: f64 = l
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("invalid intensity `{}`", l.trim())))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::parse(path, i + 1, format!("intensity {v} outside [0, 1]")));
            }
            Ok(v)
        })
        .collect()
}

fn parse_f64(tok: Option<&str>, path: &Path, line: usize, what: &str) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::parse(path, line, format!("missing {what}")))?;
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::parse(path, line, format!("invalid {what} `{tok}`")))?;
    if !v.is_finite() {
        return Err(Error::parse(path, line, format!("non-finite {what}")));
    }
    Ok(v)
}

/// Resolves a 1-based or negative (relative) OBJ index.
fn obj_index(tok: &str, count: usize, path: &Path, line: usize) -> Result<usize> {
    let i: i64 = tok
        .parse()
        .map_err(|_| Error::parse(path, line, format!("invalid index `{tok}`")))?;
    let resolved = if i > 0 {
        i - 1
    } else if i < 0 {
        count as i64 + i
    } else {
        -1
    };
    if resolved < 0 || resolved >= count as i64 {
        return Err(Error::parse(path, line, format!("index {i} out of range ({count} defined)")));
    }
    Ok(resolved as usize)
}

pub fn parse_obj(text: &str, path: &Path) -> Result<RawMesh> {
    let mut raw = RawMesh::default();
    let mut colors: Vec<Option<[f64; 3]>> = Vec::new();
    let mut tex_coords: Vec<Point2<f64>> = Vec::new();
    let mut vertex_tc: Vec<Option<usize>> = Vec::new();
    let mut mtllib: Option<PathBuf> = None;

    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for (k, axis) in ["x", "y", "z"].iter().enumerate() {
                    c[k] = parse_f64(tok.next(), path, ln, axis)?;
                }
                raw.vertices.push(Point3::new(c[0], c[1], c[2]));
                let rest: Vec<&str> = tok.collect();
                colors.push(match rest.len() {
                    0 | 1 => None,
                    _ => {
                        let mut rgb = [0.0; 3];
                        for (k, ch) in ["red", "green", "blue"].iter().enumerate() {
                            rgb[k] = parse_f64(rest.get(k).copied(), path, ln, ch)?;
                        }
                        Some(rgb)
                    }
                });
            }
            Some("vt") => {
                let u = parse_f64(tok.next(), path, ln, "u")?;
                let v = parse_f64(tok.next(), path, ln, "v")?;
                tex_coords.push(Point2::new(u, v));
            }
            Some("f") => {
                let corners: Vec<&str> = tok.collect();
                if corners.len() != 3 {
                    return Err(Error::parse(
                        path,
                        ln,
                        format!("only triangles are supported, face has {} vertices", corners.len()),
                    ));
                }
                let mut face = [0; 3];
                for (k, corner) in corners.iter().enumerate() {
                    let mut parts = corner.split('/');
                    let v = obj_index(parts.next().unwrap_or(""), raw.vertices.len(), path, ln)?;
                    face[k] = v;
                    if let Some(t) = parts.next().filter(|t| !t.is_empty()) {
                        let t = obj_index(t, tex_coords.len(), path, ln)?;
                        vertex_tc.resize(raw.vertices.len(), None);
                        match vertex_tc[v] {
                            None => vertex_tc[v] = Some(t),
                            Some(prev) if tex_coords[prev] == tex_coords[t] => {}
                            Some(_) => {
                                return Err(Error::parse(
                                    path,
                                    ln,
                                    format!("vertex {} has several texture coordinates (texture seams are unsupported)", v + 1),
                                ))
                            }
                        }
                    }
                }
                raw.faces.push(face);
            }
            Some("mtllib") => {
                let name = line["mtllib".len()..].trim();
                mtllib = Some(path.parent().unwrap_or(Path::new("")).join(name));
            }
            _ => {}
        }
    }

    let with_color = colors.iter().filter(|c| c.is_some()).count();
    if with_color > 0 {
        if with_color != colors.len() {
            return Err(Error::parse(path, 0, "only some vertices carry colors"));
        }
        let scale = if colors.iter().flatten().flatten().any(|&c| c > 1.0) {
            1.0 / 255.0
        } else {
            1.0
        };
        raw.intensity = Some(
            colors
                .iter()
                .map(|c| luminance(c.unwrap().map(|x| x * scale)).clamp(0.0, 1.0))
                .collect(),
        );
    }
    if let Some(mtl) = mtllib {
        if !tex_coords.is_empty() {
            vertex_tc.resize(raw.vertices.len(), None);
            if let Some(v) = vertex_tc.iter().position(Option::is_none) {
                return Err(Error::parse(path, 0, format!("vertex {} has no texture coordinate", v + 1)));
            }
            raw.source_uv = Some(vertex_tc.iter().map(|t| tex_coords[t.unwrap()]).collect());
            raw.texture_image = diffuse_map(&mtl)?;
        }
    }
    Ok(raw)
}

/// First `map_Kd` of a material library, relative to the library.
fn diffuse_map(mtl: &Path) -> Result<Option<PathBuf>> {
    let text = fs::read_to_string(mtl).map_err(|e| Error::io(mtl, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .find_map(|l| l.strip_prefix("map_Kd"))
        .and_then(|rest| rest.split_whitespace().last())
        .map(|name| mtl.parent().unwrap_or(Path::new("")).join(name)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Encoding {
    Ascii,
    BinaryLe,
    BinaryBe,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Scalar> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn decode(self, b: &[u8], enc: Encoding) -> f64 {
        macro_rules! num {
            ($t:ty) => {{
                let arr = b.try_into().unwrap();
                (if enc == Encoding::BinaryBe { <$t>::from_be_bytes(arr) } else { <$t>::from_le_bytes(arr) }) as f64
            }};
        }
        match self {
            Scalar::I8 => num!(i8),
            Scalar::U8 => num!(u8),
            Scalar::I16 => num!(i16),
            Scalar::U16 => num!(u16),
            Scalar::I32 => num!(i32),
            Scalar::U32 => num!(u32),
            Scalar::F32 => num!(f32),
            Scalar::F64 => num!(f64),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar(n, _) | Property::List(n, _, _) => n,
        }
    }
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

/// Pulls values out of the body in either encoding.
struct PlyReader<'a> {
    enc: Encoding,
    bytes: &'a [u8],
    pos: usize,
    tokens: std::iter::Peekable<std::str::SplitAsciiWhitespace<'a>>,
    path: &'a Path,
}

impl PlyReader<'_> {
    fn read(&mut self, ty: Scalar) -> Result<f64> {
        match self.enc {
            Encoding::Ascii => {
                let t = self
                    .tokens
                    .next()
                    .ok_or_else(|| Error::parse(self.path, 0, "unexpected end of PLY data"))?;
                t.parse::<f64>()
                    .map_err(|_| Error::parse(self.path, 0, format!("invalid PLY value `{t}`")))
            }
            _ => {
                let n = ty.size();
                let chunk = self
                    .bytes
                    .get(self.pos..self.pos + n)
                    .ok_or_else(|| Error::parse(self.path, 0, "unexpected end of PLY data"))?;
                self.pos += n;
                Ok(ty.decode(chunk, self.enc))
            }
        }
    }
}

pub fn parse_ply(data: &[u8], path: &Path) -> Result<RawMesh> {
    let header_end = data
        .windows(10)
        .position(|w| w == b"end_header")
        .ok_or_else(|| Error::parse(path, 1, "missing end_header"))?;
    let header = String::from_utf8_lossy(&data[..header_end]);
    let mut body_start = header_end + "end_header".len();
    if data.get(body_start) == Some(&b'\r') {
        body_start += 1;
    }
    if data.get(body_start) == Some(&b'\n') {
        body_start += 1;
    }

    let mut lines = header.lines().enumerate();
    if lines.next().map(|(_, l)| l.trim()) != Some("ply") {
        return Err(Error::parse(path, 1, "not a PLY file"));
    }
    let mut enc = None;
    let mut elements: Vec<Element> = Vec::new();
    for (i, line) in lines {
        let ln = i + 1;
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["format", f, _] => {
                enc = Some(match *f {
                    "ascii" => Encoding::Ascii,
                    "binary_little_endian" => Encoding::BinaryLe,
                    "binary_big_endian" => Encoding::BinaryBe,
                    other => return Err(Error::parse(path, ln, format!("unknown PLY format `{other}`"))),
                })
            }
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| Error::parse(path, ln, format!("invalid element count `{count}`")))?,
                properties: Vec::new(),
            }),
            ["property", "list", c, t, name] => {
                let ty = |s: &str| Scalar::parse(s).ok_or_else(|| Error::parse(path, ln, format!("unknown type `{s}`")));
                let prop = Property::List(name.to_string(), ty(c)?, ty(t)?);
                elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(path, ln, "property before element"))?
                    .properties
                    .push(prop);
            }
            ["property", t, name] => {
                let ty = Scalar::parse(t).ok_or_else(|| Error::parse(path, ln, format!("unknown type `{t}`")))?;
                elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(path, ln, "property before element"))?
                    .properties
                    .push(Property::Scalar(name.to_string(), ty));
            }
            [] | ["comment", ..] | ["obj_info", ..] => {}
            _ => return Err(Error::parse(path, ln, format!("unrecognized header line `{line}`"))),
        }
    }
    let enc = enc.ok_or_else(|| Error::parse(path, 1, "missing format line"))?;

    let body = &data[body_start..];
    let ascii = if enc == Encoding::Ascii { std::str::from_utf8(body).unwrap_or("") } else { "" };
    let mut reader = PlyReader {
        enc,
        bytes: body,
        pos: 0,
        tokens: ascii.split_ascii_whitespace().peekable(),
        path,
    };

    let mut raw = RawMesh::default();
    let mut colors: Vec<[f64; 3]> = Vec::new();
    let mut intensity: Vec<f64> = Vec::new();
    for el in &elements {
        let idx = |n: &str| el.properties.iter().position(|p| p.name() == n);
        let (xi, yi, zi) = (idx("x"), idx("y"), idx("z"));
        let rgb_idx = [idx("red"), idx("green"), idx("blue")];
        let rgb_types: Vec<Option<Scalar>> = rgb_idx
            .iter()
            .map(|i| match i.map(|i| &el.properties[i]) {
                Some(Property::Scalar(_, t)) => Some(*t),
                _ => None,
            })
            .collect();
        let int_idx = idx("intensity").or_else(|| idx("quality"));
        let face_idx = idx("vertex_indices").or_else(|| idx("vertex_index"));
        for _ in 0..el.count {
            let mut scalars = vec![0.0; el.properties.len()];
            let mut list: Vec<f64> = Vec::new();
            for (k, p) in el.properties.iter().enumerate() {
                match p {
                    Property::Scalar(_, t) => scalars[k] = reader.read(*t)?,
                    Property::List(_, ct, t) => {
                        let n = reader.read(*ct)?;
                        if !(n >= 0.0) {
                            return Err(Error::parse(path, 0, "negative list length"));
                        }
                        let values = (0..n as usize).map(|_| reader.read(*t)).collect::<Result<Vec<_>>>()?;
                        if Some(k) == face_idx {
                            list = values;
                        }
                    }
                }
            }
            if el.name == "vertex" {
                let (Some(x), Some(y), Some(z)) = (xi, yi, zi) else {
                    return Err(Error::parse(path, 0, "vertex element lacks x, y or z"));
                };
                let p = Point3::new(scalars[x], scalars[y], scalars[z]);
                if !p.iter().all(|c| c.is_finite()) {
                    return Err(Error::parse(path, 0, "non-finite vertex coordinate"));
                }
                raw.vertices.push(p);
                if rgb_idx.iter().all(Option::is_some) {
                    let mut c = [0.0; 3];
                    for k in 0..3 {
                        let v = scalars[rgb_idx[k].unwrap()];
                        c[k] = match rgb_types[k] {
                            Some(Scalar::F32 | Scalar::F64) => v,
                            Some(Scalar::U16) => v / 65535.0,
                            _ => v / 255.0,
                        };
                    }
                    colors.push(c);
                }
                if let Some(i) = int_idx {
                    intensity.push(scalars[i]);
                }
            } else if el.name == "face" {
                if face_idx.is_none() {
                    return Err(Error::parse(path, 0, "face element lacks vertex_indices"));
                }
                if list.len() != 3 {
                    return Err(Error::parse(
                        path,
                        0,
                        format!("only triangles are supported, face has {} vertices", list.len()),
                    ));
                }
                let mut face = [0; 3];
                for (k, &v) in list.iter().enumerate() {
                    if !(v >= 0.0 && v.fract() == 0.0) {
                        return Err(Error::parse(path, 0, format!("invalid vertex index {v}")));
                    }
                    face[k] = v as usize;
                }
                raw.faces.push(face);
            }
        }
    }
    if !intensity.is_empty() {
        if let Some(v) = intensity.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::parse(path, 0, format!("intensity {v} outside [0, 1]")));
        }
        raw.intensity = Some(intensity);
    } else if !colors.is_empty() {
        raw.intensity = Some(colors.into_iter().map(|c| luminance(c).clamp(0.0, 1.0)).collect());
    }
    Ok(raw)
}

/// OBJ text for a mesh; intensity, if present, is written as gray vertex
/// colors. Coordinates use shortest round-trip formatting, so reloading
/// reproduces the mesh exactly.
pub fn obj_string(mesh: &TriMesh3) -> String {
    let mut out = String::new();
    for (i, p) in mesh.vertices().iter().enumerate() {
        let _ = match mesh.intensity() {
            Some(c) => writeln!(out, "v {} {} {} {i} {i} {i}", p.x, p.y, p.z, i = c[i]),
            None => writeln!(out, "v {} {} {}", p.x, p.y, p.z),
        };
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

/// OBJ text for arbitrary vertex positions with the given faces, as used
/// for simulation snapshots.
pub fn positions_obj_string(positions: &[Point3<f64>], faces: &[[usize; 3]]) -> String {
    let mut out = String::new();
    for p in positions {
        let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
    }
    for f in faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

/// OBJ text of the source mesh with the parameterization as `vt` records.
pub fn uv_obj_string(uv: &UVMap) -> String {
    let mesh = uv.mesh();
    let mut out = String::new();
    let _ = writeln!(out, "# {} parameterization", uv.algorithm());
    for p in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
    }
    for t in uv.coords() {
        let _ = writeln!(out, "vt {} {}", t.x, t.y);
    }
    for f in mesh.faces() {
        let (a, b, c) = (f[0] + 1, f[1] + 1, f[2] + 1);
        let _ = writeln!(out, "f {a}/{a} {b}/{b} {c}/{c}");
    }
    out
}

pub fn write_obj(mesh: &TriMesh3, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, obj_string(mesh)).map_err(|e| Error::io(path, e))
}

pub fn write_uv_obj(uv: &UVMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, uv_obj_string(uv)).map_err(|e| Error::io(path, e))
}

/// Reads the `vt` records of an OBJ written by [`write_uv_obj`], one per vertex.
pub fn read_uv_obj(path: impl AsRef<Path>) -> Result<Vec<Point2<f64>>> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut vt = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        let mut tok = line.split_whitespace();
        if tok.next() == Some("vt") {
            let u = parse_f64(tok.next(), path, i + 1, "u")?;
            let v = parse_f64(tok.next(), path, i + 1, "v")?;
            vt.push(Point2::new(u, v));
        }
    }
    Ok(vt)
}
