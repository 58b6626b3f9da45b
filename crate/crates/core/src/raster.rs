//! Software rasterization of parameterizations: flattened texture images,
//! per-face heatmaps and fold masks, written as binary PPM/PGM.
//!
//! Coverage is decided by sampling pixel centers against triangles whose
//! vertices are snapped to a 1/256 subpixel grid, with integer edge
//! functions and a consistent ownership rule for shared edges. The result
//! is bit-reproducible and every pixel belongs to at most one face of a
//! fold-free map.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::Point2;

use crate::colormap::viridis;
use crate::error::{Error, Result};
use crate::uv::UVMap;

/// Largest width or height of a rendered image.
pub const MAX_IMAGE_SIDE: usize = 16384;
/// Blank border around the parameterization, in pixels.
pub const PADDING: usize = 2;
const SUBPIXEL: f64 = 256.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channels {
    Gray,
    Rgb,
}

impl Channels {
    pub fn count(self) -> usize {
        match self {
            Channels::Gray => 1,
            Channels::Rgb => 3,
        }
    }
}

/// Row-major 8-bit image plus the UV-to-pixel mapping it was rendered with.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: Channels,
    pixels: Vec<u8>,
    /// UV coordinate mapped to the top-left corner of the padded area.
    origin: Point2<f64>,
    /// Pixels per UV unit.
    scale: f64,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: Channels, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidConfig(format!("image dimensions {width}x{height} must be positive")));
        }
        let expected = width * height * channels.count();
        if pixels.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(RasterImage {
            width,
            height,
            channels,
            pixels,
            origin: Point2::origin(),
            scale: 1.0,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> Channels {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn origin(&self) -> Point2<f64> {
        self.origin
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let n = self.channels.count();
        let i = (y * self.width + x) * n;
        &self.pixels[i..i + n]
    }

    /// Pixel coordinates (continuous, y down) of a UV point.
    pub fn uv_to_pixel(&self, p: &Point2<f64>) -> (f64, f64) {
        (
            (p.x - self.origin.x) * self.scale + PADDING as f64,
            (self.origin.y - p.y) * self.scale + PADDING as f64,
        )
    }

    /// Nonzero pixels of a single-channel image.
    pub fn count_nonzero(&self) -> usize {
        self.pixels
            .chunks_exact(self.channels.count())
            .filter(|p| p.iter().any(|&c| c != 0))
            .count()
    }

    /// Bilinear sample at texture coordinates `(s, t)` with `t` pointing up,
    /// in `[0, 1]` per channel. Coordinates outside the image are clamped.
    pub fn sample_bilinear(&self, s: f64, t: f64) -> [f64; 3] {
        let x = (s * self.width as f64 - 0.5).clamp(0.0, (self.width - 1) as f64);
        let y = ((1.0 - t) * self.height as f64 - 0.5).clamp(0.0, (self.height - 1) as f64);
        let (x0, y0) = (x.floor() as usize, y.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(self.width - 1), (y0 + 1).min(self.height - 1));
        let (fx, fy) = (x - x0 as f64, y - y0 as f64);
        let mut out = [0.0; 3];
        let n = self.channels.count();
        for (c, slot) in out.iter_mut().enumerate() {
            let ch = c.min(n - 1);
            let get = |x: usize, y: usize| self.pixel(x, y)[ch] as f64 / 255.0;
            *slot = (get(x0, y0) * (1.0 - fx) + get(x1, y0) * fx) * (1.0 - fy)
                + (get(x0, y1) * (1.0 - fx) + get(x1, y1) * fx) * fy;
        }
        out
    }

    /// Binary PGM (`P5`) or PPM (`P6`), maxval 255, no comments.
    pub fn write_pnm<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let magic = match self.channels {
            Channels::Gray => "P5",
            Channels::Rgb => "P6",
        };
        write!(out, "{magic}\n{} {}\n255\n", self.width, self.height)?;
        out.write_all(&self.pixels)
    }

    pub fn to_pnm_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.pixels.len() + 20);
        self.write_pnm(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_pnm_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Reads binary `P5`/`P6` with maxval up to 255.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        read_pnm(BufReader::new(file), path)
    }
}

fn read_pnm<R: BufRead>(mut input: R, path: &Path) -> Result<RasterImage> {
    let mut header = Vec::new();
    let mut bytes = input.by_ref().bytes();
    let mut line = 1;
    // Magic, width, height and maxval, separated by whitespace and comments.
    while header.len() < 4 {
        let mut token = Vec::new();
        loop {
            let b = match bytes.next() {
                Some(b) => b.map_err(|e| Error::io(path, e))?,
                None => return Err(Error::parse(path, line, "truncated PNM header")),
            };
            if b == b'#' && token.is_empty() {
                for b in bytes.by_ref() {
                    if b.map_err(|e| Error::io(path, e))? == b'\n' {
                        break;
                    }
                }
                line += 1;
                continue;
            }
            if b.is_ascii_whitespace() {
                if b == b'\n' {
                    line += 1;
                }
                if token.is_empty() {
                    continue;
                }
                break;
            }
            token.push(b);
        }
        header.push(String::from_utf8_lossy(&token).into_owned());
    }
    let channels = match header[0].as_str() {
        "P5" => Channels::Gray,
        "P6" => Channels::Rgb,
        other => return Err(Error::parse(path, 1, format!("unsupported PNM magic `{other}`"))),
    };
    let num = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::parse(path, line, format!("invalid {what} `{s}`")))
    };
    let width = num(&header[1], "width")?;
    let height = num(&header[2], "height")?;
    let maxval = num(&header[3], "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::parse(path, line, format!("unsupported maxval {maxval}")));
    }
    let mut pixels = vec![0u8; width * height * channels.count()];
    input
        .read_exact(&mut pixels)
        .map_err(|_| Error::parse(path, line, "truncated pixel data"))?;
    if maxval != 255 {
        for p in &mut pixels {
            *p = ((*p as usize * 255 + maxval / 2) / maxval).min(255) as u8;
        }
    }
    RasterImage::new(width, height, channels, pixels).map_err(|e| Error::parse(path, line, e.to_string()))
}

/// Placement of a parameterization in pixel space.
#[derive(Debug, Clone, Copy)]
struct Frame {
    origin: Point2<f64>,
    scale: f64,
    width: usize,
    height: usize,
}

impl Frame {
    fn fit(uv: &UVMap, resolution: f64) -> Result<Frame> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidConfig(format!("resolution must be positive, got {resolution}")));
        }
        let (lo, hi) = uv.bounds().ok_or(Error::EmptyParameterization)?;
        if uv.mesh().face_count() == 0 || !(uv.total_area() > 0.0) {
            return Err(Error::EmptyParameterization);
        }
        let extent = |d: f64| (d * resolution).ceil() + (2 * PADDING) as f64;
        let (w, h) = (extent(hi.x - lo.x), extent(hi.y - lo.y));
        let limit = MAX_IMAGE_SIDE as f64;
        if !(w <= limit && h <= limit) {
            return Err(Error::ImageTooLarge {
                width: w.min(usize::MAX as f64) as usize,
                height: h.min(usize::MAX as f64) as usize,
                limit: MAX_IMAGE_SIDE,
            });
        }
        Ok(Frame {
            origin: Point2::new(lo.x, hi.y),
            scale: resolution,
            width: (w as usize).max(1),
            height: (h as usize).max(1),
        })
    }

    fn fixed(&self, p: &Point2<f64>) -> (i64, i64) {
        let x = (p.x - self.origin.x) * self.scale + PADDING as f64;
        let y = (self.origin.y - p.y) * self.scale + PADDING as f64;
        ((x * SUBPIXEL).round() as i64, (y * SUBPIXEL).round() as i64)
    }

    fn blank(&self, channels: Channels) -> RasterImage {
        RasterImage {
            width: self.width,
            height: self.height,
            channels,
            pixels: vec![0; self.width * self.height * channels.count()],
            origin: self.origin,
            scale: self.scale,
        }
    }
}

/// Whether an edge along `d` owns samples lying exactly on it. Opposite
/// directions never both own, so a shared edge belongs to one face.
fn owns_edge(dx: i64, dy: i64) -> bool {
    dy < 0 || (dy == 0 && dx > 0)
}

/// Calls `visit(x, y, weights)` for every pixel center covered by the
/// triangle, with barycentric weights of its three vertices.
fn scan_triangle(frame: &Frame, tri: [Point2<f64>; 3], mut visit: impl FnMut(usize, usize, [f64; 3])) {
    let mut v = tri.map(|p| frame.fixed(&p));
    let mut order = [0, 1, 2];
    let area2 = (v[1].0 - v[0].0) * (v[2].1 - v[0].1) - (v[1].1 - v[0].1) * (v[2].0 - v[0].0);
    if area2 == 0 {
        return;
    }
    if area2 < 0 {
        v.swap(1, 2);
        order.swap(1, 2);
    }
    let area2 = area2.abs();
    let sub = SUBPIXEL as i64;
    let x_lo = v.iter().map(|p| p.0).min().unwrap().div_euclid(sub).max(0) as usize;
    let y_lo = v.iter().map(|p| p.1).min().unwrap().div_euclid(sub).max(0) as usize;
    let x_hi = (v.iter().map(|p| p.0).max().unwrap().div_euclid(sub) as usize).min(frame.width - 1);
    let y_hi = (v.iter().map(|p| p.1).max().unwrap().div_euclid(sub) as usize).min(frame.height - 1);
    // Edge k is opposite vertex k.
    let edges: [((i64, i64), (i64, i64)); 3] = [(v[1], v[2]), (v[2], v[0]), (v[0], v[1])];
    let owned = edges.map(|(a, b)| owns_edge(b.0 - a.0, b.1 - a.1));
    for y in y_lo..=y_hi {
        let py = y as i64 * sub + sub / 2;
        for x in x_lo..=x_hi {
            let px = x as i64 * sub + sub / 2;
            let mut e = [0i64; 3];
            let mut inside = true;
            for (k, &(a, b)) in edges.iter().enumerate() {
                e[k] = (b.0 - a.0) * (py - a.1) - (b.1 - a.1) * (px - a.0);
                if e[k] < 0 || (e[k] == 0 && !owned[k]) {
                    inside = false;
                    break;
                }
            }
            if inside {
                let mut w = [0.0; 3];
                for k in 0..3 {
                    w[order[k]] = e[k] as f64 / area2 as f64;
                }
                visit(x, y, w);
            }
        }
    }
}

/// Winning face per pixel and how many faces cover it.
struct Coverage {
    frame: Frame,
    owner: Vec<Option<(usize, [f64; 3])>>,
    count: Vec<u16>,
}

/// Overlaps go to the face with the largest 3D area, then the lowest id.
fn cover(uv: &UVMap, resolution: f64) -> Result<Coverage> {
    let frame = Frame::fit(uv, resolution)?;
    let n = frame.width * frame.height;
    let mut owner: Vec<Option<(usize, [f64; 3])>> = vec![None; n];
    let mut count = vec![0u16; n];
    let mesh = uv.mesh();
    for f in 0..mesh.face_count() {
        let area = mesh.face_area(f);
        scan_triangle(&frame, uv.face_points(f), |x, y, w| {
            let i = y * frame.width + x;
            count[i] = count[i].saturating_add(1);
            let replace = match owner[i] {
                None => true,
                Some((g, _)) => area > mesh.face_area(g),
            };
            if replace {
                owner[i] = Some((f, w));
            }
        });
    }
    Ok(Coverage { frame, owner, count })
}

/// A flattened texture image and the mask of pixels where faces overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureRender {
    pub image: RasterImage,
    /// 255 where two or more faces cover the pixel, else 0.
    pub fold_mask: RasterImage,
    pub covered_pixels: usize,
    pub folded_pixels: usize,
}

/// Renders the mesh's intensity (grayscale) or texture (channels of the
/// source image) into parameter space at `resolution` pixels per UV unit.
pub fn rasterize_texture(uv: &UVMap, resolution: f64) -> Result<TextureRender> {
    let mesh = uv.mesh();
    if mesh.intensity().is_none() && mesh.texture().is_none() {
        return Err(Error::MissingTexture);
    }
    let cov = cover(uv, resolution)?;
    let channels = match (mesh.intensity(), mesh.texture()) {
        (None, Some(tex)) => tex.image.channels(),
        _ => Channels::Gray,
    };
    let mut image = cov.frame.blank(channels);
    let mut fold_mask = cov.frame.blank(Channels::Gray);
    let mut covered = 0;
    let mut folded = 0;
    let n = channels.count();
    let quantize = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    for (i, slot) in cov.owner.iter().enumerate() {
        if cov.count[i] >= 2 {
            fold_mask.pixels[i] = 255;
            folded += 1;
        }
        let Some((f, w)) = slot else { continue };
        covered += 1;
        let face = mesh.faces()[*f];
        let out = &mut image.pixels[i * n..(i + 1) * n];
        if let Some(intensity) = mesh.intensity() {
            out[0] = quantize((0..3).map(|k| w[k] * intensity[face[k]]).sum());
        } else if let Some(tex) = mesh.texture() {
            let st = (0..3).fold(Point2::origin(), |acc: Point2<f64>, k| {
                acc + tex.source_uv[face[k]].coords * w[k]
            });
            let rgb = tex.image.sample_bilinear(st.x, st.y);
            for (c, o) in out.iter_mut().enumerate() {
                *o = quantize(rgb[c]);
            }
        }
    }
    Ok(TextureRender {
        image,
        fold_mask,
        covered_pixels: covered,
        folded_pixels: folded,
    })
}

/// Fills every face flat with the viridis color of its value normalized to
/// `range`. Background pixels stay black.
pub fn heatmap(uv: &UVMap, values: &[f64], range: (f64, f64), resolution: f64) -> Result<RasterImage> {
    let faces = uv.mesh().face_count();
    if values.len() != faces {
        return Err(Error::LengthMismatch {
            expected: faces,
            actual: values.len(),
        });
    }
    let (lo, hi) = range;
    if !(lo < hi) {
        return Err(Error::InvalidConfig(format!("heatmap range [{lo}, {hi}] is empty")));
    }
    let cov = cover(uv, resolution)?;
    let mut image = cov.frame.blank(Channels::Rgb);
    for (i, slot) in cov.owner.iter().enumerate() {
        if let Some((f, _)) = slot {
            let color = viridis((values[*f] - lo) / (hi - lo));
            image.pixels[i * 3..i * 3 + 3].copy_from_slice(&color);
        }
    }
    Ok(image)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::TriMesh3;
    use crate::uv::Algorithm;
    use nalgebra::Point3;
    use std::sync::Arc;

    fn single(intensity: [f64; 3]) -> UVMap {
        let v = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        let uv = v.iter().map(|p| Point2::new(p.x, p.y)).collect();
        let mesh = TriMesh3::new(v, vec![[0, 1, 2]])
            .unwrap()
            .with_intensity(intensity.to_vec())
            .unwrap();
        UVMap::new(Arc::new(mesh), uv, Algorithm::Lscm).unwrap()
    }

    #[test]
    fn frame_size_includes_padding() {
        let r = rasterize_texture(&single([0.5; 3]), 100.0).unwrap();
        assert_eq!((r.image.width(), r.image.height()), (104, 104));
    }

    #[test]
    fn uniform_intensity() {
        let r = rasterize_texture(&single([0.5; 3]), 50.0).unwrap();
        assert!(r.covered_pixels > 0);
        for p in r.image.pixels() {
            assert!(*p == 0 || (127..=129).contains(p));
        }
        assert_eq!(r.folded_pixels, 0);
    }

    #[test]
    fn missing_texture() {
        let mesh = TriMesh3::new(
            vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let uv = vec![Point2::origin(), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        let uv = UVMap::new(Arc::new(mesh), uv, Algorithm::Abf).unwrap();
        assert!(matches!(rasterize_texture(&uv, 10.0), Err(Error::MissingTexture)));
    }

    #[test]
    fn collapsed_uv_is_empty() {
        let uv = single([0.5; 3]);
        let uv = uv.with_coords(vec![Point2::origin(); 3]);
        assert!(matches!(rasterize_texture(&uv, 10.0), Err(Error::EmptyParameterization)));
    }

    #[test]
    fn oversized_image_is_rejected() {
        assert!(matches!(
            rasterize_texture(&single([0.5; 3]), 1e5),
            Err(Error::ImageTooLarge { .. })
        ));
    }

    #[test]
    fn shared_edge_is_covered_once() {
        // Square split along the diagonal; every pixel center hit at most once.
        let v = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        let uv = v.iter().map(|p| Point2::new(p.x, p.y)).collect();
        let mesh = TriMesh3::new(v, vec![[0, 1, 2], [0, 2, 3]])
            .unwrap()
            .with_intensity(vec![1.0; 4])
            .unwrap();
        let uv = UVMap::new(Arc::new(mesh), uv, Algorithm::Lscm).unwrap();
        // Resolution 8 puts pixel centers exactly on the diagonal.
        let r = rasterize_texture(&uv, 8.0).unwrap();
        assert_eq!(r.folded_pixels, 0);
        assert_eq!(r.covered_pixels, 64);
    }

    #[test]
    fn pnm_layout() {
        let img = RasterImage::new(2, 1, Channels::Rgb, vec![1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(img.to_pnm_bytes(), b"P6\n2 1\n255\n\x01\x02\x03\x04\x05\x06".to_vec());
        let gray = RasterImage::new(1, 1, Channels::Gray, vec![9]).unwrap();
        assert_eq!(gray.to_pnm_bytes(), b"P5\n1 1\n255\n\x09".to_vec());
    }

    #[test]
    fn pnm_round_trip_with_comment() {
        let bytes = b"P5\n# made by hand\n2 2\n255\n\x00\x40\x80\xff";
        let img = read_pnm(&bytes[..], Path::new("mem")).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.pixels(), &[0, 64, 128, 255]);
        let again = read_pnm(&img.to_pnm_bytes()[..], Path::new("mem")).unwrap();
        assert_eq!(again, img);
    }

    #[test]
    fn truncated_pnm_is_a_parse_error() {
        let err = read_pnm(&b"P6\n4 4\n255\n\x00"[..], Path::new("mem")).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn bilinear_center_and_corners() {
        let img = RasterImage::new(2, 1, Channels::Gray, vec![0, 255]).unwrap();
        assert_eq!(img.sample_bilinear(0.0, 0.5)[0], 0.0);
        assert_eq!(img.sample_bilinear(1.0, 0.5)[0], 1.0);
        assert!((img.sample_bilinear(0.5, 0.5)[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn heatmap_rejects_wrong_length() {
        let uv = single([0.0; 3]);
        assert!(matches!(
            heatmap(&uv, &[0.0, 1.0], (0.0, 1.0), 10.0),
            Err(Error::LengthMismatch { expected: 1, actual: 2 })
        ));
    }

    #[test]
    fn heatmap_low_value_is_first_entry() {
        let img = heatmap(&single([0.0; 3]), &[0.0], (0.0, 1.0), 20.0).unwrap();
        let colored: Vec<&[u8]> = img.pixels().chunks(3).filter(|p| p != &[0, 0, 0]).collect();
        assert!(!colored.is_empty());
        assert!(colored.iter().all(|p| *p == crate::colormap::VIRIDIS[0]));
    }
}
