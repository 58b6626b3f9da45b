//! Flattening of triangulated surface patches onto the plane by least
//! squares conformal maps, angle-based flattening and a mass-spring
//! material model, with stretch, angle and area distortion metrics and a
//! deterministic software rasterizer for the flattened textures.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abf;
pub mod colormap;
pub mod error;
pub mod io;
pub mod lscm;
pub mod mesh;
pub mod metrics;
pub mod mm;
pub mod raster;
pub mod sparse;
pub mod uv;

pub use abf::{abf_flatten, AbfSolution, Reconstruction};
pub use error::{Error, Result};
pub use io::{load_mesh, MeshFormat};
pub use lscm::{lscm_flatten, select_pins, PinPair};
pub use mesh::{validate, Texture, TriMesh3, ValidationReport};
pub use metrics::{compute_metrics, triangle_stretch, MetricsReport, TriangleStretch};
pub use mm::{detect_folds, mm_flatten, MMConfig, SimulationOutcome, SpringSystem};
pub use raster::{heatmap, rasterize_texture, Channels, RasterImage, TextureRender};
pub use uv::{Algorithm, UVMap};

pub use nalgebra::{Point2, Point3, Vector2, Vector3};
