//! Brick-wall synthesis, surface-map baking and Haar cascade detection.
//!
//! The crate is organised as a pipeline:
//!
//! * [`wall`] generates brick walls as triangle meshes with ground-truth
//!   annotations and reads/writes the OBJ subset.
//! * [`bake`] projects meshes orthographically into height, normal, ambient
//!   occlusion and curvature rasters.
//! * [`cascade`] trains and runs a boosted cascade of Haar-like features and a
//!   normalized cross-correlation baseline.
//! * [`sampler`] renders positive and negative training windows.
//! * [`pipeline`] evaluates detections, enriches them with brick classes and
//!   holds the file formats and end-to-end runs.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod bake;
pub mod cascade;
pub mod geom;
pub mod mesh;
pub mod raster;
pub mod pipeline;
pub mod sampler;
pub mod scalar;
pub mod seed;
pub mod wall;

pub use scalar::Real;

pub type Scalar = f64;
pub type Mesh = mesh::TriangleMesh<Scalar>;
pub type Gray = raster::GrayRaster<Scalar>;
pub type Rgb = raster::RgbRaster<Scalar>;
pub type Wall = wall::WallModel<Scalar>;
pub type Brick = wall::BrickSpec<Scalar>;
pub type Frame = bake::OrthoFrame<Scalar>;
pub type MapSet = bake::SurfaceMapSet<Scalar>;
pub type Cascade = cascade::CascadeModel<Scalar>;
