//! Orthographic surface-map baking.
//!
//! A mesh is projected onto an [`OrthoFrame`] by casting one ray per pixel
//! along `-view`. From the nearest hits the bakers produce a height map
//! (fixed depth range, so every image shares one radiometric scale), a
//! normal map, an ambient occlusion map and a curvature map.

pub mod bvh;
mod frame;
mod io;
mod maps;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use frame::{frame_from_mesh, OrthoFrame};
pub use io::{load_map_set, read_sidecar, save_map_set, MapFiles, MapSidecar, MAPS_FORMAT, SIDECAR_NAME};
pub use maps::{
    bake_ao, bake_height, bake_map_set, bake_modality, bake_normal, curvature_from_height, flat_normal,
    hemisphere_dirs, normal_from_height, primary_hits, stencil_sum, AO_OFFSET,
};

use crate::raster::{Depth, GrayRaster, RasterError, RgbRaster};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum BakeError {
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("invalid bake parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("map sidecar {path}: {message}")]
    Sidecar { path: String, message: String },
}

/// Single-channel views of a map set used as detector input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Modality {
    Height,
    NormalR,
    NormalG,
    Ao,
    Curvature,
}

impl Modality {
    pub const ALL: [Modality; 5] = [Modality::Height, Modality::NormalR, Modality::NormalG, Modality::Ao, Modality::Curvature];

    pub fn name(self) -> &'static str {
        match self {
            Modality::Height => "height",
            Modality::NormalR => "normal_r",
            Modality::NormalG => "normal_g",
            Modality::Ao => "ao",
            Modality::Curvature => "curvature",
        }
    }

    /// Bit depth the channel is stored with on disk.
    pub fn png_depth(self) -> Depth {
        match self {
            Modality::Height => Depth::Sixteen,
            _ => Depth::Eight,
        }
    }
}

impl std::str::FromStr for Modality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Modality::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s) || format!("{m:?}").eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown modality {s:?} (expected height, normal_r, normal_g, ao or curvature)"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound = "T: Real")]
pub struct MapParams<T> {
    /// Distance from the frame plane that maps to height 0, mm.
    pub depth_range: T,
    pub rays_per_pixel: u32,
    /// AO occlusion search distance, mm.
    pub max_dist: T,
    /// Curvature gain per mm of five-point stencil sum.
    pub gain: T,
    pub seed: u64,
}

impl<T: Real> Default for MapParams<T> {
    fn default() -> Self {
        Self { depth_range: T::lit(60.0), rays_per_pixel: 16, max_dist: T::lit(50.0), gain: T::lit(0.025), seed: 0 }
    }
}

impl<T: Real> MapParams<T> {
    pub fn validate(&self) -> Result<(), BakeError> {
        if !(self.depth_range > T::zero() && self.depth_range.is_finite()) {
            return Err(BakeError::InvalidParams("depth_range must be positive".into()));
        }
        if self.rays_per_pixel == 0 {
            return Err(BakeError::InvalidParams("rays_per_pixel must be at least 1".into()));
        }
        if !(self.max_dist > T::zero()) {
            return Err(BakeError::InvalidParams("max_dist must be positive".into()));
        }
        if !self.gain.is_finite() {
            return Err(BakeError::InvalidParams("gain must be finite".into()));
        }
        Ok(())
    }
}

/// Co-registered maps over one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceMapSet<T> {
    pub frame: OrthoFrame<T>,
    pub params: MapParams<T>,
    pub height: GrayRaster<T>,
    pub normal: RgbRaster<T>,
    pub ao: GrayRaster<T>,
    pub curvature: GrayRaster<T>,
}

impl<T: Real> SurfaceMapSet<T> {
    pub fn channel(&self, modality: Modality) -> GrayRaster<T> {
        match modality {
            Modality::Height => self.height.clone(),
            Modality::NormalR => self.normal.channel(0),
            Modality::NormalG => self.normal.channel(1),
            Modality::Ao => self.ao.clone(),
            Modality::Curvature => self.curvature.clone(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height.width, self.height.height)
    }
}
