use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BakeError, MapParams, OrthoFrame, SurfaceMapSet};
use crate::raster::{Depth, GrayRaster, RgbRaster};
use crate::scalar::Real;

pub const MAPS_FORMAT: &str = "brickscan-maps-v1";
pub const SIDECAR_NAME: &str = "maps.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFiles {
    pub height: String,
    pub normal: String,
    pub ao: String,
    pub curvature: String,
}

impl Default for MapFiles {
    fn default() -> Self {
        Self {
            height: "height.png".into(),
            normal: "normal.png".into(),
            ao: "ao.png".into(),
            curvature: "curvature.png".into(),
        }
    }
}

/// JSON record written next to the map PNGs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct MapSidecar<T> {
    pub format: String,
    pub frame: OrthoFrame<T>,
    pub width_px: usize,
    pub height_px: usize,
    pub params: MapParams<T>,
    pub files: MapFiles,
}

/// Writes the four PNGs and `maps.json` into `dir`.
pub fn save_map_set<T: Real>(maps: &SurfaceMapSet<T>, dir: &Path) -> Result<MapSidecar<T>, BakeError> {
    let files = MapFiles::default();
    maps.height.save_png(&dir.join(&files.height), Depth::Sixteen)?;
    maps.normal.save_png(&dir.join(&files.normal))?;
    maps.ao.save_png(&dir.join(&files.ao), Depth::Eight)?;
    maps.curvature.save_png(&dir.join(&files.curvature), Depth::Eight)?;
    let (w, h) = maps.dims();
    let sidecar = MapSidecar {
        format: MAPS_FORMAT.into(),
        frame: maps.frame.clone(),
        width_px: w,
        height_px: h,
        params: maps.params.clone(),
        files,
    };
    let path = dir.join(SIDECAR_NAME);
    let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    std::fs::write(&path, text + "\n")
        .map_err(|e| BakeError::Sidecar { path: path.display().to_string(), message: e.to_string() })?;
    Ok(sidecar)
}

pub fn read_sidecar<T: Real>(path: &Path) -> Result<MapSidecar<T>, BakeError> {
    let err = |message: String| BakeError::Sidecar { path: path.display().to_string(), message };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let sidecar: MapSidecar<T> = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
    if sidecar.format != MAPS_FORMAT {
        return Err(err(format!("unsupported format {:?}", sidecar.format)));
    }
    Ok(sidecar)
}

/// Loads a map set written by [`save_map_set`]. Values carry the PNG
/// quantization.
pub fn load_map_set<T: Real>(dir: &Path) -> Result<SurfaceMapSet<T>, BakeError> {
    let sidecar: MapSidecar<T> = read_sidecar(&dir.join(SIDECAR_NAME))?;
    let f = &sidecar.files;
    let maps = SurfaceMapSet {
        height: GrayRaster::load_png(&dir.join(&f.height))?,
        normal: RgbRaster::load_png(&dir.join(&f.normal))?,
        ao: GrayRaster::load_png(&dir.join(&f.ao))?,
        curvature: GrayRaster::load_png(&dir.join(&f.curvature))?,
        frame: sidecar.frame,
        params: sidecar.params,
    };
    let dims = (sidecar.width_px, sidecar.height_px);
    let all = [
        (maps.height.width, maps.height.height),
        (maps.normal.width, maps.normal.height),
        (maps.ao.width, maps.ao.height),
        (maps.curvature.width, maps.curvature.height),
    ];
    if all.iter().any(|&d| d != dims) {
        return Err(BakeError::Sidecar {
            path: dir.join(SIDECAR_NAME).display().to_string(),
            message: format!("map PNGs do not all match the recorded size {}x{}", dims.0, dims.1),
        });
    }
    Ok(maps)
}
