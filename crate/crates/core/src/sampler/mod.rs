//! Synthetic training windows for the cascade.
//!
//! Positives are baked from isolated single-brick scenes (or, for ablation,
//! cropped from a full wall); negatives are rejection-sampled crops of a
//! baked wall that overlap no brick by more than a set IoU. Every sample
//! draws from a generator seeded by `(seed, index)`, so datasets are a pure
//! function of their parameters regardless of thread count.

mod manifest;
mod negative;
mod positive;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use manifest::{
    load_dataset, save_dataset, Counts, DatasetManifest, ManifestEntry, NegativeSource, DATASET_FORMAT, MANIFEST_NAME,
};
pub use negative::{generate_negatives, NegativeParams};
pub use positive::{crop_for_annotation, generate_positives, generate_positives_in_situ, PositiveParams};

use crate::bake::{BakeError, Modality};
use crate::geom::Rect;
use crate::raster::{GrayRaster, RasterError};
use crate::scalar::Real;
use crate::wall::WallError;

/// Smallest IoU between a positive crop and its brick.
pub const MIN_POSITIVE_IOU: f64 = 0.65;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid sampler parameters: {0}")]
    InvalidParams(String),
    #[error("negative pool exhausted: {accepted} of {requested} crops after {rejections} rejections")]
    NegativePoolExhausted { requested: usize, accepted: usize, rejections: usize },
    #[error("manifest {path}: {message}")]
    ManifestSchema { path: String, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Wall(#[from] WallError),
    #[error(transparent)]
    Bake(#[from] BakeError),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Label {
    Positive,
    Negative,
}

/// How a sample was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    SingleBrick,
    InSitu,
    WallCrop,
}

/// Everything needed to regenerate or audit one sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct Provenance<T> {
    pub generator: Generator,
    /// Seed of the sample's own stream.
    pub seed: u64,
    /// Brick geometry scale (positives) or window scale (negatives).
    pub scale: T,
    /// Multiplier applied to the damage amplitude.
    pub damage_scale: T,
    pub rotated: bool,
    /// Cropped region in wall-front millimeters.
    pub source_rect_mm: Rect<T>,
    pub brick_id: Option<u32>,
    /// Index into the manifest's negative sources (negatives only).
    pub source: Option<usize>,
    /// Largest IoU between the crop and any annotation.
    pub max_iou: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample<T> {
    pub image: GrayRaster<T>,
    pub label: Label,
    pub modality: Modality,
    pub provenance: Provenance<T>,
}

/// Samples with their manifest; `manifest.entries[i]` describes `samples[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    pub samples: Vec<Sample<T>>,
    pub manifest: DatasetManifest<T>,
}

impl<T: Real> Dataset<T> {
    /// Concatenates two datasets over the same window and modality,
    /// renumbering the second one's files and negative sources after the
    /// first.
    pub fn merge(mut self, other: Dataset<T>) -> Result<Self, SamplerError> {
        if self.manifest.window != other.manifest.window || self.manifest.modality != other.manifest.modality {
            return Err(SamplerError::InvalidParams("datasets differ in window or modality".into()));
        }
        let m = &mut self.manifest;
        let (mut pos, mut neg) = (m.counts.positive, m.counts.negative);
        let offset = m.negative_sources.len();
        let mut other = other;
        for (e, s) in other.manifest.entries.iter_mut().zip(&mut other.samples) {
            if let Some(i) = e.provenance.source.as_mut() {
                *i += offset;
            }
            s.provenance = e.provenance.clone();
            let k = match e.label {
                Label::Positive => &mut pos,
                Label::Negative => &mut neg,
            };
            e.path = entry_path(e.label, *k);
            *k += 1;
        }
        m.counts.positive += other.manifest.counts.positive;
        m.counts.negative += other.manifest.counts.negative;
        m.positive_params = m.positive_params.take().or(other.manifest.positive_params);
        m.negative_sources.extend(other.manifest.negative_sources);
        m.entries.extend(other.manifest.entries);
        self.samples.extend(other.samples);
        m.validate().map_err(|message| SamplerError::ManifestSchema { path: "<merged>".into(), message })?;
        Ok(self)
    }

    pub fn images(&self, label: Label) -> impl Iterator<Item = &GrayRaster<T>> {
        self.samples.iter().filter(move |s| s.label == label).map(|s| &s.image)
    }
}

/// Relative file path of the `index`-th sample with `label`.
pub fn entry_path(label: Label, index: usize) -> String {
    match label {
        Label::Positive => format!("positive/{index:05}.png"),
        Label::Negative => format!("negative/{index:05}.png"),
    }
}

fn check_window(window: (u32, u32)) -> Result<(), SamplerError> {
    if window.0 < 8 || window.1 < 8 {
        return Err(SamplerError::InvalidParams("window must be at least 8x8".into()));
    }
    Ok(())
}

fn check_range<T: Real>(name: &str, (lo, hi): (T, T), min: f64, max: f64) -> Result<(), SamplerError> {
    if !(lo <= hi && lo >= T::lit(min) && hi <= T::lit(max)) {
        return Err(SamplerError::InvalidParams(format!("{name} must satisfy {min} <= lo <= hi <= {max}")));
    }
    Ok(())
}

fn draw<T: Real>(rng: &mut impl rand::Rng, (lo, hi): (T, T)) -> T {
    lo + (hi - lo) * T::lit(rng.random::<f64>())
}
