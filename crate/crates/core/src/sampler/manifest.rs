use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, Label, NegativeParams, PositiveParams, Provenance, Sample, SamplerError};
use crate::bake::Modality;
use crate::geom::Rect;
use crate::raster::GrayRaster;
use crate::scalar::Real;

pub const DATASET_FORMAT: &str = "brickscan-dataset-v1";
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Counts {
    pub positive: usize,
    pub negative: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct ManifestEntry<T> {
    /// Relative to the manifest's directory.
    pub path: String,
    pub label: Label,
    pub modality: Modality,
    pub provenance: Provenance<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct DatasetManifest<T> {
    pub format: String,
    pub seed: u64,
    pub window: (u32, u32),
    pub modality: Modality,
    pub counts: Counts,
    pub positive_params: Option<PositiveParams<T>>,
    /// Walls the negatives were cropped from; negative provenance indexes
    /// into this list.
    pub negative_sources: Vec<NegativeSource<T>>,
    pub entries: Vec<ManifestEntry<T>>,
}

/// One wall sampled for negatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct NegativeSource<T> {
    pub params: NegativeParams<T>,
    /// The wall's annotation rectangles (mm) the crops were kept clear of.
    pub exclusion_rects_mm: Vec<Rect<T>>,
}

impl<T: Real> DatasetManifest<T> {
    pub fn new(seed: u64, window: (u32, u32), modality: Modality, entries: Vec<ManifestEntry<T>>) -> Self {
        let count = |l| entries.iter().filter(|e| e.label == l).count();
        let counts = Counts { positive: count(Label::Positive), negative: count(Label::Negative) };
        Self {
            format: DATASET_FORMAT.into(),
            seed,
            window,
            modality,
            counts,
            positive_params: None,
            negative_sources: Vec::new(),
            entries,
        }
    }

    pub fn with_positive_params(mut self, p: PositiveParams<T>) -> Self {
        self.positive_params = Some(p);
        self
    }

    pub fn with_negative_source(mut self, params: NegativeParams<T>, exclusion_rects_mm: Vec<Rect<T>>) -> Self {
        self.negative_sources.push(NegativeSource { params, exclusion_rects_mm });
        self
    }

    /// Checks the format tag, the counts, path uniqueness and source indices.
    pub fn validate(&self) -> Result<(), String> {
        if self.format != DATASET_FORMAT {
            return Err(format!("unsupported format {:?}", self.format));
        }
        let pos = self.entries.iter().filter(|e| e.label == Label::Positive).count();
        let neg = self.entries.len() - pos;
        if self.counts != (Counts { positive: pos, negative: neg }) {
            return Err(format!("counts {:?} do not match the {pos} positive and {neg} negative entries", self.counts));
        }
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.path.as_str()) {
                return Err(format!("duplicate path {:?}", e.path));
            }
            if Path::new(&e.path).is_absolute() || e.path.split(['/', '\\']).any(|c| c == "..") {
                return Err(format!("path {:?} must stay inside the dataset directory", e.path));
            }
            if e.provenance.source.is_some_and(|i| i >= self.negative_sources.len()) {
                return Err(format!("{:?} refers to a missing negative source", e.path));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, SamplerError> {
        let schema = |message: String| SamplerError::ManifestSchema { path: "<json>".into(), message };
        let m: Self = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
        m.validate().map_err(schema)?;
        Ok(m)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SamplerError + '_ {
    move |source| SamplerError::Io { path: path.to_path_buf(), source }
}

/// Writes every sample PNG and `manifest.json` under `dir`.
pub fn save_dataset<T: Real>(data: &Dataset<T>, dir: &Path) -> Result<(), SamplerError> {
    data.manifest
        .validate()
        .map_err(|message| SamplerError::ManifestSchema { path: dir.join(MANIFEST_NAME).display().to_string(), message })?;
    for (sample, entry) in data.samples.iter().zip(&data.manifest.entries) {
        let path = dir.join(&entry.path);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        sample.image.save_png(&path, sample.modality.png_depth())?;
    }
    let path = dir.join(MANIFEST_NAME);
    std::fs::write(&path, data.manifest.to_json()).map_err(io_err(&path))
}

/// Reads `manifest.json` from `dir` and loads every referenced image.
pub fn load_dataset<T: Real>(dir: &Path) -> Result<Dataset<T>, SamplerError> {
    let path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    let manifest = DatasetManifest::<T>::from_json(&text).map_err(|e| match e {
        SamplerError::ManifestSchema { message, .. } => SamplerError::ManifestSchema { path: path.display().to_string(), message },
        other => other,
    })?;
    let (ww, wh) = (manifest.window.0 as usize, manifest.window.1 as usize);
    let samples = manifest
        .entries
        .iter()
        .map(|e| {
            let img_path = dir.join(&e.path);
            let image = GrayRaster::load_png(&img_path)?;
            if (image.width, image.height) != (ww, wh) {
                return Err(SamplerError::ManifestSchema {
                    path: img_path.display().to_string(),
                    message: format!("image is {}x{}, window is {ww}x{wh}", image.width, image.height),
                });
            }
            Ok(Sample { image, label: e.label, modality: e.modality, provenance: e.provenance.clone() })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset { samples, manifest })
}
