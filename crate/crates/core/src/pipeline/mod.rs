//! Evaluation, enrichment, overlays, file formats and the end-to-end runs
//! behind the command line.

pub mod config;
mod enrich;
mod eval;
mod font;
mod formats;
mod overlay;
mod run;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{BakeConfig, Config, DatasetConfig, EvalConfig, WallsConfig, CONFIG_NAME};
pub use enrich::{enrich, BrickClass, Catalog, EnrichedBrick};
pub use eval::{evaluate, BrickLabels, EvalReport};
pub use formats::{
    AnnotationsFile, DetectionsFile, EnrichedFile, JsonFormat, ReportFile, ANNOTATIONS_FORMAT, DETECTIONS_FORMAT,
    ENRICHED_FORMAT, REPORT_FORMAT,
};
pub use overlay::{render_overlay, OverlayStyle};
pub use run::{
    bake_mesh, bake_to_dir, build_dataset, build_wall, cascade_params, detect_maps, parse_modality, report_file, run_all,
    sweep_csv, sweep_neighbors, train_model, write_wall, AllSummary, SweepRow, WallRole, SWEEP_HEADER,
};

use crate::bake::BakeError;
use crate::cascade::CascadeError;
use crate::raster::RasterError;
use crate::sampler::SamplerError;
use crate::wall::WallError;

/// Wall patterns shipped with the crate, addressable by name in configs.
pub const BUILTIN_PATTERNS: &[(&str, &str)] = &[
    ("44c", include_str!("../../../../data/patterns/44c.pattern")),
    ("training", include_str!("../../../../data/patterns/training.pattern")),
    ("slabs", include_str!("../../../../data/patterns/slabs.pattern")),
];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error("training failed at stage {stage}: {reason}")]
    Train { stage: usize, reason: String },
    #[error(transparent)]
    Wall(#[from] WallError),
    #[error(transparent)]
    Bake(#[from] BakeError),
    #[error(transparent)]
    Cascade(#[from] CascadeError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

impl PipelineError {
    pub(crate) fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Self + '_ {
        move |source| Self::Io { path: path.to_path_buf(), source }
    }

    /// A malformed file at `path`.
    pub fn format(path: &Path, message: impl ToString) -> Self {
        Self::Format { path: path.to_path_buf(), message: message.to_string() }
    }
}

/// Pattern text for a built-in name, or the contents of the file at `spec`.
pub fn load_pattern_text(spec: &str) -> Result<String, PipelineError> {
    if let Some((_, text)) = BUILTIN_PATTERNS.iter().find(|(name, _)| *name == spec) {
        return Ok((*text).to_string());
    }
    let path = Path::new(spec);
    std::fs::read_to_string(path).map_err(PipelineError::io(path))
}

pub fn read_text(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(PipelineError::io(path))
}

/// Writes `text`, creating missing parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(PipelineError::io(parent))?;
    }
    std::fs::write(path, text).map_err(PipelineError::io(path))
}

pub fn create_dir(path: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(path).map_err(PipelineError::io(path))
}
