use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{read_text, write_text, EnrichedBrick, EvalReport, PipelineError};
use crate::bake::OrthoFrame;
use crate::cascade::{DetectParams, Detection};
use crate::scalar::Real;
use crate::wall::Annotation;

pub const ANNOTATIONS_FORMAT: &str = "brickscan-annotations-v1";
pub const DETECTIONS_FORMAT: &str = "brickscan-detections-v1";
pub const ENRICHED_FORMAT: &str = "brickscan-enriched-v1";
pub const REPORT_FORMAT: &str = "brickscan-report-v1";

/// Ground truth of one generated wall.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct AnnotationsFile<T> {
    pub format: String,
    pub seed: u64,
    pub annotations: Vec<Annotation<T>>,
}

/// Grouped detections in the pixel space of `frame`, with the grouping
/// settings that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct DetectionsFile<T> {
    pub format: String,
    pub frame: OrthoFrame<T>,
    pub image_width: usize,
    pub image_height: usize,
    pub min_neighbors: usize,
    pub eps: T,
    pub detections: Vec<Detection<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct EnrichedFile<T> {
    pub format: String,
    pub bricks: Vec<EnrichedBrick<T>>,
}

/// On-disk report: the evaluation plus the detection settings behind it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct ReportFile<T> {
    pub format: String,
    pub min_neighbors: usize,
    pub eps: T,
    pub mean_labels_per_brick: T,
    pub report: EvalReport<T>,
}

/// Shared JSON plumbing for the versioned formats.
pub trait JsonFormat: Serialize + DeserializeOwned {
    const FORMAT: &'static str;

    fn format_tag(&self) -> &str;

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("format serializes") + "\n"
    }

    /// Parses and checks the format tag; `path` only labels errors.
    fn from_json(text: &str, path: &Path) -> Result<Self, PipelineError> {
        let v: Self = serde_json::from_str(text).map_err(|e| PipelineError::format(path, e))?;
        if v.format_tag() != Self::FORMAT {
            return Err(PipelineError::format(path, format!("expected format {:?}, found {:?}", Self::FORMAT, v.format_tag())));
        }
        Ok(v)
    }

    fn load(path: &Path) -> Result<Self, PipelineError> {
        Self::from_json(&read_text(path)?, path)
    }

    fn save(&self, path: &Path) -> Result<(), PipelineError> {
        write_text(path, &self.to_json())
    }
}

macro_rules! json_format {
    ($ty:ident, $tag:expr) => {
        impl<T: Real> JsonFormat for $ty<T> {
            const FORMAT: &'static str = $tag;
            fn format_tag(&self) -> &str {
                &self.format
            }
        }
    };
}

json_format!(AnnotationsFile, ANNOTATIONS_FORMAT);
json_format!(DetectionsFile, DETECTIONS_FORMAT);
json_format!(EnrichedFile, ENRICHED_FORMAT);
json_format!(ReportFile, REPORT_FORMAT);

impl<T: Real> AnnotationsFile<T> {
    pub fn new(seed: u64, annotations: Vec<Annotation<T>>) -> Self {
        Self { format: ANNOTATIONS_FORMAT.into(), seed, annotations }
    }
}

impl<T: Real> DetectionsFile<T> {
    pub fn new(frame: OrthoFrame<T>, params: &DetectParams<T>, detections: Vec<Detection<T>>) -> Self {
        let (image_width, image_height) = frame.dims();
        Self {
            format: DETECTIONS_FORMAT.into(),
            frame,
            image_width,
            image_height,
            min_neighbors: params.min_neighbors,
            eps: params.eps,
            detections,
        }
    }
}

impl<T: Real> EnrichedFile<T> {
    pub fn new(bricks: Vec<EnrichedBrick<T>>) -> Self {
        Self { format: ENRICHED_FORMAT.into(), bricks }
    }
}
