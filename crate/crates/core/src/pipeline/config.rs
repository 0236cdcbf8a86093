//! The `brickscan.toml` configuration. Every section and key is optional;
//! missing values take the defaults below, unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_text, Catalog, OverlayStyle, PipelineError};
use crate::bake::{MapParams, Modality};
use crate::cascade::{CascadeParams, DetectParams};
use crate::sampler::{NegativeParams, PositiveParams};
use crate::scalar::Real;
use crate::wall::{BrickSpec, PatternConfig};

pub const CONFIG_NAME: &str = "brickscan.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound = "T: Real")]
pub struct Config<T: Real> {
    /// Global seed; every stage seed is derived from it.
    pub seed: u64,
    /// Worker threads; 0 picks one per core.
    pub threads: usize,
    pub brick: BrickSpec<T>,
    pub walls: WallsConfig<T>,
    pub bake: BakeConfig<T>,
    pub dataset: DatasetConfig<T>,
    pub train: CascadeParams<T>,
    pub detect: DetectParams<T>,
    pub evaluate: EvalConfig<T>,
    /// Brick classes for enrichment; derived from `brick` when absent.
    pub catalog: Option<Catalog<T>>,
    pub overlay: OverlayStyle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound = "T: Real")]
pub struct WallsConfig<T> {
    /// Held-out wall that detection is scored on: a built-in pattern name
    /// or a file path.
    pub eval_pattern: String,
    /// Wall the in-context negatives are cropped from.
    pub train_pattern: String,
    /// Optional wall of long slabs whose joints give hard negatives.
    pub decoy_pattern: Option<String>,
    /// Face length of the decoy wall's units, mm.
    pub decoy_face_length: T,
    /// Mortar joint, mm.
    pub joint: T,
    /// Mortar face setback behind the brick faces, mm.
    pub recess: T,
}

impl<T: Real> Default for WallsConfig<T> {
    fn default() -> Self {
        Self {
            eval_pattern: "44c".into(),
            train_pattern: "training".into(),
            decoy_pattern: Some("slabs".into()),
            decoy_face_length: T::lit(1500.0),
            joint: T::lit(15.0),
            recess: T::lit(12.0),
        }
    }
}

impl<T: Real> WallsConfig<T> {
    /// Grid geometry for walls built from `brick`.
    pub fn pattern_config(&self, brick: &BrickSpec<T>) -> PatternConfig<T> {
        PatternConfig::for_brick(
            brick.face_length,
            brick.face_height,
            brick.face_length * brick.long_length_factor,
            self.joint,
            self.recess,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound = "T: Real")]
pub struct BakeConfig<T> {
    /// mm per pixel.
    pub pixel_size: T,
    /// Border added around the mesh bounds, mm.
    pub margin: T,
    pub maps: MapParams<T>,
}

impl<T: Real> Default for BakeConfig<T> {
    fn default() -> Self {
        Self { pixel_size: T::lit(5.0), margin: T::lit(10.0), maps: MapParams::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound = "T: Real")]
pub struct DatasetConfig<T> {
    pub modality: Modality,
    pub positives: usize,
    pub positive: PositiveParams<T>,
    /// Crop positives from the training wall instead of single-brick scenes.
    pub in_situ: bool,
    /// Negative pool drawn from the training wall.
    pub wall_negatives: usize,
    /// Negative pool drawn from the decoy wall, if one is configured.
    pub decoy_negatives: usize,
    pub negative: NegativeParams<T>,
}

impl<T: Real> Default for DatasetConfig<T> {
    fn default() -> Self {
        Self {
            modality: Modality::Height,
            positives: 400,
            positive: PositiveParams::default(),
            in_situ: false,
            wall_negatives: 2000,
            decoy_negatives: 4000,
            negative: NegativeParams { scale_range: (T::one(), T::lit(2.0)), near_fraction: T::lit(0.8), ..NegativeParams::default() },
        }
    }
}

/// Settings of the scoring step. `low_neighbors` and `high_neighbors` are
/// the calibrated grouping thresholds for the many-labels and one-label
/// regimes (see `examples/calibrate.rs`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound = "T: Real")]
pub struct EvalConfig<T> {
    pub iou_threshold: T,
    pub sweep: Vec<usize>,
    pub low_neighbors: usize,
    pub high_neighbors: usize,
}

pub const DEFAULT_SWEEP: [usize; 6] = [1, 5, 25, 50, 100, 150];

impl<T: Real> Default for EvalConfig<T> {
    fn default() -> Self {
        Self { iou_threshold: T::lit(0.5), sweep: DEFAULT_SWEEP.to_vec(), low_neighbors: 1, high_neighbors: 13 }
    }
}

impl<T: Real> Default for Config<T> {
    fn default() -> Self {
        Self {
            seed: 7,
            threads: 0,
            brick: BrickSpec::default(),
            walls: WallsConfig::default(),
            bake: BakeConfig::default(),
            dataset: DatasetConfig::default(),
            train: CascadeParams { f_target: T::lit(0.001), stage_negatives: Some(1200), ..CascadeParams::default() },
            detect: DetectParams { min_neighbors: 13, ..DetectParams::default() },
            evaluate: EvalConfig::default(),
            catalog: None,
            overlay: OverlayStyle::default(),
        }
    }
}

impl<T: Real> Config<T> {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let cfg: Self = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        Self::from_toml(&read_text(path)?).map_err(|e| match e {
            PipelineError::Config(message) => PipelineError::format(path, message),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The configured catalog, or the one matching `brick`.
    pub fn catalog(&self) -> Catalog<T> {
        self.catalog.clone().unwrap_or_else(|| Catalog::from_spec(&self.brick))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.brick.validate()?;
        self.bake.maps.validate()?;
        self.dataset.positive.validate()?;
        self.dataset.negative.validate()?;
        self.detect.validate()?;
        let bad = |m: &str| Err(PipelineError::Config(m.into()));
        if !(self.bake.pixel_size > T::zero() && self.bake.margin >= T::zero()) {
            return bad("bake.pixel_size must be positive and bake.margin non-negative");
        }
        if self.dataset.positives == 0 || self.dataset.wall_negatives + self.dataset.decoy_negatives == 0 {
            return bad("the dataset needs positives and negatives");
        }
        if self.dataset.positive.window != self.dataset.negative.window
            || self.dataset.positive.window != (self.train.window_w, self.train.window_h)
        {
            return bad("dataset.positive.window, dataset.negative.window and train.window_w/h must agree");
        }
        if !(self.evaluate.iou_threshold > T::zero() && self.evaluate.iou_threshold < T::one()) {
            return bad("evaluate.iou_threshold must lie in (0, 1)");
        }
        if !(self.walls.decoy_face_length > T::zero()) {
            return bad("walls.decoy_face_length must be positive");
        }
        Ok(())
    }
}
