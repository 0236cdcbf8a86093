//! Boosted cascades of Haar-like features.
//!
//! Training ([`train_cascade`]) and detection ([`detect_multiscale`]) share
//! one feature evaluation path, so rates reported during training are
//! reproduced exactly by classifying the same windows afterwards. A
//! zero-normalized cross-correlation matcher ([`match_template_ncc`]) serves
//! as a template baseline.

mod boost;
mod detect;
mod feature;
mod integral;
mod ncc;
mod stump;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use boost::{
    train_cascade, train_stage, CascadeParams, StageParams, StageReport, StopReason, TrainingMeta, WindowSet, MIN_WEAK_ERROR,
};
pub use detect::{
    detect_candidates, detect_multiscale, group_rectangles, rects_similar, Candidate, DetectParams, Detection,
    DEFAULT_LABEL,
};
pub use feature::{enumerate_features, eval_feature, HaarFeature, HaarKind, ScaledFeature};
pub use integral::{IntegralImage, PixelRect, FLAT_VARIANCE, QUANT};
pub use ncc::{match_template_ncc, NccPeak, ScoreMap};
pub use stump::{candidate_thresholds, sort_order, stump_predict, train_stump, train_stump_sorted, Stump};

use crate::scalar::Real;

pub const CASCADE_FORMAT: &str = "brickscan-cascade-v1";

#[derive(Debug, Error, PartialEq)]
pub enum CascadeError {
    #[error("rectangle {rect:?} is empty or outside the {width}x{height} image")]
    RectBounds { rect: PixelRect, width: usize, height: usize },
    #[error("training data contains a single class")]
    SingleClass,
    #[error("stage infeasible: {0}")]
    StageInfeasible(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("template has zero variance")]
    FlatTemplate,
    #[error("cascade model: {0}")]
    Model(String),
}

#[derive(Debug, Error)]
pub enum TrainError<T> {
    #[error("stage {stage} infeasible: {reason}")]
    StageInfeasible { stage: usize, reason: String, partial: Box<CascadeModel<T>> },
    #[error(transparent)]
    Cascade(#[from] CascadeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct WeakClassifier<T> {
    pub feature: HaarFeature,
    pub threshold: T,
    pub polarity: i8,
    pub alpha: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct CascadeStage<T> {
    pub weak: Vec<WeakClassifier<T>>,
    pub stage_threshold: T,
}

impl<T: Real> CascadeStage<T> {
    /// `Σ α · h` with features already resolved for the window size.
    #[inline]
    pub fn score_prepared(&self, scaled: &[ScaledFeature], ii: &IntegralImage, wx: u32, wy: u32, std: T) -> T {
        let mut acc = T::zero();
        for (wc, sf) in self.weak.iter().zip(scaled) {
            if stump_predict(sf.value(ii, wx, wy, std), wc.threshold, wc.polarity) {
                acc += wc.alpha;
            }
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct CascadeModel<T> {
    pub format: String,
    pub window_w: u32,
    pub window_h: u32,
    pub stages: Vec<CascadeStage<T>>,
    pub metadata: TrainingMeta<T>,
}

/// A model with every feature resolved for one window size.
pub struct PreparedCascade<'a, T> {
    model: &'a CascadeModel<T>,
    scaled: Vec<Vec<ScaledFeature>>,
    pub window_w: u32,
    pub window_h: u32,
}

impl<T: Real> PreparedCascade<'_, T> {
    /// Runs the stages on the window at `(wx, wy)`. Returns whether every
    /// stage accepted and the margin `Σ α·h − threshold` of the last stage
    /// evaluated.
    #[inline]
    pub fn classify_at(&self, ii: &IntegralImage, wx: u32, wy: u32, std: T) -> (bool, T) {
        let mut margin = T::zero();
        for (stage, scaled) in self.model.stages.iter().zip(&self.scaled) {
            let s = stage.score_prepared(scaled, ii, wx, wy, std);
            margin = s - stage.stage_threshold;
            if s < stage.stage_threshold {
                return (false, margin);
            }
        }
        (true, margin)
    }
}

impl<T: Real> CascadeModel<T> {
    pub fn new(window_w: u32, window_h: u32, metadata: TrainingMeta<T>) -> Self {
        Self { format: CASCADE_FORMAT.into(), window_w, window_h, stages: Vec::new(), metadata }
    }

    pub fn prepare(&self, ww: u32, wh: u32) -> PreparedCascade<'_, T> {
        let scaled = self
            .stages
            .iter()
            .map(|s| s.weak.iter().map(|wc| wc.feature.scaled(self.window_w, self.window_h, ww, wh)).collect())
            .collect();
        PreparedCascade { model: self, scaled, window_w: ww, window_h: wh }
    }

    /// Classifies one window of `ii`.
    pub fn classify_window(&self, ii: &IntegralImage, window: &PixelRect) -> Result<(bool, T), CascadeError> {
        ii.check(window)?;
        let std = ii.window_std_unchecked::<T>(window);
        Ok(self.prepare(window.w, window.h).classify_at(ii, window.x, window.y, std))
    }

    pub fn validate(&self) -> Result<(), CascadeError> {
        if self.format != CASCADE_FORMAT {
            return Err(CascadeError::Model(format!("unsupported format {:?}", self.format)));
        }
        if self.window_w < 8 || self.window_h < 8 {
            return Err(CascadeError::Model("window must be at least 8x8".into()));
        }
        if self.stages.is_empty() {
            return Err(CascadeError::Model("model has no stages".into()));
        }
        for (i, s) in self.stages.iter().enumerate() {
            if s.weak.is_empty() {
                return Err(CascadeError::Model(format!("stage {i} has no weak classifiers")));
            }
            for wc in &s.weak {
                if !wc.feature.is_valid(self.window_w, self.window_h) {
                    return Err(CascadeError::Model(format!("stage {i}: feature {:?} does not fit the window", wc.feature)));
                }
                if wc.polarity.abs() != 1 || !wc.alpha.is_finite() || wc.alpha < T::zero() || !wc.threshold.is_finite() {
                    return Err(CascadeError::Model(format!("stage {i}: malformed weak classifier")));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, CascadeError> {
        let model: Self = serde_json::from_str(text).map_err(|e| CascadeError::Model(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }
}
