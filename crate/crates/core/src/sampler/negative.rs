use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, ManifestEntry};
use super::{entry_path, check_range, check_window, draw, Dataset, Generator, Label, Provenance, Sample, SamplerError};
use crate::bake::{Modality, SurfaceMapSet};
use crate::geom::Rect;
use crate::scalar::Real;
use crate::seed;
use crate::wall::Annotation;

const TAG_NEGATIVE: u64 = seed::tag("negative");

/// Rejections allowed per requested crop before giving up.
pub const REJECTIONS_PER_CROP: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound = "T: Real")]
pub struct NegativeParams<T> {
    /// Base window `(w, h)`, px.
    pub window: (u32, u32),
    /// Uniform range of the crop size relative to the window.
    pub scale_range: (T, T),
    /// Crops must overlap every brick with IoU strictly below this.
    pub max_iou: T,
    /// Share of crops centered near a random brick (within one crop size
    /// per axis) rather than anywhere on the wall. These straddle joints
    /// and neighboring bricks.
    pub near_fraction: T,
}

impl<T: Real> Default for NegativeParams<T> {
    fn default() -> Self {
        Self { window: (48, 12), scale_range: (T::one(), T::lit(1.6)), max_iou: T::lit(0.2), near_fraction: T::lit(0.5) }
    }
}

impl<T: Real> NegativeParams<T> {
    pub fn validate(&self) -> Result<(), SamplerError> {
        check_window(self.window)?;
        check_range("scale_range", self.scale_range, 0.1, 10.0)?;
        if !(self.max_iou > T::zero() && self.max_iou <= T::one()) {
            return Err(SamplerError::InvalidParams("max_iou must lie in (0, 1]".into()));
        }
        if !(self.near_fraction >= T::zero() && self.near_fraction <= T::one()) {
            return Err(SamplerError::InvalidParams("near_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Rejection-samples `n` crops of the baked wall whose IoU with every
/// annotation is below `max_iou`. A wall without bricks is sampled
/// uniformly.
///
/// Crop `i` draws from its own stream until accepted; the rejections of all
/// crops share a budget of `100 · n`, checked in index order, so the result
/// and the failure point are independent of scheduling.
pub fn generate_negatives<T: Real>(
    n: usize,
    annotations: &[Annotation<T>],
    maps: &SurfaceMapSet<T>,
    params: &NegativeParams<T>,
    modality: Modality,
    seed: u64,
) -> Result<Dataset<T>, SamplerError> {
    if n == 0 {
        return Err(SamplerError::InvalidParams("n must be at least 1".into()));
    }
    params.validate()?;
    let (img_w, img_h) = maps.dims();
    let (ww, wh) = (T::nat(params.window.0 as usize), T::nat(params.window.1 as usize));
    let (img_w, img_h) = (T::nat(img_w), T::nat(img_h));
    let budget = REJECTIONS_PER_CROP * n;
    let exhausted = |accepted, rejections| SamplerError::NegativePoolExhausted { requested: n, accepted, rejections };

    let anchors: Vec<Rect<T>> = annotations.iter().map(|a| maps.frame.world_to_pixel_rect(&a.rect)).collect();
    let half = T::lit(0.5);
    let mut crops: Vec<(u64, T, Rect<T>, Rect<T>, T)> = Vec::with_capacity(n);
    let mut rejections = 0usize;
    for i in 0..n {
        let sample_seed = seed::derive(seed, TAG_NEGATIVE, i as u64);
        let mut rng = seed::rng(sample_seed, 0, 0);
        loop {
            let scale = draw(&mut rng, params.scale_range);
            let (cw, ch) = (ww * scale, wh * scale);
            let near = !anchors.is_empty() && T::lit(rng.random::<f64>()) < params.near_fraction;
            let (x, y) = if near {
                let a = &anchors[rng.random_range(0..anchors.len())];
                let (cx, cy) = a.center();
                let dx = draw(&mut rng, (-cw, cw));
                // Half of these stay on the brick's course, where the only
                // difference from a positive is where the joints fall.
                let reach = if rng.random_bool(0.5) { ch * T::lit(0.1) } else { ch };
                let dy = draw(&mut rng, (-reach, reach));
                (cx + dx - cw * half, cy + dy - ch * half)
            } else {
                (draw(&mut rng, (T::zero(), img_w - cw)), draw(&mut rng, (T::zero(), img_h - ch)))
            };
            if cw <= img_w && ch <= img_h && x >= T::zero() && y >= T::zero() && x + cw <= img_w && y + ch <= img_h {
                let px = Rect::new(x, y, cw, ch);
                let mm = maps.frame.pixel_to_world_rect(&px);
                let max_iou = annotations.iter().map(|a| mm.iou(&a.rect)).fold(T::zero(), T::max);
                if max_iou < params.max_iou {
                    crops.push((sample_seed, scale, px, mm, max_iou));
                    break;
                }
            }
            rejections += 1;
            if rejections > budget {
                return Err(exhausted(crops.len(), rejections));
            }
        }
    }

    let img = maps.channel(modality);
    let (out_w, out_h) = (params.window.0 as usize, params.window.1 as usize);
    let samples: Vec<Sample<T>> = crops
        .par_iter()
        .map(|&(sample_seed, scale, px, mm, max_iou)| Sample {
            image: img.resample_rect(&px, out_w, out_h).quantized(modality.png_depth()),
            label: Label::Negative,
            modality,
            provenance: Provenance {
                generator: Generator::WallCrop,
                seed: sample_seed,
                scale,
                damage_scale: T::one(),
                rotated: false,
                source_rect_mm: mm,
                brick_id: None,
                source: Some(0),
                max_iou,
            },
        })
        .collect();

    let entries = samples
        .iter()
        .enumerate()
        .map(|(i, s)| ManifestEntry {
            path: entry_path(Label::Negative, i),
            label: Label::Negative,
            modality,
            provenance: s.provenance.clone(),
        })
        .collect();
    let manifest = DatasetManifest::new(seed, params.window, modality, entries)
        .with_negative_source(params.clone(), annotations.iter().map(|a| a.rect).collect());
    Ok(Dataset { samples, manifest })
}
