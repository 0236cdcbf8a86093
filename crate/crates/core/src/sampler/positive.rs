use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{entry_path, check_range, check_window, draw, Dataset, Generator, Label, Provenance, Sample, SamplerError, MIN_POSITIVE_IOU};
use crate::bake::{bake_modality, MapParams, Modality, OrthoFrame, SurfaceMapSet};
use crate::geom::Rect;
use crate::raster::GrayRaster;
use crate::scalar::Real;
use crate::seed;
use crate::wall::{single_brick_scene, Annotation, BrickKind, BrickSpec, Orientation};

use super::manifest::{DatasetManifest, ManifestEntry};

const TAG_POSITIVE: u64 = seed::tag("positive");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound = "T: Real")]
pub struct PositiveParams<T> {
    /// Base window `(w, h)`, px.
    pub window: (u32, u32),
    /// Uniform range of the brick scale factor.
    pub scale_range: (T, T),
    /// Uniform range of the damage amplitude multiplier.
    pub damage_range: (T, T),
    /// Half of the samples show a soldier turned back to horizontal.
    pub allow_90_rotation: bool,
    /// Crop growth around the annotation, as a fraction of each side.
    pub dilation: T,
    /// Largest crop offset as a fraction of the brick size; clipped so the
    /// brick stays inside the crop.
    pub shift: T,
    /// Supersampling factor of the bake before resampling to the window.
    pub oversample: u32,
    pub joint: T,
    pub recess: T,
    pub maps: MapParams<T>,
}

impl<T: Real> Default for PositiveParams<T> {
    fn default() -> Self {
        Self {
            window: (48, 12),
            scale_range: (T::lit(0.9), T::lit(1.1)),
            damage_range: (T::zero(), T::lit(2.0)),
            allow_90_rotation: false,
            dilation: T::lit(0.1),
            shift: T::lit(0.04),
            oversample: 2,
            joint: T::lit(15.0),
            recess: T::lit(12.0),
            maps: MapParams::default(),
        }
    }
}

impl<T: Real> PositiveParams<T> {
    pub fn validate(&self) -> Result<(), SamplerError> {
        check_window(self.window)?;
        check_range("scale_range", self.scale_range, 0.5, 2.0)?;
        check_range("damage_range", self.damage_range, 0.0, 10.0)?;
        if !(self.dilation >= T::zero() && self.dilation <= T::one()) {
            return Err(SamplerError::InvalidParams("dilation must lie in [0, 1]".into()));
        }
        if !(self.shift >= T::zero() && self.shift <= T::lit(0.5)) {
            return Err(SamplerError::InvalidParams("shift must lie in [0, 0.5]".into()));
        }
        if self.oversample == 0 || self.oversample > 8 {
            return Err(SamplerError::InvalidParams("oversample must lie in 1..=8".into()));
        }
        self.maps.validate()?;
        Ok(())
    }
}

/// Crop rectangle (mm) for a brick: the annotation dilated by `dilation`,
/// then its short side grown toward the window aspect as far as the IoU
/// with the brick stays at or above [`MIN_POSITIVE_IOU`].
pub fn crop_for_annotation<T: Real>(rect: &Rect<T>, window: (u32, u32), dilation: T) -> Rect<T> {
    let d = rect.dilate(dilation);
    let aspect = T::nat(window.0.max(window.1) as usize) / T::nat(window.0.min(window.1) as usize);
    let tall = rect.h > rect.w;
    let (long, short) = if tall { (d.h, d.w) } else { (d.w, d.h) };
    let max_short = rect.area() / (T::lit(MIN_POSITIVE_IOU) * long);
    let short = short.max((long / aspect).min(max_short));
    if tall {
        d.resized(short, long)
    } else {
        d.resized(long, short)
    }
}

/// Moves `crop` by up to `shift` of the brick size per axis without letting
/// the brick leave it.
fn shifted<T: Real>(crop: &Rect<T>, brick: &Rect<T>, shift: T, rng: &mut impl Rng) -> Rect<T> {
    let half = T::lit(0.5);
    let mut offset = |extent: T, slack: T| {
        let lim = (extent * shift).min(slack.max(T::zero()));
        lim * T::lit(2.0 * rng.random::<f64>() - 1.0)
    };
    let dx = offset(brick.w, (crop.w - brick.w) * half);
    let dy = offset(brick.h, (crop.h - brick.h) * half);
    Rect::new(crop.x + dx, crop.y + dy, crop.w, crop.h)
}

/// Resamples the pixel rectangle `px` of `img` to the window; tall crops are
/// turned a quarter clockwise first so every sample is horizontal.
fn to_window<T: Real>(img: &GrayRaster<T>, px: &Rect<T>, window: (u32, u32), rotated: bool) -> GrayRaster<T> {
    let (ww, wh) = (window.0 as usize, window.1 as usize);
    if rotated {
        img.resample_rect(px, wh, ww).rotate90_cw()
    } else {
        img.resample_rect(px, ww, wh)
    }
}

fn dataset<T: Real>(
    samples: Vec<Sample<T>>,
    params: &PositiveParams<T>,
    modality: Modality,
    seed: u64,
) -> Dataset<T> {
    let entries = samples
        .iter()
        .enumerate()
        .map(|(i, s)| ManifestEntry {
            path: entry_path(Label::Positive, i),
            label: Label::Positive,
            modality,
            provenance: s.provenance.clone(),
        })
        .collect();
    let manifest = DatasetManifest::new(seed, params.window, modality, entries)
        .with_positive_params(params.clone());
    Dataset { samples, manifest }
}

/// Renders `n` positive windows from single-brick scenes.
///
/// Sample `i` draws a brick scale, a damage multiplier and (when allowed) a
/// quarter turn from its own stream, builds the jittered brick on a mortar
/// patch, bakes `modality` at `oversample` times the window resolution over
/// the crop and resamples it bilinearly to the window.
pub fn generate_positives<T: Real>(
    n: usize,
    brick: &BrickSpec<T>,
    params: &PositiveParams<T>,
    modality: Modality,
    seed: u64,
) -> Result<Dataset<T>, SamplerError> {
    if n == 0 {
        return Err(SamplerError::InvalidParams("n must be at least 1".into()));
    }
    params.validate()?;
    brick.validate()?;
    let samples = (0..n)
        .into_par_iter()
        .map(|i| single_positive(i, brick, params, modality, seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(dataset(samples, params, modality, seed))
}

fn single_positive<T: Real>(
    i: usize,
    brick: &BrickSpec<T>,
    params: &PositiveParams<T>,
    modality: Modality,
    seed: u64,
) -> Result<Sample<T>, SamplerError> {
    let sample_seed = seed::derive(seed, TAG_POSITIVE, i as u64);
    let mut rng = seed::rng(sample_seed, 0, 0);
    let scale = draw(&mut rng, params.scale_range);
    let damage_scale = draw(&mut rng, params.damage_range);
    let rotated = params.allow_90_rotation && rng.random_bool(0.5);

    let mut spec = brick.scaled(scale);
    spec.damage_amplitude *= damage_scale;
    let kind = if rotated { BrickKind::V } else { BrickKind::H };
    let scene = single_brick_scene(&spec, kind, params.joint, params.recess, spec.face_length, sample_seed)?;
    let ann = &scene.annotations[0];
    let crop = shifted(&crop_for_annotation(&ann.rect, params.window, params.dilation), &ann.rect, params.shift, &mut rng);

    let fine = T::nat((params.window.0.max(params.window.1) * params.oversample) as usize);
    let pixel_size = crop.w.max(crop.h) / fine;
    // Bake slightly past the crop so bilinear taps near the edge see real
    // surface instead of clamped pixels.
    let pad = pixel_size * T::lit(2.0);
    let z = scene.mesh.bounds().max.z;
    let frame = OrthoFrame::front(crop.x - pad, crop.y - pad, z, crop.w + pad * T::lit(2.0), crop.h + pad * T::lit(2.0), pixel_size);
    let maps = MapParams { seed: seed::derive(sample_seed, seed::tag("ao"), 0), ..params.maps.clone() };
    let img = bake_modality(&scene.mesh, &frame, &maps, modality)?;
    let image = to_window(&img, &frame.world_to_pixel_rect(&crop), params.window, rotated).quantized(modality.png_depth());

    Ok(Sample {
        image,
        label: Label::Positive,
        modality,
        provenance: Provenance {
            generator: Generator::SingleBrick,
            seed: sample_seed,
            scale,
            damage_scale,
            rotated,
            source_rect_mm: crop,
            brick_id: None,
            source: None,
            max_iou: crop.iou(&ann.rect),
        },
    })
}

/// Crops `n` positives directly from a baked wall, choosing bricks
/// uniformly among the horizontal ones (and the soldiers, turned, when
/// rotation is allowed).
pub fn generate_positives_in_situ<T: Real>(
    n: usize,
    annotations: &[Annotation<T>],
    maps: &SurfaceMapSet<T>,
    params: &PositiveParams<T>,
    modality: Modality,
    seed: u64,
) -> Result<Dataset<T>, SamplerError> {
    if n == 0 {
        return Err(SamplerError::InvalidParams("n must be at least 1".into()));
    }
    params.validate()?;
    let eligible: Vec<&Annotation<T>> = annotations
        .iter()
        .filter(|a| params.allow_90_rotation || a.orientation == Orientation::H)
        .collect();
    if eligible.is_empty() {
        return Err(SamplerError::InvalidParams("wall has no eligible bricks".into()));
    }
    let img = maps.channel(modality);
    let samples = (0..n)
        .into_par_iter()
        .map(|i| {
            let sample_seed = seed::derive(seed, TAG_POSITIVE, i as u64);
            let mut rng = seed::rng(sample_seed, 0, 0);
            let ann = eligible[rng.random_range(0..eligible.len())];
            let rotated = ann.orientation == Orientation::V;
            let crop = shifted(&crop_for_annotation(&ann.rect, params.window, params.dilation), &ann.rect, params.shift, &mut rng);
            let px = maps.frame.world_to_pixel_rect(&crop);
            let image = to_window(&img, &px, params.window, rotated).quantized(modality.png_depth());
            let max_iou = annotations.iter().map(|a| crop.iou(&a.rect)).fold(T::zero(), T::max);
            Sample {
                image,
                label: Label::Positive,
                modality,
                provenance: Provenance {
                    generator: Generator::InSitu,
                    seed: sample_seed,
                    scale: T::one(),
                    damage_scale: T::one(),
                    rotated,
                    source_rect_mm: crop,
                    brick_id: Some(ann.brick_id),
                    source: None,
                    max_iou,
                },
            }
        })
        .collect();
    Ok(dataset(samples, params, modality, seed))
}
