use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::bake::OrthoFrame;
use crate::cascade::Detection;
use crate::geom::Rect;
use crate::scalar::Real;
use crate::wall::{BrickSpec, BrickType, Orientation};

/// Nominal dimensions of one brick class, mm. `face_length ≥ face_height`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct BrickClass<T> {
    pub brick_type: BrickType,
    pub face_length: T,
    pub face_height: T,
    pub depth: T,
}

/// A non-empty list of brick classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<BrickClass<T>>", into = "Vec<BrickClass<T>>", bound = "T: Real")]
pub struct Catalog<T: Real>(Vec<BrickClass<T>>);

impl<T: Real> Catalog<T> {
    pub fn new(classes: Vec<BrickClass<T>>) -> Result<Self, PipelineError> {
        if classes.is_empty() {
            return Err(PipelineError::Config("brick catalog is empty".into()));
        }
        for c in &classes {
            if !(c.face_height > T::zero() && c.face_length >= c.face_height && c.depth > T::zero()) {
                return Err(PipelineError::Config(format!("{:?} class needs face_length >= face_height > 0 and depth > 0", c.brick_type)));
            }
        }
        Ok(Self(classes))
    }

    /// STANDARD and LONG classes matching a wall-forge brick spec.
    pub fn from_spec(spec: &BrickSpec<T>) -> Self {
        Self(vec![
            BrickClass {
                brick_type: BrickType::Standard,
                face_length: spec.face_length,
                face_height: spec.face_height,
                depth: spec.depth,
            },
            BrickClass {
                brick_type: BrickType::Long,
                face_length: spec.face_length * spec.long_length_factor,
                face_height: spec.face_height,
                depth: spec.depth * spec.long_depth_factor,
            },
        ])
    }

    pub fn classes(&self) -> &[BrickClass<T>] {
        &self.0
    }

    /// Class nearest to an oriented face `(long side, short side)` by the sum
    /// of squared relative differences; ties go to the earlier class.
    pub fn nearest(&self, long: T, short: T) -> &BrickClass<T> {
        let dist = |c: &BrickClass<T>| {
            let dl = (long - c.face_length) / c.face_length;
            let ds = (short - c.face_height) / c.face_height;
            dl * dl + ds * ds
        };
        self.0
            .iter()
            .fold(None::<(&BrickClass<T>, T)>, |best, c| {
                let d = dist(c);
                match best {
                    Some((_, bd)) if bd <= d => best,
                    _ => Some((c, d)),
                }
            })
            .map(|(c, _)| c)
            .expect("catalog is non-empty")
    }
}

impl<T: Real> TryFrom<Vec<BrickClass<T>>> for Catalog<T> {
    type Error = String;
    fn try_from(v: Vec<BrickClass<T>>) -> Result<Self, String> {
        Self::new(v).map_err(|e| e.to_string())
    }
}

impl<T: Real> From<Catalog<T>> for Vec<BrickClass<T>> {
    fn from(c: Catalog<T>) -> Self {
        c.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct EnrichedBrick<T> {
    pub detection: Detection<T>,
    pub orientation: Orientation,
    pub brick_type: BrickType,
    pub inferred_depth: T,
    pub world_rect: Rect<T>,
}

/// Maps detections to wall millimeters and attaches orientation, the nearest
/// catalog class and its depth.
pub fn enrich<T: Real>(detections: &[Detection<T>], frame: &OrthoFrame<T>, catalog: &Catalog<T>) -> Vec<EnrichedBrick<T>> {
    detections
        .iter()
        .map(|d| {
            let world_rect = frame.pixel_to_world_rect(&d.rect);
            let orientation = if world_rect.w >= world_rect.h { Orientation::H } else { Orientation::V };
            let class = catalog.nearest(world_rect.w.max(world_rect.h), world_rect.w.min(world_rect.h));
            EnrichedBrick {
                detection: d.clone(),
                orientation,
                brick_type: class.brick_type,
                inferred_depth: class.depth,
                world_rect,
            }
        })
        .collect()
}
