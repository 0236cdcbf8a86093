//! Procedural brick walls with exact ground truth.
//!
//! A wall is a [`WallPattern`] (the bond, parsed from the text format in
//! [`pattern`]) filled with jittered, damaged bricks from a [`BrickSpec`] in
//! front of a recessed mortar slab. Bricks are allowed to pass through the
//! slab. Every brick gets an [`Annotation`] recording its nominal front
//! rectangle, orientation and class.

mod brick;
pub mod obj;
pub mod pattern;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use brick::{generate_brick, value_noise, BrickSpec, JITTER_CLAMP_SD};
pub use pattern::{parse_pattern, parse_pattern_with, Cell, PatternConfig, Placement, WallPattern};

use crate::geom::{Rect, Vec3};
use crate::mesh::TriangleMesh;
use crate::scalar::Real;
use crate::seed;

/// Thickness of the mortar slab behind the joints, mm.
pub const MORTAR_SLAB_THICKNESS: f64 = 20.0;

const TAG_WALL_BRICK: u64 = seed::tag("wall-brick");

#[derive(Debug, Error, PartialEq)]
pub enum WallError {
    #[error("pattern cell ({row}, {col}) is covered twice")]
    PatternOverlap { row: u32, col: u32 },
    #[error("pattern shape: {0}")]
    PatternShape(String),
    #[error("unknown pattern token {token:?} on line {line}")]
    PatternToken { line: usize, token: String },
    #[error("grid pitch mismatch: {0}")]
    GridPitchMismatch(String),
    #[error("invalid brick spec: {0}")]
    InvalidSpec(String),
    #[error("OBJ line {line}: face with {vertices} vertices (only triangles are supported)")]
    ObjFace { line: usize, vertices: usize },
    #[error("OBJ line {line}: index {index} out of range")]
    ObjIndex { line: usize, index: i64 },
    #[error("OBJ line {line}: {message}")]
    ObjSyntax { line: usize, message: String },
}

/// Placement class in a pattern: stretcher, soldier or long stretcher.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BrickKind {
    H,
    V,
    L,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    H,
    V,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BrickType {
    Standard,
    Long,
}

impl BrickKind {
    pub fn orientation(self) -> Orientation {
        match self {
            BrickKind::V => Orientation::V,
            BrickKind::H | BrickKind::L => Orientation::H,
        }
    }

    pub fn brick_type(self) -> BrickType {
        match self {
            BrickKind::L => BrickType::Long,
            BrickKind::H | BrickKind::V => BrickType::Standard,
        }
    }
}

/// Ground truth for one brick. `rect` is in wall-front millimeters with
/// `y` up and `(x, y)` the lower left corner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annotation<T> {
    pub brick_id: u32,
    #[serde(rename = "rect_mm")]
    pub rect: Rect<T>,
    pub orientation: Orientation,
    pub brick_type: BrickType,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WallModel<T> {
    pub mesh: TriangleMesh<T>,
    pub annotations: Vec<Annotation<T>>,
    pub pattern: WallPattern<T>,
    pub seed: u64,
}

/// Builds the wall mesh and annotations for `pattern`.
///
/// Brick `i` (row-major placement order) draws its jitter and damage from a
/// seed derived from `(seed, i)`, so results do not depend on scheduling.
pub fn generate_wall<T: Real>(
    pattern: &WallPattern<T>,
    brick: &BrickSpec<T>,
    seed: u64,
) -> Result<WallModel<T>, WallError> {
    build_wall(pattern, brick, seed, T::zero())
}

/// As [`generate_wall`], with the mortar slab extended by `slab_margin` mm
/// beyond the pattern on every side.
fn build_wall<T: Real>(
    pattern: &WallPattern<T>,
    brick: &BrickSpec<T>,
    seed: u64,
    slab_margin: T,
) -> Result<WallModel<T>, WallError> {
    brick.validate()?;
    let pitch = pattern.cell_unit;
    let joint = pattern.joint;
    if !(joint > T::zero()) {
        return Err(WallError::GridPitchMismatch("joint must be positive".into()));
    }
    if !(pattern.recess >= T::zero()) {
        return Err(WallError::GridPitchMismatch("recess must be >= 0".into()));
    }
    let expected = brick.face_height + joint;
    if (pitch - expected).abs() > expected * T::lit(1e-9) {
        return Err(WallError::GridPitchMismatch(format!(
            "cell unit {pitch} mm != face height + joint = {expected} mm"
        )));
    }

    let total_h = pattern.height_mm();
    let mut annotations = Vec::with_capacity(pattern.placements.len());
    for (id, p) in pattern.placements.iter().enumerate() {
        let dims = brick.nominal_dims(p.kind);
        let slot = T::lit(p.span as f64) * pitch;
        if dims.x + joint > slot * (T::one() + T::lit(1e-9)) {
            return Err(WallError::GridPitchMismatch(format!(
                "{:?}{} at row {} col {}: a {} mm brick plus joint does not fit a {} mm span",
                p.kind, p.span, p.row, p.col, dims.x, slot
            )));
        }
        let half = T::lit(0.5);
        let col = T::lit(p.col as f64);
        let row = T::lit(p.row as f64);
        let rect = match p.kind {
            BrickKind::H | BrickKind::L => Rect::new(
                col * pitch + (slot - dims.x) * half,
                total_h - (row + T::one()) * pitch + (pitch - dims.y) * half,
                dims.x,
                dims.y,
            ),
            BrickKind::V => Rect::new(
                col * pitch + (pitch - dims.y) * half,
                total_h - row * pitch - slot + (slot - dims.x) * half,
                dims.y,
                dims.x,
            ),
        };
        annotations.push(Annotation {
            brick_id: id as u32,
            rect,
            orientation: p.kind.orientation(),
            brick_type: p.kind.brick_type(),
        });
    }

    let bricks: Vec<TriangleMesh<T>> = pattern
        .placements
        .par_iter()
        .zip(annotations.par_iter())
        .map(|(p, ann)| {
            let brick_seed = seed::derive(seed, TAG_WALL_BRICK, ann.brick_id as u64);
            let local = brick::build_brick(brick, p.kind, brick_seed);
            place_brick(local, p.kind, &ann.rect)
        })
        .collect();

    let slab_back = -(pattern.recess + T::lit(MORTAR_SLAB_THICKNESS));
    let mut mesh = TriangleMesh::cuboid(
        Vec3::new(-slab_margin, -slab_margin, slab_back),
        Vec3::new(pattern.width_mm() + slab_margin, total_h + slab_margin, -pattern.recess),
    );
    for b in &bricks {
        mesh.append(b);
    }

    Ok(WallModel { mesh, annotations, pattern: pattern.clone(), seed })
}

/// Rotates soldiers a quarter turn in the wall plane and moves the brick's
/// center onto the annotation center.
fn place_brick<T: Real>(mut local: TriangleMesh<T>, kind: BrickKind, rect: &Rect<T>) -> TriangleMesh<T> {
    if kind == BrickKind::V {
        for v in &mut local.vertices {
            *v = Vec3::new(-v.y, v.x, v.z);
        }
    }
    let (cx, cy) = rect.center();
    local.translated(Vec3::new(cx, cy, T::zero()))
}

/// A one-brick wall: a single placement of `kind` on a mortar patch that
/// extends `margin` mm past the brick's grid slot, with the grid derived
/// from `spec` so the pitch always matches.
pub fn single_brick_scene<T: Real>(
    spec: &BrickSpec<T>,
    kind: BrickKind,
    joint: T,
    recess: T,
    margin: T,
    seed: u64,
) -> Result<WallModel<T>, WallError> {
    let long = spec.face_length * spec.long_length_factor;
    let config = PatternConfig::for_brick(spec.face_length, spec.face_height, long, joint, recess);
    let span = match kind {
        BrickKind::H => config.h_span,
        BrickKind::V => config.v_span,
        BrickKind::L => config.l_span,
    };
    let (rows, cols) = if kind == BrickKind::V { (span, 1) } else { (1, span) };
    let pattern = WallPattern {
        rows,
        cols,
        placements: vec![Placement { row: 0, col: 0, kind, span }],
        cell_unit: config.cell_unit,
        joint,
        recess,
    };
    build_wall(&pattern, spec, seed, margin)
}
