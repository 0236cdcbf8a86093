//! Single brick units with dimensional jitter and surface damage.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{BrickKind, WallError};
use crate::geom::Vec3;
use crate::mesh::TriangleMesh;
use crate::scalar::Real;
use crate::seed;

/// Jitter draws are clamped to this many standard deviations.
pub const JITTER_CLAMP_SD: f64 = 3.0;

const TAG_DIMS: u64 = seed::tag("brick-dims");
const TAG_NOISE: u64 = seed::tag("brick-noise");
const TAG_CHIP: u64 = seed::tag("brick-chip");

/// Nominal brick geometry plus the parameters of its random variation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound = "T: Real")]
pub struct BrickSpec<T> {
    pub face_length: T,
    pub face_height: T,
    pub depth: T,
    pub length_jitter_sd: T,
    pub height_jitter_sd: T,
    pub depth_jitter_sd: T,
    /// Largest displacement of the surface noise, mm.
    pub damage_amplitude: T,
    /// Spatial frequency of the surface noise, 1/mm.
    pub damage_frequency: T,
    /// Chance that each corner is chipped off (only when damage is on).
    pub chip_probability: T,
    /// Leg length of a chipped corner, mm.
    pub chip_size: T,
    /// LONG class length and depth multipliers.
    pub long_length_factor: T,
    pub long_depth_factor: T,
}

impl<T: Real> Default for BrickSpec<T> {
    fn default() -> Self {
        Self {
            face_length: T::lit(225.0),
            face_height: T::lit(45.0),
            depth: T::lit(225.0),
            length_jitter_sd: T::lit(2.0),
            height_jitter_sd: T::lit(1.0),
            depth_jitter_sd: T::lit(2.0),
            damage_amplitude: T::lit(1.0),
            damage_frequency: T::lit(0.05),
            chip_probability: T::lit(0.1),
            chip_size: T::lit(8.0),
            long_length_factor: T::lit(1.5),
            long_depth_factor: T::lit(1.5),
        }
    }
}

impl<T: Real> BrickSpec<T> {
    /// The default geometry with every random component switched off.
    pub fn ideal() -> Self {
        Self {
            length_jitter_sd: T::zero(),
            height_jitter_sd: T::zero(),
            depth_jitter_sd: T::zero(),
            damage_amplitude: T::zero(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), WallError> {
        let bad = |what: &str| Err(WallError::InvalidSpec(what.to_string()));
        let q = T::lit(0.25);
        for (name, nominal, sd) in [
            ("length", self.face_length, self.length_jitter_sd),
            ("height", self.face_height, self.height_jitter_sd),
            ("depth", self.depth, self.depth_jitter_sd),
        ] {
            if !(nominal > T::zero()) || !nominal.is_finite() {
                return bad(&format!("{name} must be positive"));
            }
            if !(sd >= T::zero()) || !(sd < nominal * q) {
                return bad(&format!("{name} jitter sd must be in [0, {name}/4)"));
            }
        }
        if !(self.damage_amplitude >= T::zero()) || !self.damage_amplitude.is_finite() {
            return bad("damage_amplitude must be >= 0");
        }
        if self.damage_amplitude > T::zero() && !(self.damage_frequency > T::zero()) {
            return bad("damage_frequency must be > 0 when damage is enabled");
        }
        if !(self.chip_probability >= T::zero() && self.chip_probability <= T::one()) {
            return bad("chip_probability must be in [0, 1]");
        }
        if !(self.chip_size >= T::zero()) {
            return bad("chip_size must be >= 0");
        }
        if !(self.long_length_factor >= T::one()) || !(self.long_depth_factor >= T::one()) {
            return bad("LONG factors must be >= 1");
        }
        Ok(())
    }

    /// Nominal `(length, height, depth)` for a class.
    pub fn nominal_dims(&self, kind: BrickKind) -> Vec3<T> {
        match kind {
            BrickKind::H | BrickKind::V => Vec3::new(self.face_length, self.face_height, self.depth),
            BrickKind::L => Vec3::new(
                self.face_length * self.long_length_factor,
                self.face_height,
                self.depth * self.long_depth_factor,
            ),
        }
    }

    /// Copy with every length (nominal, jitter, damage, chip) scaled by `s`.
    pub fn scaled(&self, s: T) -> Self {
        Self {
            face_length: self.face_length * s,
            face_height: self.face_height * s,
            depth: self.depth * s,
            length_jitter_sd: self.length_jitter_sd * s,
            height_jitter_sd: self.height_jitter_sd * s,
            depth_jitter_sd: self.depth_jitter_sd * s,
            damage_amplitude: self.damage_amplitude * s,
            damage_frequency: self.damage_frequency / s,
            chip_size: self.chip_size * s,
            ..self.clone()
        }
    }
}

/// Generates one brick of the STANDARD class, front face on `z = 0`,
/// centered on the z axis, body toward `-z`.
pub fn generate_brick<T: Real>(spec: &BrickSpec<T>, seed: u64) -> Result<TriangleMesh<T>, WallError> {
    spec.validate()?;
    Ok(build_brick(spec, BrickKind::H, seed))
}

/// Jittered dimensions for one brick.
pub(crate) fn sample_dims<T: Real>(spec: &BrickSpec<T>, kind: BrickKind, seed: u64) -> Vec3<T> {
    let nominal = spec.nominal_dims(kind);
    let mut rng = seed::rng(seed, TAG_DIMS, 0);
    let mut jitter = |sd: T| {
        let z: f64 = rng.sample(StandardNormal);
        T::lit(z.clamp(-JITTER_CLAMP_SD, JITTER_CLAMP_SD)) * sd
    };
    let dl = jitter(spec.length_jitter_sd);
    let dh = jitter(spec.height_jitter_sd);
    let dd = jitter(spec.depth_jitter_sd);
    Vec3::new(nominal.x + dl, nominal.y + dh, nominal.z + dd)
}

/// Brick in local coordinates: `x` along the length, `y` along the face
/// height, front face on `z = 0`.
pub(crate) fn build_brick<T: Real>(spec: &BrickSpec<T>, kind: BrickKind, seed: u64) -> TriangleMesh<T> {
    let dims = sample_dims(spec, kind, seed);
    let damaged = spec.damage_amplitude > T::zero();
    let k = if damaged {
        let longest = dims.x.max(dims.y).max(dims.z);
        (longest * spec.damage_frequency).ceil().to_usize().unwrap_or(1).max(1)
    } else {
        1
    };

    let mut chips = [false; 8];
    if damaged && spec.chip_probability > T::zero() && spec.chip_size > T::zero() {
        let mut rng = seed::rng(seed, TAG_CHIP, 0);
        let p = spec.chip_probability.as_f64();
        for c in &mut chips {
            *c = rng.random::<f64>() < p;
        }
    }

    let half = T::lit(0.5);
    let origin = Vec3::new(-dims.x * half, -dims.y * half, -dims.z);
    let noise_seed = seed::derive(seed, TAG_NOISE, 0);
    let chip_size = spec.chip_size.min(dims.x.min(dims.y).min(dims.z) * T::lit(0.45));
    let amplitude = spec.damage_amplitude;
    let freq = spec.damage_frequency;

    build_lattice_box(origin, dims, k, |pos, normal| {
        let mut p = pos;
        if damaged {
            p = chip_corner(p, origin, dims, &chips, chip_size);
            let n = value_noise(noise_seed, pos * freq);
            p += normal * (amplitude * T::lit(n));
        }
        p
    })
}

/// Moves points within `size` (L1) of a chipped corner onto the cutting plane.
fn chip_corner<T: Real>(p: Vec3<T>, origin: Vec3<T>, dims: Vec3<T>, chips: &[bool; 8], size: T) -> Vec3<T> {
    let local = p - origin;
    let mut out = p;
    for (ci, &chipped) in chips.iter().enumerate() {
        if !chipped {
            continue;
        }
        let hi = [ci & 1 != 0, ci & 2 != 0, ci & 4 != 0];
        let d = [
            if hi[0] { dims.x - local.x } else { local.x },
            if hi[1] { dims.y - local.y } else { local.y },
            if hi[2] { dims.z - local.z } else { local.z },
        ];
        let s = d[0] + d[1] + d[2];
        if s < size {
            let t = (size - s) / T::lit(3.0);
            let dir = |h: bool| if h { -T::one() } else { T::one() };
            out += Vec3::new(dir(hi[0]), dir(hi[1]), dir(hi[2])) * t;
        }
    }
    out
}

/// Closed box whose faces are each a `k × k` quad grid sharing boundary
/// vertices. `place` maps each lattice point and its outward normal (face
/// normal, or the normalized sum on edges and corners) to its final position.
pub(crate) fn build_lattice_box<T: Real>(
    origin: Vec3<T>,
    dims: Vec3<T>,
    k: usize,
    place: impl Fn(Vec3<T>, Vec3<T>) -> Vec3<T>,
) -> TriangleMesh<T> {
    let n = k + 1;
    let mut index = vec![u32::MAX; n * n * n];
    let mut vertices = Vec::new();
    let kf = T::nat(k);
    let mut vertex = |i: usize, j: usize, l: usize, vertices: &mut Vec<Vec3<T>>| -> u32 {
        let key = (i * n + j) * n + l;
        if index[key] == u32::MAX {
            let pos = origin
                + Vec3::new(
                    dims.x * T::nat(i) / kf,
                    dims.y * T::nat(j) / kf,
                    dims.z * T::nat(l) / kf,
                );
            let side = |c: usize| {
                if c == 0 {
                    -T::one()
                } else if c == k {
                    T::one()
                } else {
                    T::zero()
                }
            };
            let normal = Vec3::new(side(i), side(j), side(l)).normalized();
            index[key] = vertices.len() as u32;
            vertices.push(place(pos, normal));
        }
        index[key]
    };

    let mut triangles = Vec::with_capacity(12 * k * k);
    for axis in 0..3 {
        let ua = (axis + 1) % 3;
        let va = (axis + 2) % 3;
        for positive in [false, true] {
            let fixed = if positive { k } else { 0 };
            for u in 0..k {
                for v in 0..k {
                    let mut corner = |du: usize, dv: usize| {
                        let mut c = [0usize; 3];
                        c[axis] = fixed;
                        c[ua] = u + du;
                        c[va] = v + dv;
                        vertex(c[0], c[1], c[2], &mut vertices)
                    };
                    let q = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)];
                    if positive {
                        triangles.push([q[0], q[1], q[2]]);
                        triangles.push([q[0], q[2], q[3]]);
                    } else {
                        triangles.push([q[0], q[2], q[1]]);
                        triangles.push([q[0], q[3], q[2]]);
                    }
                }
            }
        }
    }
    let mut mesh = TriangleMesh::new(vertices, triangles);
    mesh.remove_degenerate();
    mesh
}

/// Smooth 3D value noise in `[-1, 1]`, lattice spacing 1.
pub fn value_noise<T: Real>(seed: u64, p: Vec3<T>) -> f64 {
    let (x, y, z) = (p.x.as_f64(), p.y.as_f64(), p.z.as_f64());
    let (x0, y0, z0) = (x.floor(), y.floor(), z.floor());
    let (fx, fy, fz) = (smooth(x - x0), smooth(y - y0), smooth(z - z0));
    let lattice = |i: f64, j: f64, l: f64| {
        let a = (i as i64 as u64) ^ ((j as i64 as u64) << 21) ^ ((j as i64 as u64) >> 43);
        2.0 * seed::unit_hash(seed, a, l as i64 as u64) - 1.0
    };
    let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
    let mut acc = [0.0; 4];
    for (slot, (dj, dl)) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)].into_iter().enumerate() {
        acc[slot] = lerp(lattice(x0, y0 + dj, z0 + dl), lattice(x0 + 1.0, y0 + dj, z0 + dl), fx);
    }
    lerp(lerp(acc[0], acc[1], fy), lerp(acc[2], acc[3], fy), fz)
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}
