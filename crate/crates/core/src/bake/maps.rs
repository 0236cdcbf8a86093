use rayon::prelude::*;

use super::bvh::{Bvh, Hit};
use super::{BakeError, MapParams, Modality, OrthoFrame, SurfaceMapSet};
use crate::geom::{Ray, Vec3};
use crate::mesh::TriangleMesh;
use crate::raster::{GrayRaster, RgbRaster};
use crate::scalar::Real;
use crate::seed;

/// Offset of AO ray origins along the surface normal, mm.
pub const AO_OFFSET: f64 = 1e-3;

const TAG_AO: u64 = seed::tag("ao-rotation");

/// Encoded normal for pixels where the ray misses.
pub fn flat_normal<T: Real>() -> [T; 3] {
    [T::lit(0.5), T::lit(0.5), T::one()]
}

/// Nearest hits of the primary rays, row-major. Rows are traced in
/// parallel and collected in order.
pub fn primary_hits<T: Real>(bvh: &Bvh<T>, frame: &OrthoFrame<T>) -> Vec<Option<Hit<T>>> {
    let (w, h) = frame.dims();
    let dir = -frame.view;
    (0..h)
        .into_par_iter()
        .flat_map_iter(|r| {
            (0..w).map(move |c| {
                let ray = Ray::new(frame.pixel_center(c, r), dir);
                bvh.nearest_hit(&ray, T::zero(), T::infinity())
            })
        })
        .collect()
}

fn check_frame<T: Real>(frame: &OrthoFrame<T>) -> Result<(usize, usize), BakeError> {
    frame.validate()?;
    Ok(frame.dims())
}

pub fn bake_height<T: Real>(mesh: &TriangleMesh<T>, frame: &OrthoFrame<T>, depth_range: T) -> Result<GrayRaster<T>, BakeError> {
    let (w, h) = check_frame(frame)?;
    check_depth_range(depth_range)?;
    let hits = primary_hits(&Bvh::build(mesh), frame);
    Ok(height_from_hits(&hits, w, h, depth_range))
}

fn check_depth_range<T: Real>(depth_range: T) -> Result<(), BakeError> {
    if depth_range > T::zero() && depth_range.is_finite() {
        Ok(())
    } else {
        Err(BakeError::InvalidParams("depth_range must be positive".into()))
    }
}

fn height_from_hits<T: Real>(hits: &[Option<Hit<T>>], w: usize, h: usize, depth_range: T) -> GrayRaster<T> {
    let data = hits
        .iter()
        .map(|hit| match hit {
            Some(hit) => (T::one() - hit.t / depth_range).clamp_to(T::zero(), T::one()),
            None => T::zero(),
        })
        .collect();
    GrayRaster { width: w, height: h, data }
}

/// Unit geometric normal of triangle `tri`, turned toward the viewer.
fn facing_normal<T: Real>(mesh: &TriangleMesh<T>, tri: u32, view: Vec3<T>) -> Vec3<T> {
    let n = mesh.face_cross(tri as usize).normalized();
    if n.dot(view) < T::zero() {
        -n
    } else {
        n
    }
}

/// Encodes a unit normal in frame coordinates as `(n + 1) / 2`.
fn encode_normal<T: Real>(n: Vec3<T>, frame: &OrthoFrame<T>) -> [T; 3] {
    let half = T::lit(0.5);
    let enc = |c: T| ((c + T::one()) * half).clamp_to(T::zero(), T::one());
    [enc(n.dot(frame.right)), enc(n.dot(frame.up)), enc(n.dot(frame.view))]
}

pub fn bake_normal<T: Real>(mesh: &TriangleMesh<T>, frame: &OrthoFrame<T>) -> Result<RgbRaster<T>, BakeError> {
    let (w, h) = check_frame(frame)?;
    let hits = primary_hits(&Bvh::build(mesh), frame);
    Ok(normal_from_hits(mesh, frame, &hits, w, h))
}

fn normal_from_hits<T: Real>(
    mesh: &TriangleMesh<T>,
    frame: &OrthoFrame<T>,
    hits: &[Option<Hit<T>>],
    w: usize,
    h: usize,
) -> RgbRaster<T> {
    let data = hits
        .iter()
        .map(|hit| match hit {
            Some(hit) => encode_normal(facing_normal(mesh, hit.tri, frame.view), frame),
            None => flat_normal(),
        })
        .collect();
    RgbRaster { width: w, height: h, data }
}

/// Height gradient in value units per pixel along `right` and `up`.
/// Central differences inside, one-sided differences on the border.
fn gradient<T: Real>(height: &GrayRaster<T>, x: usize, y: usize) -> (T, T) {
    let half = T::lit(0.5);
    let diff = |lo: T, hi: T, span: usize| if span == 2 { (hi - lo) * half } else if span == 1 { hi - lo } else { T::zero() };
    let (xl, xr) = (x.saturating_sub(1), (x + 1).min(height.width - 1));
    let (yt, yb) = (y.saturating_sub(1), (y + 1).min(height.height - 1));
    let gx = diff(height.get(xl, y), height.get(xr, y), xr - xl);
    // Rows run downward, so the up-axis derivative is top minus bottom.
    let gy = diff(height.get(x, yb), height.get(x, yt), yb - yt);
    (gx, gy)
}

/// Normal map from a height raster; `depth_scale` is mm per height unit.
pub fn normal_from_height<T: Real>(height: &GrayRaster<T>, pixel_size: T, depth_scale: T) -> RgbRaster<T> {
    let k = depth_scale / pixel_size;
    let basis = OrthoFrame::front(T::zero(), T::zero(), T::zero(), T::one(), T::one(), T::one());
    let data = (0..height.height)
        .into_par_iter()
        .flat_map_iter(|y| {
            let basis = &basis;
            (0..height.width).map(move |x| {
                let (gx, gy) = gradient(height, x, y);
                let n = Vec3::new(-gx * k, -gy * k, T::one()).normalized();
                encode_normal(n, basis)
            })
        })
        .collect();
    RgbRaster { width: height.width, height: height.height, data }
}

/// Five-point Laplacian of the metric height field scaled by
/// `pixel_size²`, i.e. the stencil sum in mm. Borders replicate edge pixels.
pub fn stencil_sum<T: Real>(height: &GrayRaster<T>, x: usize, y: usize, depth_scale: T) -> T {
    let (xi, yi) = (x as isize, y as isize);
    let c = height.get(x, y);
    let s = height.get_clamped(xi - 1, yi)
        + height.get_clamped(xi + 1, yi)
        + height.get_clamped(xi, yi - 1)
        + height.get_clamped(xi, yi + 1)
        - c * T::lit(4.0);
    s * depth_scale
}

/// Curvature map: `clamp(0.5 − gain · pixel_size² · Δh)`. Convex bumps
/// toward the viewer (negative Laplacian) read above 0.5.
///
/// `gain` is per mm of stencil sum, so a step edge of `s` mm gives bands of
/// `0.5 ± gain·s` regardless of pixel size.
pub fn curvature_from_height<T: Real>(height: &GrayRaster<T>, depth_scale: T, gain: T) -> GrayRaster<T> {
    let half = T::lit(0.5);
    let data = (0..height.height)
        .into_par_iter()
        .flat_map_iter(|y| {
            (0..height.width).map(move |x| (half - gain * stencil_sum(height, x, y, depth_scale)).clamp_to(T::zero(), T::one()))
        })
        .collect();
    GrayRaster { width: height.width, height: height.height, data }
}

/// Base-2 radical inverse.
#[inline]
fn radical_inverse(i: u32) -> f64 {
    i.reverse_bits() as f64 * (1.0 / 4_294_967_296.0)
}

/// Orthonormal basis around unit `n` (Duff et al.).
fn onb<T: Real>(n: Vec3<T>) -> (Vec3<T>, Vec3<T>) {
    let sign = if n.z >= T::zero() { T::one() } else { -T::one() };
    let a = -T::one() / (sign + n.z);
    let b = n.x * n.y * a;
    (
        Vec3::new(T::one() + sign * n.x * n.x * a, sign * b, -sign * n.x),
        Vec3::new(b, sign + n.y * n.y * a, -n.y),
    )
}

/// Cosine-weighted hemisphere directions around `n` for pixel `pixel`:
/// a Hammersley set shifted by a per-pixel hashed rotation.
pub fn hemisphere_dirs<T: Real>(n: Vec3<T>, rays: u32, seed: u64, pixel: u64) -> impl Iterator<Item = Vec3<T>> {
    let (t1, t2) = onb(n);
    let du = seed::unit_hash(seed, TAG_AO, 2 * pixel);
    let dv = seed::unit_hash(seed, TAG_AO, 2 * pixel + 1);
    (0..rays).map(move |i| {
        let u = (i as f64 / rays as f64 + du).fract();
        let v = (radical_inverse(i) + dv).fract();
        let r = u.sqrt();
        let phi = std::f64::consts::TAU * v;
        let (x, y, z) = (r * phi.cos(), r * phi.sin(), (1.0 - u).max(0.0).sqrt());
        (t1 * T::lit(x) + t2 * T::lit(y) + n * T::lit(z)).normalized()
    })
}

pub fn bake_ao<T: Real>(
    mesh: &TriangleMesh<T>,
    frame: &OrthoFrame<T>,
    rays_per_pixel: u32,
    max_dist: T,
    seed: u64,
) -> Result<GrayRaster<T>, BakeError> {
    let (w, h) = check_frame(frame)?;
    check_ao(rays_per_pixel, max_dist)?;
    let bvh = Bvh::build(mesh);
    let hits = primary_hits(&bvh, frame);
    Ok(ao_from_hits(mesh, &bvh, frame, &hits, w, h, rays_per_pixel, max_dist, seed))
}

fn check_ao<T: Real>(rays_per_pixel: u32, max_dist: T) -> Result<(), BakeError> {
    if rays_per_pixel == 0 {
        return Err(BakeError::InvalidParams("rays_per_pixel must be at least 1".into()));
    }
    if !(max_dist > T::zero()) {
        return Err(BakeError::InvalidParams("max_dist must be positive".into()));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn ao_from_hits<T: Real>(
    mesh: &TriangleMesh<T>,
    bvh: &Bvh<T>,
    frame: &OrthoFrame<T>,
    hits: &[Option<Hit<T>>],
    w: usize,
    h: usize,
    rays: u32,
    max_dist: T,
    seed: u64,
) -> GrayRaster<T> {
    let dir = -frame.view;
    let offset = T::lit(AO_OFFSET);
    let data = hits
        .par_iter()
        .enumerate()
        .map(|(i, hit)| {
            let Some(hit) = hit else { return T::one() };
            let (c, r) = (i % w, i / w);
            let n = facing_normal(mesh, hit.tri, frame.view);
            let p = Ray::new(frame.pixel_center(c, r), dir).at(hit.t) + n * offset;
            let open = hemisphere_dirs(n, rays, seed, i as u64)
                .filter(|d| !bvh.any_hit(&Ray::new(p, *d), T::zero(), max_dist))
                .count();
            T::nat(open) / T::lit(rays as f64)
        })
        .collect();
    GrayRaster { width: w, height: h, data }
}

/// Bakes all four maps over one frame, sharing the hierarchy and the
/// primary hits.
pub fn bake_map_set<T: Real>(mesh: &TriangleMesh<T>, frame: &OrthoFrame<T>, params: &MapParams<T>) -> Result<SurfaceMapSet<T>, BakeError> {
    let (w, h) = check_frame(frame)?;
    params.validate()?;
    let bvh = Bvh::build(mesh);
    let hits = primary_hits(&bvh, frame);
    let height = height_from_hits(&hits, w, h, params.depth_range);
    let normal = normal_from_hits(mesh, frame, &hits, w, h);
    let ao = ao_from_hits(mesh, &bvh, frame, &hits, w, h, params.rays_per_pixel, params.max_dist, params.seed);
    let curvature = curvature_from_height(&height, params.depth_range, params.gain);
    Ok(SurfaceMapSet { frame: frame.clone(), params: params.clone(), height, normal, ao, curvature })
}

/// Bakes only what one modality needs.
pub fn bake_modality<T: Real>(
    mesh: &TriangleMesh<T>,
    frame: &OrthoFrame<T>,
    params: &MapParams<T>,
    modality: Modality,
) -> Result<GrayRaster<T>, BakeError> {
    let (w, h) = check_frame(frame)?;
    params.validate()?;
    let bvh = Bvh::build(mesh);
    let hits = primary_hits(&bvh, frame);
    Ok(match modality {
        Modality::Height => height_from_hits(&hits, w, h, params.depth_range),
        Modality::NormalR => normal_from_hits(mesh, frame, &hits, w, h).channel(0),
        Modality::NormalG => normal_from_hits(mesh, frame, &hits, w, h).channel(1),
        Modality::Ao => ao_from_hits(mesh, &bvh, frame, &hits, w, h, params.rays_per_pixel, params.max_dist, params.seed),
        Modality::Curvature => {
            curvature_from_height(&height_from_hits(&hits, w, h, params.depth_range), params.depth_range, params.gain)
        }
    })
}
