//! Small fixed-size geometry: 3-vectors, boxes, rectangles and the
//! watertight ray/triangle test used by every baker.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize, Serializer};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize)]
#[serde(from = "[T; 3]")]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T> From<[T; 3]> for Vec3<T> {
    fn from([x, y, z]: [T; 3]) -> Self {
        Self { x, y, z }
    }
}

impl<T: Serialize> Serialize for Vec3<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (&self.x, &self.y, &self.z).serialize(s)
    }
}

impl<T> From<Vec3<T>> for [T; 3] {
    fn from(v: Vec3<T>) -> Self {
        [v.x, v.y, v.z]
    }
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn splat(v: T) -> Self {
        Self::new(v, v, v)
    }

    pub fn unit_x() -> Self {
        Self::new(T::one(), T::zero(), T::zero())
    }

    pub fn unit_y() -> Self {
        Self::new(T::zero(), T::one(), T::zero())
    }

    pub fn unit_z() -> Self {
        Self::new(T::zero(), T::zero(), T::one())
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn length(self) -> T {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction; the zero vector stays zero.
    #[inline]
    pub fn normalized(self) -> Self {
        let len = self.length();
        if len > T::zero() {
            self * (T::one() / len)
        } else {
            self
        }
    }

    #[inline]
    pub fn min(self, o: Self) -> Self {
        Self::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    #[inline]
    pub fn max(self, o: Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Component-wise conversion to another scalar type.
    pub fn cast<U: Real>(self) -> Vec3<U> {
        Vec3::new(U::lit(self.x.as_f64()), U::lit(self.y.as_f64()), U::lit(self.z.as_f64()))
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;

    #[inline]
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            _ => &self.z,
        }
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb<T> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    pub fn empty() -> Self {
        Self {
            min: Vec3::splat(T::infinity()),
            max: Vec3::splat(T::neg_infinity()),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3<T>>) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.grow(*p);
        }
        b
    }

    #[inline]
    pub fn grow(&mut self, p: Vec3<T>) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    #[inline]
    pub fn union(self, o: Self) -> Self {
        Self {
            min: self.min.min(o.min),
            max: self.max.max(o.max),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    pub fn extent(&self) -> Vec3<T> {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3<T> {
        (self.min + self.max) * T::lit(0.5)
    }

    pub fn largest_axis(&self) -> usize {
        let e = self.extent();
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }

    /// Slab test against a ray with precomputed inverse direction; returns
    /// whether the box overlaps `[t_min, t_max]` along the ray.
    #[inline]
    pub fn hit(&self, origin: Vec3<T>, inv_dir: Vec3<T>, t_min: T, t_max: T) -> bool {
        let mut lo = t_min;
        let mut hi = t_max;
        for axis in 0..3 {
            let inv = inv_dir[axis];
            let mut t0 = (self.min[axis] - origin[axis]) * inv;
            let mut t1 = (self.max[axis] - origin[axis]) * inv;
            if t0.is_nan() || t1.is_nan() {
                // Ray parallel to the slab and exactly on its boundary plane.
                if origin[axis] < self.min[axis] || origin[axis] > self.max[axis] {
                    return false;
                }
                continue;
            }
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            lo = lo.max(t0);
            hi = hi.min(t1);
            if lo > hi {
                return false;
            }
        }
        true
    }
}

/// Axis-aligned rectangle `(x, y, w, h)`.
///
/// Used for wall-front rectangles in millimeters (y up, `(x, y)` the lower
/// left corner) and for pixel rectangles (y down, `(x, y)` the top left).
/// Serialized as `[x, y, w, h]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize)]
#[serde(from = "[T; 4]")]
pub struct Rect<T> {
    pub x: T,
    pub y: T,
    pub w: T,
    pub h: T,
}

impl<T> From<[T; 4]> for Rect<T> {
    fn from([x, y, w, h]: [T; 4]) -> Self {
        Self { x, y, w, h }
    }
}

impl<T: Serialize> Serialize for Rect<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (&self.x, &self.y, &self.w, &self.h).serialize(s)
    }
}

impl<T> From<Rect<T>> for [T; 4] {
    fn from(r: Rect<T>) -> Self {
        [r.x, r.y, r.w, r.h]
    }
}

impl<T: Real> Rect<T> {
    pub fn new(x: T, y: T, w: T, h: T) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> T {
        self.x + self.w
    }

    pub fn top(&self) -> T {
        self.y + self.h
    }

    pub fn area(&self) -> T {
        self.w.max(T::zero()) * self.h.max(T::zero())
    }

    pub fn center(&self) -> (T, T) {
        let half = T::lit(0.5);
        (self.x + self.w * half, self.y + self.h * half)
    }

    /// Half-open containment: `x <= px < x + w`, same for y.
    pub fn contains_point(&self, px: T, py: T) -> bool {
        px >= self.x && px < self.right() && py >= self.y && py < self.top()
    }

    pub fn contains_rect(&self, o: &Self, tol: T) -> bool {
        o.x >= self.x - tol
            && o.y >= self.y - tol
            && o.right() <= self.right() + tol
            && o.top() <= self.top() + tol
    }

    pub fn intersection_area(&self, o: &Self) -> T {
        let w = self.right().min(o.right()) - self.x.max(o.x);
        let h = self.top().min(o.top()) - self.y.max(o.y);
        if w <= T::zero() || h <= T::zero() {
            T::zero()
        } else {
            w * h
        }
    }

    pub fn iou(&self, o: &Self) -> T {
        let inter = self.intersection_area(o);
        let union = self.area() + o.area() - inter;
        if union <= T::zero() {
            T::zero()
        } else {
            inter / union
        }
    }

    /// Grows by `fraction` of each dimension, split evenly on both sides.
    pub fn dilate(&self, fraction: T) -> Self {
        let half = T::lit(0.5);
        let dw = self.w * fraction;
        let dh = self.h * fraction;
        Self::new(self.x - dw * half, self.y - dh * half, self.w + dw, self.h + dh)
    }

    /// Same center, new size.
    pub fn resized(&self, w: T, h: T) -> Self {
        let (cx, cy) = self.center();
        let half = T::lit(0.5);
        Self::new(cx - w * half, cy - h * half, w, h)
    }

    pub fn cast<U: Real>(&self) -> Rect<U> {
        Rect::new(
            U::lit(self.x.as_f64()),
            U::lit(self.y.as_f64()),
            U::lit(self.w.as_f64()),
            U::lit(self.h.as_f64()),
        )
    }
}

/// Ray prepared for the watertight triangle test.
///
/// The permutation and shear constants depend only on the direction, so they
/// are computed once per ray.
#[derive(Clone, Copy, Debug)]
pub struct Ray<T> {
    pub origin: Vec3<T>,
    pub dir: Vec3<T>,
    pub inv_dir: Vec3<T>,
    kx: usize,
    ky: usize,
    kz: usize,
    sx: T,
    sy: T,
    sz: T,
}

impl<T: Real> Ray<T> {
    pub fn new(origin: Vec3<T>, dir: Vec3<T>) -> Self {
        let ad = Vec3::new(dir.x.abs(), dir.y.abs(), dir.z.abs());
        let kz = if ad.x >= ad.y && ad.x >= ad.z {
            0
        } else if ad.y >= ad.z {
            1
        } else {
            2
        };
        let mut kx = (kz + 1) % 3;
        let mut ky = (kx + 1) % 3;
        if dir[kz] < T::zero() {
            std::mem::swap(&mut kx, &mut ky);
        }
        let sz = T::one() / dir[kz];
        Self {
            origin,
            dir,
            inv_dir: Vec3::new(T::one() / dir.x, T::one() / dir.y, T::one() / dir.z),
            kx,
            ky,
            kz,
            sx: dir[kx] * sz,
            sy: dir[ky] * sz,
            sz,
        }
    }

    #[inline]
    pub fn at(&self, t: T) -> Vec3<T> {
        self.origin + self.dir * t
    }

    /// Watertight ray/triangle intersection (Woop, Benthin and Wald).
    ///
    /// Both faces are hit. Returns the ray parameter when the hit lies in
    /// `[t_min, t_max]`. Points on shared edges are reported by at least one
    /// of the adjacent triangles.
    #[inline]
    pub fn intersect_triangle(
        &self,
        v0: Vec3<T>,
        v1: Vec3<T>,
        v2: Vec3<T>,
        t_min: T,
        t_max: T,
    ) -> Option<T> {
        let zero = T::zero();
        let a = v0 - self.origin;
        let b = v1 - self.origin;
        let c = v2 - self.origin;
        let (kx, ky, kz) = (self.kx, self.ky, self.kz);

        let ax = a[kx] - self.sx * a[kz];
        let ay = a[ky] - self.sy * a[kz];
        let bx = b[kx] - self.sx * b[kz];
        let by = b[ky] - self.sy * b[kz];
        let cx = c[kx] - self.sx * c[kz];
        let cy = c[ky] - self.sy * c[kz];

        let u = cx * by - cy * bx;
        let v = ax * cy - ay * cx;
        let w = bx * ay - by * ax;

        if (u < zero || v < zero || w < zero) && (u > zero || v > zero || w > zero) {
            return None;
        }
        let det = u + v + w;
        if det == zero {
            return None;
        }

        let az = self.sz * a[kz];
        let bz = self.sz * b[kz];
        let cz = self.sz * c[kz];
        let t_scaled = u * az + v * bz + w * cz;
        let t = t_scaled / det;
        if t.is_nan() || t < t_min || t > t_max {
            return None;
        }
        Some(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    #[test]
    fn ray_hits_triangle_interior_and_misses_outside() {
        let ray = Ray::new(v(0.25, 0.25, 5.0), v(0.0, 0.0, -1.0));
        let t = ray.intersect_triangle(v(0.0, 0.0, 1.0), v(1.0, 0.0, 1.0), v(0.0, 1.0, 1.0), 0.0, 100.0);
        assert_eq!(t, Some(4.0));
        let miss = Ray::new(v(0.75, 0.75, 5.0), v(0.0, 0.0, -1.0));
        assert!(miss
            .intersect_triangle(v(0.0, 0.0, 1.0), v(1.0, 0.0, 1.0), v(0.0, 1.0, 1.0), 0.0, 100.0)
            .is_none());
    }

    #[test]
    fn shared_edge_is_hit_by_some_triangle() {
        // Quad split along the diagonal; rays exactly on the diagonal.
        let (a, b, c, d) = (v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(1.0, 1.0, 0.0), v(0.0, 1.0, 0.0));
        for i in 0..=10 {
            let s = i as f64 / 10.0;
            let ray = Ray::new(v(s, s, 1.0), v(0.0, 0.0, -1.0));
            let h1 = ray.intersect_triangle(a, b, c, 0.0, 10.0);
            let h2 = ray.intersect_triangle(a, c, d, 0.0, 10.0);
            assert!(h1.is_some() || h2.is_some(), "gap at {s}");
        }
    }

    #[test]
    fn t_range_is_respected() {
        let ray = Ray::new(v(0.2, 0.2, 0.0), v(0.0, 0.0, -1.0));
        let tri = (v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0));
        assert_eq!(ray.intersect_triangle(tri.0, tri.1, tri.2, 0.0, 1.0), Some(0.0));
        assert!(ray.intersect_triangle(tri.0, tri.1, tri.2, 1e-3, 1.0).is_none());
    }

    #[test]
    fn rect_iou_and_dilate() {
        let r = Rect::<f64>::new(0.0, 0.0, 10.0, 10.0);
        assert_eq!(r.iou(&r), 1.0);
        let d = r.dilate(0.2);
        assert!((d.w - 12.0).abs() < 1e-12 && (d.x + 1.0).abs() < 1e-12);
        assert!((r.iou(&d) - 100.0 / 144.0).abs() < 1e-12);
        assert_eq!(r.iou(&Rect::new(20.0, 0.0, 5.0, 5.0)), 0.0);
    }

    #[test]
    fn aabb_slab_test() {
        let b = Aabb { min: v(0.0, 0.0, 0.0), max: v(1.0, 1.0, 1.0) };
        let r = Ray::new(v(0.5, 0.5, 3.0), v(0.0, 0.0, -1.0));
        assert!(b.hit(r.origin, r.inv_dir, 0.0, 10.0));
        assert!(!b.hit(r.origin, r.inv_dir, 0.0, 1.0));
        let r2 = Ray::new(v(1.5, 0.5, 3.0), v(0.0, 0.0, -1.0));
        assert!(!b.hit(r2.origin, r2.inv_dir, 0.0, 10.0));
        // Boundary: ray running along a face plane.
        let r3 = Ray::new(v(1.0, 0.5, 3.0), v(0.0, 0.0, -1.0));
        assert!(b.hit(r3.origin, r3.inv_dir, 0.0, 10.0));
    }
}
