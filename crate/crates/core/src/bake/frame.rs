use serde::{Deserialize, Serialize};

use super::BakeError;
use crate::geom::{Rect, Vec3};
use crate::mesh::TriangleMesh;
use crate::scalar::Real;

/// Orthographic projection plane.
///
/// `origin` is the top-left corner of the image on the projection plane.
/// `view = right × up` points from the surface toward the viewer; rays are
/// cast along `-view`. Pixel `(c, r)` has its center at
/// `origin + right·(c + ½)·pixel_size − up·(r + ½)·pixel_size`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct OrthoFrame<T> {
    pub origin: Vec3<T>,
    pub right: Vec3<T>,
    pub up: Vec3<T>,
    pub view: Vec3<T>,
    pub width: T,
    pub height: T,
    pub pixel_size: T,
}

impl<T: Real> OrthoFrame<T> {
    /// Front-facing frame over the world rectangle `[x0, x0+width] × [y0, y0+height]`
    /// with the projection plane at `z`.
    pub fn front(x0: T, y0: T, z: T, width: T, height: T, pixel_size: T) -> Self {
        Self {
            origin: Vec3::new(x0, y0 + height, z),
            right: Vec3::unit_x(),
            up: Vec3::unit_y(),
            view: Vec3::unit_z(),
            width,
            height,
            pixel_size,
        }
    }

    pub fn validate(&self) -> Result<(), BakeError> {
        let tol = T::lit(1e-9);
        let unit = |v: Vec3<T>| (v.length() - T::one()).abs() <= tol;
        if !(self.width > T::zero() && self.height > T::zero() && self.pixel_size > T::zero()) {
            return Err(BakeError::InvalidFrame("width, height and pixel size must be positive".into()));
        }
        if !self.origin.is_finite() || !unit(self.right) || !unit(self.up) || !unit(self.view) {
            return Err(BakeError::InvalidFrame("origin must be finite and axes unit length".into()));
        }
        if self.right.dot(self.up).abs() > tol || (self.right.cross(self.up) - self.view).length() > tol {
            return Err(BakeError::InvalidFrame("axes must be orthonormal with view = right × up".into()));
        }
        if self.dims().0 == 0 || self.dims().1 == 0 {
            return Err(BakeError::InvalidFrame("frame is smaller than one pixel".into()));
        }
        Ok(())
    }

    /// Raster size `(columns, rows)`.
    pub fn dims(&self) -> (usize, usize) {
        let n = |len: T| (len / self.pixel_size).round().to_usize().unwrap_or(0);
        (n(self.width), n(self.height))
    }

    pub fn pixel_center(&self, c: usize, r: usize) -> Vec3<T> {
        let half = T::lit(0.5);
        self.origin + self.right * ((T::nat(c) + half) * self.pixel_size)
            - self.up * ((T::nat(r) + half) * self.pixel_size)
    }

    /// In-plane coordinates `(u, v)` of a world point, in mm along `right`
    /// and `up` from the origin.
    fn plane_coords(&self, p: Vec3<T>) -> (T, T) {
        let d = p - self.origin;
        (d.dot(self.right), d.dot(self.up))
    }

    /// Maps a wall-front rectangle (mm, y up, lower-left corner) to pixel
    /// coordinates (y down, top-left corner). The rectangle is taken to lie
    /// in the plane spanned by world X and Y.
    pub fn world_to_pixel_rect(&self, rect: &Rect<T>) -> Rect<T> {
        let z = self.origin.z;
        let a = self.plane_coords(Vec3::new(rect.x, rect.y, z));
        let b = self.plane_coords(Vec3::new(rect.right(), rect.top(), z));
        let ps = self.pixel_size;
        let (x0, x1) = (a.0.min(b.0) / ps, a.0.max(b.0) / ps);
        let (y0, y1) = ((-a.1).min(-b.1) / ps, (-a.1).max(-b.1) / ps);
        Rect::new(x0, y0, x1 - x0, y1 - y0)
    }

    /// Inverse of [`Self::world_to_pixel_rect`].
    pub fn pixel_to_world_rect(&self, rect: &Rect<T>) -> Rect<T> {
        let ps = self.pixel_size;
        let p = |u: T, v: T| self.origin + self.right * (u * ps) - self.up * (v * ps);
        let a = p(rect.x, rect.y);
        let b = p(rect.right(), rect.top());
        let (x0, x1) = (a.x.min(b.x), a.x.max(b.x));
        let (y0, y1) = (a.y.min(b.y), a.y.max(b.y));
        Rect::new(x0, y0, x1 - x0, y1 - y0)
    }

    pub fn cast<U: Real>(&self) -> OrthoFrame<U> {
        OrthoFrame {
            origin: self.origin.cast(),
            right: self.right.cast(),
            up: self.up.cast(),
            view: self.view.cast(),
            width: U::lit(self.width.as_f64()),
            height: U::lit(self.height.as_f64()),
            pixel_size: U::lit(self.pixel_size.as_f64()),
        }
    }
}

/// Front-facing frame over the mesh's XY bounds grown by `margin` on every
/// side, with the projection plane on the mesh's front-most `z`.
pub fn frame_from_mesh<T: Real>(mesh: &TriangleMesh<T>, pixel_size: T, margin: T) -> Result<OrthoFrame<T>, BakeError> {
    if mesh.is_empty() {
        return Err(BakeError::EmptyMesh);
    }
    if !(pixel_size > T::zero()) || !(margin >= T::zero()) {
        return Err(BakeError::InvalidFrame("pixel size must be positive and margin non-negative".into()));
    }
    let b = mesh.bounds();
    let ext = b.extent();
    let two = T::lit(2.0);
    let frame = OrthoFrame::front(
        b.min.x - margin,
        b.min.y - margin,
        b.max.z,
        ext.x + two * margin,
        ext.y + two * margin,
        pixel_size,
    );
    frame.validate()?;
    Ok(frame)
}
