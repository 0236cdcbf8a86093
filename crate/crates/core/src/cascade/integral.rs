//! Summed-area tables over 16-bit quantized pixels.
//!
//! Pixels are rounded onto the `k / 65535` grid (the resolution of a 16-bit
//! height PNG) and accumulated as integers, so every rectangle sum and every
//! window variance is exact regardless of image size or summation order.

use serde::{Deserialize, Serialize};

use super::CascadeError;
use crate::raster::{quantize, GrayRaster};
use crate::scalar::Real;

/// Quantization scale: pixel value `v` is stored as `round(v · QUANT)`.
pub const QUANT: f64 = 65535.0;

/// Integer pixel rectangle, `(x, y)` the top-left corner.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Deserialize)]
#[serde(from = "[u32; 4]")]
pub struct PixelRect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl From<[u32; 4]> for PixelRect {
    fn from([x, y, w, h]: [u32; 4]) -> Self {
        Self { x, y, w, h }
    }
}

impl Serialize for PixelRect {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y, self.w, self.h].serialize(s)
    }
}

impl PixelRect {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn to_rect<T: Real>(&self) -> crate::geom::Rect<T> {
        crate::geom::Rect::new(T::nat(self.x as usize), T::nat(self.y as usize), T::nat(self.w as usize), T::nat(self.h as usize))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    /// `(width + 1) × (height + 1)` table of quantized sums.
    sum: Vec<u64>,
    /// Same layout, sums of squared quantized values.
    sq: Vec<u64>,
}

impl IntegralImage {
    pub fn new<T: Real>(img: &GrayRaster<T>) -> Self {
        let (w, h) = (img.width, img.height);
        // Squared sums stay below 2^64 for any image under 2^32 pixels.
        assert!((w as u64) * (h as u64) < (1u64 << 32), "image too large for exact integral sums");
        let stride = w + 1;
        let mut sum = vec![0u64; stride * (h + 1)];
        let mut sq = vec![0u64; stride * (h + 1)];
        for y in 0..h {
            let mut row_sum = 0u64;
            let mut row_sq = 0u64;
            for x in 0..w {
                let q = quantize(img.get(x, y), QUANT) as u64;
                row_sum += q;
                row_sq += q * q;
                let i = (y + 1) * stride + x + 1;
                sum[i] = sum[i - stride] + row_sum;
                sq[i] = sq[i - stride] + row_sq;
            }
        }
        Self { width: w, height: h, sum, sq }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Table entry `(i, j)`: sum over columns `< i` and rows `< j`.
    pub fn entry(&self, i: usize, j: usize) -> u64 {
        self.sum[j * (self.width + 1) + i]
    }

    pub fn check(&self, r: &PixelRect) -> Result<(), CascadeError> {
        if r.w == 0 || r.h == 0 || r.right() as usize > self.width || r.bottom() as usize > self.height {
            return Err(CascadeError::RectBounds { rect: *r, width: self.width, height: self.height });
        }
        Ok(())
    }

    #[inline]
    fn lookup(table: &[u64], stride: usize, r: &PixelRect) -> u64 {
        let (x0, y0) = (r.x as usize, r.y as usize);
        let (x1, y1) = (x0 + r.w as usize, y0 + r.h as usize);
        table[y1 * stride + x1] + table[y0 * stride + x0] - table[y0 * stride + x1] - table[y1 * stride + x0]
    }

    /// Exact sum of quantized pixels in `r`.
    pub fn rect_sum(&self, r: &PixelRect) -> Result<u64, CascadeError> {
        self.check(r)?;
        Ok(self.rect_sum_unchecked(r))
    }

    #[inline]
    pub(crate) fn rect_sum_unchecked(&self, r: &PixelRect) -> u64 {
        Self::lookup(&self.sum, self.width + 1, r)
    }

    /// Exact sum of squared quantized pixels in `r`.
    pub fn rect_sq_sum(&self, r: &PixelRect) -> Result<u64, CascadeError> {
        self.check(r)?;
        Ok(Self::lookup(&self.sq, self.width + 1, r))
    }

    /// Sum of pixel values in `r`.
    pub fn rect_sum_value<T: Real>(&self, r: &PixelRect) -> Result<T, CascadeError> {
        Ok(T::lit(self.rect_sum(r)? as f64 / QUANT))
    }

    /// Standard deviation of pixel values over `r`, computed exactly from
    /// the integer tables; flat windows (variance ≤ 1e-12) return 1.
    pub fn window_std<T: Real>(&self, r: &PixelRect) -> Result<T, CascadeError> {
        self.check(r)?;
        Ok(self.window_std_unchecked(r))
    }

    /// Variance of pixel values over `r` (no bounds check).
    pub(crate) fn window_variance(&self, r: &PixelRect) -> f64 {
        let n = r.area() as u128;
        let s = self.rect_sum_unchecked(r) as u128;
        let sq = Self::lookup(&self.sq, self.width + 1, r) as u128;
        // n·Σq² − (Σq)² ≥ 0 by Cauchy-Schwarz, so this never underflows.
        let num = n * sq - s * s;
        num as f64 / ((n * n) as f64 * QUANT * QUANT)
    }

    pub(crate) fn window_std_unchecked<T: Real>(&self, r: &PixelRect) -> T {
        let var = self.window_variance(r);
        if var <= FLAT_VARIANCE {
            T::one()
        } else {
            T::lit(var.sqrt())
        }
    }
}

/// Variance at or below which a window counts as flat.
pub const FLAT_VARIANCE: f64 = 1e-12;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ones_and_single_pixel() {
        let ii = IntegralImage::new(&GrayRaster::<f64>::filled(4, 4, 1.0));
        assert_eq!(ii.rect_sum_value::<f64>(&PixelRect::new(0, 0, 4, 4)).unwrap(), 16.0);
        assert_eq!(ii.entry(0, 3), 0);
        assert_eq!(ii.entry(2, 0), 0);
        let mut img = GrayRaster::<f64>::filled(5, 5, 0.0);
        img.set(2, 3, 0.25);
        let ii = IntegralImage::new(&img);
        let q = quantize(0.25, QUANT) as u64;
        assert_eq!(ii.rect_sum(&PixelRect::new(1, 2, 3, 3)).unwrap(), q);
        assert_eq!(ii.rect_sum(&PixelRect::new(0, 0, 2, 5)).unwrap(), 0);
        assert!(matches!(ii.rect_sum(&PixelRect::new(0, 0, 0, 5)), Err(CascadeError::RectBounds { .. })));
        assert!(matches!(ii.rect_sum(&PixelRect::new(3, 0, 3, 5)), Err(CascadeError::RectBounds { .. })));
    }

    #[test]
    fn flat_window_std_is_one() {
        let ii = IntegralImage::new(&GrayRaster::<f64>::filled(6, 6, 0.4));
        assert_eq!(ii.window_std::<f64>(&PixelRect::new(0, 0, 6, 6)).unwrap(), 1.0);
    }
}
