//! Haar-like features.
//!
//! A feature is a rectangle split into equal partitions. Partition weights
//! sum to zero, so adding a constant to the image leaves the value
//! unchanged; dividing by the window's standard deviation and the feature
//! area makes values comparable across scales.

use serde::{Deserialize, Serialize};

use super::integral::{IntegralImage, PixelRect};
use super::CascadeError;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HaarKind {
    /// Left half negative, right half positive.
    #[serde(rename = "TWO_RECT_H")]
    TwoH,
    /// Top half negative, bottom half positive.
    #[serde(rename = "TWO_RECT_V")]
    TwoV,
    /// Outer thirds −1, middle third +2.
    #[serde(rename = "THREE_RECT_H")]
    ThreeH,
    #[serde(rename = "THREE_RECT_V")]
    ThreeV,
    /// Main diagonal quadrants positive, anti-diagonal negative.
    #[serde(rename = "FOUR_RECT")]
    Four,
}

impl HaarKind {
    pub const ALL: [HaarKind; 5] = [HaarKind::TwoH, HaarKind::TwoV, HaarKind::ThreeH, HaarKind::ThreeV, HaarKind::Four];

    /// Partition counts `(columns, rows)`.
    pub fn partitions(self) -> (u32, u32) {
        match self {
            HaarKind::TwoH => (2, 1),
            HaarKind::TwoV => (1, 2),
            HaarKind::ThreeH => (3, 1),
            HaarKind::ThreeV => (1, 3),
            HaarKind::Four => (2, 2),
        }
    }

    /// Weight of partition `(i, j)` (column, row).
    fn weight(self, i: u32, j: u32) -> i64 {
        match self {
            HaarKind::TwoH => [-1, 1][i as usize],
            HaarKind::TwoV => [-1, 1][j as usize],
            HaarKind::ThreeH => [-1, 2, -1][i as usize],
            HaarKind::ThreeV => [-1, 2, -1][j as usize],
            HaarKind::Four => {
                if i == j {
                    1
                } else {
                    -1
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HaarFeature {
    pub kind: HaarKind,
    /// Placement in base-window coordinates.
    pub rect: PixelRect,
}

/// A feature resolved against a window scale: weighted partition rectangles
/// relative to the window origin.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledFeature {
    parts: Vec<(PixelRect, i64)>,
    area: u64,
}

impl HaarFeature {
    pub fn is_valid(&self, window_w: u32, window_h: u32) -> bool {
        let (px, py) = self.kind.partitions();
        let r = &self.rect;
        r.w >= 2 && r.h >= 2 && r.w.is_multiple_of(px) && r.h.is_multiple_of(py) && r.right() <= window_w && r.bottom() <= window_h
    }

    /// Resolves the feature for a window of size `ww × wh` over a base
    /// window `base_w × base_h`. Positions scale by floor, partition sizes by
    /// floor with a minimum of one pixel, so the result stays inside the
    /// window.
    pub fn scaled(&self, base_w: u32, base_h: u32, ww: u32, wh: u32) -> ScaledFeature {
        let (px, py) = self.kind.partitions();
        let sx = ww as f64 / base_w as f64;
        let sy = wh as f64 / base_h as f64;
        let x0 = (self.rect.x as f64 * sx).floor() as u32;
        let y0 = (self.rect.y as f64 * sy).floor() as u32;
        let uw = ((self.rect.w / px) as f64 * sx).floor().max(1.0) as u32;
        let uh = ((self.rect.h / py) as f64 * sy).floor().max(1.0) as u32;
        let mut parts = Vec::with_capacity((px * py) as usize);
        for j in 0..py {
            for i in 0..px {
                parts.push((PixelRect::new(x0 + i * uw, y0 + j * uh, uw, uh), self.kind.weight(i, j)));
            }
        }
        ScaledFeature { parts, area: (uw * px) as u64 * (uh * py) as u64 }
    }
}

impl ScaledFeature {
    /// Weighted partition sum in quantized units; exact.
    #[inline]
    pub fn raw(&self, ii: &IntegralImage, wx: u32, wy: u32) -> i64 {
        self.parts
            .iter()
            .map(|(r, wgt)| {
                let moved = PixelRect::new(r.x + wx, r.y + wy, r.w, r.h);
                ii.rect_sum_unchecked(&moved) as i64 * wgt
            })
            .sum()
    }

    /// Normalized value for a window at `(wx, wy)` whose standard deviation
    /// is `std`.
    #[inline]
    pub fn value<T: Real>(&self, ii: &IntegralImage, wx: u32, wy: u32, std: T) -> T {
        let raw = self.raw(ii, wx, wy) as f64 / super::integral::QUANT;
        T::lit(raw / self.area as f64) / std
    }

    pub fn fits(&self, ww: u32, wh: u32) -> bool {
        self.parts.iter().all(|(r, _)| r.right() <= ww && r.bottom() <= wh)
    }
}

/// Value of `feature` in `window` of `ii`, where the feature is defined on
/// a `base_w × base_h` window.
pub fn eval_feature<T: Real>(
    ii: &IntegralImage,
    feature: &HaarFeature,
    base_w: u32,
    base_h: u32,
    window: &PixelRect,
) -> Result<T, CascadeError> {
    ii.check(window)?;
    let sf = feature.scaled(base_w, base_h, window.w, window.h);
    if !sf.fits(window.w, window.h) {
        return Err(CascadeError::RectBounds { rect: *window, width: ii.width(), height: ii.height() });
    }
    let std = ii.window_std_unchecked::<T>(window);
    Ok(sf.value(ii, window.x, window.y, std))
}

/// Every valid feature of every kind in a `w × h` window, in a fixed order.
pub fn enumerate_features(w: u32, h: u32) -> Vec<HaarFeature> {
    let mut out = Vec::new();
    for kind in HaarKind::ALL {
        let (px, py) = kind.partitions();
        for fh in (py.max(2)..=h).filter(|v| v % py == 0) {
            for fw in (px.max(2)..=w).filter(|v| v % px == 0) {
                for y in 0..=(h - fh) {
                    for x in 0..=(w - fw) {
                        out.push(HaarFeature { kind, rect: PixelRect::new(x, y, fw, fh) });
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::GrayRaster;

    #[test]
    fn enumeration_is_valid_and_complete_for_small_window() {
        let all = enumerate_features(6, 4);
        assert!(all.iter().all(|f| f.is_valid(6, 4)));
        // Two-rect horizontal: widths 2,4,6 × heights 2,3,4.
        let two_h = all.iter().filter(|f| f.kind == HaarKind::TwoH).count();
        let expected: u32 = [2u32, 4, 6].iter().map(|w| 7 - w).sum::<u32>() * [2u32, 3, 4].iter().map(|h| 5 - h).sum::<u32>();
        assert_eq!(two_h as u32, expected);
    }

    #[test]
    fn constant_image_gives_zero() {
        let ii = IntegralImage::new(&GrayRaster::<f64>::filled(12, 12, 0.7));
        for f in enumerate_features(12, 12).iter().step_by(37) {
            assert_eq!(eval_feature::<f64>(&ii, f, 12, 12, &PixelRect::new(0, 0, 12, 12)).unwrap(), 0.0);
        }
    }
}
