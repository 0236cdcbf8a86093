use serde::{Deserialize, Serialize};

use super::font::{self, GLYPH_H};
use crate::cascade::Detection;
use crate::raster::{GrayRaster, RgbRaster};
use crate::scalar::Real;

/// Gap between a label's baseline and the box top, px.
const LABEL_GAP: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OverlayStyle {
    /// 8-bit RGB.
    pub box_color: [u8; 3],
    pub label_color: [u8; 3],
    /// Outline thickness, px, drawn inward from the rectangle edge.
    pub thickness: usize,
    pub labels: bool,
}

impl Default for OverlayStyle {
    fn default() -> Self {
        Self { box_color: [0, 0, 255], label_color: [255, 165, 0], thickness: 2, labels: true }
    }
}

fn color<T: Real>(c: [u8; 3]) -> [T; 3] {
    c.map(|v| T::lit(v as f64 / 255.0))
}

/// Promotes `img` to RGB and draws each detection's outline and label.
/// Rectangles are rounded to whole pixels and clipped to the image.
pub fn render_overlay<T: Real>(img: &GrayRaster<T>, detections: &[Detection<T>], style: &OverlayStyle) -> RgbRaster<T> {
    let mut out = RgbRaster::from_gray(img);
    let (w, h) = (img.width as i64, img.height as i64);
    let (box_c, label_c) = (color::<T>(style.box_color), color::<T>(style.label_color));
    let put = |out: &mut RgbRaster<T>, x: i64, y: i64, c: [T; 3]| {
        if (0..w).contains(&x) && (0..h).contains(&y) {
            out.set(x as usize, y as usize, c);
        }
    };
    let t = style.thickness as i64;
    for d in detections {
        let px = |v: T| v.round().to_i64().unwrap_or(0);
        let (x0, y0) = (px(d.rect.x), px(d.rect.y));
        let (x1, y1) = (px(d.rect.x + d.rect.w) - 1, px(d.rect.y + d.rect.h) - 1);
        if x1 < x0 || y1 < y0 {
            continue;
        }
        for y in y0.max(0)..=y1.min(h - 1) {
            for x in x0.max(0)..=x1.min(w - 1) {
                let edge = x - x0 < t || x1 - x < t || y - y0 < t || y1 - y < t;
                if edge {
                    put(&mut out, x, y, box_c);
                }
            }
        }
        if style.labels && !d.label.is_empty() {
            // Above the box when it fits, else below it, else not at all.
            let above = y0 - (GLYPH_H + LABEL_GAP) as i64;
            let below = y1 + 1 + LABEL_GAP as i64;
            let ly = if above >= 0 {
                Some(above)
            } else {
                (below + GLYPH_H as i64 <= h).then_some(below)
            };
            if let Some(ly) = ly {
                for (dx, dy) in font::ink(&d.label) {
                    put(&mut out, x0 + dx as i64, ly + dy as i64, label_c);
                }
            }
        }
    }
    out
}
