//! Multi-scale sliding-window detection and rectangle grouping.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integral::{IntegralImage, PixelRect, FLAT_VARIANCE};
use super::{CascadeError, CascadeModel};
use crate::geom::Rect;
use crate::raster::GrayRaster;
use crate::scalar::Real;

pub const DEFAULT_LABEL: &str = "brick";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound = "T: Real")]
pub struct DetectParams<T> {
    /// Ratio between successive window sizes; must exceed 1.
    pub scale_factor: T,
    /// Minimum cluster size; 0 returns raw candidates.
    pub min_neighbors: usize,
    /// Smallest window `(w, h)`; defaults to the model window.
    pub min_size: Option<(u32, u32)>,
    /// Largest window `(w, h)`; defaults to the image size.
    pub max_size: Option<(u32, u32)>,
    /// Stride at base scale, px.
    pub step: T,
    /// Grouping tolerance relative to mean size.
    pub eps: T,
    /// Also scan the image turned a quarter turn, for soldiers.
    pub rotate_pass: bool,
}

impl<T: Real> Default for DetectParams<T> {
    fn default() -> Self {
        Self {
            scale_factor: T::lit(1.1),
            min_neighbors: 3,
            min_size: None,
            max_size: None,
            step: T::one(),
            eps: T::lit(0.2),
            rotate_pass: false,
        }
    }
}

impl<T: Real> DetectParams<T> {
    /// The coarse two-argument call used in early experiments: scale factor
    /// 10, 25 neighbors.
    pub fn coarse_preset() -> Self {
        Self { scale_factor: T::lit(10.0), min_neighbors: 25, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), CascadeError> {
        if !(self.scale_factor > T::one()) || !self.scale_factor.is_finite() {
            return Err(CascadeError::InvalidParams("scale_factor must exceed 1".into()));
        }
        if !(self.step > T::zero()) || !(self.eps > T::zero()) {
            return Err(CascadeError::InvalidParams("step and eps must be positive".into()));
        }
        if let (Some(lo), Some(hi)) = (self.min_size, self.max_size) {
            if lo.0 > hi.0 || lo.1 > hi.1 {
                return Err(CascadeError::InvalidParams("min_size exceeds max_size".into()));
            }
        }
        Ok(())
    }
}

/// A raw accepted window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate<T> {
    pub rect: Rect<T>,
    pub score: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct Detection<T> {
    #[serde(rename = "rect_px")]
    pub rect: Rect<T>,
    pub score: T,
    pub neighbors: u32,
    pub label: String,
}

/// Window sizes `round(base · factor^k)` inside the allowed range.
fn window_sizes<T: Real>(model: &CascadeModel<T>, img_w: u32, img_h: u32, p: &DetectParams<T>) -> Vec<(u32, u32, T)> {
    let (min_w, min_h) = p.min_size.unwrap_or((model.window_w, model.window_h));
    let (max_w, max_h) = p.max_size.unwrap_or((img_w, img_h));
    let mut out = Vec::new();
    let mut scale = T::one();
    loop {
        let ww = (T::nat(model.window_w as usize) * scale).round().to_u32().unwrap_or(u32::MAX);
        let wh = (T::nat(model.window_h as usize) * scale).round().to_u32().unwrap_or(u32::MAX);
        if ww > img_w.min(max_w) || wh > img_h.min(max_h) {
            break;
        }
        if ww >= min_w && wh >= min_h && out.last().is_none_or(|l: &(u32, u32, T)| (l.0, l.1) != (ww, wh)) {
            out.push((ww, wh, scale));
        }
        scale *= p.scale_factor;
    }
    out
}

fn scan<T: Real>(img: &GrayRaster<T>, model: &CascadeModel<T>, p: &DetectParams<T>) -> Vec<Candidate<T>> {
    let ii = IntegralImage::new(img);
    let (img_w, img_h) = (img.width as u32, img.height as u32);
    let mut rows: Vec<(usize, u32)> = Vec::new();
    let sizes = window_sizes(model, img_w, img_h, p);
    let prepared: Vec<_> = sizes.iter().map(|&(w, h, _)| model.prepare(w, h)).collect();
    let strides: Vec<u32> = sizes
        .iter()
        .map(|&(_, _, s)| (p.step * s).round().to_u32().unwrap_or(1).max(1))
        .collect();
    for (k, &(_, wh, _)) in sizes.iter().enumerate() {
        let mut y = 0;
        while y + wh <= img_h {
            rows.push((k, y));
            y += strides[k];
        }
    }
    rows.par_iter()
        .flat_map_iter(|&(k, y)| {
            let (ww, wh, _) = sizes[k];
            let prep = &prepared[k];
            let stride = strides[k];
            let ii = &ii;
            (0..)
                .map(move |i| i * stride)
                .take_while(move |x| x + ww <= img_w)
                .filter_map(move |x| {
                    let win = PixelRect::new(x, y, ww, wh);
                    if is_flat(ii, &win) {
                        return None;
                    }
                    let std = ii.window_std_unchecked::<T>(&win);
                    let (pass, margin) = prep.classify_at(ii, x, y, std);
                    pass.then(|| Candidate { rect: win.to_rect(), score: margin })
                })
        })
        .collect()
}

/// Flat windows carry no structure and are never reported.
fn is_flat(ii: &IntegralImage, r: &PixelRect) -> bool {
    ii.window_variance(r) <= FLAT_VARIANCE
}

/// Every window accepted by the cascade, in scan order (scale, row, column),
/// followed by the quarter-turn pass mapped back when enabled.
pub fn detect_candidates<T: Real>(img: &GrayRaster<T>, model: &CascadeModel<T>, p: &DetectParams<T>) -> Result<Vec<Candidate<T>>, CascadeError> {
    p.validate()?;
    let mut out = scan(img, model, p);
    if p.rotate_pass {
        let rotated = img.rotate90_cw();
        let h = T::nat(img.height);
        // Rotated pixel (x, y) came from (y, h − 1 − x).
        out.extend(scan(&rotated, model, p).into_iter().map(|c| Candidate {
            rect: Rect::new(c.rect.y, h - c.rect.x - c.rect.w, c.rect.h, c.rect.w),
            score: c.score,
        }));
    }
    Ok(out)
}

pub fn detect_multiscale<T: Real>(img: &GrayRaster<T>, model: &CascadeModel<T>, p: &DetectParams<T>) -> Result<Vec<Detection<T>>, CascadeError> {
    let candidates = detect_candidates(img, model, p)?;
    Ok(group_rectangles(&candidates, p.min_neighbors, p.eps))
}

/// Similarity used for grouping: offsets and size differences within `eps`
/// of the pair's mean width (x, w) or mean height (y, h).
#[inline]
pub fn rects_similar<T: Real>(a: &Rect<T>, b: &Rect<T>, eps: T) -> bool {
    let half = T::lit(0.5);
    let mw = (a.w + b.w) * half;
    let mh = (a.h + b.h) * half;
    (a.x - b.x).abs() <= eps * mw
        && (a.y - b.y).abs() <= eps * mh
        && (a.w - b.w).abs() <= eps * mw
        && (a.h - b.h).abs() <= eps * mh
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Clusters candidates by the transitive closure of [`rects_similar`].
///
/// Clusters smaller than `min_neighbors` are dropped; each survivor becomes
/// one detection with the component-wise mean rectangle, the cluster size
/// as `neighbors` and the best member score. Output follows the smallest
/// member index of each cluster. `min_neighbors = 0` returns every
/// candidate as its own detection.
pub fn group_rectangles<T: Real>(cands: &[Candidate<T>], min_neighbors: usize, eps: T) -> Vec<Detection<T>> {
    if min_neighbors == 0 {
        return cands
            .iter()
            .map(|c| Detection { rect: c.rect, score: c.score, neighbors: 1, label: DEFAULT_LABEL.into() })
            .collect();
    }
    let n = cands.len();
    let mut parent: Vec<usize> = (0..n).collect();
    // Sweep in x order; a similar pair is at most eps × the largest width
    // apart in x.
    let mut by_x: Vec<usize> = (0..n).collect();
    by_x.sort_by(|&a, &b| cands[a].rect.x.partial_cmp(&cands[b].rect.x).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let max_w = cands.iter().fold(T::zero(), |m, c| m.max(c.rect.w));
    let reach = eps * max_w;
    for (pos, &i) in by_x.iter().enumerate() {
        for &j in &by_x[pos + 1..] {
            if cands[j].rect.x - cands[i].rect.x > reach {
                break;
            }
            if rects_similar(&cands[i].rect, &cands[j].rect, eps) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }

    // Root is the smallest index in its set, so roots come out in order.
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = find(&mut parent, i);
        members[r].push(i);
    }
    members
        .into_iter()
        .filter(|m| !m.is_empty() && m.len() >= min_neighbors)
        .map(|m| {
            let k = T::nat(m.len());
            let sum = m.iter().fold([T::zero(); 4], |acc, &i| {
                let r = &cands[i].rect;
                [acc[0] + r.x, acc[1] + r.y, acc[2] + r.w, acc[3] + r.h]
            });
            let score = m.iter().map(|&i| cands[i].score).fold(T::neg_infinity(), T::max);
            Detection {
                rect: Rect::new(sum[0] / k, sum[1] / k, sum[2] / k, sum[3] / k),
                score,
                neighbors: m.len() as u32,
                label: DEFAULT_LABEL.into(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(x: f64, y: f64, w: f64, h: f64) -> Candidate<f64> {
        Candidate { rect: Rect::new(x, y, w, h), score: 0.0 }
    }

    #[test]
    fn identical_rects_group() {
        let c = vec![cand(10.0, 10.0, 48.0, 12.0); 10];
        let g = group_rectangles(&c, 5, 0.2);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].neighbors, 10);
        assert_eq!(g[0].rect, Rect::new(10.0, 10.0, 48.0, 12.0));
        assert!(group_rectangles(&c, 11, 0.2).is_empty());
        assert_eq!(group_rectangles(&c, 0, 0.2).len(), 10);
    }

    #[test]
    fn chains_are_transitive() {
        // a~b and b~c but not a~c.
        let c = vec![cand(0.0, 0.0, 10.0, 10.0), cand(1.5, 0.0, 10.0, 10.0), cand(3.0, 0.0, 10.0, 10.0)];
        assert!(!rects_similar(&c[0].rect, &c[2].rect, 0.2));
        let g = group_rectangles(&c, 1, 0.2);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].rect.x, 1.5);
    }
}
