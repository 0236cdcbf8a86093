//! Zero-normalized cross-correlation template matching.

use rayon::prelude::*;

use super::CascadeError;
use crate::raster::GrayRaster;
use crate::scalar::Real;

/// Correlation scores in `[-1, 1]`, one per valid template offset.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMap<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Real> ScoreMap<T> {
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    /// Maps `[-1, 1]` to `[0, 1]` for inspection as an 8-bit PNG.
    pub fn to_gray(&self) -> GrayRaster<T> {
        let half = T::lit(0.5);
        GrayRaster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&s| ((s + T::one()) * half).clamp_to(T::zero(), T::one())).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NccPeak<T> {
    pub x: usize,
    pub y: usize,
    pub score: T,
}

/// Correlates `template` at every offset where it fits inside `img`.
///
/// Windows with zero variance score 0. Peaks are offsets scoring at least
/// `threshold`, kept greedily from the highest score down and suppressing
/// any offset closer than half the template size in both axes to a kept
/// peak, so matches that only share a border are all kept.
pub fn match_template_ncc<T: Real>(
    img: &GrayRaster<T>,
    template: &GrayRaster<T>,
    threshold: T,
) -> Result<(ScoreMap<T>, Vec<NccPeak<T>>), CascadeError> {
    let (tw, th) = (template.width, template.height);
    if tw == 0 || th == 0 || tw > img.width || th > img.height {
        return Err(CascadeError::InvalidParams("template must be non-empty and fit inside the image".into()));
    }
    let n = (tw * th) as f64;
    let t_mean = template.data.iter().map(|v| v.as_f64()).sum::<f64>() / n;
    let t_dev: Vec<f64> = template.data.iter().map(|v| v.as_f64() - t_mean).collect();
    let t_norm = t_dev.iter().map(|d| d * d).sum::<f64>().sqrt();
    if t_norm <= 1e-12 {
        return Err(CascadeError::FlatTemplate);
    }

    let (ow, oh) = (img.width - tw + 1, img.height - th + 1);
    let data: Vec<T> = (0..oh)
        .into_par_iter()
        .flat_map_iter(|y| {
            let t_dev = &t_dev;
            (0..ow).map(move |x| {
                let mut sum = 0.0;
                let mut sq = 0.0;
                let mut cross = 0.0;
                for j in 0..th {
                    let row = &img.data[(y + j) * img.width + x..(y + j) * img.width + x + tw];
                    let trow = &t_dev[j * tw..(j + 1) * tw];
                    for (v, t) in row.iter().zip(trow) {
                        let v = v.as_f64();
                        sum += v;
                        sq += v * v;
                        cross += v * t;
                    }
                }
                // Σ(I − Ī)(T − T̄) = Σ I·(T − T̄) because the deviations sum to 0.
                let var = (sq - sum * sum / n).max(0.0);
                let score = if var <= 1e-12 { 0.0 } else { cross / (var.sqrt() * t_norm) };
                T::lit(score.clamp(-1.0, 1.0))
            })
        })
        .collect();
    let map = ScoreMap { width: ow, height: oh, data };

    let mut order: Vec<usize> = (0..map.data.len()).filter(|&i| map.data[i] >= threshold).collect();
    order.sort_by(|&a, &b| map.data[b].partial_cmp(&map.data[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let (rx, ry) = (tw.div_ceil(2), th.div_ceil(2));
    let mut peaks: Vec<NccPeak<T>> = Vec::new();
    for i in order {
        let (x, y) = (i % ow, i / ow);
        if peaks.iter().all(|p| p.x.abs_diff(x) >= rx || p.y.abs_diff(y) >= ry) {
            peaks.push(NccPeak { x, y, score: map.data[i] });
        }
    }
    Ok((map, peaks))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_and_negated_subimage() {
        let img = GrayRaster::<f64>::from_fn(30, 20, |x, y| crate::seed::unit_hash(3, x as u64, y as u64));
        let tpl = img.crop(9, 5, 8, 6);
        let (map, peaks) = match_template_ncc(&img, &tpl, 0.999).unwrap();
        assert!((map.get(9, 5) - 1.0).abs() < 1e-9);
        assert_eq!((peaks[0].x, peaks[0].y), (9, 5));
        let neg = GrayRaster::from_fn(8, 6, |x, y| 1.0 - tpl.get(x, y));
        let (map, _) = match_template_ncc(&img, &neg, 0.9).unwrap();
        assert!((map.get(9, 5) + 1.0).abs() < 1e-9);
        let flat = GrayRaster::filled(4, 4, 0.3);
        assert_eq!(match_template_ncc(&img, &flat, 0.5).unwrap_err(), CascadeError::FlatTemplate);
    }

    #[test]
    fn matches_sharing_a_border_are_all_kept() {
        // Bright 4x2 blocks on a 5x3 grid; the template is one block plus a
        // one-pixel dark ring, so neighbouring matches share that ring.
        let img = GrayRaster::<f64>::from_fn(26, 18, |x, y| if x % 5 >= 1 && y % 3 >= 1 { 1.0 } else { 0.0 });
        let tpl = img.crop(0, 0, 6, 4);
        let (_, peaks) = match_template_ncc(&img, &tpl, 0.999).unwrap();
        let mut at: Vec<(usize, usize)> = peaks.iter().map(|p| (p.x, p.y)).collect();
        at.sort_unstable();
        let want: Vec<(usize, usize)> = (0..5).flat_map(|i| (0..5).map(move |j| (5 * i, 3 * j))).collect();
        assert_eq!(at, want);
    }
}
