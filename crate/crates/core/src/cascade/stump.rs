//! Decision stumps: `h(x) = 1` iff `polarity · x ≥ polarity · threshold`.

use super::CascadeError;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stump<T> {
    pub threshold: T,
    pub polarity: i8,
    pub error: T,
}

#[inline]
pub fn stump_predict<T: Real>(x: T, threshold: T, polarity: i8) -> bool {
    if polarity > 0 {
        x >= threshold
    } else {
        x <= threshold
    }
}

/// Candidate thresholds separating sorted distinct values `u`: one below
/// the minimum, one between each adjacent pair and one above the maximum.
/// Returns the threshold for each polarity, since a midpoint that rounds onto
/// a sample value must be nudged differently for each direction.
#[inline]
fn split<T: Real>(u: &[T], k: usize) -> (T, T) {
    if k == 0 {
        let t = u[0] - T::one().max(u[0].abs());
        return (t, t);
    }
    if k == u.len() {
        let t = u[k - 1] + T::one().max(u[k - 1].abs());
        return (t, t);
    }
    let (a, b) = (u[k - 1], u[k]);
    let mid = a + (b - a) * T::lit(0.5);
    // Positive polarity must exclude `a`; negative must exclude `b`.
    let plus = if mid <= a { b } else { mid };
    let minus = if mid >= b { a } else { mid };
    (plus, minus)
}

/// Fits a stump with one pass over samples sorted by value.
///
/// `order` must sort `values` ascending. Among equal weighted errors the
/// smaller threshold wins, then polarity +1.
pub fn train_stump_sorted<T: Real>(
    values: &[T],
    order: &[u32],
    labels: &[bool],
    weights: &[T],
) -> Result<Stump<T>, CascadeError> {
    let (mut wp, mut wn) = (T::zero(), T::zero());
    for (l, w) in labels.iter().zip(weights) {
        if *l {
            wp += *w;
        } else {
            wn += *w;
        }
    }
    if !labels.iter().any(|&l| l) || labels.iter().all(|&l| l) {
        return Err(CascadeError::SingleClass);
    }

    // Weight below split k accumulates over groups of equal values.
    let mut below_p = T::zero();
    let mut below_n = T::zero();
    let mut best: Option<Stump<T>> = None;

    let n = order.len();
    let mut i = 0;
    let mut distinct: Vec<T> = Vec::new();
    let mut below: Vec<(T, T)> = Vec::new();
    while i < n {
        let v = values[order[i] as usize];
        below.push((below_p, below_n));
        distinct.push(v);
        while i < n && values[order[i] as usize] == v {
            let s = order[i] as usize;
            if labels[s] {
                below_p += weights[s];
            } else {
                below_n += weights[s];
            }
            i += 1;
        }
    }
    below.push((below_p, below_n));

    for (k, &(bp, bn)) in below.iter().enumerate() {
        let (t_plus, t_minus) = split(&distinct, k);
        // +1: positive above the split. −1: positive below.
        consider(&mut best, bp + (wn - bn), t_plus, 1);
        consider(&mut best, (wp - bp) + bn, t_minus, -1);
    }
    Ok(best.expect("at least one candidate"))
}

#[inline]
fn consider<T: Real>(best: &mut Option<Stump<T>>, err: T, thr: T, pol: i8) {
    let better = match best {
        None => true,
        Some(b) => err < b.error || (err == b.error && (thr < b.threshold || (thr == b.threshold && pol > b.polarity))),
    };
    if better {
        *best = Some(Stump { threshold: thr, polarity: pol, error: err });
    }
}

/// Convenience wrapper that sorts first.
pub fn train_stump<T: Real>(values: &[T], labels: &[bool], weights: &[T]) -> Result<Stump<T>, CascadeError> {
    if values.len() != labels.len() || values.len() != weights.len() {
        return Err(CascadeError::InvalidParams("values, labels and weights differ in length".into()));
    }
    let order = sort_order(values);
    train_stump_sorted(values, &order, labels, weights)
}

/// Indices sorting `values` ascending, ties by index.
pub fn sort_order<T: Real>(values: &[T]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..values.len() as u32).collect();
    order.sort_by(|&a, &b| {
        values[a as usize]
            .partial_cmp(&values[b as usize])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Candidate thresholds used by the scan, for cross-checking.
pub fn candidate_thresholds<T: Real>(values: &[T]) -> Vec<(T, i8)> {
    let mut u: Vec<T> = values.to_vec();
    u.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    u.dedup();
    (0..=u.len())
        .flat_map(|k| {
            let (p, m) = split(&u, k);
            [(p, 1i8), (m, -1i8)]
        })
        .collect()
}
