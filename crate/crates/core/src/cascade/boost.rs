//! Discrete AdaBoost stages and attentional cascade training.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::feature::{enumerate_features, HaarFeature, ScaledFeature};
use super::integral::{IntegralImage, PixelRect};
use super::stump::{sort_order, stump_predict, train_stump_sorted, Stump};
use super::{CascadeError, CascadeModel, CascadeStage, TrainError, WeakClassifier};
use crate::scalar::Real;
use crate::seed;

const TAG_STAGE: u64 = seed::tag("cascade-stage");
const TAG_POOL: u64 = seed::tag("feature-pool");
const TAG_STAGE_NEGATIVES: u64 = seed::tag("stage-negatives");

/// Smallest weighted error used for the classifier weight, so a perfect
/// stump still gets a finite `alpha`.
pub const MIN_WEAK_ERROR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct StageParams<T> {
    /// Stop adding weak classifiers once the stage false-positive rate is at
    /// most this.
    pub f_max: T,
    /// Minimum detection rate kept by lowering the stage threshold.
    pub d_min: T,
    pub max_weak: usize,
    pub feature_pool_size: usize,
    pub seed: u64,
}

/// Per-round training log for one stage.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct StageReport<T> {
    pub positives: usize,
    pub negatives: usize,
    /// Achieved detection rate on the stage's positives.
    pub detection_rate: T,
    /// Achieved false-positive rate on the stage's negatives.
    pub false_positive_rate: T,
    /// Weighted error of each selected stump.
    pub weak_errors: Vec<T>,
    /// `Σ D₁ · exp(−y · F)` after each round, with `F = Σ (α/2)(2h − 1)`:
    /// the AdaBoost bound on training error.
    pub exp_loss: Vec<T>,
    /// 0/1 training error of the boosted classifier at threshold `½Σα` after
    /// each round.
    pub train_error: Vec<T>,
}

/// Window-sized training examples with their window statistics.
pub struct WindowSet<T> {
    pub images: Vec<IntegralImage>,
    pub stds: Vec<T>,
}

impl<T: Real> WindowSet<T> {
    pub fn new(images: Vec<IntegralImage>) -> Self {
        let stds = images
            .iter()
            .map(|ii| ii.window_std_unchecked(&PixelRect::new(0, 0, ii.width() as u32, ii.height() as u32)))
            .collect();
        Self { images, stds }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    fn subset(&self, keep: &[usize]) -> Self {
        Self { images: keep.iter().map(|&i| self.images[i].clone()).collect(), stds: keep.iter().map(|&i| self.stds[i]).collect() }
    }
}

/// Scores every window of `set` with one stage at base scale.
fn stage_scores<T: Real>(stage: &CascadeStage<T>, set: &WindowSet<T>, w: u32, h: u32) -> Vec<T> {
    let scaled: Vec<ScaledFeature> = stage.weak.iter().map(|wc| wc.feature.scaled(w, h, w, h)).collect();
    set.images
        .par_iter()
        .zip(set.stds.par_iter())
        .map(|(ii, &std)| stage.score_prepared(&scaled, ii, 0, 0, std))
        .collect()
}

fn rate<T: Real>(hits: usize, total: usize) -> T {
    if total == 0 {
        T::zero()
    } else {
        T::nat(hits) / T::nat(total)
    }
}

/// Trains one boosted stage on base-window examples.
pub fn train_stage<T: Real>(
    pos: &WindowSet<T>,
    neg: &WindowSet<T>,
    window_w: u32,
    window_h: u32,
    params: &StageParams<T>,
) -> Result<(CascadeStage<T>, StageReport<T>), CascadeError> {
    if pos.is_empty() || neg.is_empty() {
        return Err(CascadeError::SingleClass);
    }
    if !(params.d_min > T::zero() && params.d_min <= T::one()) || !(params.f_max > T::zero() && params.f_max <= T::one()) {
        return Err(CascadeError::InvalidParams("d_min and f_max must lie in (0, 1]".into()));
    }
    if params.max_weak == 0 || params.feature_pool_size == 0 {
        return Err(CascadeError::InvalidParams("max_weak and feature_pool_size must be positive".into()));
    }

    let all = enumerate_features(window_w, window_h);
    if all.is_empty() {
        return Err(CascadeError::InvalidParams(format!("no Haar features fit a {window_w}x{window_h} window")));
    }
    let mut rng = seed::rng(params.seed, TAG_POOL, 0);
    let mut picks = index::sample(&mut rng, all.len(), params.feature_pool_size.min(all.len())).into_vec();
    picks.sort_unstable();
    let pool: Vec<HaarFeature> = picks.into_iter().map(|i| all[i]).collect();

    let (m, l) = (pos.len(), neg.len());
    let n = m + l;
    let labels: Vec<bool> = (0..n).map(|i| i < m).collect();
    let sample = |i: usize| if i < m { (&pos.images[i], pos.stds[i]) } else { (&neg.images[i - m], neg.stds[i - m]) };

    // Feature values and their sort order are fixed for the stage.
    let columns: Vec<(Vec<T>, Vec<u32>)> = pool
        .par_iter()
        .map(|f| {
            let sf = f.scaled(window_w, window_h, window_w, window_h);
            let values: Vec<T> = (0..n)
                .map(|i| {
                    let (ii, std) = sample(i);
                    sf.value(ii, 0, 0, std)
                })
                .collect();
            let order = sort_order(&values);
            (values, order)
        })
        .collect();

    let init_p = T::one() / T::lit(2.0 * m as f64);
    let init_n = T::one() / T::lit(2.0 * l as f64);
    let d1: Vec<T> = (0..n).map(|i| if i < m { init_p } else { init_n }).collect();
    let mut weights = d1.clone();
    let mut scores = vec![T::zero(); n];
    let mut margin = vec![T::zero(); n];
    let half = T::lit(0.5);
    let allowed_misses = ((T::one() - params.d_min) * T::nat(m) + T::lit(1e-9)).floor().to_usize().unwrap_or(0).min(m - 1);

    let mut stage = CascadeStage { weak: Vec::new(), stage_threshold: T::zero() };
    let mut report = StageReport { positives: m, negatives: l, ..Default::default() };

    loop {
        let total: T = weights.iter().fold(T::zero(), |a, &b| a + b);
        for w in &mut weights {
            *w /= total;
        }
        let stumps: Vec<Stump<T>> = columns
            .par_iter()
            .map(|(values, order)| train_stump_sorted(values, order, &labels, &weights))
            .collect::<Result<_, _>>()?;
        let (best_idx, best) = stumps
            .iter()
            .enumerate()
            .fold(None::<(usize, Stump<T>)>, |acc, (i, s)| match acc {
                Some((_, b)) if !(s.error < b.error) => acc,
                _ => Some((i, *s)),
            })
            .expect("non-empty pool");

        let eps = best.error.max(T::lit(MIN_WEAK_ERROR));
        if eps >= half && !stage.weak.is_empty() {
            break;
        }
        let beta = eps / (T::one() - eps);
        let alpha = (T::one() / beta).ln().max(T::zero());
        let values = &columns[best_idx].0;
        for i in 0..n {
            let h = stump_predict(values[i], best.threshold, best.polarity);
            if h {
                scores[i] += alpha;
            }
            let signed = if h { alpha * half } else { -(alpha * half) };
            margin[i] += signed;
            if h == labels[i] {
                weights[i] *= beta;
            }
        }
        stage.weak.push(WeakClassifier { feature: pool[best_idx], threshold: best.threshold, polarity: best.polarity, alpha });
        report.weak_errors.push(best.error);

        let loss = (0..n).fold(T::zero(), |acc, i| {
            let y = if labels[i] { T::one() } else { -T::one() };
            acc + d1[i] * (-(y * margin[i])).exp()
        });
        report.exp_loss.push(loss);

        let sum_alpha = stage.weak.iter().fold(T::zero(), |a, w| a + w.alpha);
        let boosted = sum_alpha * half;
        let wrong = (0..n).filter(|&i| (scores[i] >= boosted) != labels[i]).count();
        report.train_error.push(rate(wrong, n));

        if scores.iter().any(|s| !s.is_finite()) {
            return Err(CascadeError::StageInfeasible("non-finite stage scores".into()));
        }
        let mut pos_scores: Vec<T> = scores[..m].to_vec();
        pos_scores.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        stage.stage_threshold = boosted.min(pos_scores[allowed_misses]);

        let d = rate(scores[..m].iter().filter(|&&s| s >= stage.stage_threshold).count(), m);
        let f = rate(scores[m..].iter().filter(|&&s| s >= stage.stage_threshold).count(), l);
        report.detection_rate = d;
        report.false_positive_rate = f;
        if d < params.d_min {
            return Err(CascadeError::StageInfeasible(format!("detection rate {d} below d_min {}", params.d_min)));
        }
        if f <= params.f_max || stage.weak.len() >= params.max_weak || eps >= half {
            break;
        }
    }
    Ok((stage, report))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound = "T: Real")]
pub struct CascadeParams<T> {
    pub window_w: u32,
    pub window_h: u32,
    pub f_max: T,
    pub d_min: T,
    /// Overall false-positive target.
    pub f_target: T,
    pub max_stages: usize,
    pub max_weak: usize,
    pub feature_pool_size: usize,
    /// Cap on the negatives each stage trains on, drawn at random from the
    /// surviving pool. `None` trains on every survivor.
    #[serde(default)]
    pub stage_negatives: Option<usize>,
    pub seed: u64,
}

impl<T: Real> Default for CascadeParams<T> {
    fn default() -> Self {
        Self {
            window_w: 48,
            window_h: 12,
            f_max: T::lit(0.5),
            d_min: T::lit(0.995),
            f_target: T::lit(0.01),
            max_stages: 10,
            max_weak: 200,
            feature_pool_size: 2000,
            stage_negatives: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TargetReached,
    NegativesExhausted,
    MaxStages,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct TrainingMeta<T> {
    pub params: CascadeParams<T>,
    pub positives: usize,
    pub negative_pool: usize,
    pub stages: Vec<StageReport<T>>,
    /// Fraction of the negative pool accepted by the whole cascade.
    pub cumulative_fpr: T,
    /// Fraction of all positives accepted by the whole cascade.
    pub cumulative_detection: T,
    pub stop_reason: Option<StopReason>,
    /// Free-form label of the training input, e.g. the map modality.
    pub input: String,
}

/// Indices of windows accepted by every stage so far.
fn survivors<T: Real>(model: &CascadeModel<T>, set: &WindowSet<T>) -> Vec<usize> {
    let mut alive: Vec<usize> = (0..set.len()).collect();
    for stage in &model.stages {
        let scores = stage_scores(stage, &set.subset(&alive), model.window_w, model.window_h);
        alive = alive.into_iter().zip(scores).filter(|(_, s)| *s >= stage.stage_threshold).map(|(i, _)| i).collect();
    }
    alive
}

/// Trains stages in sequence. Each stage sees the positives and the
/// negative-pool windows that every earlier stage accepted.
pub fn train_cascade<T: Real>(
    pos: &WindowSet<T>,
    neg_pool: &WindowSet<T>,
    params: &CascadeParams<T>,
    input: &str,
) -> Result<CascadeModel<T>, TrainError<T>> {
    if pos.is_empty() || neg_pool.is_empty() {
        return Err(CascadeError::InvalidParams("positive and negative pools must be non-empty".into()).into());
    }
    if params.window_w < 8 || params.window_h < 8 {
        return Err(CascadeError::InvalidParams("window must be at least 8x8".into()).into());
    }
    if params.stage_negatives == Some(0) {
        return Err(CascadeError::InvalidParams("stage_negatives must be positive".into()).into());
    }
    if params.max_stages == 0 {
        return Err(CascadeError::InvalidParams("max_stages must be positive".into()).into());
    }
    let (w, h) = (params.window_w, params.window_h);
    for ii in pos.images.iter().chain(&neg_pool.images) {
        if ii.width() != w as usize || ii.height() != h as usize {
            return Err(CascadeError::InvalidParams(format!(
                "training window {}x{} does not match the {w}x{h} base window",
                ii.width(),
                ii.height()
            ))
            .into());
        }
    }

    let mut model = CascadeModel::new(
        w,
        h,
        TrainingMeta {
            params: params.clone(),
            positives: pos.len(),
            negative_pool: neg_pool.len(),
            stages: Vec::new(),
            cumulative_fpr: T::one(),
            cumulative_detection: T::one(),
            stop_reason: None,
            input: input.to_string(),
        },
    );

    for k in 0..params.max_stages {
        let live_pos = pos.subset(&survivors(&model, pos));
        let mut alive = survivors(&model, neg_pool);
        if let Some(cap) = params.stage_negatives.filter(|&c| c < alive.len()) {
            let mut rng = seed::rng(params.seed, TAG_STAGE_NEGATIVES, k as u64);
            let mut keep = index::sample(&mut rng, alive.len(), cap).into_vec();
            keep.sort_unstable();
            alive = keep.into_iter().map(|i| alive[i]).collect();
        }
        let live_neg = neg_pool.subset(&alive);
        if live_neg.is_empty() {
            model.metadata.stop_reason = Some(StopReason::NegativesExhausted);
            break;
        }
        let stage_params = StageParams {
            f_max: params.f_max,
            d_min: params.d_min,
            max_weak: params.max_weak,
            feature_pool_size: params.feature_pool_size,
            seed: seed::derive(params.seed, TAG_STAGE, k as u64),
        };
        let (stage, report) = match train_stage(&live_pos, &live_neg, w, h, &stage_params) {
            Ok(r) => r,
            Err(CascadeError::StageInfeasible(reason)) => {
                return Err(TrainError::StageInfeasible { stage: k, reason, partial: Box::new(model) })
            }
            Err(e) => return Err(e.into()),
        };
        model.stages.push(stage);
        model.metadata.stages.push(report);
        model.metadata.cumulative_fpr = rate(survivors(&model, neg_pool).len(), neg_pool.len());
        model.metadata.cumulative_detection = rate(survivors(&model, pos).len(), pos.len());
        if model.metadata.cumulative_fpr <= params.f_target {
            model.metadata.stop_reason = Some(StopReason::TargetReached);
            break;
        }
        if k + 1 == params.max_stages {
            model.metadata.stop_reason = Some(StopReason::MaxStages);
        }
    }
    if model.stages.is_empty() {
        return Err(CascadeError::InvalidParams("no stage could be trained".into()).into());
    }
    Ok(model)
}
