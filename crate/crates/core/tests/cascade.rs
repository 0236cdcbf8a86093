use brickscan_core::cascade::{
    candidate_thresholds, detect_candidates, detect_multiscale, enumerate_features, eval_feature, group_rectangles,
    rects_similar, stump_predict, train_cascade, train_stage, train_stump, Candidate, CascadeError, CascadeModel,
    CascadeParams, DetectParams, Detection, HaarFeature, HaarKind, IntegralImage, PixelRect, StageParams, StopReason,
    TrainError, WindowSet,
};
use brickscan_core::geom::Rect;
use brickscan_core::raster::GrayRaster;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const Q: f64 = 65535.0;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Image whose pixels are exact 16-bit levels, with the levels returned.
fn level_image(r: &mut ChaCha8Rng, w: usize, h: usize) -> (GrayRaster<f64>, Vec<u64>) {
    let levels: Vec<u64> = (0..w * h).map(|_| r.random_range(0..=65535u64)).collect();
    let img = GrayRaster::from_vec(w, h, levels.iter().map(|&k| k as f64 / Q).collect()).unwrap();
    (img, levels)
}

fn noise(r: &mut ChaCha8Rng, w: usize, h: usize, lo: f64, hi: f64) -> GrayRaster<f64> {
    GrayRaster::from_vec(w, h, (0..w * h).map(|_| r.random_range(lo..hi)).collect()).unwrap()
}

/// Noise with a brighter box in the middle third.
fn boxed(r: &mut ChaCha8Rng, w: usize, h: usize, contrast: f64) -> GrayRaster<f64> {
    let mut img = noise(r, w, h, 0.2, 0.4);
    for y in h / 3..2 * h / 3 + 1 {
        for x in w / 3..2 * w / 3 {
            img.set(x, y, img.get(x, y) + contrast);
        }
    }
    img
}

fn window_set(images: &[GrayRaster<f64>]) -> WindowSet<f64> {
    WindowSet::new(images.iter().map(IntegralImage::new).collect())
}

fn full(img: &GrayRaster<f64>) -> PixelRect {
    PixelRect::new(0, 0, img.width as u32, img.height as u32)
}

#[test]
fn integral_sums_match_brute_force() {
    let mut r = rng(1);
    for _ in 0..100 {
        let (img, levels) = level_image(&mut r, 64, 64);
        let ii = IntegralImage::new(&img);
        for i in 0..=64 {
            assert_eq!(ii.entry(i, 0), 0);
            assert_eq!(ii.entry(0, i), 0);
        }
        for _ in 0..1000 {
            let (x, y) = (r.random_range(0..64u32), r.random_range(0..64u32));
            let (w, h) = (r.random_range(1..=64 - x), r.random_range(1..=64 - y));
            let mut want = 0u64;
            for yy in y..y + h {
                for xx in x..x + w {
                    want += levels[(yy * 64 + xx) as usize];
                }
            }
            assert_eq!(ii.rect_sum(&PixelRect::new(x, y, w, h)).unwrap(), want);
        }
    }
}

#[test]
fn integral_edge_cases() {
    let ones = IntegralImage::new(&GrayRaster::<f64>::filled(5, 3, 1.0));
    assert_eq!(ones.rect_sum_value::<f64>(&PixelRect::new(1, 1, 4, 2)).unwrap(), 8.0);
    for j in 0..3 {
        for i in 0..5 {
            assert!(ones.entry(i + 1, j) >= ones.entry(i, j) && ones.entry(i, j + 1) >= ones.entry(i, j));
        }
    }
    assert!(matches!(ones.rect_sum(&PixelRect::new(0, 0, 0, 2)), Err(CascadeError::RectBounds { .. })));
    assert!(matches!(ones.rect_sum(&PixelRect::new(3, 0, 3, 1)), Err(CascadeError::RectBounds { .. })));
}

#[test]
fn constant_images_give_zero_features() {
    let ii = IntegralImage::new(&GrayRaster::<f64>::filled(12, 8, 0.6));
    for f in enumerate_features(12, 8) {
        assert_eq!(eval_feature::<f64>(&ii, &f, 12, 8, &PixelRect::new(0, 0, 12, 8)).unwrap(), 0.0);
    }
}

#[test]
fn aligned_step_maximizes_the_edge_feature() {
    let img = GrayRaster::<f64>::from_fn(40, 10, |x, _| if x < 20 { 0.2 } else { 0.9 });
    let ii = IntegralImage::new(&img);
    let values: Vec<f64> = (0..=32)
        .map(|x| {
            let f = HaarFeature { kind: HaarKind::TwoH, rect: PixelRect::new(x, 3, 8, 4) };
            eval_feature::<f64>(&ii, &f, 40, 10, &full(&img)).unwrap().abs()
        })
        .collect();
    let best = (0..values.len()).max_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap()).unwrap();
    assert_eq!(best, 16);
    assert!(values.iter().enumerate().all(|(i, &v)| i == 16 || v < values[16]));
}

#[test]
fn feature_values_are_scale_stable_and_shift_invariant() {
    let mut r = rng(2);
    let (_, levels) = level_image(&mut r, 12, 8);
    let img = GrayRaster::from_vec(12, 8, levels.iter().map(|&k| (k / 2) as f64 / Q).collect()).unwrap();
    let big = img.upsample_nearest(2);
    // A shift by an exact number of 16-bit levels.
    let shifted = GrayRaster::from_vec(12, 8, levels.iter().map(|&k| (k / 2 + 9000) as f64 / Q).collect()).unwrap();
    let (ii, ii_big, ii_shift) = (IntegralImage::new(&img), IntegralImage::new(&big), IntegralImage::new(&shifted));
    for f in enumerate_features(12, 8) {
        let v = eval_feature::<f64>(&ii, &f, 12, 8, &full(&img)).unwrap();
        let v2 = eval_feature::<f64>(&ii_big, &f, 12, 8, &full(&big)).unwrap();
        let vs = eval_feature::<f64>(&ii_shift, &f, 12, 8, &full(&shifted)).unwrap();
        assert!((v - v2).abs() <= 1e-6, "{f:?}");
        assert!((v - vs).abs() <= 1e-9, "{f:?}");
    }
}

/// Error of predicting with `x >= t` (or `x <= t`) over every distinct
/// value, plus the two constant classifiers.
fn exhaustive_min_error(values: &[f64], labels: &[bool], weights: &[f64]) -> f64 {
    let err = |pred: &dyn Fn(f64) -> bool| {
        values.iter().zip(labels).zip(weights).filter(|((v, l), _)| pred(**v) != **l).map(|(_, w)| w).sum::<f64>()
    };
    let mut best = err(&|_| true).min(err(&|_| false));
    for &t in values {
        best = best.min(err(&|x| x >= t)).min(err(&|x| x <= t)).min(err(&|x| x > t)).min(err(&|x| x < t));
    }
    best
}

#[test]
fn stump_scan_matches_exhaustive_search() {
    let mut r = rng(3);
    for _ in 0..200 {
        let n = 50;
        let values: Vec<f64> = (0..n).map(|_| (r.random_range(-2.0..2.0f64) * 10.0).round() / 10.0).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| r.random_bool(0.5)).collect();
        labels[0] = true;
        labels[1] = false;
        let raw: Vec<f64> = (0..n).map(|_| r.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let s = train_stump(&values, &labels, &weights).unwrap();
        let want = exhaustive_min_error(&values, &labels, &weights);
        assert!((s.error - want).abs() < 1e-12, "{} vs {want}", s.error);
        let actual: f64 = (0..n).filter(|&i| stump_predict(values[i], s.threshold, s.polarity) != labels[i]).map(|i| weights[i]).sum();
        assert!((actual - s.error).abs() < 1e-12);
        // The scan's own candidate list contains the chosen split.
        assert!(candidate_thresholds(&values).contains(&(s.threshold, s.polarity)));
    }
}

fn toy_sets(seed: u64, n_pos: usize, n_neg: usize, contrast: f64) -> (Vec<GrayRaster<f64>>, Vec<GrayRaster<f64>>) {
    let mut r = rng(seed);
    let pos = (0..n_pos).map(|_| boxed(&mut r, 16, 8, contrast)).collect();
    let neg = (0..n_neg).map(|_| noise(&mut r, 16, 8, 0.2, 0.5)).collect();
    (pos, neg)
}

fn stage_params(seed: u64) -> StageParams<f64> {
    StageParams { f_max: 0.5, d_min: 0.99, max_weak: 12, feature_pool_size: 150, seed }
}

#[test]
fn boosting_loss_never_increases() {
    for seed in 0..10 {
        let (pos, neg) = toy_sets(seed, 40, 60, 0.05);
        let params = StageParams { f_max: 1e-6, ..stage_params(seed) };
        let (stage, report) = train_stage(&window_set(&pos), &window_set(&neg), 16, 8, &params).unwrap();
        assert_eq!(report.exp_loss.len(), stage.weak.len());
        for w in report.exp_loss.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "seed {seed}: {:?}", report.exp_loss);
        }
        // The exponential loss bounds the balanced 0/1 training error.
        let d1_error = |k: usize| {
            let sub = &stage.weak[..k];
            let half = sub.iter().map(|w| w.alpha).sum::<f64>() / 2.0;
            let score = |img: &GrayRaster<f64>| {
                let ii = IntegralImage::new(img);
                sub.iter()
                    .filter(|w| stump_predict(eval_feature(&ii, &w.feature, 16, 8, &full(img)).unwrap(), w.threshold, w.polarity))
                    .map(|w| w.alpha)
                    .sum::<f64>()
            };
            let fn_ = pos.iter().filter(|p| score(p) < half).count() as f64 / (2.0 * pos.len() as f64);
            let fp = neg.iter().filter(|n| score(n) >= half).count() as f64 / (2.0 * neg.len() as f64);
            fn_ + fp
        };
        for k in 1..=stage.weak.len() {
            assert!(d1_error(k) <= report.exp_loss[k - 1] + 1e-12);
        }
        assert!((d1_error(1) - report.weak_errors[0]).abs() < 1e-9);
    }
}

#[test]
fn separable_toy_needs_one_stump() {
    let mut r = rng(4);
    let pos: Vec<_> = (0..20).map(|_| {
        let c = r.random_range(0.6..0.9);
        GrayRaster::from_fn(16, 8, |x, y| if (4..12).contains(&x) && (2..6).contains(&y) { c } else { 0.1 })
    }).collect();
    let neg: Vec<_> = (0..30).map(|i| GrayRaster::filled(16, 8, 0.05 + 0.02 * i as f64)).collect();
    let (stage, report) = train_stage(&window_set(&pos), &window_set(&neg), 16, 8, &stage_params(0)).unwrap();
    assert_eq!(stage.weak.len(), 1);
    assert_eq!((report.detection_rate, report.false_positive_rate), (1.0, 0.0));
    assert_eq!(report.train_error, vec![0.0]);
}

#[test]
fn full_detection_keeps_every_positive() {
    // Identical windows in both classes: no threshold separates them.
    let (mut pos, neg) = toy_sets(5, 30, 30, 0.05);
    pos.extend(neg.iter().take(10).cloned());
    let params = StageParams { d_min: 1.0, max_weak: 3, ..stage_params(5) };
    let (ps, ns) = (window_set(&pos), window_set(&neg));
    let (stage, report) = train_stage(&ps, &ns, 16, 8, &params).unwrap();
    let scores = |set: &[GrayRaster<f64>]| -> Vec<f64> {
        set.iter()
            .map(|img| {
                let ii = IntegralImage::new(img);
                stage.weak.iter()
                    .filter(|w| stump_predict(eval_feature(&ii, &w.feature, 16, 8, &full(img)).unwrap(), w.threshold, w.polarity))
                    .map(|w| w.alpha)
                    .sum::<f64>()
            })
            .collect()
    };
    let p = scores(&pos);
    let min_pos = p.iter().cloned().fold(f64::INFINITY, f64::min);
    let half = stage.weak.iter().map(|w| w.alpha).sum::<f64>() / 2.0;
    assert_eq!(stage.stage_threshold, min_pos.min(half));
    assert_eq!(report.detection_rate, 1.0);
    let f = scores(&neg).iter().filter(|&&s| s >= stage.stage_threshold).count() as f64 / neg.len() as f64;
    assert!(f > 0.0);
    assert_eq!(report.false_positive_rate, f);
}

fn toy_cascade(f_target: f64, stage_negatives: Option<usize>) -> (CascadeModel<f64>, Vec<GrayRaster<f64>>, Vec<GrayRaster<f64>>) {
    let (pos, neg) = toy_sets(6, 60, 300, 0.04);
    let params = CascadeParams {
        window_w: 16,
        window_h: 8,
        f_max: 0.5,
        d_min: 0.98,
        f_target,
        max_stages: 6,
        max_weak: 10,
        feature_pool_size: 150,
        stage_negatives,
        seed: 11,
    };
    let model = train_cascade(&window_set(&pos), &window_set(&neg), &params, "toy").unwrap();
    (model, pos, neg)
}

/// Stage-by-stage acceptance computed from the serialized weak classifiers.
fn manual_classify(model: &CascadeModel<f64>, ii: &IntegralImage, window: &PixelRect) -> (Vec<bool>, f64) {
    let mut passes = Vec::new();
    let mut margin = 0.0;
    for stage in &model.stages {
        let s: f64 = stage.weak.iter()
            .filter(|w| {
                let v = eval_feature::<f64>(ii, &w.feature, model.window_w, model.window_h, window).unwrap();
                stump_predict(v, w.threshold, w.polarity)
            })
            .map(|w| w.alpha)
            .sum();
        margin = s - stage.stage_threshold;
        passes.push(s >= stage.stage_threshold);
        if s < stage.stage_threshold {
            break;
        }
    }
    (passes, margin)
}

#[test]
fn reported_stage_rates_match_reclassification() {
    let (model, pos, neg) = toy_cascade(0.001, None);
    assert!(model.stages.len() >= 2);
    let outcomes = |set: &[GrayRaster<f64>]| -> Vec<Vec<bool>> {
        set.iter().map(|img| manual_classify(&model, &IntegralImage::new(img), &full(img)).0).collect()
    };
    let (po, no) = (outcomes(&pos), outcomes(&neg));
    let (mut prod_d, mut prod_f) = (1.0, 1.0);
    for (k, report) in model.metadata.stages.iter().enumerate() {
        let reached = |o: &&Vec<bool>| o.len() > k && o[..k].iter().all(|&b| b);
        let rate = |outs: &[Vec<bool>]| {
            let alive: Vec<&Vec<bool>> = outs.iter().filter(reached).collect();
            (alive.iter().filter(|o| o[k]).count() as f64 / alive.len() as f64, alive.len())
        };
        let (d, np) = rate(&po);
        let (f, nn) = rate(&no);
        assert_eq!((report.positives, report.negatives), (np, nn));
        assert_eq!((report.detection_rate, report.false_positive_rate), (d, f));
        prod_d *= d;
        prod_f *= f;
    }
    let all = |outs: &[Vec<bool>]| outs.iter().filter(|o| o.len() == model.stages.len() && o.iter().all(|&b| b)).count() as f64 / outs.len() as f64;
    assert_eq!(model.metadata.cumulative_fpr, all(&no));
    assert_eq!(model.metadata.cumulative_detection, all(&po));
    assert!(model.metadata.cumulative_fpr <= prod_f + 1e-12);
    assert!(model.metadata.cumulative_detection >= prod_d - 1e-12);
}

#[test]
fn a_unit_target_stops_after_one_stage() {
    let (model, _, _) = toy_cascade(1.0, None);
    assert_eq!(model.stages.len(), 1);
    assert_eq!(model.metadata.stop_reason, Some(StopReason::TargetReached));
}

#[test]
fn stage_negative_cap_is_respected() {
    let (model, _, _) = toy_cascade(0.001, Some(50));
    assert!(model.metadata.stages.iter().all(|s| s.negatives <= 50));
    model.validate().unwrap();
}

#[test]
fn training_input_errors() {
    let (pos, neg) = toy_sets(7, 5, 5, 0.05);
    let params = CascadeParams::<f64> { window_w: 16, window_h: 8, ..CascadeParams::default() };
    let empty = window_set(&[]);
    assert!(matches!(train_cascade(&empty, &window_set(&neg), &params, ""), Err(TrainError::Cascade(_))));
    let wrong = CascadeParams::<f64> { window_w: 20, ..params.clone() };
    assert!(matches!(train_cascade(&window_set(&pos), &window_set(&neg), &wrong, ""), Err(TrainError::Cascade(_))));
    assert!(matches!(
        train_stage(&window_set(&pos), &empty, 16, 8, &stage_params(0)),
        Err(CascadeError::SingleClass)
    ));
}

#[test]
fn model_json_round_trips_bit_exactly() {
    let (model, _, _) = toy_cascade(0.01, Some(100));
    let text = model.to_json();
    let back = CascadeModel::<f64>::from_json(&text).unwrap();
    assert_eq!(back, model);
    assert_eq!(back.to_json(), text);
    assert!(text.contains("\"format\": \"brickscan-cascade-v1\""));
    let broken = text.replacen("brickscan-cascade-v1", "other", 1);
    assert!(matches!(CascadeModel::<f64>::from_json(&broken), Err(CascadeError::Model(_))));
    let extra = text.replacen("{", "{\n  \"bogus\": 1,", 1);
    assert!(CascadeModel::<f64>::from_json(&extra).is_err());
}

/// Scene of toy boxes on a noisy background.
fn scene(seed: u64) -> GrayRaster<f64> {
    let mut r = rng(seed);
    let mut img = noise(&mut r, 120, 60, 0.2, 0.5);
    for (ox, oy) in [(10, 8), (60, 10), (30, 35), (85, 40)] {
        let b = boxed(&mut r, 16, 8, 0.04);
        for y in 0..8 {
            for x in 0..16 {
                img.set(ox + x, oy + y, b.get(x, y));
            }
        }
    }
    img
}

#[test]
fn classify_window_matches_manual_evaluation() {
    let (model, pos, _) = toy_cascade(0.01, None);
    let img = scene(8);
    let ii = IntegralImage::new(&img);
    let mut r = rng(9);
    for _ in 0..10 {
        let s = r.random_range(1.0..2.5f64);
        let (w, h) = ((16.0 * s).round() as u32, (8.0 * s).round() as u32);
        let window = PixelRect::new(r.random_range(0..120 - w), r.random_range(0..60 - h), w, h);
        let (pass, margin) = model.classify_window(&ii, &window).unwrap();
        let (stages, manual_margin) = manual_classify(&model, &ii, &window);
        assert_eq!(pass, stages.len() == model.stages.len() && stages.iter().all(|&b| b));
        assert_eq!(margin, manual_margin);
    }
    let accepted = pos.iter().filter(|p| model.classify_window(&IntegralImage::new(p), &full(p)).unwrap().0).count();
    assert_eq!(accepted as f64 / pos.len() as f64, model.metadata.cumulative_detection);
    let flat = GrayRaster::filled(16, 8, 0.3);
    let ii_flat = IntegralImage::new(&flat);
    assert_eq!(model.classify_window(&ii_flat, &full(&flat)).unwrap(), model.classify_window(&ii_flat, &full(&flat)).unwrap());
    assert!(matches!(model.classify_window(&ii, &PixelRect::new(110, 0, 16, 8)), Err(CascadeError::RectBounds { .. })));
}

#[test]
fn detection_bypass_flat_images_and_threads() {
    let (model, _, _) = toy_cascade(0.01, None);
    let img = scene(10);
    let p = DetectParams { min_neighbors: 0, ..DetectParams::default() };
    let raw = detect_candidates(&img, &model, &p).unwrap();
    let ungrouped = detect_multiscale(&img, &model, &p).unwrap();
    assert_eq!(raw.len(), ungrouped.len());
    assert!(raw.iter().zip(&ungrouped).all(|(c, d)| c.rect == d.rect && d.neighbors == 1));
    assert!(!raw.is_empty());

    assert!(detect_multiscale(&GrayRaster::filled(120, 60, 0.4), &model, &p).unwrap().is_empty());

    let grouped = DetectParams { min_neighbors: 2, ..DetectParams::default() };
    let a = detect_multiscale(&img, &model, &grouped).unwrap();
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = serial.install(|| detect_multiscale(&img, &model, &grouped).unwrap());
    assert_eq!(a, b);

    let bad = DetectParams { scale_factor: 1.0, ..DetectParams::<f64>::default() };
    assert!(matches!(detect_multiscale(&img, &model, &bad), Err(CascadeError::InvalidParams(_))));
}

#[test]
fn grouping_examples() {
    let same = vec![Candidate { rect: Rect::new(5.0, 5.0, 48.0, 12.0), score: 0.5 }; 10];
    let g = group_rectangles(&same, 5, 0.2);
    assert_eq!(g.len(), 1);
    assert_eq!(g[0].neighbors, 10);
    assert!(group_rectangles(&same, 11, 0.2).is_empty());
}

/// All-pairs union-find without the sweep.
fn brute_group(cands: &[Candidate<f64>], min_neighbors: usize, eps: f64) -> Vec<Detection<f64>> {
    let n = cands.len();
    let mut label: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if rects_similar(&cands[i].rect, &cands[j].rect, eps) && label[j] > label[i] {
                    label[j] = label[i];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut out = Vec::new();
    for root in 0..n {
        let members: Vec<usize> = (0..n).filter(|&i| label[i] == root).collect();
        if members.is_empty() || members.len() < min_neighbors {
            continue;
        }
        let k = members.len() as f64;
        let (mut x, mut y, mut w, mut h) = (0.0, 0.0, 0.0, 0.0);
        for &i in &members {
            x += cands[i].rect.x;
            y += cands[i].rect.y;
            w += cands[i].rect.w;
            h += cands[i].rect.h;
        }
        let score = members.iter().map(|&i| cands[i].score).fold(f64::NEG_INFINITY, f64::max);
        out.push(Detection { rect: Rect::new(x / k, y / k, w / k, h / k), score, neighbors: members.len() as u32, label: "brick".into() });
    }
    out
}

#[test]
fn grouping_matches_the_brute_force_oracle() {
    let mut r = rng(12);
    for _ in 0..50 {
        let n = r.random_range(1..120);
        let cands: Vec<Candidate<f64>> = (0..n)
            .map(|_| {
                let s = r.random_range(1.0..1.6);
                let (cx, cy) = ([20.0, 60.0, 100.0][r.random_range(0..3)], [10.0, 40.0][r.random_range(0..2)]);
                Candidate {
                    rect: Rect::new(cx + r.random_range(-6.0..6.0), cy + r.random_range(-3.0..3.0), 48.0 * s, 12.0 * s),
                    score: r.random_range(-1.0..1.0),
                }
            })
            .collect();
        let mut last = usize::MAX;
        for mn in [1, 2, 3, 5, 8, 13, 25, 50] {
            let g = group_rectangles(&cands, mn, 0.2);
            assert_eq!(g, brute_group(&cands, mn, 0.2));
            assert!(g.len() <= last);
            last = g.len();
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grouped_count_is_monotone(
        rects in prop::collection::vec((0.0f64..200.0, 0.0f64..80.0, 20.0f64..60.0, 8.0f64..20.0), 0..80),
        eps in 0.05f64..0.5,
    ) {
        let cands: Vec<Candidate<f64>> = rects.into_iter().map(|(x, y, w, h)| Candidate { rect: Rect::new(x, y, w, h), score: 0.0 }).collect();
        let counts: Vec<usize> = (1..12).map(|mn| group_rectangles(&cands, mn, eps).len()).collect();
        prop_assert!(counts.windows(2).all(|w| w[1] <= w[0]));
        let total: u32 = group_rectangles(&cands, 1, eps).iter().map(|d| d.neighbors).sum();
        prop_assert_eq!(total as usize, cands.len());
    }
}
