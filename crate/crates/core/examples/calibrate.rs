//! Calibrates the low and high `min_neighbors` settings of the evaluation
//! config on the default end-to-end run.
//!
//! ```text
//! cargo run --release --example calibrate -- [OUT_DIR]
//! ```
//!
//! The low setting is the smallest threshold at which at least 80% of the
//! labelled horizontal bricks carry one to five labels; the high setting is
//! the threshold with the best horizontal recall among those whose mean
//! label count per labelled brick lies in [0.9, 1.1]. Both are searched on
//! 1..=150 and printed with the full sweep.

use brickscan_core::cascade::{detect_candidates, group_rectangles};
use brickscan_core::pipeline::{evaluate, run_all, Config};
use brickscan_core::wall::Orientation;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("brickscan-calibrate"));
    let cfg = Config::<f64>::default();
    let summary = run_all(&cfg, &out)?;
    let m = &summary.model.metadata;
    println!("stages {} cumulative fpr {} detection {}", summary.model.stages.len(), m.cumulative_fpr, m.cumulative_detection);

    let maps = brickscan_core::bake::load_map_set::<f64>(&out.join("maps/eval"))?;
    let img = maps.channel(cfg.dataset.modality);
    let candidates = detect_candidates(&img, &summary.model, &cfg.detect)?;
    println!("raw candidates {}", candidates.len());
    println!("min_neighbors,detections,recall_H,recall_V,mean_labels,share_1_5_H");
    let mut low = None;
    let mut high: Option<(usize, f64)> = None;
    for mn in 1..=150 {
        let dets = group_rectangles(&candidates, mn, cfg.detect.eps);
        let r = evaluate(&dets, &summary.eval_wall.annotations, &summary.frame, cfg.evaluate.iou_threshold);
        let (mean, share) = (r.mean_labels_per_brick(), r.share_labelled_within(Orientation::H, 1, 5));
        println!("{mn},{},{:.3},{:.3},{:.3},{:.3}", dets.len(), r.recall_h, r.recall_v, mean, share);
        if low.is_none() && share >= 0.8 && !dets.is_empty() {
            low = Some(mn);
        }
        if (0.9..=1.1).contains(&mean) && high.is_none_or(|(_, best)| r.recall_h > best) {
            high = Some((mn, r.recall_h));
        }
    }
    println!("low_neighbors = {low:?}");
    println!("high_neighbors = {:?} (recall_H {:?})", high.map(|h| h.0), high.map(|h| h.1));
    Ok(())
}
