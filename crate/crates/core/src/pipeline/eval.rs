use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::bake::OrthoFrame;
use crate::cascade::Detection;
use crate::geom::Rect;
use crate::scalar::Real;
use crate::wall::{Annotation, Orientation};

/// Detections whose center falls inside one ground-truth brick.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrickLabels {
    pub brick_id: u32,
    pub orientation: Orientation,
    pub labels: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct EvalReport<T> {
    pub iou_threshold: T,
    pub detections: usize,
    pub annotations: usize,
    pub true_positives: usize,
    pub precision: T,
    /// False when there were no detections; `precision` is then 0.
    pub precision_defined: bool,
    pub recall: T,
    /// False when there were no annotations; `recall` is then 0.
    pub recall_defined: bool,
    pub recall_h: T,
    pub recall_v: T,
    /// One entry per annotation, in annotation order.
    pub labels_per_brick: Vec<BrickLabels>,
    /// Detections whose center lies in no brick.
    pub unassigned: usize,
}

impl<T: Real> EvalReport<T> {
    /// Mean label count over bricks with at least one label; 0 if none.
    pub fn mean_labels_per_brick(&self) -> T {
        let hit: Vec<usize> = self.labels_per_brick.iter().map(|b| b.labels).filter(|&c| c > 0).collect();
        ratio(hit.iter().sum(), hit.len())
    }

    /// Among labelled bricks of `orientation`, the share carrying between
    /// `lo` and `hi` labels inclusive; 0 if none is labelled.
    pub fn share_labelled_within(&self, orientation: Orientation, lo: usize, hi: usize) -> T {
        let hit: Vec<usize> = self
            .labels_per_brick
            .iter()
            .filter(|b| b.orientation == orientation && b.labels > 0)
            .map(|b| b.labels)
            .collect();
        ratio(hit.iter().filter(|&&c| (lo..=hi).contains(&c)).count(), hit.len())
    }
}

fn ratio<T: Real>(num: usize, den: usize) -> T {
    if den == 0 {
        T::zero()
    } else {
        T::nat(num) / T::nat(den)
    }
}

/// Lexicographic order on `(x, y, w, h)`, so ties do not depend on input order.
fn rect_order<T: Real>(a: &Rect<T>, b: &Rect<T>) -> Ordering {
    [a.x, a.y, a.w, a.h]
        .iter()
        .zip([b.x, b.y, b.w, b.h].iter())
        .map(|(p, q)| p.partial_cmp(q).unwrap_or(Ordering::Equal))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Scores pixel-space detections against wall annotations.
///
/// Pairs are matched greedily one-to-one by descending IoU; ties go to the
/// lexicographically smaller detection rect, then the lower annotation
/// index. Label counts use center containment and ignore the matching.
pub fn evaluate<T: Real>(
    detections: &[Detection<T>],
    annotations: &[Annotation<T>],
    frame: &OrthoFrame<T>,
    iou_threshold: T,
) -> EvalReport<T> {
    let truth: Vec<Rect<T>> = annotations.iter().map(|a| frame.world_to_pixel_rect(&a.rect)).collect();

    let mut pairs: Vec<(T, usize, usize)> = Vec::new();
    for (d, det) in detections.iter().enumerate() {
        for (a, gt) in truth.iter().enumerate() {
            let iou = det.rect.iou(gt);
            if iou >= iou_threshold {
                pairs.push((iou, d, a));
            }
        }
    }
    pairs.sort_by(|p, q| {
        q.0.partial_cmp(&p.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| rect_order(&detections[p.1].rect, &detections[q.1].rect))
            .then(p.2.cmp(&q.2))
    });
    let mut det_used = vec![false; detections.len()];
    let mut gt_used = vec![false; truth.len()];
    for &(_, d, a) in &pairs {
        if !det_used[d] && !gt_used[a] {
            det_used[d] = true;
            gt_used[a] = true;
        }
    }
    let tp = gt_used.iter().filter(|&&m| m).count();

    let mut labels = vec![0usize; truth.len()];
    let mut unassigned = 0;
    for det in detections {
        let (cx, cy) = det.rect.center();
        match truth.iter().position(|r| r.contains_point(cx, cy)) {
            Some(i) => labels[i] += 1,
            None => unassigned += 1,
        }
    }

    let recall_of = |o: Orientation| {
        let idx: Vec<usize> = (0..annotations.len()).filter(|&i| annotations[i].orientation == o).collect();
        ratio(idx.iter().filter(|&&i| gt_used[i]).count(), idx.len())
    };
    EvalReport {
        iou_threshold,
        detections: detections.len(),
        annotations: annotations.len(),
        true_positives: tp,
        precision: ratio(tp, detections.len()),
        precision_defined: !detections.is_empty(),
        recall: ratio(tp, annotations.len()),
        recall_defined: !annotations.is_empty(),
        recall_h: recall_of(Orientation::H),
        recall_v: recall_of(Orientation::V),
        labels_per_brick: annotations
            .iter()
            .zip(labels)
            .map(|(a, labels)| BrickLabels { brick_id: a.brick_id, orientation: a.orientation, labels })
            .collect(),
        unassigned,
    }
}
