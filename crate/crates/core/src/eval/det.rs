//! Detection metrics: 101-point interpolated average precision at IoU 0.5
//! and average recall over IoU 0.50..0.95.
//!
//! Matching contract (shared with the independent reference oracle): within a
//! frame, detections are visited by descending score (ties: input order) with
//! at most [`MAX_DETECTIONS_PER_FRAME`](super::MAX_DETECTIONS_PER_FRAME)
//! kept, and each greedily takes the unmatched ground-truth box of highest
//! IoU at or above the threshold (ties: ground-truth input order). The global
//! ranking for the PR curve orders by score descending, then frame ascending,
//! then input order ascending.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::eval::{FrameBox, MATCH_IOU, MAX_DETECTIONS_PER_FRAME};
use crate::tiling::{iou, Detection};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetEvalResult {
    pub ap50: f64,
    pub ar: f64,
    /// Recall at each of the ten IoU thresholds 0.50, 0.55, ..., 0.95.
    pub recall_by_iou: Vec<(f64, f64)>,
}

fn validate_inputs(dets: &[Detection], gt: &[FrameBox]) -> Result<()> {
    if gt.is_empty() {
        return Err(Error::invalid_argument(
            "detection metrics need at least one ground-truth box",
        ));
    }
    for d in dets {
        d.bbox.validate()?;
        if !d.score.is_finite() {
            return Err(Error::validation("detection score is not finite"));
        }
    }
    for g in gt {
        g.bbox.validate()?;
    }
    Ok(())
}

/// One ranked detection outcome at a fixed IoU threshold.
struct Ranked {
    score: f64,
    frame: u32,
    order: usize,
    tp: bool,
}

/// Greedy per-frame matching at one IoU threshold. Returns the globally
/// ranked TP/FP outcomes and the total ground-truth count.
fn rank_matches(dets: &[Detection], gt: &[FrameBox], thr: f64, max_dets: usize) -> Vec<Ranked> {
    let mut dets_by_frame: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, d) in dets.iter().enumerate() {
        dets_by_frame.entry(d.frame).or_default().push(i);
    }
    let mut gt_by_frame: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, g) in gt.iter().enumerate() {
        gt_by_frame.entry(g.frame).or_default().push(i);
    }

    let mut ranked = Vec::with_capacity(dets.len());
    for (&frame, det_indices) in &dets_by_frame {
        let mut order: Vec<usize> = det_indices.clone();
        order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score).then(a.cmp(&b)));
        order.truncate(max_dets);

        let empty = Vec::new();
        let gts = gt_by_frame.get(&frame).unwrap_or(&empty);
        let mut taken = vec![false; gts.len()];
        for &di in &order {
            let mut best: Option<(usize, f64)> = None;
            for (slot, &gi) in gts.iter().enumerate() {
                if taken[slot] {
                    continue;
                }
                let v = iou(&dets[di].bbox, &gt[gi].bbox);
                if v >= thr && best.map_or(true, |(_, bv)| v > bv) {
                    best = Some((slot, v));
                }
            }
            let tp = if let Some((slot, _)) = best {
                taken[slot] = true;
                true
            } else {
                false
            };
            ranked.push(Ranked { score: dets[di].score, frame, order: di, tp });
        }
    }
    ranked.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.frame.cmp(&b.frame))
            .then(a.order.cmp(&b.order))
    });
    ranked
}

fn recall_at(dets: &[Detection], gt: &[FrameBox], thr: f64, max_dets: usize) -> f64 {
    let ranked = rank_matches(dets, gt, thr, max_dets);
    let tp = ranked.iter().filter(|r| r.tp).count();
    tp as f64 / gt.len() as f64
}

/// 101-point interpolated AP over the ranked outcomes: precision is made
/// monotone non-increasing from the high-recall end, then sampled at recall
/// levels 0.00, 0.01, ..., 1.00 (zero beyond the achieved recall).
fn interpolated_ap(ranked: &[Ranked], total_gt: usize) -> f64 {
    let mut precisions = Vec::with_capacity(ranked.len());
    let mut recalls = Vec::with_capacity(ranked.len());
    let mut tp = 0usize;
    for (k, r) in ranked.iter().enumerate() {
        if r.tp {
            tp += 1;
        }
        precisions.push(tp as f64 / (k + 1) as f64);
        recalls.push(tp as f64 / total_gt as f64);
    }
    for k in (0..precisions.len().saturating_sub(1)).rev() {
        if precisions[k] < precisions[k + 1] {
            precisions[k] = precisions[k + 1];
        }
    }
    let mut sum = 0.0;
    let mut idx = 0usize;
    for i in 0..=100u32 {
        let r = f64::from(i) / 100.0;
        while idx < recalls.len() && recalls[idx] < r {
            idx += 1;
        }
        if idx < precisions.len() {
            sum += precisions[idx];
        }
    }
    sum / 101.0
}

/// AP at IoU 0.5 with the standard 500-detections-per-frame cap.
/// Errors when `gt` is empty; zero detections score 0.
pub fn average_precision_50(dets: &[Detection], gt: &[FrameBox]) -> Result<f64> {
    validate_inputs(dets, gt)?;
    let ranked = rank_matches(dets, gt, MATCH_IOU, MAX_DETECTIONS_PER_FRAME);
    Ok(interpolated_ap(&ranked, gt.len()))
}

/// Thresholds 0.50, 0.55, ..., 0.95 as exact hundredths, avoiding the
/// accumulation drift of `0.5 + i * 0.05` (which would push 0.60 above a
/// detection whose IoU is exactly 0.6).
pub(crate) fn ar_iou_thresholds() -> [f64; 10] {
    std::array::from_fn(|i| f64::from(50 + 5 * i as u32) / 100.0)
}

/// Mean recall over the ten IoU thresholds, 500 detections per frame.
pub fn average_recall(dets: &[Detection], gt: &[FrameBox]) -> Result<f64> {
    validate_inputs(dets, gt)?;
    let thresholds = ar_iou_thresholds();
    let sum: f64 = thresholds
        .iter()
        .map(|&t| recall_at(dets, gt, t, MAX_DETECTIONS_PER_FRAME))
        .sum();
    Ok(sum / thresholds.len() as f64)
}

/// AP50, AR, and the per-threshold recall table in one pass over the inputs.
pub fn evaluate_detections(dets: &[Detection], gt: &[FrameBox]) -> Result<DetEvalResult> {
    validate_inputs(dets, gt)?;
    let ranked = rank_matches(dets, gt, MATCH_IOU, MAX_DETECTIONS_PER_FRAME);
    let ap50 = interpolated_ap(&ranked, gt.len());
    let recall_by_iou: Vec<(f64, f64)> = ar_iou_thresholds()
        .iter()
        .map(|&t| (t, recall_at(dets, gt, t, MAX_DETECTIONS_PER_FRAME)))
        .collect();
    let ar = recall_by_iou.iter().map(|(_, r)| r).sum::<f64>() / recall_by_iou.len() as f64;
    Ok(DetEvalResult { ap50, ar, recall_by_iou })
}
