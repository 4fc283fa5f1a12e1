//! CLEAR multi-object-tracking metrics and IDF1.
//!
//! Correspondences persist: a ground-truth target stays bound to the
//! hypothesis that last tracked it for as long as the pair still overlaps at
//! the gate, even across frames where either side is missing. Remaining
//! objects are matched per frame by an exact assignment maximizing total IoU
//! among pairs at or above the gate. An identity switch is counted when a
//! target with an existing binding is matched to a different hypothesis.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::eval::{max_weight_matching, TrackedBox};
use crate::tiling::iou;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotResult {
    /// 1 - (FN + FP + IDSW) / total ground-truth boxes. Can be negative.
    pub mota: f64,
    /// Mean IoU over matched pairs; 0 when nothing matched.
    pub motp: f64,
    /// False alarms per frame: FP / number of distinct frames seen on either
    /// side.
    pub far: f64,
    /// Mostly-tracked targets: matched in at least 80% of the frames where
    /// they appear.
    pub mt_count: usize,
    pub mt_ratio: f64,
    pub false_negatives: usize,
    pub false_positives: usize,
    pub id_switches: usize,
    pub matches: usize,
    pub gt_boxes: usize,
    pub gt_tracks: usize,
    pub frames: usize,
}

/// Index one side by frame, rejecting two boxes with the same id in the same
/// frame.
fn by_frame<'a>(
    boxes: &'a [TrackedBox],
    side: &str,
) -> Result<BTreeMap<u32, Vec<&'a TrackedBox>>> {
    let mut frames: BTreeMap<u32, Vec<&TrackedBox>> = BTreeMap::new();
    let mut seen = HashSet::new();
    for b in boxes {
        b.bbox.validate()?;
        if !seen.insert((b.id, b.frame)) {
            return Err(Error::invalid_argument(format!(
                "{side}: id {} appears twice in frame {}",
                b.id, b.frame
            )));
        }
        frames.entry(b.frame).or_default().push(b);
    }
    for list in frames.values_mut() {
        list.sort_by_key(|b| b.id);
    }
    Ok(frames)
}

pub fn clear_mot(
    hypotheses: &[TrackedBox],
    ground_truth: &[TrackedBox],
    iou_threshold: f64,
) -> Result<MotResult> {
    if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
        return Err(Error::invalid_argument(format!(
            "iou threshold {iou_threshold} must be in (0, 1]"
        )));
    }
    if ground_truth.is_empty() {
        return Err(Error::invalid_argument("tracking metrics need ground truth"));
    }
    let gt_frames = by_frame(ground_truth, "ground truth")?;
    let hyp_frames = by_frame(hypotheses, "hypotheses")?;

    let all_frames: HashSet<u32> =
        gt_frames.keys().chain(hyp_frames.keys()).copied().collect();

    let mut last_match: HashMap<u32, u32> = HashMap::new();
    let mut fn_count = 0usize;
    let mut fp_count = 0usize;
    let mut idsw = 0usize;
    let mut matches = 0usize;
    let mut iou_sum = 0.0;
    let mut gt_boxes = 0usize;
    // per ground-truth id: (frames present, frames matched)
    let mut coverage: BTreeMap<u32, (usize, usize)> = BTreeMap::new();

    let mut frame_order: Vec<u32> = all_frames.iter().copied().collect();
    frame_order.sort_unstable();

    let empty = Vec::new();
    for frame in frame_order {
        let gts = gt_frames.get(&frame).unwrap_or(&empty);
        let hyps = hyp_frames.get(&frame).unwrap_or(&empty);
        gt_boxes += gts.len();
        for g in gts {
            coverage.entry(g.id).or_insert((0, 0)).0 += 1;
        }

        let mut gt_taken = vec![false; gts.len()];
        let mut hyp_taken = vec![false; hyps.len()];
        let mut frame_pairs: Vec<(usize, usize, f64)> = Vec::new();

        // Carry over yesterday's bindings while they still hold.
        for (gi, g) in gts.iter().enumerate() {
            if let Some(&h_id) = last_match.get(&g.id) {
                if let Some(hi) = hyps.iter().position(|h| h.id == h_id) {
                    if hyp_taken[hi] {
                        continue;
                    }
                    let v = iou(&g.bbox, &hyps[hi].bbox);
                    if v >= iou_threshold {
                        gt_taken[gi] = true;
                        hyp_taken[hi] = true;
                        frame_pairs.push((gi, hi, v));
                    }
                }
            }
        }

        // Optimal assignment over whatever is left.
        let free_gt: Vec<usize> = (0..gts.len()).filter(|&i| !gt_taken[i]).collect();
        let free_hyp: Vec<usize> = (0..hyps.len()).filter(|&i| !hyp_taken[i]).collect();
        if !free_gt.is_empty() && !free_hyp.is_empty() {
            let weights: Vec<Vec<f64>> = free_gt
                .iter()
                .map(|&gi| {
                    free_hyp
                        .iter()
                        .map(|&hi| {
                            let v = iou(&gts[gi].bbox, &hyps[hi].bbox);
                            if v >= iou_threshold {
                                v
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect();
            for (row, assigned) in max_weight_matching(&weights).iter().enumerate() {
                if let Some(col) = assigned {
                    let (gi, hi) = (free_gt[row], free_hyp[*col]);
                    gt_taken[gi] = true;
                    hyp_taken[hi] = true;
                    frame_pairs.push((gi, hi, weights[row][*col]));
                }
            }
        }

        for &(gi, hi, v) in &frame_pairs {
            let (g, h) = (gts[gi], hyps[hi]);
            matches += 1;
            iou_sum += v;
            coverage.get_mut(&g.id).unwrap().1 += 1;
            if let Some(&prev) = last_match.get(&g.id) {
                if prev != h.id {
                    idsw += 1;
                }
            }
            last_match.insert(g.id, h.id);
        }
        fn_count += gt_taken.iter().filter(|t| !**t).count();
        fp_count += hyp_taken.iter().filter(|t| !**t).count();
    }

    let mt_count = coverage
        .values()
        .filter(|(present, covered)| *covered as f64 >= 0.8 * *present as f64)
        .count();
    let gt_tracks = coverage.len();
    let frames = all_frames.len();
    Ok(MotResult {
        mota: 1.0 - (fn_count + fp_count + idsw) as f64 / gt_boxes as f64,
        motp: if matches > 0 { iou_sum / matches as f64 } else { 0.0 },
        far: fp_count as f64 / frames as f64,
        mt_count,
        mt_ratio: mt_count as f64 / gt_tracks as f64,
        false_negatives: fn_count,
        false_positives: fp_count,
        id_switches: idsw,
        matches,
        gt_boxes,
        gt_tracks,
        frames,
    })
}

/// Identity F1: one global bipartite matching between ground-truth and
/// hypothesis identities maximizes the number of frames where the paired
/// identities overlap at the gate (IDTP); IDF1 = 2*IDTP / (gt boxes + hyp
/// boxes). Errors when both sides are empty; an empty hypothesis side against
/// real ground truth scores 0.
pub fn idf1(
    hypotheses: &[TrackedBox],
    ground_truth: &[TrackedBox],
    iou_threshold: f64,
) -> Result<f64> {
    if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
        return Err(Error::invalid_argument(format!(
            "iou threshold {iou_threshold} must be in (0, 1]"
        )));
    }
    if hypotheses.is_empty() && ground_truth.is_empty() {
        return Err(Error::invalid_argument("idf1 needs boxes on at least one side"));
    }
    // Reuse the duplicate-id check.
    by_frame(ground_truth, "ground truth")?;
    by_frame(hypotheses, "hypotheses")?;

    let mut gt_ids: BTreeMap<u32, BTreeMap<u32, &TrackedBox>> = BTreeMap::new();
    for b in ground_truth {
        gt_ids.entry(b.id).or_default().insert(b.frame, b);
    }
    let mut hyp_ids: BTreeMap<u32, BTreeMap<u32, &TrackedBox>> = BTreeMap::new();
    for b in hypotheses {
        hyp_ids.entry(b.id).or_default().insert(b.frame, b);
    }

    let gt_list: Vec<&BTreeMap<u32, &TrackedBox>> = gt_ids.values().collect();
    let hyp_list: Vec<&BTreeMap<u32, &TrackedBox>> = hyp_ids.values().collect();
    let weights: Vec<Vec<f64>> = gt_list
        .iter()
        .map(|g| {
            hyp_list
                .iter()
                .map(|h| {
                    let mut overlapping = 0usize;
                    for (frame, gb) in g.iter() {
                        if let Some(hb) = h.get(frame) {
                            if iou(&gb.bbox, &hb.bbox) >= iou_threshold {
                                overlapping += 1;
                            }
                        }
                    }
                    overlapping as f64
                })
                .collect()
        })
        .collect();

    let mut idtp = 0.0;
    if !gt_list.is_empty() && !hyp_list.is_empty() {
        for (row, assigned) in max_weight_matching(&weights).iter().enumerate() {
            if let Some(col) = assigned {
                idtp += weights[row][*col];
            }
        }
    }
    Ok(2.0 * idtp / (ground_truth.len() + hypotheses.len()) as f64)
}
