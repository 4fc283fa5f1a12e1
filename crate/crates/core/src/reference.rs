//! Independent reference implementations used by the test suites to
//! cross-check the production code. Everything here favors directness over
//! speed and shares nothing with the main implementations beyond the
//! documented contracts.

use std::collections::BTreeSet;

use crate::anno::BoundingBox;
use crate::eval::FrameBox;
use crate::tiling::Detection;
use crate::{Error, Result};

fn ref_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let x0 = a.x.max(b.x);
    let y0 = a.y.max(b.y);
    let x1 = (a.x + a.w).min(b.x + b.w);
    let y1 = (a.y + a.h).min(b.y + b.h);
    let inter = if x1 > x0 && y1 > y0 { (x1 - x0) * (y1 - y0) } else { 0.0 };
    let union = a.w * a.h + b.w * b.h - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// AP at IoU 0.5 computed by direct PR-curve integration: build the ranked
/// TP/FP list (same ordering contract as the production metric), record every
/// (recall, precision) point, then for each of the 101 recall levels scan all
/// points for the maximum precision at or beyond that recall. No precision
/// envelope, no shared code.
pub fn ap50_by_pr_scan(dets: &[Detection], gt: &[FrameBox], max_dets: usize) -> Result<f64> {
    if gt.is_empty() {
        return Err(Error::invalid_argument("reference AP needs ground truth"));
    }

    // (score, frame, input order, tp)
    let mut outcomes: Vec<(f64, u32, usize, bool)> = Vec::new();
    let frames: BTreeSet<u32> = dets.iter().map(|d| d.frame).collect();
    for frame in frames {
        let mut det_idx: Vec<usize> =
            (0..dets.len()).filter(|&i| dets[i].frame == frame).collect();
        det_idx.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score).then(a.cmp(&b)));
        det_idx.truncate(max_dets);

        let gt_idx: Vec<usize> = (0..gt.len()).filter(|&i| gt[i].frame == frame).collect();
        let mut taken: Vec<bool> = vec![false; gt_idx.len()];
        for &di in &det_idx {
            let mut best_slot = None;
            let mut best_iou = 0.0;
            for (slot, &gi) in gt_idx.iter().enumerate() {
                if taken[slot] {
                    continue;
                }
                let v = ref_iou(&dets[di].bbox, &gt[gi].bbox);
                if v >= 0.5 && v > best_iou {
                    best_iou = v;
                    best_slot = Some(slot);
                }
            }
            let tp = match best_slot {
                Some(slot) => {
                    taken[slot] = true;
                    true
                }
                None => false,
            };
            outcomes.push((dets[di].score, frame, di, tp));
        }
    }
    outcomes.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut points: Vec<(f64, f64)> = Vec::new(); // (recall, precision)
    let mut tp_so_far = 0usize;
    for (rank, outcome) in outcomes.iter().enumerate() {
        if outcome.3 {
            tp_so_far += 1;
        }
        points.push((
            tp_so_far as f64 / gt.len() as f64,
            tp_so_far as f64 / (rank + 1) as f64,
        ));
    }

    let mut sum = 0.0;
    for level in 0..=100u32 {
        let r = f64::from(level) / 100.0;
        let best = points
            .iter()
            .filter(|(recall, _)| *recall >= r)
            .map(|(_, precision)| *precision)
            .fold(0.0_f64, f64::max);
        sum += best;
    }
    Ok(sum / 101.0)
}

/// Connected components by label propagation to a fixpoint (the production
/// code uses union-find). Vertices are 0..n; edges are undirected.
pub fn connected_components_by_propagation(n: usize, edges: &[(usize, usize)]) -> Vec<BTreeSet<usize>> {
    let mut label: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for &(u, v) in edges {
            let m = label[u].min(label[v]);
            if label[u] != m {
                label[u] = m;
                changed = true;
            }
            if label[v] != m {
                label[v] = m;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut groups: std::collections::BTreeMap<usize, BTreeSet<usize>> = Default::default();
    for (v, &l) in label.iter().enumerate() {
        groups.entry(l).or_default().insert(v);
    }
    groups.into_values().collect()
}

/// Spearman rank correlation. Ties get the mean of the ranks they straddle.
/// Returns an error when either side has fewer than two values or zero
/// variance in ranks.
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid_argument("spearman needs two equal-length series"));
    }
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let mean_rank = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = mean_rank;
            }
            i = j + 1;
        }
        r
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = xs.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut num = 0.0;
    let mut den_x = 0.0;
    let mut den_y = 0.0;
    for i in 0..xs.len() {
        num += (rx[i] - mean) * (ry[i] - mean);
        den_x += (rx[i] - mean).powi(2);
        den_y += (ry[i] - mean).powi(2);
    }
    if den_x == 0.0 || den_y == 0.0 {
        return Err(Error::invalid_argument("spearman undefined for constant ranks"));
    }
    Ok(num / (den_x * den_y).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn propagation_components_split_correctly() {
        let comps = connected_components_by_propagation(5, &[(0, 1), (1, 2), (3, 4)]);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0], BTreeSet::from([0, 1, 2]));
        assert_eq!(comps[1], BTreeSet::from([3, 4]));
    }

    #[test]
    fn spearman_detects_monotone_series() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman_rho(&xs, &[10.0, 20.0, 30.0, 40.0]).unwrap(), 1.0);
        assert_eq!(spearman_rho(&xs, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert!(spearman_rho(&xs, &[1.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn spearman_handles_ties() {
        let rho = spearman_rho(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 2.0, 3.0]).unwrap();
        assert!(rho > 0.9 && rho <= 1.0);
    }
}
