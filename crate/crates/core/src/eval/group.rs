//! Group detection scored with the half-overlap rule: a predicted group and
//! a ground-truth group match iff their shared members exceed half of the
//! larger group, strictly.

use serde::{Deserialize, Serialize};

use crate::anno::GroupMembers;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupMatch {
    pub predicted_id: u32,
    pub ground_truth_id: u32,
    /// |intersection| / max(|predicted|, |ground truth|), in (0.5, 1].
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEvalResult {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matches: Vec<GroupMatch>,
}

/// Precision/recall/F1 under one-to-one greedy matching by descending
/// overlap; overlap ties resolve to the smaller predicted id, then the
/// smaller ground-truth id. An empty side yields zero for its rate unless
/// both sides are empty, which counts as vacuously perfect.
pub fn group_half_prf(predicted: &[GroupMembers], ground_truth: &[GroupMembers]) -> GroupEvalResult {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (pi, p) in predicted.iter().enumerate() {
        for (gi, g) in ground_truth.iter().enumerate() {
            let larger = p.members.len().max(g.members.len());
            if larger == 0 {
                continue;
            }
            let shared = p.members.intersection(&g.members).count();
            let overlap = shared as f64 / larger as f64;
            if overlap > 0.5 {
                candidates.push((overlap, pi, gi));
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(predicted[a.1].group_id.cmp(&predicted[b.1].group_id))
            .then(ground_truth[a.2].group_id.cmp(&ground_truth[b.2].group_id))
    });

    let mut pred_used = vec![false; predicted.len()];
    let mut gt_used = vec![false; ground_truth.len()];
    let mut matches = Vec::new();
    for (overlap, pi, gi) in candidates {
        if pred_used[pi] || gt_used[gi] {
            continue;
        }
        pred_used[pi] = true;
        gt_used[gi] = true;
        matches.push(GroupMatch {
            predicted_id: predicted[pi].group_id,
            ground_truth_id: ground_truth[gi].group_id,
            overlap,
        });
    }

    let hits = matches.len() as f64;
    let precision = if predicted.is_empty() {
        if ground_truth.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        hits / predicted.len() as f64
    };
    let recall = if ground_truth.is_empty() {
        if predicted.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        hits / ground_truth.len() as f64
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    GroupEvalResult { precision, recall, f1, matches }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn g(id: u32, members: &[u32]) -> GroupMembers {
        GroupMembers { group_id: id, members: members.iter().copied().collect() }
    }

    #[test]
    fn majority_overlap_matches() {
        let pred = vec![g(0, &[1, 2, 3])];
        let gt = vec![g(5, &[1, 2, 3, 4, 5])];
        let r = group_half_prf(&pred, &gt);
        assert_eq!(r.matches.len(), 1);
        assert_eq!(r.matches[0].overlap, 3.0 / 5.0);
        assert_eq!((r.precision, r.recall), (1.0, 1.0));
        assert_eq!(r.f1, 1.0);
    }

    #[test]
    fn exactly_half_does_not_match() {
        let pred = vec![g(0, &[1, 2])];
        let gt = vec![g(5, &[1, 2, 3, 4])];
        let r = group_half_prf(&pred, &gt);
        assert!(r.matches.is_empty());
        assert_eq!(r.f1, 0.0);
    }

    #[test]
    fn identical_sets_are_perfect() {
        let sets = vec![g(0, &[1, 2]), g(1, &[3, 4, 5])];
        let r = group_half_prf(&sets, &sets);
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn each_group_matches_at_most_once() {
        // two predictions both overlapping the same GT group; only one counts
        let pred = vec![g(0, &[1, 2, 3]), g(1, &[1, 2, 4])];
        let gt = vec![g(5, &[1, 2, 3])];
        let r = group_half_prf(&pred, &gt);
        assert_eq!(r.matches.len(), 1);
        assert_eq!(r.matches[0].predicted_id, 0, "higher overlap wins");
        assert_eq!(r.precision, 0.5);
        assert_eq!(r.recall, 1.0);
    }

    #[test]
    fn overlap_ties_prefer_smaller_predicted_id() {
        let pred = vec![g(7, &[1, 2]), g(3, &[1, 2])];
        let gt = vec![g(0, &[1, 2])];
        let r = group_half_prf(&pred, &gt);
        assert_eq!(r.matches.len(), 1);
        assert_eq!(r.matches[0].predicted_id, 3);
    }

    #[test]
    fn empty_sides() {
        let some = vec![g(0, &[1, 2])];
        let none: Vec<GroupMembers> = vec![];
        let r = group_half_prf(&none, &some);
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
        let r = group_half_prf(&some, &none);
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
        let r = group_half_prf(&none, &none);
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn f1_is_the_harmonic_mean() {
        // rounded P/R pairs must land within a thousandth of their F1
        for (p, r, f1) in
            [(0.293_f64, 0.160, 0.207), (0.237, 0.120, 0.160), (0.244, 0.133, 0.172)]
        {
            let computed = 2.0 * p * r / (p + r);
            assert!(
                (computed - f1).abs() <= 0.001,
                "harmonic mean of ({p}, {r}) = {computed}, expected about {f1}"
            );
        }
    }

    #[test]
    fn respects_btreeset_semantics() {
        let a = g(0, &[2, 1, 2]);
        assert_eq!(a.members, BTreeSet::from([1, 2]));
    }
}
