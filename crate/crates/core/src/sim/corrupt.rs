//! Detector/tracker noise applied to ground truth, for exercising the
//! evaluation suite with known error budgets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::collections::BTreeMap;

use super::{gauss, poisson, WIDTH_RATIO};
use crate::anno::{densify_track, BoundingBox, BoxKind, Scene};
use crate::error::{Error, Result};
use crate::eval::TrackedBox;
use crate::tiling::Detection;

fn boxes_overlap(a: &BoundingBox, b: &BoundingBox) -> bool {
    a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h
}

/// Degrades densified ground truth into detector output and tracker output.
///
/// Per frame, in ascending frame order: identity swaps are rolled for every
/// overlapping pair (a swap sticks for the rest of the scene), then each box
/// is dropped with probability `fn_rate` or emitted translated by gaussian
/// jitter with a confidence in [0.5, 1], then `Poisson(fp_rate)` false boxes
/// are added with confidences in [0, 0.6] and fresh one-frame identities.
/// Every random draw happens whether or not its rate is zero, so the same
/// seed walks the same stream under any rate mix, and all rates at zero
/// return the ground truth unchanged.
pub fn corrupt_detections(
    scene: &Scene,
    fn_rate: f64,
    fp_rate: f64,
    jitter_std: f64,
    idswitch_rate: f64,
    seed: u64,
) -> Result<(Vec<Detection>, Vec<TrackedBox>)> {
    for (name, rate) in [("fn_rate", fn_rate), ("idswitch_rate", idswitch_rate)] {
        if !(rate.is_finite() && (0.0..=1.0).contains(&rate)) {
            return Err(Error::invalid_argument(format!("{name} must lie in [0, 1]")));
        }
    }
    if !(fp_rate.is_finite() && fp_rate >= 0.0) {
        return Err(Error::invalid_argument("fp_rate must be nonnegative"));
    }
    if !(jitter_std.is_finite() && jitter_std >= 0.0) {
        return Err(Error::invalid_argument("jitter_std must be nonnegative"));
    }

    let mut per_frame: BTreeMap<u32, Vec<(u32, BoundingBox)>> = BTreeMap::new();
    let mut max_pid = 0u32;
    for track in &scene.tracks {
        if track.ignore {
            continue;
        }
        max_pid = max_pid.max(track.person_id);
        for entry in densify_track(track)? {
            per_frame.entry(entry.frame).or_default().push((track.person_id, entry.bbox));
        }
    }
    for boxes in per_frame.values_mut() {
        boxes.sort_by_key(|&(pid, _)| pid);
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut id_map: BTreeMap<u32, u32> = BTreeMap::new();
    for boxes in per_frame.values() {
        for &(pid, _) in boxes {
            id_map.entry(pid).or_insert(pid);
        }
    }
    let mut next_fake = max_pid + 1;
    let mean_h = {
        let h = scene.mean_box_height();
        if h > 0.0 {
            h
        } else {
            100.0
        }
    };
    let (fw, fh) = (scene.meta.width as f64, scene.meta.height as f64);

    let mut detections = Vec::new();
    let mut hypotheses = Vec::new();
    static EMPTY: Vec<(u32, BoundingBox)> = Vec::new();
    for frame in 0..scene.meta.num_frames {
        let boxes = per_frame.get(&frame).unwrap_or(&EMPTY);
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                if boxes_overlap(&boxes[i].1, &boxes[j].1)
                    && rng.gen::<f64>() < idswitch_rate
                {
                    let (a, b) = (boxes[i].0, boxes[j].0);
                    let ia = id_map[&a];
                    let ib = id_map[&b];
                    id_map.insert(a, ib);
                    id_map.insert(b, ia);
                }
            }
        }
        for &(pid, bbox) in boxes {
            let drop = rng.gen::<f64>() < fn_rate;
            let dx = gauss(&mut rng) * jitter_std;
            let dy = gauss(&mut rng) * jitter_std;
            let score = 0.5 + 0.5 * rng.gen::<f64>();
            if drop {
                continue;
            }
            let shifted = BoundingBox::new(bbox.x + dx, bbox.y + dy, bbox.w, bbox.h, bbox.kind);
            detections.push(Detection { frame, bbox: shifted, score });
            hypotheses.push(TrackedBox { id: id_map[&pid], frame, bbox: shifted });
        }
        let fakes = poisson(&mut rng, fp_rate);
        for _ in 0..fakes {
            let h = mean_h * (0.7 + 0.6 * rng.gen::<f64>());
            let w = WIDTH_RATIO * h;
            let x = rng.gen::<f64>() * (fw - w).max(0.0);
            let y = rng.gen::<f64>() * (fh - h).max(0.0);
            let score = 0.6 * rng.gen::<f64>();
            let bbox = BoundingBox::new(x, y, w, h, BoxKind::VisibleBody);
            detections.push(Detection { frame, bbox, score });
            hypotheses.push(TrackedBox { id: next_fake, frame, bbox });
            next_fake += 1;
        }
    }
    Ok((detections, hypotheses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anno::{FaceOrientation, Keyframe, Occlusion, SceneMeta, Track};
    use crate::eval::{clear_mot, gt_tracks_from_scene};
    use crate::sim::{generate_scene, SimConfig};

    fn sim_scene() -> Scene {
        let cfg = SimConfig {
            num_frames: 61,
            keyframe_interval: 20,
            n_groups: 3,
            n_singles: 2,
            seed: 3,
            ..SimConfig::default()
        };
        generate_scene(&cfg).unwrap().0
    }

    #[test]
    fn zero_rates_return_ground_truth_with_perfect_mota() {
        let scene = sim_scene();
        let (dets, hyps) = corrupt_detections(&scene, 0.0, 0.0, 0.0, 0.0, 5).unwrap();
        let mut gt = gt_tracks_from_scene(&scene).unwrap();
        gt.sort_by_key(|b| (b.frame, b.id));
        let mut got = hyps.clone();
        got.sort_by_key(|b| (b.frame, b.id));
        assert_eq!(gt.len(), got.len());
        for (g, h) in gt.iter().zip(&got) {
            assert_eq!(g.id, h.id);
            assert_eq!(g.bbox, h.bbox);
        }
        assert_eq!(dets.len(), gt.len());
        let mot = clear_mot(&hyps, &gt, 0.5).unwrap();
        assert_eq!(mot.mota, 1.0);
        assert_eq!(mot.id_switches, 0);
    }

    #[test]
    fn full_miss_rate_drops_everything() {
        let scene = sim_scene();
        let (dets, hyps) = corrupt_detections(&scene, 1.0, 0.0, 0.0, 0.0, 5).unwrap();
        assert!(dets.is_empty());
        assert!(hyps.is_empty());
    }

    #[test]
    fn miss_rate_thins_output_binomially() {
        let scene = sim_scene();
        let total = gt_tracks_from_scene(&scene).unwrap().len();
        let (dets, _) = corrupt_detections(&scene, 0.3, 0.0, 0.0, 0.0, 5).unwrap();
        let kept = dets.len() as f64;
        let expected = 0.7 * total as f64;
        // 5 sigma of Binomial(total, 0.7).
        let slack = 5.0 * (total as f64 * 0.3 * 0.7).sqrt();
        assert!((kept - expected).abs() < slack, "kept {kept} of {total}");
    }

    #[test]
    fn jitter_translates_without_resizing() {
        let scene = sim_scene();
        let (dets, _) = corrupt_detections(&scene, 0.0, 0.0, 4.0, 0.0, 5).unwrap();
        let mut gt = gt_tracks_from_scene(&scene).unwrap();
        gt.sort_by_key(|b| (b.frame, b.id));
        let mut moved = 0usize;
        for (d, g) in dets.iter().zip(&gt) {
            assert_eq!(d.bbox.w, g.bbox.w);
            assert_eq!(d.bbox.h, g.bbox.h);
            if d.bbox.x != g.bbox.x || d.bbox.y != g.bbox.y {
                moved += 1;
            }
        }
        assert!(moved > dets.len() / 2);
    }

    #[test]
    fn false_positives_add_low_confidence_one_frame_tracks() {
        let scene = sim_scene();
        let gt_len = gt_tracks_from_scene(&scene).unwrap().len();
        let (dets, hyps) = corrupt_detections(&scene, 0.0, 0.5, 0.0, 0.0, 5).unwrap();
        assert!(dets.len() > gt_len);
        let max_pid = scene.tracks.iter().map(|t| t.person_id).max().unwrap();
        let fakes: Vec<_> = hyps.iter().filter(|h| h.id > max_pid).collect();
        assert_eq!(fakes.len(), dets.len() - gt_len);
        // Fresh id per false box, never reused across frames.
        let mut ids: Vec<u32> = fakes.iter().map(|h| h.id).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), fakes.len());
        for d in dets.iter().filter(|d| d.score < 0.5) {
            assert!(d.score <= 0.6);
        }
    }

    /// Two tracks overlapping from their first frame; an idswitch_rate of 1
    /// must swap their hypothesis ids somewhere.
    #[test]
    fn crossing_tracks_swap_identities() {
        let kf = |frame: u32, x: f64| Keyframe {
            frame,
            bbox: BoundingBox::new(x, 10.0, 20.0, 40.0, BoxKind::VisibleBody),
            occlusion: Occlusion::Without,
            face_orientation: Some(FaceOrientation::E),
        };
        let scene = Scene {
            meta: SceneMeta { width: 400, height: 200, fps: 10.0, num_frames: 11, keyframe_interval: 5 },
            tracks: vec![
                Track { person_id: 1, attributes: None, ignore: false, keyframes: vec![kf(0, 100.0), kf(10, 110.0)] },
                Track { person_id: 2, attributes: None, ignore: false, keyframes: vec![kf(0, 105.0), kf(10, 95.0)] },
            ],
            groups: vec![],
            interactions: vec![],
        };
        scene.validate().unwrap();
        let (_, hyps) = corrupt_detections(&scene, 0.0, 0.0, 0.0, 1.0, 9).unwrap();
        // Swaps permute ids within a frame, never invent new ones.
        for f in 0..11 {
            let mut ids: Vec<u32> = hyps.iter().filter(|h| h.frame == f).map(|h| h.id).collect();
            ids.sort_unstable();
            assert_eq!(ids, vec![1, 2]);
        }
        let first = &hyps[0];
        assert_eq!(first.frame, 0);
        // Frame 0 rolls a guaranteed swap, so the box of person 1 carries
        // id 2.
        assert_eq!(first.id, 2);
    }

    #[test]
    fn same_seed_reproduces_corruption() {
        let scene = sim_scene();
        let a = corrupt_detections(&scene, 0.2, 0.3, 2.0, 0.1, 42).unwrap();
        let b = corrupt_detections(&scene, 0.2, 0.3, 2.0, 0.1, 42).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        let c = corrupt_detections(&scene, 0.2, 0.3, 2.0, 0.1, 43).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn bad_rates_are_rejected() {
        let scene = sim_scene();
        assert!(corrupt_detections(&scene, 1.5, 0.0, 0.0, 0.0, 0).is_err());
        assert!(corrupt_detections(&scene, 0.0, -1.0, 0.0, 0.0, 0).is_err());
        assert!(corrupt_detections(&scene, 0.0, 0.0, -0.1, 0.0, 0).is_err());
        assert!(corrupt_detections(&scene, 0.0, 0.0, 0.0, 2.0, 0).is_err());
    }
}
