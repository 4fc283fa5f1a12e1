//! Detection, multi-object-tracking, and group-detection metrics, plus the
//! CSV/JSON report format shared by the evaluation commands.

mod assignment;
mod det;
mod group;
mod mot;
pub mod report;

pub use assignment::max_weight_matching;
pub use det::{average_precision_50, average_recall, evaluate_detections, DetEvalResult};
pub use group::{group_half_prf, GroupEvalResult, GroupMatch};
pub use mot::{clear_mot, idf1, MotResult};
pub use report::{aggregate, to_csv, to_json, MetricRow, CSV_HEADER};

use serde::{Deserialize, Serialize};

use crate::anno::{densify_track, BoundingBox, BoxKind, Scene};
use crate::Result;

/// Default per-frame detection cap used by AP/AR.
pub const MAX_DETECTIONS_PER_FRAME: usize = 500;

/// IoU above which a detection counts as hitting a ground-truth box, and the
/// gate used by the tracking metrics.
pub const MATCH_IOU: f64 = 0.5;

/// An unscored, identity-free ground-truth box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameBox {
    pub frame: u32,
    #[serde(flatten)]
    pub bbox: BoundingBox,
}

/// A box that belongs to an identity — one side of a tracking comparison.
/// Serializes flat as `{id, frame, x, y, w, h, kind}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackedBox {
    pub id: u32,
    pub frame: u32,
    #[serde(flatten)]
    pub bbox: BoundingBox,
}

/// Per-frame ground-truth boxes of one kind, densified from keyframes.
/// Ignore-flagged tracks are excluded.
pub fn gt_boxes_from_scene(scene: &Scene, kind: BoxKind) -> Result<Vec<FrameBox>> {
    let mut out = Vec::new();
    for track in &scene.tracks {
        if track.ignore {
            continue;
        }
        for entry in densify_track(track)? {
            if entry.bbox.kind == kind {
                out.push(FrameBox { frame: entry.frame, bbox: entry.bbox });
            }
        }
    }
    Ok(out)
}

/// Densified ground-truth tracks for the tracking metrics; skips
/// ignore-flagged tracks.
pub fn gt_tracks_from_scene(scene: &Scene) -> Result<Vec<TrackedBox>> {
    let mut out = Vec::new();
    for track in &scene.tracks {
        if track.ignore {
            continue;
        }
        for entry in densify_track(track)? {
            out.push(TrackedBox { id: track.person_id, frame: entry.frame, bbox: entry.bbox });
        }
    }
    Ok(out)
}
