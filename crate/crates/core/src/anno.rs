//! Annotation data model: scenes hold sparsely keyframed tracks, social
//! groups over track ids, and pairwise interaction intervals.
//!
//! Keyframes store boxes every `keyframe_interval` frames (plus the final
//! frame); [`densify_track`] reconstructs per-frame boxes by linear
//! interpolation. Categorical state (occlusion, face orientation) is carried
//! forward from the previous keyframe rather than interpolated.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which body region a box outlines. `HeadPoint` is a degenerate box
/// (w = h = 0) marking the head center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxKind {
    VisibleBody,
    FullBody,
    Head,
    HeadPoint,
}

/// Axis-aligned box, top-left origin, sizes in pixels. Fractional
/// coordinates are legal (interpolated frames land between pixels).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub kind: BoxKind,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64, kind: BoxKind) -> Self {
        BoundingBox { x, y, w, h, kind }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    /// Area of overlap with `other`; 0 when disjoint.
    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let ix = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let iy = (self.y + self.h).min(other.y + other.h) - self.y.max(other.y);
        if ix > 0.0 && iy > 0.0 {
            ix * iy
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("x", self.x), ("y", self.y), ("w", self.w), ("h", self.h)] {
            if !v.is_finite() {
                return Err(Error::validation(format!("box field `{name}` is not finite")));
            }
        }
        if self.w < 0.0 || self.h < 0.0 {
            return Err(Error::validation(format!(
                "box has negative size {}x{}",
                self.w, self.h
            )));
        }
        if self.kind == BoxKind::HeadPoint && (self.w != 0.0 || self.h != 0.0) {
            return Err(Error::validation("head_point box must have zero size"));
        }
        Ok(())
    }
}

/// How much of the person the visible-body box captures, relative to the
/// amodal full-body estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Occlusion {
    Without,
    Partial,
    Heavy,
    Disappearing,
}

/// Face orientation quantized to eight compass bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceOrientation {
    E,
    Ne,
    N,
    Nw,
    W,
    Sw,
    S,
    Se,
}

impl FaceOrientation {
    pub const ALL: [FaceOrientation; 8] = [
        FaceOrientation::E,
        FaceOrientation::Ne,
        FaceOrientation::N,
        FaceOrientation::Nw,
        FaceOrientation::W,
        FaceOrientation::Sw,
        FaceOrientation::S,
        FaceOrientation::Se,
    ];

    /// Bin center as a math-convention angle in radians: E = 0, N = pi/2,
    /// counter-clockwise, in [0, 2*pi).
    pub fn angle(self) -> f64 {
        let idx = match self {
            FaceOrientation::E => 0,
            FaceOrientation::Ne => 1,
            FaceOrientation::N => 2,
            FaceOrientation::Nw => 3,
            FaceOrientation::W => 4,
            FaceOrientation::Sw => 5,
            FaceOrientation::S => 6,
            FaceOrientation::Se => 7,
        };
        idx as f64 * std::f64::consts::FRAC_PI_4
    }

    /// Nearest compass bin for an angle in radians (math convention).
    pub fn from_angle(angle: f64) -> Self {
        let tau = std::f64::consts::TAU;
        let a = angle.rem_euclid(tau);
        let idx = ((a / std::f64::consts::FRAC_PI_4).round() as usize) % 8;
        Self::ALL[idx]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgeClass {
    Child,
    Youth,
    MiddleAged,
    Elderly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostureClass {
    Walking,
    Standing,
    Sitting,
    Riding,
    HeldInArms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiderClass {
    Bicycle,
    Tricycle,
    Motorcycle,
}

/// Per-track categorical attributes. All optional; absent means unlabeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TrackAttributes {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<AgeClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub posture: Option<PostureClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rider: Option<RiderClass>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub frame: u32,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub occlusion: Occlusion,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face_orientation: Option<FaceOrientation>,
}

fn is_false(v: &bool) -> bool {
    !*v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub person_id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attributes: Option<TrackAttributes>,
    /// Excluded from metric ground truth when set (crowds too dense or too
    /// small to annotate reliably).
    #[serde(default, skip_serializing_if = "is_false")]
    pub ignore: bool,
    pub keyframes: Vec<Keyframe>,
}

impl Track {
    /// Frame index of the first keyframe. Panics on an empty track; tracks
    /// in validated scenes always have at least one keyframe.
    pub fn first_frame(&self) -> u32 {
        self.keyframes.first().expect("track has no keyframes").frame
    }

    pub fn last_frame(&self) -> u32 {
        self.keyframes.last().expect("track has no keyframes").frame
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupCategory {
    Acquaintance,
    Family,
    Business,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntimacyLevel {
    Low,
    Middle,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub group_id: u32,
    /// Person ids; order-free, at least two members, disjoint across groups.
    pub members: BTreeSet<u32>,
    pub category: GroupCategory,
    pub intimacy: IntimacyLevel,
}

/// The `groups` shape stripped of social labels: an id plus a member set.
/// This is what a group detector predicts and what the group metric
/// consumes on both sides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupMembers {
    pub group_id: u32,
    pub members: BTreeSet<u32>,
}

impl From<&Group> for GroupMembers {
    fn from(g: &Group) -> Self {
        GroupMembers { group_id: g.group_id, members: g.members.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionType {
    PhysicalContact,
    BodyLanguage,
    FaceExpressions,
    EyeContact,
    Talking,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceLevel {
    Low,
    Middle,
    High,
}

/// A labeled interaction interval between two people of the same group.
/// `begin`/`end` are inclusive frame indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub a: u32,
    pub b: u32,
    pub types: Vec<InteractionType>,
    pub begin: u32,
    pub end: u32,
    pub confidence: ConfidenceLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneMeta {
    pub width: u32,
    pub height: u32,
    pub fps: f64,
    pub num_frames: u32,
    pub keyframe_interval: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub meta: SceneMeta,
    pub tracks: Vec<Track>,
    #[serde(default)]
    pub groups: Vec<Group>,
    #[serde(default)]
    pub interactions: Vec<Interaction>,
}

impl Scene {
    /// Checks every structural invariant; the error message names the first
    /// offending entity.
    pub fn validate(&self) -> Result<()> {
        let m = &self.meta;
        if m.width == 0 || m.height == 0 {
            return Err(Error::validation("frame size must be at least 1x1"));
        }
        if !(m.fps.is_finite() && m.fps > 0.0) {
            return Err(Error::validation("fps must be positive and finite"));
        }
        if m.num_frames == 0 {
            return Err(Error::validation("num_frames must be at least 1"));
        }
        if m.keyframe_interval == 0 {
            return Err(Error::validation("keyframe_interval must be at least 1"));
        }

        let mut ids = HashSet::new();
        for track in &self.tracks {
            let pid = track.person_id;
            if !ids.insert(pid) {
                return Err(Error::validation(format!("duplicate person_id {pid}")));
            }
            if track.keyframes.is_empty() {
                return Err(Error::validation(format!("track {pid}: no keyframes")));
            }
            let mut prev: Option<u32> = None;
            for (i, kf) in track.keyframes.iter().enumerate() {
                if let Some(p) = prev {
                    if kf.frame <= p {
                        return Err(Error::validation(format!(
                            "track {pid}: keyframe {i} frame {} does not increase past {p}",
                            kf.frame
                        )));
                    }
                }
                prev = Some(kf.frame);
                if kf.frame >= m.num_frames {
                    return Err(Error::validation(format!(
                        "track {pid}: keyframe frame {} outside scene of {} frames",
                        kf.frame, m.num_frames
                    )));
                }
                kf.bbox
                    .validate()
                    .map_err(|e| Error::validation(format!("track {pid}, keyframe {i}: {e}")))?;
            }
        }

        let mut group_ids = HashSet::new();
        let mut member_to_group: HashMap<u32, u32> = HashMap::new();
        for group in &self.groups {
            let gid = group.group_id;
            if !group_ids.insert(gid) {
                return Err(Error::validation(format!("duplicate group_id {gid}")));
            }
            if group.members.len() < 2 {
                return Err(Error::validation(format!(
                    "group {gid}: needs at least 2 members, has {}",
                    group.members.len()
                )));
            }
            for &pid in &group.members {
                if !ids.contains(&pid) {
                    return Err(Error::validation(format!(
                        "group {gid}: member {pid} is not a track"
                    )));
                }
                if let Some(other) = member_to_group.insert(pid, gid) {
                    return Err(Error::validation(format!(
                        "person {pid} belongs to both group {other} and group {gid}"
                    )));
                }
            }
        }

        for (i, it) in self.interactions.iter().enumerate() {
            if it.a == it.b {
                return Err(Error::validation(format!(
                    "interaction {i}: endpoints are the same person {}",
                    it.a
                )));
            }
            for pid in [it.a, it.b] {
                if !ids.contains(&pid) {
                    return Err(Error::validation(format!(
                        "interaction {i}: person {pid} is not a track"
                    )));
                }
            }
            if it.types.is_empty() {
                return Err(Error::validation(format!("interaction {i}: empty type list")));
            }
            if it.begin > it.end {
                return Err(Error::validation(format!(
                    "interaction {i}: begin {} after end {}",
                    it.begin, it.end
                )));
            }
            if it.end >= m.num_frames {
                return Err(Error::validation(format!(
                    "interaction {i}: end {} outside scene of {} frames",
                    it.end, m.num_frames
                )));
            }
            match (member_to_group.get(&it.a), member_to_group.get(&it.b)) {
                (Some(ga), Some(gb)) if ga == gb => {}
                _ => {
                    return Err(Error::validation(format!(
                        "interaction {i}: persons {} and {} do not share a group",
                        it.a, it.b
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn track(&self, person_id: u32) -> Option<&Track> {
        self.tracks.iter().find(|t| t.person_id == person_id)
    }

    /// Mean keyframe box height over all tracks; 0 for a trackless scene.
    pub fn mean_box_height(&self) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for t in &self.tracks {
            for kf in &t.keyframes {
                sum += kf.bbox.h;
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

/// Per-frame state reconstructed from keyframes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseEntry {
    pub frame: u32,
    pub bbox: BoundingBox,
    pub occlusion: Occlusion,
    pub face_orientation: Option<FaceOrientation>,
}

/// Expands a track to one entry per frame between its first and last
/// keyframe. Box coordinates and sizes interpolate linearly; occlusion and
/// face orientation hold the previous keyframe's value. Entries at keyframe
/// positions reproduce the stored keyframe bit for bit.
pub fn densify_track(track: &Track) -> Result<Vec<DenseEntry>> {
    if track.keyframes.is_empty() {
        return Err(Error::invalid_argument(format!(
            "track {}: cannot densify without keyframes",
            track.person_id
        )));
    }
    for win in track.keyframes.windows(2) {
        if win[1].frame <= win[0].frame {
            return Err(Error::invalid_argument(format!(
                "track {}: keyframes not strictly increasing ({} then {})",
                track.person_id, win[0].frame, win[1].frame
            )));
        }
    }

    let as_entry = |kf: &Keyframe| DenseEntry {
        frame: kf.frame,
        bbox: kf.bbox,
        occlusion: kf.occlusion,
        face_orientation: kf.face_orientation,
    };

    let mut out = Vec::new();
    for win in track.keyframes.windows(2) {
        let (a, b) = (&win[0], &win[1]);
        out.push(as_entry(a));
        let span = (b.frame - a.frame) as f64;
        for frame in (a.frame + 1)..b.frame {
            let alpha = (frame - a.frame) as f64 / span;
            let lerp = |p: f64, q: f64| p + alpha * (q - p);
            out.push(DenseEntry {
                frame,
                bbox: BoundingBox {
                    x: lerp(a.bbox.x, b.bbox.x),
                    y: lerp(a.bbox.y, b.bbox.y),
                    w: lerp(a.bbox.w, b.bbox.w),
                    h: lerp(a.bbox.h, b.bbox.h),
                    kind: a.bbox.kind,
                },
                occlusion: a.occlusion,
                face_orientation: a.face_orientation,
            });
        }
    }
    out.push(as_entry(track.keyframes.last().unwrap()));
    Ok(out)
}

/// Fraction of the full-body box covered by the visible-body box.
pub fn occlusion_ratio(visible: &BoundingBox, full: &BoundingBox) -> Result<f64> {
    let full_area = full.area();
    if !(full_area > 0.0) {
        return Err(Error::invalid_argument(
            "occlusion ratio needs a full-body box with positive area",
        ));
    }
    Ok(visible.intersection_area(full) / full_area)
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene> {
    let text = std::fs::read_to_string(path)?;
    let scene: Scene = serde_json::from_str(&text)?;
    scene.validate()?;
    Ok(scene)
}

/// Validates and writes the scene as pretty-printed JSON. Output is
/// deterministic: struct fields serialize in declaration order and group
/// members are stored sorted.
pub fn save_scene(path: impl AsRef<Path>, scene: &Scene) -> Result<()> {
    scene.validate()?;
    let mut text = serde_json::to_string_pretty(scene)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kf(frame: u32, x: f64, y: f64) -> Keyframe {
        Keyframe {
            frame,
            bbox: BoundingBox::new(x, y, 10.0, 20.0, BoxKind::VisibleBody),
            occlusion: Occlusion::Without,
            face_orientation: None,
        }
    }

    fn track(person_id: u32, keyframes: Vec<Keyframe>) -> Track {
        Track { person_id, attributes: None, ignore: false, keyframes }
    }

    fn small_scene() -> Scene {
        Scene {
            meta: SceneMeta {
                width: 1000,
                height: 800,
                fps: 30.0,
                num_frames: 100,
                keyframe_interval: 6,
            },
            tracks: vec![
                track(1, vec![kf(0, 0.0, 0.0), kf(6, 12.0, 6.0)]),
                track(2, vec![kf(0, 50.0, 50.0), kf(6, 60.0, 50.0)]),
                track(3, vec![kf(0, 500.0, 400.0)]),
            ],
            groups: vec![Group {
                group_id: 0,
                members: BTreeSet::from([1, 2]),
                category: GroupCategory::Family,
                intimacy: IntimacyLevel::High,
            }],
            interactions: vec![Interaction {
                a: 1,
                b: 2,
                types: vec![InteractionType::Talking],
                begin: 0,
                end: 6,
                confidence: ConfidenceLevel::High,
            }],
        }
    }

    #[test]
    fn densify_interpolates_the_midpoint() {
        let t = track(1, vec![kf(0, 0.0, 0.0), kf(6, 12.0, 6.0)]);
        let dense = densify_track(&t).unwrap();
        assert_eq!(dense.len(), 7);
        let mid = &dense[3];
        assert_eq!(mid.frame, 3);
        assert_eq!(mid.bbox.x, 6.0);
        assert_eq!(mid.bbox.y, 3.0);
    }

    #[test]
    fn densify_reproduces_keyframes_bit_for_bit() {
        let t = track(
            1,
            vec![kf(2, 0.1, 0.7), kf(9, 13.37, 2.25), kf(15, -4.5, 100.125)],
        );
        let dense = densify_track(&t).unwrap();
        assert_eq!(dense.first().unwrap().frame, 2);
        assert_eq!(dense.last().unwrap().frame, 15);
        assert_eq!(dense.len(), 14);
        for kf in &t.keyframes {
            let entry = dense.iter().find(|e| e.frame == kf.frame).unwrap();
            assert_eq!(entry.bbox.x.to_bits(), kf.bbox.x.to_bits());
            assert_eq!(entry.bbox.y.to_bits(), kf.bbox.y.to_bits());
            assert_eq!(entry.bbox.w.to_bits(), kf.bbox.w.to_bits());
            assert_eq!(entry.bbox.h.to_bits(), kf.bbox.h.to_bits());
        }
    }

    #[test]
    fn densify_single_keyframe_yields_that_keyframe() {
        let t = track(7, vec![kf(42, 1.0, 2.0)]);
        let dense = densify_track(&t).unwrap();
        assert_eq!(dense.len(), 1);
        assert_eq!(dense[0].frame, 42);
    }

    #[test]
    fn densify_rejects_empty_and_unsorted() {
        assert!(densify_track(&track(1, vec![])).is_err());
        assert!(densify_track(&track(1, vec![kf(5, 0.0, 0.0), kf(5, 1.0, 1.0)])).is_err());
        assert!(densify_track(&track(1, vec![kf(5, 0.0, 0.0), kf(3, 1.0, 1.0)])).is_err());
    }

    #[test]
    fn densify_carries_occlusion_forward() {
        let mut a = kf(0, 0.0, 0.0);
        a.occlusion = Occlusion::Heavy;
        let b = kf(4, 4.0, 0.0);
        let dense = densify_track(&track(1, vec![a, b])).unwrap();
        assert_eq!(dense[2].occlusion, Occlusion::Heavy);
        assert_eq!(dense[4].occlusion, Occlusion::Without);
    }

    #[test]
    fn occlusion_ratio_half_covered() {
        let full = BoundingBox::new(0.0, 0.0, 10.0, 20.0, BoxKind::FullBody);
        let visible = BoundingBox::new(0.0, 0.0, 10.0, 10.0, BoxKind::VisibleBody);
        assert_eq!(occlusion_ratio(&visible, &full).unwrap(), 0.5);
    }

    #[test]
    fn occlusion_ratio_rejects_zero_area_full_box() {
        let full = BoundingBox::new(0.0, 0.0, 0.0, 20.0, BoxKind::FullBody);
        let visible = BoundingBox::new(0.0, 0.0, 5.0, 10.0, BoxKind::VisibleBody);
        assert!(occlusion_ratio(&visible, &full).is_err());
    }

    #[test]
    fn occlusion_ratio_stays_in_unit_interval() {
        let full = BoundingBox::new(0.0, 0.0, 10.0, 10.0, BoxKind::FullBody);
        let outside = BoundingBox::new(100.0, 100.0, 5.0, 5.0, BoxKind::VisibleBody);
        assert_eq!(occlusion_ratio(&outside, &full).unwrap(), 0.0);
        let bigger = BoundingBox::new(-5.0, -5.0, 20.0, 20.0, BoxKind::VisibleBody);
        assert_eq!(occlusion_ratio(&bigger, &full).unwrap(), 1.0);
    }

    #[test]
    fn scene_roundtrip_is_identity_and_resave_is_byte_identical() {
        let scene = small_scene();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("scene.json");
        let p2 = dir.path().join("scene2.json");
        save_scene(&p1, &scene).unwrap();
        let loaded = load_scene(&p1).unwrap();
        assert_eq!(loaded, scene);
        save_scene(&p2, &loaded).unwrap();
        assert_eq!(
            std::fs::read(&p1).unwrap(),
            std::fs::read(&p2).unwrap(),
            "serialize(parse(serialize(x))) must be byte-identical"
        );
    }

    #[test]
    fn validate_rejects_duplicate_person_ids() {
        let mut scene = small_scene();
        scene.tracks[1].person_id = 1;
        // group membership now references a duplicate id; the id check fires first
        assert!(matches!(scene.validate(), Err(Error::Validation(_))));
    }

    #[test]
    fn validate_rejects_bad_keyframe_order_and_range() {
        let mut scene = small_scene();
        scene.tracks[0].keyframes[1].frame = 0;
        assert!(scene.validate().is_err());

        let mut scene = small_scene();
        scene.tracks[0].keyframes[1].frame = 100; // == num_frames
        assert!(scene.validate().is_err());
    }

    #[test]
    fn validate_rejects_bad_groups() {
        let mut scene = small_scene();
        scene.groups[0].members = BTreeSet::from([1]);
        assert!(scene.validate().is_err());

        let mut scene = small_scene();
        scene.groups[0].members = BTreeSet::from([1, 99]);
        assert!(scene.validate().is_err());

        let mut scene = small_scene();
        scene.groups.push(Group {
            group_id: 1,
            members: BTreeSet::from([2, 3]),
            category: GroupCategory::Business,
            intimacy: IntimacyLevel::Low,
        });
        // person 2 would belong to two groups
        assert!(scene.validate().is_err());
    }

    #[test]
    fn validate_rejects_bad_interactions() {
        let mut scene = small_scene();
        scene.interactions[0].b = 3; // not in a common group
        assert!(scene.validate().is_err());

        let mut scene = small_scene();
        scene.interactions[0].begin = 7;
        scene.interactions[0].end = 3;
        assert!(scene.validate().is_err());

        let mut scene = small_scene();
        scene.interactions[0].types.clear();
        assert!(scene.validate().is_err());

        let mut scene = small_scene();
        scene.interactions[0].end = 100;
        assert!(scene.validate().is_err());
    }

    #[test]
    fn validate_rejects_zero_keyframe_interval() {
        let mut scene = small_scene();
        scene.meta.keyframe_interval = 0;
        assert!(scene.validate().is_err());
    }

    #[test]
    fn parse_rejects_unknown_enum_strings() {
        let text = r#"{"x":0,"y":0,"w":1,"h":1,"kind":"torso"}"#;
        let parsed: std::result::Result<BoundingBox, _> = serde_json::from_str(text);
        let err = parsed.unwrap_err().to_string();
        assert!(err.contains("torso"), "error should name the bad value: {err}");
    }

    #[test]
    fn parse_rejects_negative_box_via_validate() {
        let mut scene = small_scene();
        scene.tracks[0].keyframes[0].bbox.w = -1.0;
        assert!(scene.validate().is_err());
    }

    #[test]
    fn head_point_requires_zero_size() {
        let b = BoundingBox::new(1.0, 1.0, 0.0, 0.0, BoxKind::HeadPoint);
        assert!(b.validate().is_ok());
        let b = BoundingBox::new(1.0, 1.0, 2.0, 0.0, BoxKind::HeadPoint);
        assert!(b.validate().is_err());
    }

    #[test]
    fn face_orientation_angles_roundtrip() {
        for o in FaceOrientation::ALL {
            assert_eq!(FaceOrientation::from_angle(o.angle()), o);
        }
        assert_eq!(FaceOrientation::from_angle(-std::f64::consts::FRAC_PI_2), FaceOrientation::S);
    }
}
