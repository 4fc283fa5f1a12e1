//! Synthetic crowd scenes with known group structure.
//!
//! Groups move as a unit: one leader walks a waypoint path, members hold a
//! fixed offset from the leader's path plus mean-reverting noise. Singles
//! walk their own paths. Every random quantity comes from a substream keyed
//! by (seed, role, entity id), so regenerating with one more group leaves
//! existing entities' trajectories untouched.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::anno::{
    BoundingBox, BoxKind, ConfidenceLevel, FaceOrientation, Group, GroupCategory, Interaction,
    InteractionType, IntimacyLevel, Keyframe, Occlusion, Scene, SceneMeta, Track,
};
use crate::error::{Error, Result};
use crate::pipeline::{ClipDescriptor, InteractionScorer};
use crate::seed::mix_all;

mod corrupt;
pub use corrupt::corrupt_detections;

/// Autocorrelation of the member noise process between consecutive
/// keyframes. e_{k+1} = RHO * e_k + std * sqrt(1 - RHO^2) * xi keeps the
/// stationary standard deviation at exactly `member_offset_std`.
const NOISE_RHO: f64 = 0.8;

/// Box width as a fraction of box height for a standing person.
const WIDTH_RATIO: f64 = 0.42;

// Substream roles. Changing any of these re-randomizes every scene.
const STREAM_GROUP: u64 = 1;
const STREAM_ENTITY: u64 = 2;
const STREAM_INTERACTION: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub frame_w: u32,
    pub frame_h: u32,
    pub fps: f64,
    pub num_frames: u32,
    pub keyframe_interval: u32,
    pub n_groups: u32,
    pub n_singles: u32,
    /// Mean group size; sizes are 2 + Poisson(mean - 2), capped.
    pub group_size_mean: f64,
    pub group_size_cap: u32,
    /// Pixels per frame along the waypoint path.
    pub speed_mean: f64,
    pub speed_std: f64,
    pub waypoint_count: u32,
    /// Offset magnitudes are uniform in [0.5, 1.5] * member_spacing.
    pub member_spacing: f64,
    /// Stationary std of the mean-reverting noise members (and leaders)
    /// carry around their base position. Zero makes offsets exact.
    pub member_offset_std: f64,
    pub stationary_fraction: f64,
    /// Expected interactions per intra-group pair; every pair gets at least
    /// one regardless.
    pub interaction_rate: f64,
    pub interaction_mean_duration: f64,
    pub person_height_mean: f64,
    pub person_height_std: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            frame_w: 25000,
            frame_h: 14000,
            fps: 30.0,
            num_frames: 1800,
            keyframe_interval: 30,
            n_groups: 75,
            n_singles: 123,
            group_size_mean: 2.3,
            group_size_cap: 6,
            speed_mean: 10.0,
            speed_std: 3.0,
            waypoint_count: 3,
            member_spacing: 250.0,
            member_offset_std: 60.0,
            stationary_fraction: 0.4,
            interaction_rate: 1.5,
            interaction_mean_duration: 518.0,
            person_height_mean: 450.0,
            person_height_std: 80.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// Distance kept between waypoints and the frame border so offsets,
    /// noise, and the box itself stay inside the frame.
    fn motion_margin(&self) -> f64 {
        1.5 * self.member_spacing + 4.0 * self.member_offset_std + self.person_height_mean
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_w == 0 || self.frame_h == 0 {
            return Err(Error::validation("frame size must be at least 1x1"));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::validation("fps must be positive and finite"));
        }
        if self.keyframe_interval == 0 {
            return Err(Error::validation("keyframe_interval must be at least 1"));
        }
        if self.num_frames <= self.keyframe_interval {
            return Err(Error::validation(
                "num_frames must exceed keyframe_interval so every track gets two keyframes",
            ));
        }
        if !(self.group_size_mean.is_finite() && self.group_size_mean >= 2.0) {
            return Err(Error::validation("group_size_mean must be at least 2"));
        }
        if self.group_size_cap < 2 {
            return Err(Error::validation("group_size_cap must be at least 2"));
        }
        if !(self.speed_mean.is_finite() && self.speed_mean > 0.0) {
            return Err(Error::validation("speed_mean must be positive"));
        }
        if !(self.speed_std.is_finite() && self.speed_std >= 0.0) {
            return Err(Error::validation("speed_std must be nonnegative"));
        }
        if self.waypoint_count < 2 {
            return Err(Error::validation("waypoint_count must be at least 2"));
        }
        if !(self.member_spacing.is_finite() && self.member_spacing > 0.0) {
            return Err(Error::validation("member_spacing must be positive"));
        }
        if !(self.member_offset_std.is_finite() && self.member_offset_std >= 0.0) {
            return Err(Error::validation("member_offset_std must be nonnegative"));
        }
        if !(self.stationary_fraction.is_finite()
            && (0.0..=1.0).contains(&self.stationary_fraction))
        {
            return Err(Error::validation("stationary_fraction must lie in [0, 1]"));
        }
        if !(self.interaction_rate.is_finite() && self.interaction_rate >= 0.0) {
            return Err(Error::validation("interaction_rate must be nonnegative"));
        }
        if !(self.interaction_mean_duration.is_finite() && self.interaction_mean_duration > 0.0) {
            return Err(Error::validation("interaction_mean_duration must be positive"));
        }
        if !(self.person_height_mean.is_finite() && self.person_height_mean > 0.0) {
            return Err(Error::validation("person_height_mean must be positive"));
        }
        if !(self.person_height_std.is_finite() && self.person_height_std >= 0.0) {
            return Err(Error::validation("person_height_std must be nonnegative"));
        }
        let margin = self.motion_margin();
        let (w, h) = (self.frame_w as f64, self.frame_h as f64);
        if w <= 2.0 * margin + 1.0 || h <= 2.0 * margin + 1.0 {
            return Err(Error::validation(format!(
                "frame {}x{} too small for spacing/height margins ({margin:.0}px per side)",
                self.frame_w, self.frame_h
            )));
        }
        // Height clamp tops out at 2x the mean; the tallest box must fit.
        if 2.0 * self.person_height_mean >= h || 2.0 * self.person_height_mean * WIDTH_RATIO >= w {
            return Err(Error::validation("person_height_mean too large for the frame"));
        }
        Ok(())
    }
}

/// Ground truth the scene file does not carry: the motion model behind each
/// track. Written next to generated scenes for debugging and plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSidecar {
    pub seed: u64,
    pub groups: Vec<GroupTruth>,
    pub singles: Vec<SingleTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTruth {
    pub group_id: u32,
    pub leader: u32,
    pub stationary: bool,
    pub speed: f64,
    pub waypoints: Vec<[f64; 2]>,
    pub members: Vec<MemberTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberTruth {
    pub person_id: u32,
    pub offset: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleTruth {
    pub person_id: u32,
    pub stationary: bool,
    pub speed: f64,
    pub waypoints: Vec<[f64; 2]>,
}

/// Standard normal via Box-Muller. Always consumes exactly two uniforms,
/// which keeps substreams aligned when a std is zero.
pub(crate) fn gauss(rng: &mut ChaCha20Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Knuth's product-of-uniforms sampler; fine for the small lambdas here.
pub(crate) fn poisson(rng: &mut ChaCha20Rng, lambda: f64) -> u32 {
    if lambda <= 0.0 {
        return 0;
    }
    let limit = (-lambda).exp();
    let mut k = 0u32;
    let mut p = 1.0f64;
    loop {
        p *= rng.gen::<f64>();
        if p <= limit {
            return k;
        }
        k += 1;
    }
}

fn exponential(rng: &mut ChaCha20Rng, mean: f64) -> f64 {
    -mean * (1.0 - rng.gen::<f64>()).ln()
}

/// A waypoint path walked at constant speed, stopping at the final point.
struct MotionPlan {
    points: Vec<(f64, f64)>,
    speed: f64,
    stationary: bool,
    /// Used when there is no heading to read off the path.
    fixed_orientation: FaceOrientation,
}

impl MotionPlan {
    fn center(&self, frame: u32) -> (f64, f64) {
        if self.stationary {
            return self.points[0];
        }
        let mut remaining = self.speed * frame as f64;
        for w in self.points.windows(2) {
            let (ax, ay) = w[0];
            let (bx, by) = w[1];
            let seg = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt();
            if remaining <= seg {
                if seg == 0.0 {
                    return w[0];
                }
                let t = remaining / seg;
                return (ax + t * (bx - ax), ay + t * (by - ay));
            }
            remaining -= seg;
        }
        *self.points.last().expect("plan has waypoints")
    }

    fn orientation(&self, frame: u32) -> FaceOrientation {
        if self.stationary {
            return self.fixed_orientation;
        }
        let mut remaining = self.speed * frame as f64;
        let mut last_dir: Option<(f64, f64)> = None;
        for w in self.points.windows(2) {
            let (dx, dy) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            let seg = (dx * dx + dy * dy).sqrt();
            if seg > 0.0 {
                last_dir = Some((dx, dy));
            }
            if remaining <= seg {
                break;
            }
            remaining -= seg;
        }
        match last_dir {
            // Image y grows downward; flip it to get a standard angle.
            Some((dx, dy)) => FaceOrientation::from_angle((-dy).atan2(dx)),
            None => self.fixed_orientation,
        }
    }
}

/// Draws the per-entity quantities every walker owns. The draw order is
/// fixed; tests rely on the same seed reproducing the same scene bit for
/// bit.
fn draw_plan(rng: &mut ChaCha20Rng, cfg: &SimConfig, stationary: bool) -> (f64, MotionPlan) {
    let hm = cfg.person_height_mean;
    let height = (hm + gauss(rng) * cfg.person_height_std).clamp(0.5 * hm, 2.0 * hm);
    let fixed_orientation = FaceOrientation::ALL[rng.gen_range(0..8)];
    let speed = (cfg.speed_mean + gauss(rng) * cfg.speed_std)
        .clamp(0.2 * cfg.speed_mean, 3.0 * cfg.speed_mean);
    let margin = cfg.motion_margin();
    let points: Vec<(f64, f64)> = (0..cfg.waypoint_count)
        .map(|_| {
            (
                rng.gen_range(margin..cfg.frame_w as f64 - margin),
                rng.gen_range(margin..cfg.frame_h as f64 - margin),
            )
        })
        .collect();
    (height, MotionPlan { points, speed, stationary, fixed_orientation })
}

/// Stationary-distribution start, then an AR(1) walk per axis.
fn draw_noise(rng: &mut ChaCha20Rng, std: f64, steps: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(steps);
    let fresh = std * (1.0 - NOISE_RHO * NOISE_RHO).sqrt();
    let mut e = (std * gauss(rng), std * gauss(rng));
    for _ in 0..steps {
        out.push(e);
        e = (NOISE_RHO * e.0 + fresh * gauss(rng), NOISE_RHO * e.1 + fresh * gauss(rng));
    }
    out
}

/// Builds the keyframes of one entity riding `base`, displaced by a constant
/// offset and per-keyframe noise. Centers are clamped so the box stays
/// inside the frame.
fn build_track(
    pid: u32,
    base: &MotionPlan,
    offset: (f64, f64),
    noise: &[(f64, f64)],
    height: f64,
    cfg: &SimConfig,
    kf_frames: &[u32],
) -> Track {
    let w = WIDTH_RATIO * height;
    let (fw, fh) = (cfg.frame_w as f64, cfg.frame_h as f64);
    let keyframes = kf_frames
        .iter()
        .enumerate()
        .map(|(k, &frame)| {
            let (bx, by) = base.center(frame);
            let cx = (bx + offset.0 + noise[k].0).clamp(w / 2.0, fw - w / 2.0);
            let cy = (by + offset.1 + noise[k].1).clamp(height / 2.0, fh - height / 2.0);
            Keyframe {
                frame,
                bbox: BoundingBox::new(cx - w / 2.0, cy - height / 2.0, w, height, BoxKind::VisibleBody),
                occlusion: Occlusion::Without,
                face_orientation: Some(base.orientation(frame)),
            }
        })
        .collect();
    Track { person_id: pid, attributes: None, ignore: false, keyframes }
}

fn entity_rng(seed: u64, pid: u32) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(mix_all(seed, &[STREAM_ENTITY, pid as u64]))
}

/// Generates a scene plus the motion ground truth behind it. The scene
/// always passes `Scene::validate`.
pub fn generate_scene(cfg: &SimConfig) -> Result<(Scene, SimSidecar)> {
    cfg.validate()?;
    let kf_frames: Vec<u32> =
        (0..cfg.num_frames).step_by(cfg.keyframe_interval as usize).collect();
    let n_keyframes = kf_frames.len();

    let mut tracks = Vec::new();
    let mut groups = Vec::new();
    let mut interactions = Vec::new();
    let mut sidecar = SimSidecar { seed: cfg.seed, groups: Vec::new(), singles: Vec::new() };
    let mut next_pid: u32 = 1;

    for gid in 1..=cfg.n_groups {
        let mut grng = ChaCha20Rng::seed_from_u64(mix_all(cfg.seed, &[STREAM_GROUP, gid as u64]));
        let size = (2 + poisson(&mut grng, cfg.group_size_mean - 2.0)).min(cfg.group_size_cap);
        let category = [
            GroupCategory::Acquaintance,
            GroupCategory::Family,
            GroupCategory::Business,
        ][grng.gen_range(0..3)];
        let intimacy = [IntimacyLevel::Low, IntimacyLevel::Middle, IntimacyLevel::High]
            [grng.gen_range(0..3)];
        let stationary = grng.gen::<f64>() < cfg.stationary_fraction;

        let leader_pid = next_pid;
        next_pid += 1;
        let mut lrng = entity_rng(cfg.seed, leader_pid);
        let (height, plan) = draw_plan(&mut lrng, cfg, stationary);
        let noise = draw_noise(&mut lrng, cfg.member_offset_std, n_keyframes);
        tracks.push(build_track(leader_pid, &plan, (0.0, 0.0), &noise, height, cfg, &kf_frames));

        let mut members = std::collections::BTreeSet::new();
        members.insert(leader_pid);
        let mut member_truths = Vec::new();
        for _ in 1..size {
            let pid = next_pid;
            next_pid += 1;
            let mut mrng = entity_rng(cfg.seed, pid);
            let hm = cfg.person_height_mean;
            let m_height =
                (hm + gauss(&mut mrng) * cfg.person_height_std).clamp(0.5 * hm, 2.0 * hm);
            let angle = mrng.gen::<f64>() * std::f64::consts::TAU;
            let mag = cfg.member_spacing * (0.5 + mrng.gen::<f64>());
            let offset = (mag * angle.cos(), mag * angle.sin());
            let m_noise = draw_noise(&mut mrng, cfg.member_offset_std, n_keyframes);
            tracks.push(build_track(pid, &plan, offset, &m_noise, m_height, cfg, &kf_frames));
            members.insert(pid);
            member_truths.push(MemberTruth { person_id: pid, offset: [offset.0, offset.1] });
        }

        // Every intra-group pair interacts at least once; the merge stage's
        // local evidence would otherwise have nothing to find.
        let member_ids: Vec<u32> = members.iter().copied().collect();
        for i in 0..member_ids.len() {
            for j in i + 1..member_ids.len() {
                let (a, b) = (member_ids[i], member_ids[j]);
                let mut irng = ChaCha20Rng::seed_from_u64(mix_all(
                    cfg.seed,
                    &[STREAM_INTERACTION, gid as u64, a as u64, b as u64],
                ));
                let count = 1 + poisson(&mut irng, cfg.interaction_rate - 1.0);
                for _ in 0..count {
                    let dur = (exponential(&mut irng, cfg.interaction_mean_duration) as u32)
                        .clamp(1, cfg.num_frames - 1);
                    let begin = irng.gen_range(0..=cfg.num_frames - 1 - dur);
                    let mut types = vec![ALL_INTERACTION_TYPES[irng.gen_range(0..5)]];
                    if irng.gen::<f64>() < 0.4 {
                        let extra = ALL_INTERACTION_TYPES[irng.gen_range(0..5)];
                        if extra != types[0] {
                            types.push(extra);
                        }
                    }
                    let confidence = [
                        ConfidenceLevel::Low,
                        ConfidenceLevel::Middle,
                        ConfidenceLevel::High,
                    ][irng.gen_range(0..3)];
                    interactions.push(Interaction { a, b, types, begin, end: begin + dur, confidence });
                }
            }
        }

        groups.push(Group { group_id: gid, members, category, intimacy });
        sidecar.groups.push(GroupTruth {
            group_id: gid,
            leader: leader_pid,
            stationary,
            speed: plan.speed,
            waypoints: plan.points.iter().map(|&(x, y)| [x, y]).collect(),
            members: member_truths,
        });
    }

    for _ in 0..cfg.n_singles {
        let pid = next_pid;
        next_pid += 1;
        let mut srng = entity_rng(cfg.seed, pid);
        // Stationary draw comes first so the plan draws line up with
        // leaders' streams.
        let stationary = srng.gen::<f64>() < cfg.stationary_fraction;
        let (height, plan) = draw_plan(&mut srng, cfg, stationary);
        let noise = draw_noise(&mut srng, cfg.member_offset_std, n_keyframes);
        tracks.push(build_track(pid, &plan, (0.0, 0.0), &noise, height, cfg, &kf_frames));
        sidecar.singles.push(SingleTruth {
            person_id: pid,
            stationary,
            speed: plan.speed,
            waypoints: plan.points.iter().map(|&(x, y)| [x, y]).collect(),
        });
    }

    let scene = Scene {
        meta: SceneMeta {
            width: cfg.frame_w,
            height: cfg.frame_h,
            fps: cfg.fps,
            num_frames: cfg.num_frames,
            keyframe_interval: cfg.keyframe_interval,
        },
        tracks,
        groups,
        interactions,
    };
    scene.validate()?;
    Ok((scene, sidecar))
}

const ALL_INTERACTION_TYPES: [InteractionType; 5] = [
    InteractionType::PhysicalContact,
    InteractionType::BodyLanguage,
    InteractionType::FaceExpressions,
    InteractionType::EyeContact,
    InteractionType::Talking,
];

/// Noise model for the synthetic clip scorer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Probability a clip's 0/1 label is inverted.
    pub flip_prob: f64,
    /// Std of additive gaussian noise on the (possibly flipped) label.
    pub jitter_std: f64,
    /// Windows per edge when the oracle builds its own clips.
    pub clips_per_edge: u32,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { flip_prob: 0.1, jitter_std: 0.05, clips_per_edge: 4, seed: 0 }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.flip_prob.is_finite() && (0.0..=1.0).contains(&self.flip_prob)) {
            return Err(Error::validation("flip_prob must lie in [0, 1]"));
        }
        if !(self.jitter_std.is_finite() && self.jitter_std >= 0.0) {
            return Err(Error::validation("jitter_std must be nonnegative"));
        }
        if self.clips_per_edge == 0 {
            return Err(Error::validation("clips_per_edge must be at least 1"));
        }
        Ok(())
    }
}

/// Scores clips from ground truth: 1 when the pair shares a group and a
/// labeled interaction overlaps the clip window, 0 otherwise, then flip
/// noise and jitter. Each clip's randomness is keyed by (seed, pair,
/// window), so scores do not depend on call order.
pub struct OracleScorer {
    config: OracleConfig,
    intervals: BTreeMap<(u32, u32), Vec<(u32, u32)>>,
}

impl OracleScorer {
    pub fn new(scene: &Scene, config: OracleConfig) -> Result<Self> {
        config.validate()?;
        let mut intervals: BTreeMap<(u32, u32), Vec<(u32, u32)>> = BTreeMap::new();
        for it in &scene.interactions {
            let key = (it.a.min(it.b), it.a.max(it.b));
            intervals.entry(key).or_default().push((it.begin, it.end));
        }
        Ok(OracleScorer { config, intervals })
    }

    fn score_one(&self, a: u32, b: u32, begin: u32, end: u32) -> f64 {
        let key = (a.min(b), a.max(b));
        let label = self
            .intervals
            .get(&key)
            .map(|ivs| ivs.iter().any(|&(s, e)| s <= end && e >= begin))
            .unwrap_or(false);
        let mut rng = ChaCha20Rng::seed_from_u64(mix_all(
            self.config.seed,
            &[key.0 as u64, key.1 as u64, begin as u64, end as u64],
        ));
        let flip = rng.gen::<f64>() < self.config.flip_prob;
        let noisy = if flip { !label } else { label };
        let score = (noisy as u32 as f64) + gauss(&mut rng) * self.config.jitter_std;
        score.clamp(0.0, 1.0)
    }
}

impl InteractionScorer for OracleScorer {
    fn score_clips(&self, a: u32, b: u32, clips: &[ClipDescriptor]) -> Vec<f64> {
        clips.iter().map(|c| self.score_one(a, b, c.begin, c.end)).collect()
    }
}

/// Scores a pair without a clip extractor: the tracks' common frame range
/// is split into `clips_per_edge` near-equal windows and each is scored.
pub fn oracle_interaction_scores(
    scene: &Scene,
    a: u32,
    b: u32,
    config: &OracleConfig,
) -> Result<Vec<f64>> {
    let scorer = OracleScorer::new(scene, *config)?;
    let span = |pid: u32| -> Result<(u32, u32)> {
        let t = scene
            .tracks
            .iter()
            .find(|t| t.person_id == pid)
            .ok_or_else(|| Error::invalid_argument(format!("person {pid} is not a track")))?;
        Ok((t.first_frame(), t.last_frame()))
    };
    let (a0, a1) = span(a)?;
    let (b0, b1) = span(b)?;
    let (lo, hi) = (a0.max(b0), a1.min(b1));
    if lo > hi {
        return Err(Error::invalid_argument(format!(
            "tracks {a} and {b} share no frames to score"
        )));
    }
    let n = config.clips_per_edge.min(hi - lo + 1);
    let clips: Vec<ClipDescriptor> = (0..n)
        .map(|i| {
            let begin = lo + (hi - lo + 1) * i / n;
            let end = lo + (hi - lo + 1) * (i + 1) / n - 1;
            ClipDescriptor { a, b, begin, end }
        })
        .collect();
    Ok(scorer.score_clips(a, b, &clips))
}
