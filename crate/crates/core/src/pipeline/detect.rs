//! End-to-end group detection over a scene, and threshold calibration
//! against ground truth.

use super::merge::{merge_edges, MergeConfig};
use super::{
    build_global_graph, edge_uncertainty, select_zoom_edges, similarity, score_local_edges,
    DistanceClipExtractor, InteractionScorer, ZoomKind, ZoomPolicy,
};
use crate::anno::{GroupMembers, Scene, Track};
use crate::encoder::{preprocess, Embedding, EncoderParams, TrajectoryInput};
use crate::eval::group_half_prf;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub policy: ZoomPolicy,
    /// Stochastic forward passes per track for uncertainty estimation.
    pub tau: usize,
    pub merge: MergeConfig,
    pub use_local: bool,
    /// Minimum shared frames before a pair can get an edge.
    pub cooccur_min_frames: u32,
    /// Edge prefilter radius as a multiple of the scene's mean box height.
    pub radius_scale: f64,
    /// Clip extraction radius, same unit as `radius_scale`.
    pub clip_radius_scale: f64,
    /// Maximum clip window length in frames.
    pub clip_len: u32,
    /// Seed for the stochastic sampling passes. Shared by every track so
    /// paired samples see identical perturbations.
    pub mc_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            policy: ZoomPolicy { kind: ZoomKind::Uncertainty, eta: 8, theta_pos: 0.5, seed: 0 },
            tau: 10,
            merge: MergeConfig::default(),
            use_local: true,
            cooccur_min_frames: 30,
            radius_scale: 3.0,
            clip_radius_scale: 3.0,
            clip_len: 100,
            mc_seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        self.merge.validate()?;
        if !self.radius_scale.is_finite() || self.radius_scale <= 0.0 {
            return Err(Error::validation("radius_scale must be positive"));
        }
        if !self.clip_radius_scale.is_finite() || self.clip_radius_scale <= 0.0 {
            return Err(Error::validation("clip_radius_scale must be positive"));
        }
        if self.clip_len == 0 {
            return Err(Error::validation("clip_len must be nonzero"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineDiagnostics {
    pub vertices: usize,
    pub edges: usize,
    /// Edges predicted positive at theta_pos.
    pub candidates: usize,
    /// Edges that actually received local scoring.
    pub zoomed: usize,
    /// Tracks skipped for having fewer than 2 keyframes or an ignore flag.
    pub skipped_tracks: usize,
    pub policy: ZoomKind,
    pub eta: usize,
    pub tau: usize,
    pub theta_pos: f64,
    pub theta: f64,
    pub beta: f64,
    pub sigma: f64,
    pub use_local: bool,
    pub groups: usize,
    /// Wall-clock stage timings; informational only, excluded from any
    /// byte-reproducibility expectations.
    pub timings_ms: BTreeMap<String, f64>,
}

struct EncodedScene {
    inputs: BTreeMap<u32, TrajectoryInput>,
    embeddings: BTreeMap<u32, Embedding>,
    encodable: Vec<Track>,
    skipped: usize,
}

fn encode_scene(scene: &Scene, params: &EncoderParams) -> Result<EncodedScene> {
    let mut inputs = BTreeMap::new();
    let mut embeddings = BTreeMap::new();
    let mut encodable = Vec::new();
    let mut skipped = 0usize;
    for track in &scene.tracks {
        if track.ignore || track.keyframes.len() < 2 {
            skipped += 1;
            continue;
        }
        let input = preprocess(track, &scene.meta)?;
        embeddings.insert(track.person_id, params.encode(&input, false, 0)?);
        inputs.insert(track.person_id, input);
        encodable.push(track.clone());
    }
    Ok(EncodedScene { inputs, embeddings, encodable, skipped })
}

fn candidate_indices(graph: &super::EntityGraph, theta_pos: f64) -> Vec<usize> {
    graph
        .edges
        .iter()
        .enumerate()
        .filter(|(_, e)| similarity(e.w_global, graph.sigma) >= theta_pos)
        .map(|(i, _)| i)
        .collect()
}

/// Estimates the stochastic-distance variance for every candidate edge.
/// All tracks sample under one seed stream, so both endpoints of an edge
/// see identical perturbations: instability common to the two tracks
/// cancels in the paired distances, and the variance singles out pairs
/// whose inputs respond differently to the same perturbation.
fn attach_uncertainty(
    graph: &mut super::EntityGraph,
    inputs: &BTreeMap<u32, TrajectoryInput>,
    params: &EncoderParams,
    tau: usize,
    mc_seed: u64,
    candidates: &[usize],
) -> Result<()> {
    let mut samples: BTreeMap<u32, Vec<Embedding>> = BTreeMap::new();
    for &i in candidates {
        let (a, b) = (graph.edges[i].a, graph.edges[i].b);
        for id in [a, b] {
            if !samples.contains_key(&id) {
                let s = params.mc_sample(&inputs[&id], tau, mc_seed)?;
                samples.insert(id, s);
            }
        }
        graph.edges[i].uncertainty = Some(edge_uncertainty(&samples[&a], &samples[&b])?);
    }
    Ok(())
}

/// Runs the full detector: encode, build the global graph, pick zoom-in
/// edges, score them locally, merge. Deterministic given the config's
/// seeds; timings in the diagnostics are the only nondeterministic output.
pub fn detect_groups(
    scene: &Scene,
    params: &EncoderParams,
    scorer: &dyn InteractionScorer,
    config: &PipelineConfig,
) -> Result<(Vec<GroupMembers>, PipelineDiagnostics)> {
    config.validate()?;
    params.validate()?;
    let mut timings = BTreeMap::new();

    let t = Instant::now();
    let encoded = encode_scene(scene, params)?;
    let EncodedScene { inputs, embeddings, encodable, skipped: skipped_tracks } = encoded;
    timings.insert("encode".to_string(), ms_since(t));

    let mean_height = scene.mean_box_height();
    let t = Instant::now();
    let mut graph = build_global_graph(
        &embeddings,
        &encodable,
        config.cooccur_min_frames,
        config.radius_scale * mean_height,
    )?;
    timings.insert("graph".to_string(), ms_since(t));

    let candidate_idx = candidate_indices(&graph, config.policy.theta_pos);

    let t = Instant::now();
    if config.policy.kind == ZoomKind::Uncertainty && config.policy.eta > 0 {
        attach_uncertainty(&mut graph, &inputs, params, config.tau, config.mc_seed, &candidate_idx)?;
    }
    timings.insert("mc".to_string(), ms_since(t));

    let t = Instant::now();
    let selected = select_zoom_edges(&graph, &config.policy)?;
    timings.insert("select".to_string(), ms_since(t));

    let t = Instant::now();
    if config.use_local && !selected.is_empty() {
        let extractor = DistanceClipExtractor::new(
            scene,
            config.clip_radius_scale * mean_height,
            config.clip_len,
        )?;
        score_local_edges(&mut graph, &selected, scorer, &extractor)?;
    }
    timings.insert("local".to_string(), ms_since(t));

    let t = Instant::now();
    let groups = merge_edges(&graph, &config.merge, config.use_local)?;
    timings.insert("merge".to_string(), ms_since(t));

    let diagnostics = PipelineDiagnostics {
        vertices: graph.embeddings.len(),
        edges: graph.edges.len(),
        candidates: candidate_idx.len(),
        zoomed: selected.len(),
        skipped_tracks,
        policy: config.policy.kind,
        eta: config.policy.eta,
        tau: config.tau,
        theta_pos: config.policy.theta_pos,
        theta: config.merge.theta,
        beta: config.merge.beta,
        sigma: graph.sigma,
        use_local: config.use_local,
        groups: groups.len(),
        timings_ms: timings,
    };
    Ok((groups, diagnostics))
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratedThresholds {
    /// Merge threshold, maximizing group-level F1 on the training split.
    pub theta: f64,
    /// Positivity threshold, maximizing edge-classification F1.
    pub theta_pos: f64,
}

/// Grid-searches theta_pos (edge-classification F1 on global similarities)
/// and theta (group F1 of the deployed pipeline, zoom and local scoring
/// included) in steps of 0.01 on ground-truth scenes. One scorer per scene.
/// Ties go to the smaller value; theta never calibrates below theta_pos.
pub fn calibrate_thresholds(
    scenes: &[Scene],
    scorers: &[&dyn InteractionScorer],
    params: &EncoderParams,
    config: &PipelineConfig,
) -> Result<CalibratedThresholds> {
    config.validate()?;
    if scenes.is_empty() {
        return Err(Error::invalid_argument("calibration needs at least one scene"));
    }
    if scenes.len() != scorers.len() {
        return Err(Error::invalid_argument(format!(
            "{} scenes but {} scorers",
            scenes.len(),
            scorers.len()
        )));
    }

    struct SceneGraph {
        graph: super::EntityGraph,
        inputs: BTreeMap<u32, TrajectoryInput>,
        positive: Vec<bool>,
        gt: Vec<GroupMembers>,
    }

    let mut prepared = Vec::with_capacity(scenes.len());
    for scene in scenes {
        let encoded = encode_scene(scene, params)?;
        let graph = build_global_graph(
            &encoded.embeddings,
            &encoded.encodable,
            config.cooccur_min_frames,
            config.radius_scale * scene.mean_box_height(),
        )?;
        let group_of: BTreeMap<u32, u32> = scene
            .groups
            .iter()
            .flat_map(|g| g.members.iter().map(move |&m| (m, g.group_id)))
            .collect();
        let positive = graph
            .edges
            .iter()
            .map(|e| match (group_of.get(&e.a), group_of.get(&e.b)) {
                (Some(ga), Some(gb)) => ga == gb,
                _ => false,
            })
            .collect();
        let gt = scene.groups.iter().map(GroupMembers::from).collect();
        prepared.push(SceneGraph { graph, inputs: encoded.inputs, positive, gt });
    }

    let grid: Vec<f64> = (1..100).map(|k| f64::from(k) / 100.0).collect();

    let mut best_pos = (f64::NEG_INFINITY, 0.01);
    for &t in &grid {
        let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
        for sg in &prepared {
            for (e, &pos) in sg.graph.edges.iter().zip(&sg.positive) {
                let pred = similarity(e.w_global, sg.graph.sigma) >= t;
                match (pred, pos) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    _ => {}
                }
            }
        }
        let denom = 2 * tp + fp + fn_;
        let f1 = if denom == 0 { 0.0 } else { 2.0 * tp as f64 / denom as f64 };
        if f1 > best_pos.0 {
            best_pos = (f1, t);
        }
    }

    // The merge threshold applies to blended similarities, so zoom and score
    // exactly as deployment will (at the theta_pos just calibrated) before
    // scanning theta over the merge step alone.
    let policy = ZoomPolicy { theta_pos: best_pos.1, ..config.policy.clone() };
    for (sg, (scene, scorer)) in prepared.iter_mut().zip(scenes.iter().zip(scorers)) {
        if config.use_local {
            if policy.kind == ZoomKind::Uncertainty && policy.eta > 0 {
                let candidates = candidate_indices(&sg.graph, policy.theta_pos);
                attach_uncertainty(
                    &mut sg.graph,
                    &sg.inputs,
                    params,
                    config.tau,
                    config.mc_seed,
                    &candidates,
                )?;
            }
            let selected = select_zoom_edges(&sg.graph, &policy)?;
            if !selected.is_empty() {
                let extractor = DistanceClipExtractor::new(
                    scene,
                    config.clip_radius_scale * scene.mean_box_height(),
                    config.clip_len,
                )?;
                score_local_edges(&mut sg.graph, &selected, *scorer, &extractor)?;
            }
        }
    }

    // Edges below theta_pos are never zoom candidates, so a merge threshold
    // under theta_pos would admit edges no policy could have vetoed. Keep
    // theta on or above theta_pos.
    let mut best_theta = (f64::NEG_INFINITY, best_pos.1);
    for &t in grid.iter().filter(|&&t| t >= best_pos.1 - 1e-9) {
        let mut f1_sum = 0.0;
        for sg in &prepared {
            let merge = MergeConfig { theta: t, ..config.merge.clone() };
            let predicted = merge_edges(&sg.graph, &merge, config.use_local)?;
            f1_sum += group_half_prf(&predicted, &sg.gt).f1;
        }
        let mean = f1_sum / prepared.len() as f64;
        if mean > best_theta.0 {
            best_theta = (mean, t);
        }
    }

    Ok(CalibratedThresholds { theta: best_theta.1, theta_pos: best_pos.1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anno::{
        BoundingBox, BoxKind, Group, GroupCategory, IntimacyLevel, Keyframe, Occlusion, SceneMeta,
    };
    use crate::encoder::EncoderConfig;
    use crate::pipeline::ClipDescriptor;
    use std::collections::BTreeSet;

    fn kf(frame: u32, x: f64, y: f64) -> Keyframe {
        Keyframe {
            frame,
            bbox: BoundingBox { x, y, w: 10.0, h: 20.0, kind: BoxKind::VisibleBody },
            occlusion: Occlusion::Without,
            face_orientation: None,
        }
    }

    fn scene_two_groups() -> Scene {
        let mut tracks = Vec::new();
        for (pid, x0, y0) in [
            (1u32, 100.0, 100.0),
            (2, 130.0, 100.0),
            (3, 500.0, 400.0),
            (4, 530.0, 400.0),
            (5, 300.0, 250.0),
        ] {
            let keyframes = (0..5).map(|i| kf(i * 10, x0 + f64::from(i), y0)).collect();
            tracks.push(Track { person_id: pid, attributes: None, ignore: false, keyframes });
        }
        let group = |gid, members: &[u32]| Group {
            group_id: gid,
            members: members.iter().copied().collect::<BTreeSet<_>>(),
            category: GroupCategory::Acquaintance,
            intimacy: IntimacyLevel::Middle,
        };
        Scene {
            meta: SceneMeta { width: 1000, height: 1000, fps: 30.0, num_frames: 41, keyframe_interval: 10 },
            tracks,
            groups: vec![group(1, &[1, 2]), group(2, &[3, 4])],
            interactions: vec![],
        }
    }

    fn tiny_params() -> EncoderParams {
        let cfg = EncoderConfig { hidden: 4, layers: 2, ..EncoderConfig::default() };
        EncoderParams::init(&cfg, 21).unwrap()
    }

    /// Scores 1 for same-group pairs, 0 otherwise; a perfect local oracle.
    struct GtScorer {
        group_of: BTreeMap<u32, u32>,
    }

    impl GtScorer {
        fn new(scene: &Scene) -> Self {
            let group_of = scene
                .groups
                .iter()
                .flat_map(|g| g.members.iter().map(move |&m| (m, g.group_id)))
                .collect();
            GtScorer { group_of }
        }
    }

    impl InteractionScorer for GtScorer {
        fn score_clips(&self, a: u32, b: u32, clips: &[ClipDescriptor]) -> Vec<f64> {
            let same = self.group_of.get(&a).is_some()
                && self.group_of.get(&a) == self.group_of.get(&b);
            vec![if same { 1.0 } else { 0.0 }; clips.len()]
        }
    }

    fn base_config() -> PipelineConfig {
        PipelineConfig {
            cooccur_min_frames: 10,
            radius_scale: 50.0,
            clip_radius_scale: 50.0,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn zero_budget_without_local_matches_global_only_pipeline() {
        let scene = scene_two_groups();
        let params = tiny_params();
        let scorer = GtScorer::new(&scene);
        let mut config = base_config();
        config.policy.eta = 0;
        config.use_local = false;
        let (groups, diag) = detect_groups(&scene, &params, &scorer, &config).unwrap();

        // hand-built global-only reference
        let mut embeddings = BTreeMap::new();
        for t in &scene.tracks {
            let input = preprocess(t, &scene.meta).unwrap();
            embeddings.insert(t.person_id, params.encode(&input, false, 0).unwrap());
        }
        let graph = build_global_graph(
            &embeddings,
            &scene.tracks,
            config.cooccur_min_frames,
            config.radius_scale * scene.mean_box_height(),
        )
        .unwrap();
        let expected = merge_edges(&graph, &config.merge, false).unwrap();
        assert_eq!(groups, expected);
        assert_eq!(diag.zoomed, 0);
        assert_eq!(diag.vertices, 5);
    }

    #[test]
    fn perfect_oracle_with_full_budget_recovers_ground_truth() {
        let scene = scene_two_groups();
        let params = tiny_params();
        let scorer = GtScorer::new(&scene);
        let mut config = base_config();
        // zoom every candidate; theta_pos equal to theta so unzoomed edges
        // can never cross the merge threshold on their own. 0.35 sits below
        // exp(-1), so every below-median edge is guaranteed a candidate.
        config.merge.theta = 0.35;
        config.policy = ZoomPolicy {
            kind: ZoomKind::Random,
            eta: usize::MAX,
            theta_pos: config.merge.theta,
            seed: 4,
        };
        let (groups, diag) = detect_groups(&scene, &params, &scorer, &config).unwrap();
        let gt: Vec<GroupMembers> = scene.groups.iter().map(GroupMembers::from).collect();
        assert_eq!(groups, gt);
        assert_eq!(diag.zoomed, diag.candidates);
        assert_eq!(diag.groups, 2);
    }

    #[test]
    fn uncertainty_policy_runs_end_to_end() {
        let scene = scene_two_groups();
        let params = tiny_params();
        let scorer = GtScorer::new(&scene);
        let mut config = base_config();
        config.policy = ZoomPolicy { kind: ZoomKind::Uncertainty, eta: 2, theta_pos: 0.3, seed: 0 };
        config.tau = 4;
        let (a, diag) = detect_groups(&scene, &params, &scorer, &config).unwrap();
        assert!(diag.zoomed <= 2);
        assert!(diag.candidates >= diag.zoomed);
        // identical seeds reproduce identical groups
        let (b, _) = detect_groups(&scene, &params, &scorer, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn short_and_ignored_tracks_are_skipped_not_fatal() {
        let mut scene = scene_two_groups();
        scene.tracks[4].keyframes.truncate(1);
        scene.tracks[0].ignore = true;
        // group 1 loses a member to the ignore flag; drop the group to keep
        // the scene's intent clear
        let params = tiny_params();
        let scorer = GtScorer::new(&scene);
        let mut config = base_config();
        config.policy.eta = 0;
        config.use_local = false;
        let (_, diag) = detect_groups(&scene, &params, &scorer, &config).unwrap();
        assert_eq!(diag.skipped_tracks, 2);
        assert_eq!(diag.vertices, 3);
    }

    #[test]
    fn calibration_stays_on_grid_and_is_deterministic() {
        let scene = scene_two_groups();
        let params = tiny_params();
        let config = base_config();
        let scorer = GtScorer::new(&scene);
        let a =
            calibrate_thresholds(&[scene.clone()], &[&scorer], &params, &config).unwrap();
        let b = calibrate_thresholds(&[scene.clone()], &[&scorer], &params, &config).unwrap();
        assert_eq!(a, b);
        for v in [a.theta, a.theta_pos] {
            assert!((0.01..=0.99).contains(&v));
            let cents = v * 100.0;
            assert!((cents - cents.round()).abs() < 1e-9);
        }
        assert!(calibrate_thresholds(&[], &[], &params, &config).is_err());
        assert!(calibrate_thresholds(&[scene], &[], &params, &config).is_err());
    }
}
