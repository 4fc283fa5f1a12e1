//! Global-to-local group detection.
//!
//! Tracks become vertices with trajectory embeddings; edge weights are
//! embedding distances. A zoom-in policy picks a budgeted subset of
//! positively-predicted edges for local interaction scoring, and the merge
//! step thresholds blended similarities and reads groups off the connected
//! components.

mod detect;
mod merge;
mod weights;

pub use detect::{calibrate_thresholds, detect_groups, CalibratedThresholds, PipelineConfig, PipelineDiagnostics};
pub use merge::{merge_edges, MergeConfig};
pub use weights::{load_weights, save_weights, WeightsFile, WEIGHTS_FORMAT_VERSION};

use crate::anno::{densify_track, Scene, Track};
use crate::encoder::{l2_distance, Embedding};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Undirected edge between two people, `a < b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub a: u32,
    pub b: u32,
    /// L2 distance between the endpoint embeddings.
    pub w_global: f64,
    /// Variance of paired stochastic distance samples, when estimated.
    pub uncertainty: Option<f64>,
    /// Mean local interaction score, set once the edge is zoomed.
    pub w_local: Option<f64>,
    pub zoomed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityGraph {
    pub embeddings: BTreeMap<u32, Embedding>,
    /// Sorted by (a, b); at most one edge per pair, no self-loops.
    pub edges: Vec<GraphEdge>,
    /// Similarity scale: median edge distance (1.0 when degenerate).
    pub sigma: f64,
}

/// Distance-to-similarity mapping; monotone decreasing, 1 at distance 0.
pub fn similarity(w_global: f64, sigma: f64) -> f64 {
    (-w_global / sigma).exp()
}

/// Per-frame box centers covering a track's whole span.
struct DensePath {
    first: u32,
    last: u32,
    centers: Vec<(f64, f64)>,
}

impl DensePath {
    fn from_track(track: &Track) -> Result<Self> {
        let dense = densify_track(track)?;
        let first = dense.first().map(|e| e.frame).unwrap_or(0);
        let last = dense.last().map(|e| e.frame).unwrap_or(0);
        let centers = dense.iter().map(|e| e.bbox.center()).collect();
        Ok(DensePath { first, last, centers })
    }

    fn center_at(&self, frame: u32) -> (f64, f64) {
        self.centers[(frame - self.first) as usize]
    }
}

fn min_pair_distance(pa: &DensePath, pb: &DensePath) -> Option<(f64, u32)> {
    let s = pa.first.max(pb.first);
    let e = pa.last.min(pb.last);
    if e < s {
        return None;
    }
    let mut best = f64::INFINITY;
    for frame in s..=e {
        let (ax, ay) = pa.center_at(frame);
        let (bx, by) = pb.center_at(frame);
        let d = ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt();
        if d < best {
            best = d;
        }
    }
    Some((best, e - s + 1))
}

/// Builds the embedding graph. An edge is created for every pair of tracks
/// that share at least `cooccur_min_frames` frames and come within `radius`
/// of each other at some point; its weight is the exact L2 distance of the
/// endpoint embeddings.
pub fn build_global_graph(
    embeddings: &BTreeMap<u32, Embedding>,
    tracks: &[Track],
    cooccur_min_frames: u32,
    radius: f64,
) -> Result<EntityGraph> {
    if radius.is_nan() || radius < 0.0 {
        return Err(Error::invalid_argument("radius must be non-negative"));
    }
    let mut dim = None;
    for (id, emb) in embeddings {
        match dim {
            None => dim = Some(emb.len()),
            Some(d) if d != emb.len() => {
                return Err(Error::invalid_argument(format!(
                    "embedding for person {id} has length {}, expected {d}",
                    emb.len()
                )))
            }
            _ => {}
        }
    }

    let mut paths = BTreeMap::new();
    for track in tracks {
        if !embeddings.contains_key(&track.person_id) {
            return Err(Error::invalid_argument(format!(
                "track {} has no embedding",
                track.person_id
            )));
        }
        paths.insert(track.person_id, DensePath::from_track(track)?);
    }

    let ids: Vec<u32> = paths.keys().copied().collect();
    let mut edges = Vec::new();
    for (i, &a) in ids.iter().enumerate() {
        for &b in &ids[i + 1..] {
            let Some((min_dist, overlap)) = min_pair_distance(&paths[&a], &paths[&b]) else {
                continue;
            };
            if overlap < cooccur_min_frames || min_dist > radius {
                continue;
            }
            edges.push(GraphEdge {
                a,
                b,
                w_global: l2_distance(&embeddings[&a], &embeddings[&b]),
                uncertainty: None,
                w_local: None,
                zoomed: false,
            });
        }
    }

    let sigma = median_sigma(&edges);
    Ok(EntityGraph { embeddings: embeddings.clone(), edges, sigma })
}

fn median_sigma(edges: &[GraphEdge]) -> f64 {
    let mut ws: Vec<f64> = edges.iter().map(|e| e.w_global).collect();
    if ws.is_empty() {
        return 1.0;
    }
    ws.sort_by(f64::total_cmp);
    let mid = ws.len() / 2;
    let median = if ws.len() % 2 == 1 { ws[mid] } else { (ws[mid - 1] + ws[mid]) / 2.0 };
    if median > 0.0 {
        median
    } else {
        1.0
    }
}

/// Variance of the paired distance samples `‖F_u^(i) − F_v^(i)‖` over i.
/// Population variance, so two samples {0.4, 0.6} give exactly 0.01.
pub fn edge_uncertainty(samples_u: &[Embedding], samples_v: &[Embedding]) -> Result<f64> {
    if samples_u.len() != samples_v.len() {
        return Err(Error::invalid_argument(format!(
            "sample counts differ: {} vs {}",
            samples_u.len(),
            samples_v.len()
        )));
    }
    if samples_u.len() < 2 {
        return Err(Error::invalid_argument("uncertainty needs at least 2 samples"));
    }
    let ws: Vec<f64> = samples_u
        .iter()
        .zip(samples_v)
        .map(|(u, v)| {
            if u.len() != v.len() {
                return Err(Error::invalid_argument("sample dimensions differ"));
            }
            Ok(l2_distance(u, v))
        })
        .collect::<Result<_>>()?;
    let mean = ws.iter().sum::<f64>() / ws.len() as f64;
    Ok(ws.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / ws.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoomKind {
    Random,
    Uncertainty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoomPolicy {
    pub kind: ZoomKind,
    /// Zoom budget: how many edges receive local scoring.
    pub eta: usize,
    /// Similarity level above which an edge counts as predicted positive.
    pub theta_pos: f64,
    /// Drives the random policy's selection only.
    pub seed: u64,
}

impl ZoomPolicy {
    pub fn validate(&self) -> Result<()> {
        if !self.theta_pos.is_finite() || !(0.0..=1.0).contains(&self.theta_pos) {
            return Err(Error::validation(format!(
                "theta_pos {} outside [0, 1]",
                self.theta_pos
            )));
        }
        Ok(())
    }
}

/// Indices of the graph's positively-predicted edges (similarity at least
/// theta_pos). The uncertainty policy keeps the eta most uncertain; the
/// random policy samples eta uniformly. Returned indices are ascending.
pub fn select_zoom_edges(graph: &EntityGraph, policy: &ZoomPolicy) -> Result<Vec<usize>> {
    policy.validate()?;
    if policy.eta == 0 {
        return Ok(Vec::new());
    }
    let mut candidates: Vec<usize> = graph
        .edges
        .iter()
        .enumerate()
        .filter(|(_, e)| similarity(e.w_global, graph.sigma) >= policy.theta_pos)
        .map(|(i, _)| i)
        .collect();

    if policy.eta >= candidates.len() {
        return Ok(candidates);
    }
    let mut chosen = match policy.kind {
        ZoomKind::Random => {
            let mut rng = ChaCha20Rng::seed_from_u64(policy.seed);
            candidates.shuffle(&mut rng);
            candidates.truncate(policy.eta);
            candidates
        }
        ZoomKind::Uncertainty => {
            for &i in &candidates {
                if graph.edges[i].uncertainty.is_none() {
                    return Err(Error::validation(format!(
                        "edge ({}, {}) has no uncertainty estimate",
                        graph.edges[i].a, graph.edges[i].b
                    )));
                }
            }
            candidates.sort_by(|&x, &y| {
                let ux = graph.edges[x].uncertainty.unwrap();
                let uy = graph.edges[y].uncertainty.unwrap();
                uy.total_cmp(&ux).then(x.cmp(&y))
            });
            candidates.truncate(policy.eta);
            candidates
        }
    };
    chosen.sort_unstable();
    Ok(chosen)
}

/// One time window on a pair of tracks, frames inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipDescriptor {
    pub a: u32,
    pub b: u32,
    pub begin: u32,
    pub end: u32,
}

/// Supplies the candidate clips for an edge; windows where the two people
/// are close enough for their interaction to be observable.
pub trait ClipExtractor {
    fn clips(&self, a: u32, b: u32) -> Vec<ClipDescriptor>;
}

/// Scores interaction evidence for an edge's clips. Implementations must
/// return one score in [0, 1] per clip and be deterministic given their own
/// seed.
pub trait InteractionScorer {
    fn score_clips(&self, a: u32, b: u32, clips: &[ClipDescriptor]) -> Vec<f64>;
}

/// Clip extraction by relative distance: contiguous frame runs where the
/// pair's centers stay within `radius`, chopped into windows of at most
/// `clip_len` frames.
pub struct DistanceClipExtractor {
    paths: BTreeMap<u32, DensePath>,
    radius: f64,
    clip_len: u32,
}

impl DistanceClipExtractor {
    pub fn new(scene: &Scene, radius: f64, clip_len: u32) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid_argument("clip radius must be positive"));
        }
        if clip_len == 0 {
            return Err(Error::invalid_argument("clip length must be nonzero"));
        }
        let mut paths = BTreeMap::new();
        for track in scene.tracks.iter().filter(|t| !t.ignore) {
            paths.insert(track.person_id, DensePath::from_track(track)?);
        }
        Ok(DistanceClipExtractor { paths, radius, clip_len })
    }
}

impl ClipExtractor for DistanceClipExtractor {
    fn clips(&self, a: u32, b: u32) -> Vec<ClipDescriptor> {
        let (Some(pa), Some(pb)) = (self.paths.get(&a), self.paths.get(&b)) else {
            return Vec::new();
        };
        let s = pa.first.max(pb.first);
        let e = pa.last.min(pb.last);
        if e < s {
            return Vec::new();
        }
        let mut clips = Vec::new();
        let mut run_start: Option<u32> = None;
        for frame in s..=e {
            let (ax, ay) = pa.center_at(frame);
            let (bx, by) = pb.center_at(frame);
            let close = ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt() <= self.radius;
            match (close, run_start) {
                (true, None) => run_start = Some(frame),
                (false, Some(start)) => {
                    push_chunks(&mut clips, a, b, start, frame - 1, self.clip_len);
                    run_start = None;
                }
                _ => {}
            }
        }
        if let Some(start) = run_start {
            push_chunks(&mut clips, a, b, start, e, self.clip_len);
        }
        clips
    }
}

fn push_chunks(clips: &mut Vec<ClipDescriptor>, a: u32, b: u32, start: u32, end: u32, len: u32) {
    let mut begin = start;
    while begin <= end {
        let stop = end.min(begin + len - 1);
        clips.push(ClipDescriptor { a, b, begin, end: stop });
        begin = stop + 1;
    }
}

/// Scores the selected edges and writes their mean clip score into
/// `w_local`. Edges with no candidate clips score 0: absent evidence never
/// asserts a group. Scorer outputs outside [0, 1] or of the wrong length
/// are contract violations.
pub fn score_local_edges(
    graph: &mut EntityGraph,
    selected: &[usize],
    scorer: &dyn InteractionScorer,
    extractor: &dyn ClipExtractor,
) -> Result<()> {
    for &idx in selected {
        let (a, b) = {
            let e = graph
                .edges
                .get(idx)
                .ok_or_else(|| Error::invalid_argument(format!("edge index {idx} out of range")))?;
            (e.a, e.b)
        };
        let clips = extractor.clips(a, b);
        let w_local = if clips.is_empty() {
            0.0
        } else {
            let scores = scorer.score_clips(a, b, &clips);
            if scores.len() != clips.len() {
                return Err(Error::contract(format!(
                    "scorer returned {} scores for {} clips on edge ({a}, {b})",
                    scores.len(),
                    clips.len()
                )));
            }
            if let Some(bad) = scores.iter().find(|s| !s.is_finite() || !(0.0..=1.0).contains(*s)) {
                return Err(Error::contract(format!(
                    "scorer returned {bad} outside [0, 1] on edge ({a}, {b})"
                )));
            }
            scores.iter().sum::<f64>() / scores.len() as f64
        };
        let e = &mut graph.edges[idx];
        e.w_local = Some(w_local);
        e.zoomed = true;
    }
    Ok(())
}
