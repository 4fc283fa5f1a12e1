//! Trajectory embedding encoder.
//!
//! Tracks are normalized into fixed-width feature sequences and run through
//! a stacked LSTM; the embedding is the concatenation of every layer's
//! final-timestep hidden state (512 values at the default 4 x 128 shape).
//! Dropout between layers doubles as the stochastic-sampling mechanism:
//! repeating inference with live dropout yields the sample sets that edge
//! uncertainty is computed from.

mod lstm;
mod train;

pub use train::{
    numeric_gradient_check, train, GradCheckReport, MiningStrategy, TrainReport, Triplet,
    TripletConfig,
};

use crate::anno::{SceneMeta, Track};
use crate::seed::mix;
use crate::{Error, Result};
use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

pub type Embedding = Vec<f64>;

/// Features per step: x, y, w, h (frame-normalized), facing angle, time.
pub const INPUT_DIM: usize = 6;

/// Sequences longer than this are uniformly subsampled before encoding.
pub const MAX_STEPS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingComposition {
    /// Concatenate the final hidden state of every layer, bottom first.
    FinalHiddenAllLayers,
    /// Final hidden state of the top layer only.
    FinalHiddenTopLayer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub input_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    /// Inter-layer dropout rate; also drives stochastic sampling.
    pub dropout: f64,
    pub composition: EmbeddingComposition,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            input_dim: INPUT_DIM,
            hidden: 128,
            layers: 4,
            dropout: 0.2,
            composition: EmbeddingComposition::FinalHiddenAllLayers,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden == 0 || self.layers == 0 {
            return Err(Error::validation("encoder dimensions must be nonzero"));
        }
        if !self.dropout.is_finite() || !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::validation(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }

    pub fn embedding_dim(&self) -> usize {
        match self.composition {
            EmbeddingComposition::FinalHiddenAllLayers => self.layers * self.hidden,
            EmbeddingComposition::FinalHiddenTopLayer => self.hidden,
        }
    }
}

/// One layer's weights, row-major with gates packed [i f g o].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub w_ih: Vec<f64>,
    pub w_hh: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub config: EncoderConfig,
    pub layers: Vec<LayerParams>,
}

impl EncoderParams {
    /// Fresh weights, uniform in +-1/sqrt(fan_in) per matrix, zero biases.
    pub fn init(config: &EncoderConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(config.layers);
        for li in 0..config.layers {
            let in_dim = if li == 0 { config.input_dim } else { config.hidden };
            let rows = 4 * config.hidden;
            let ih_bound = 1.0 / (in_dim as f64).sqrt();
            let hh_bound = 1.0 / (config.hidden as f64).sqrt();
            let ih = Uniform::new_inclusive(-ih_bound, ih_bound);
            let hh = Uniform::new_inclusive(-hh_bound, hh_bound);
            let w_ih = (0..rows * in_dim).map(|_| ih.sample(&mut rng)).collect();
            let w_hh = (0..rows * config.hidden).map(|_| hh.sample(&mut rng)).collect();
            layers.push(LayerParams { w_ih, w_hh, b: vec![0.0; rows] });
        }
        Ok(EncoderParams { config: config.clone(), layers })
    }

    pub fn embedding_dim(&self) -> usize {
        self.config.embedding_dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.layers.len() != self.config.layers {
            return Err(Error::validation("layer count does not match config"));
        }
        for (li, l) in self.layers.iter().enumerate() {
            let in_dim = if li == 0 { self.config.input_dim } else { self.config.hidden };
            let rows = 4 * self.config.hidden;
            if l.w_ih.len() != rows * in_dim || l.w_hh.len() != rows * self.config.hidden || l.b.len() != rows {
                return Err(Error::validation(format!("layer {li} has wrong parameter shape")));
            }
            if l.w_ih.iter().chain(&l.w_hh).chain(&l.b).any(|v| !v.is_finite()) {
                return Err(Error::validation(format!("layer {li} has non-finite weights")));
            }
        }
        Ok(())
    }

    /// Embeds one preprocessed trajectory. With `dropout_active` the masks
    /// are drawn from `seed`, so equal seeds give bit-equal embeddings; with
    /// dropout inactive the seed is ignored.
    pub fn encode(&self, input: &TrajectoryInput, dropout_active: bool, seed: u64) -> Result<Embedding> {
        self.check_input(input)?;
        let masks = if dropout_active && self.config.dropout > 0.0 && self.config.layers > 1 {
            Some(self.draw_masks(input.steps.len(), seed))
        } else {
            None
        };
        let cache = lstm::forward(self, &input.steps, masks);
        Ok(lstm::embedding_from_cache(self, &cache))
    }

    /// Stochastic forward passes with live dropout. Sample `i` is seeded by
    /// `(seed, i)` only, so a longer run extends a shorter one.
    pub fn mc_sample(&self, input: &TrajectoryInput, tau: usize, seed: u64) -> Result<Vec<Embedding>> {
        if tau < 2 {
            return Err(Error::invalid_argument(format!(
                "stochastic sampling needs tau >= 2, got {tau}"
            )));
        }
        (0..tau)
            .map(|i| self.encode(input, true, mix(seed, i as u64)))
            .collect()
    }

    fn check_input(&self, input: &TrajectoryInput) -> Result<()> {
        if input.steps.is_empty() {
            return Err(Error::invalid_argument("cannot encode an empty sequence"));
        }
        for row in &input.steps {
            if row.len() != self.config.input_dim {
                return Err(Error::invalid_argument(format!(
                    "input width {} does not match encoder input_dim {}",
                    row.len(),
                    self.config.input_dim
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid_argument("non-finite feature value"));
            }
        }
        Ok(())
    }

    fn draw_masks(&self, t_len: usize, seed: u64) -> lstm::Masks {
        draw_masks(self.config.layers, self.config.hidden, self.config.dropout, t_len, seed)
    }
}

/// Inverted-dropout masks for every layer boundary, fresh per timestep.
/// Kept units are scaled by 1/(1-p) so expectations match the dropout-free
/// forward pass.
fn draw_masks(layers: usize, hidden: usize, dropout: f64, t_len: usize, seed: u64) -> lstm::Masks {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let keep_scale = 1.0 / (1.0 - dropout);
    (0..layers - 1)
        .map(|_| {
            (0..t_len)
                .map(|_| {
                    (0..hidden)
                        .map(|_| if rng.gen::<f64>() < dropout { 0.0 } else { keep_scale })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// A track reduced to the encoder's feature sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryInput {
    pub steps: Vec<Vec<f64>>,
}

/// Normalizes a track's keyframes into encoder features: box coordinates
/// divided by the frame size, facing angle (0 when unlabeled), and the
/// frame index divided by the scene length. Long tracks are subsampled to
/// `MAX_STEPS` keeping the first and last keyframes.
pub fn preprocess(track: &Track, meta: &SceneMeta) -> Result<TrajectoryInput> {
    if track.keyframes.len() < 2 {
        return Err(Error::validation(format!(
            "track {} has {} keyframes, need at least 2 to encode",
            track.person_id,
            track.keyframes.len()
        )));
    }
    if meta.width == 0 || meta.height == 0 || meta.num_frames == 0 {
        return Err(Error::validation("scene dimensions must be nonzero"));
    }
    let w = f64::from(meta.width);
    let h = f64::from(meta.height);
    let t = f64::from(meta.num_frames);

    let indices: Vec<usize> = if track.keyframes.len() > MAX_STEPS {
        let n = track.keyframes.len();
        (0..MAX_STEPS).map(|i| i * (n - 1) / (MAX_STEPS - 1)).collect()
    } else {
        (0..track.keyframes.len()).collect()
    };

    let steps = indices
        .into_iter()
        .map(|i| {
            let kf = &track.keyframes[i];
            let angle = kf.face_orientation.map_or(0.0, |o| o.angle());
            vec![
                kf.bbox.x / w,
                kf.bbox.y / h,
                kf.bbox.w / w,
                kf.bbox.h / h,
                angle,
                f64::from(kf.frame) / t,
            ]
        })
        .collect();
    Ok(TrajectoryInput { steps })
}

pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Hinge triplet loss: max(0, d(a,p) - d(a,n) + margin).
pub fn triplet_loss(anchor: &[f64], positive: &[f64], negative: &[f64], margin: f64) -> f64 {
    (l2_distance(anchor, positive) - l2_distance(anchor, negative) + margin).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anno::{BoundingBox, BoxKind, FaceOrientation, Keyframe, Occlusion};

    fn meta() -> SceneMeta {
        SceneMeta { width: 25000, height: 14000, fps: 30.0, num_frames: 100, keyframe_interval: 1 }
    }

    fn kf(frame: u32, x: f64, y: f64) -> Keyframe {
        Keyframe {
            frame,
            bbox: BoundingBox { x, y, w: 2500.0, h: 1400.0, kind: BoxKind::VisibleBody },
            occlusion: Occlusion::Without,
            face_orientation: None,
        }
    }

    fn track(keyframes: Vec<Keyframe>) -> Track {
        Track { person_id: 1, attributes: None, ignore: false, keyframes }
    }

    #[test]
    fn preprocess_divides_by_frame_size() {
        let tr = track(vec![kf(0, 12500.0, 7000.0), kf(50, 0.0, 0.0)]);
        let input = preprocess(&tr, &meta()).unwrap();
        assert_eq!(input.steps[0], vec![0.5, 0.5, 0.1, 0.1, 0.0, 0.0]);
        assert_eq!(input.steps[1][5], 0.5);
    }

    #[test]
    fn preprocess_uses_face_angle_when_present() {
        let mut a = kf(0, 0.0, 0.0);
        a.face_orientation = Some(FaceOrientation::N);
        let tr = track(vec![a, kf(10, 0.0, 0.0)]);
        let input = preprocess(&tr, &meta()).unwrap();
        assert!((input.steps[0][4] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(input.steps[1][4], 0.0);
    }

    #[test]
    fn preprocess_subsamples_to_cap_keeping_endpoints() {
        let kfs: Vec<Keyframe> = (0..300).map(|i| kf(i, f64::from(i), 0.0)).collect();
        let tr = track(kfs);
        let input = preprocess(&tr, &meta()).unwrap();
        assert_eq!(input.steps.len(), MAX_STEPS);
        assert_eq!(input.steps[0][0], 0.0);
        assert_eq!(input.steps[MAX_STEPS - 1][0], 299.0 / 25000.0);
        for pair in input.steps.windows(2) {
            assert!(pair[1][5] > pair[0][5]);
        }
    }

    #[test]
    fn preprocess_rejects_single_keyframe() {
        let tr = track(vec![kf(0, 0.0, 0.0)]);
        assert!(preprocess(&tr, &meta()).is_err());
    }

    #[test]
    fn default_config_embeds_into_512() {
        let cfg = EncoderConfig::default();
        assert_eq!(cfg.embedding_dim(), 512);
    }

    #[test]
    fn init_respects_fan_in_bounds_and_zero_biases() {
        let cfg = EncoderConfig { input_dim: 4, hidden: 9, layers: 2, ..EncoderConfig::default() };
        let params = EncoderParams::init(&cfg, 3).unwrap();
        let b0 = 1.0 / 2.0;
        assert!(params.layers[0].w_ih.iter().all(|v| v.abs() <= b0));
        let b_hh = 1.0 / 3.0;
        assert!(params.layers[0].w_hh.iter().all(|v| v.abs() <= b_hh));
        assert!(params.layers[1].w_ih.iter().all(|v| v.abs() <= b_hh));
        assert!(params.layers.iter().all(|l| l.b.iter().all(|&v| v == 0.0)));
        assert_eq!(params, EncoderParams::init(&cfg, 3).unwrap());
        assert_ne!(params, EncoderParams::init(&cfg, 4).unwrap());
    }

    fn small_params() -> EncoderParams {
        let cfg = EncoderConfig { input_dim: 3, hidden: 5, layers: 3, ..EncoderConfig::default() };
        EncoderParams::init(&cfg, 11).unwrap()
    }

    fn rand_input(len: usize, dim: usize, seed: u64) -> TrajectoryInput {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        TrajectoryInput {
            steps: (0..len).map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect()).collect(),
        }
    }

    #[test]
    fn encode_is_deterministic_per_seed() {
        let params = small_params();
        let input = rand_input(7, 3, 1);
        let a = params.encode(&input, true, 42).unwrap();
        let b = params.encode(&input, true, 42).unwrap();
        let c = params.encode(&input, true, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn inactive_dropout_ignores_seed() {
        let params = small_params();
        let input = rand_input(6, 3, 2);
        let a = params.encode(&input, false, 1).unwrap();
        let b = params.encode(&input, false, 999).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 15);
    }

    #[test]
    fn encode_rejects_width_mismatch_and_empty() {
        let params = small_params();
        let bad = TrajectoryInput { steps: vec![vec![0.0; 4]] };
        assert!(params.encode(&bad, false, 0).is_err());
        let empty = TrajectoryInput { steps: vec![] };
        assert!(params.encode(&empty, false, 0).is_err());
    }

    #[test]
    fn mc_sample_needs_two_and_extends_prefixes() {
        let params = small_params();
        let input = rand_input(5, 3, 3);
        assert!(params.mc_sample(&input, 1, 7).is_err());
        let short = params.mc_sample(&input, 2, 7).unwrap();
        let long = params.mc_sample(&input, 4, 7).unwrap();
        assert_eq!(short[..], long[..2]);
        assert_ne!(long[0], long[1]);
    }

    #[test]
    fn mc_sample_with_zero_dropout_is_degenerate() {
        let cfg = EncoderConfig { input_dim: 3, hidden: 4, layers: 2, dropout: 0.0, ..EncoderConfig::default() };
        let params = EncoderParams::init(&cfg, 5).unwrap();
        let input = rand_input(4, 3, 4);
        let samples = params.mc_sample(&input, 3, 1).unwrap();
        assert_eq!(samples[0], samples[1]);
        assert_eq!(samples[1], samples[2]);
    }

    #[test]
    fn triplet_loss_matches_hinge() {
        let a = vec![0.0];
        let p = vec![0.6];
        let n = vec![0.7];
        assert!((triplet_loss(&a, &p, &n, 0.5) - 0.4).abs() < 1e-15);
        // degenerate triplet: both distances zero, loss is the margin
        assert_eq!(triplet_loss(&a, &a, &a, 0.5), 0.5);
        // clearly separated negative drives the hinge to zero
        let far = vec![10.0];
        assert_eq!(triplet_loss(&a, &p, &far, 0.5), 0.0);
    }

    #[test]
    fn zero_weights_give_zero_embedding() {
        let mut params = small_params();
        for l in &mut params.layers {
            l.w_ih.iter_mut().for_each(|v| *v = 0.0);
            l.w_hh.iter_mut().for_each(|v| *v = 0.0);
        }
        let input = rand_input(6, 3, 8);
        let emb = params.encode(&input, false, 0).unwrap();
        assert!(emb.iter().all(|&v| v == 0.0));
    }
}
