//! Triplet training over scene ground truth, plus the finite-difference
//! gradient audit used to keep the hand-written backward pass honest.

use super::lstm::{self, StackGrads};
use super::{l2_distance, preprocess, EncoderConfig, EncoderParams, TrajectoryInput};
use crate::anno::Scene;
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiningStrategy {
    /// Negative drawn uniformly from every other-group track in the scene.
    UniformRandom,
    /// Closest negative beyond the current anchor-positive distance, probed
    /// on a small candidate sample with dropout off.
    SemiHard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletConfig {
    pub margin: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Dropout rate used on training forward passes.
    pub dropout: f64,
    pub mining: MiningStrategy,
    pub seed: u64,
}

impl Default for TripletConfig {
    fn default() -> Self {
        TripletConfig {
            margin: 0.5,
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 32,
            epochs: 50,
            dropout: 0.2,
            mining: MiningStrategy::UniformRandom,
            seed: 0,
        }
    }
}

impl TripletConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.margin.is_finite() || self.margin < 0.0 {
            return Err(Error::validation(format!("margin {} must be >= 0", self.margin)));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::validation("learning rate must be positive"));
        }
        if !self.momentum.is_finite() || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::validation("momentum must lie in [0, 1)"));
        }
        if self.batch_size == 0 {
            return Err(Error::validation("batch size must be nonzero"));
        }
        if !self.dropout.is_finite() || !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::validation("dropout rate must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-triplet loss for each epoch, in order.
    pub epoch_losses: Vec<f64>,
    /// Anchor-positive pairs available across all scenes.
    pub pairs: usize,
    pub batches_per_epoch: usize,
    pub triplets_seen: usize,
}

/// One training example as preprocessed sequences.
#[derive(Debug, Clone)]
pub struct Triplet {
    pub anchor: TrajectoryInput,
    pub positive: TrajectoryInput,
    pub negative: TrajectoryInput,
}

struct Pool {
    inputs: Vec<TrajectoryInput>,
    /// (anchor, positive, negative candidates) as indices into `inputs`.
    pairs: Vec<(usize, usize, Vec<usize>)>,
}

/// Flattens scenes into encodable sequences and anchor-positive pairs.
/// Tracks too short to encode or flagged ignore drop out; a pair survives
/// only if some other-group track in its scene can serve as negative.
fn build_pool(scenes: &[Scene], encoder: &EncoderConfig) -> Result<Pool> {
    let mut inputs = Vec::new();
    let mut pairs = Vec::new();

    for scene in scenes {
        if scene.groups.len() < 2 {
            return Err(Error::validation(format!(
                "training scenes need at least 2 groups, found {}",
                scene.groups.len()
            )));
        }
        let mut index_of = std::collections::BTreeMap::new();
        for track in &scene.tracks {
            if track.ignore || track.keyframes.len() < 2 {
                continue;
            }
            let input = preprocess(track, &scene.meta)?;
            if input.steps[0].len() != encoder.input_dim {
                return Err(Error::validation(format!(
                    "encoder expects input_dim {}, preprocessing yields {}",
                    encoder.input_dim,
                    input.steps[0].len()
                )));
            }
            index_of.insert(track.person_id, inputs.len());
            inputs.push(input);
        }

        let group_of: std::collections::BTreeMap<u32, u32> = scene
            .groups
            .iter()
            .flat_map(|g| g.members.iter().map(move |&m| (m, g.group_id)))
            .collect();

        for group in &scene.groups {
            let members: Vec<usize> = group
                .members
                .iter()
                .filter_map(|m| index_of.get(m).copied())
                .collect();
            if members.len() < 2 {
                continue;
            }
            let negatives: Vec<usize> = index_of
                .iter()
                .filter(|(id, _)| group_of.get(id) != Some(&group.group_id))
                .map(|(_, &idx)| idx)
                .collect();
            if negatives.is_empty() {
                continue;
            }
            for i in 0..members.len() {
                for j in i + 1..members.len() {
                    pairs.push((members[i], members[j], negatives.clone()));
                }
            }
        }
    }

    if pairs.is_empty() {
        return Err(Error::validation(
            "no valid triplets: no group pair with an encodable negative",
        ));
    }
    Ok(Pool { inputs, pairs })
}

/// Gradient of the hinge triplet loss with respect to the three embeddings.
/// Returns None when the hinge is inactive. Zero-distance terms contribute
/// a zero subgradient.
fn triplet_grads(
    a: &[f64],
    p: &[f64],
    n: &[f64],
    margin: f64,
) -> (f64, Option<(Vec<f64>, Vec<f64>, Vec<f64>)>) {
    let d_ap = l2_distance(a, p);
    let d_an = l2_distance(a, n);
    let loss = d_ap - d_an + margin;
    if loss <= 0.0 {
        return (0.0, None);
    }
    let dim = a.len();
    let mut da = vec![0.0; dim];
    let mut dp = vec![0.0; dim];
    let mut dn = vec![0.0; dim];
    if d_ap > 0.0 {
        for k in 0..dim {
            let u = (a[k] - p[k]) / d_ap;
            da[k] += u;
            dp[k] -= u;
        }
    }
    if d_an > 0.0 {
        for k in 0..dim {
            let u = (a[k] - n[k]) / d_an;
            da[k] -= u;
            dn[k] += u;
        }
    }
    (loss, Some((da, dp, dn)))
}

/// Forward with optional training dropout, keeping the cache for backward.
fn train_forward(
    params: &EncoderParams,
    input: &TrajectoryInput,
    dropout: f64,
    mask_seed: u64,
) -> lstm::StackCache {
    let masks = if dropout > 0.0 && params.config.layers > 1 {
        Some(super::draw_masks(
            params.config.layers,
            params.config.hidden,
            dropout,
            input.steps.len(),
            mask_seed,
        ))
    } else {
        None
    };
    lstm::forward(params, &input.steps, masks)
}

/// Trains a fresh encoder on scene ground truth with SGD + momentum over
/// the hinge triplet loss. An epoch visits every anchor-positive pair once
/// in shuffled order; negatives are re-drawn each epoch. Zero epochs
/// returns the untouched initialization.
pub fn train(
    scenes: &[Scene],
    encoder: &EncoderConfig,
    config: &TripletConfig,
) -> Result<(EncoderParams, TrainReport)> {
    encoder.validate()?;
    config.validate()?;
    if scenes.is_empty() {
        return Err(Error::validation("training needs at least one scene"));
    }
    let pool = build_pool(scenes, encoder)?;

    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let init_seed = rng.gen::<u64>();
    let mut params = EncoderParams::init(encoder, init_seed)?;
    let mut velocity = StackGrads::zeros_like(&params);
    let mut order: Vec<usize> = (0..pool.pairs.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut triplets_seen = 0usize;

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss_sum = 0.0;

        for chunk in order.chunks(config.batch_size) {
            let mut grads = StackGrads::zeros_like(&params);
            let mut active = false;

            for &pair_idx in chunk {
                let (ai, pi, ref negatives) = pool.pairs[pair_idx];
                let ni = pick_negative(&params, &pool, ai, negatives, config, &mut rng);
                let seeds = [rng.gen::<u64>(), rng.gen::<u64>(), rng.gen::<u64>()];

                let ca = train_forward(&params, &pool.inputs[ai], config.dropout, seeds[0]);
                let cp = train_forward(&params, &pool.inputs[pi], config.dropout, seeds[1]);
                let cn = train_forward(&params, &pool.inputs[ni], config.dropout, seeds[2]);
                let ea = lstm::embedding_from_cache(&params, &ca);
                let ep = lstm::embedding_from_cache(&params, &cp);
                let en = lstm::embedding_from_cache(&params, &cn);

                let (loss, grad) = triplet_grads(&ea, &ep, &en, config.margin);
                epoch_loss_sum += loss;
                triplets_seen += 1;
                if let Some((da, dp, dn)) = grad {
                    grads.add(&lstm::backward(&params, &ca, &da));
                    grads.add(&lstm::backward(&params, &cp, &dp));
                    grads.add(&lstm::backward(&params, &cn, &dn));
                    active = true;
                }
            }

            if active {
                grads.scale(1.0 / chunk.len() as f64);
                apply_momentum_update(&mut params, &mut velocity, &grads, config);
            }
        }

        epoch_losses.push(epoch_loss_sum / pool.pairs.len() as f64);
    }

    let report = TrainReport {
        epoch_losses,
        pairs: pool.pairs.len(),
        batches_per_epoch: pool.pairs.len().div_ceil(config.batch_size),
        triplets_seen,
    };
    Ok((params, report))
}

fn pick_negative(
    params: &EncoderParams,
    pool: &Pool,
    anchor: usize,
    negatives: &[usize],
    config: &TripletConfig,
    rng: &mut ChaCha20Rng,
) -> usize {
    match config.mining {
        MiningStrategy::UniformRandom => negatives[rng.gen_range(0..negatives.len())],
        MiningStrategy::SemiHard => {
            let sample: Vec<usize> = negatives
                .choose_multiple(rng, negatives.len().min(8))
                .copied()
                .collect();
            let ea = clean_embedding(params, &pool.inputs[anchor]);
            // the positive is irrelevant here: the probe ranks negatives by
            // distance to the anchor alone, preferring the nearest one that
            // is not already trivially separated
            let mut best_beyond: Option<(f64, usize)> = None;
            let mut hardest: Option<(f64, usize)> = None;
            for &ni in &sample {
                let en = clean_embedding(params, &pool.inputs[ni]);
                let d = l2_distance(&ea, &en);
                if d > config.margin {
                    if best_beyond.map_or(true, |(bd, _)| d < bd) {
                        best_beyond = Some((d, ni));
                    }
                } else if hardest.map_or(true, |(hd, _)| d > hd) {
                    hardest = Some((d, ni));
                }
            }
            best_beyond.or(hardest).map(|(_, ni)| ni).unwrap_or(sample[0])
        }
    }
}

fn clean_embedding(params: &EncoderParams, input: &TrajectoryInput) -> Vec<f64> {
    let cache = lstm::forward(params, &input.steps, None);
    lstm::embedding_from_cache(params, &cache)
}

fn apply_momentum_update(
    params: &mut EncoderParams,
    velocity: &mut StackGrads,
    grads: &StackGrads,
    config: &TripletConfig,
) {
    for ((lp, vl), gl) in params.layers.iter_mut().zip(&mut velocity.layers).zip(&grads.layers) {
        step_block(&mut lp.w_ih, &mut vl.w_ih, &gl.w_ih, config);
        step_block(&mut lp.w_hh, &mut vl.w_hh, &gl.w_hh, config);
        step_block(&mut lp.b, &mut vl.b, &gl.b, config);
    }
}

fn step_block(weights: &mut [f64], velocity: &mut [f64], grads: &[f64], config: &TripletConfig) {
    for ((w, v), &g) in weights.iter_mut().zip(velocity.iter_mut()).zip(grads) {
        *v = config.momentum * *v + g;
        *w -= config.learning_rate * *v;
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub params_checked: usize,
    /// Smallest |analytic gradient| over all parameters. Near-zero entries
    /// make the relative comparison float-noise-bound; harnesses redraw
    /// such batches rather than loosening the tolerance.
    pub min_abs_analytic: f64,
}

/// Central-difference audit of the analytic gradient on a batch-mean
/// triplet loss with dropout off. Relative error per parameter is
/// |g_a - g_n| / max(1e-12, |g_a| + |g_n|); the maximum over all
/// parameters is reported.
pub fn numeric_gradient_check(
    params: &EncoderParams,
    batch: &[Triplet],
    margin: f64,
    epsilon: f64,
) -> Result<GradCheckReport> {
    params.validate()?;
    if batch.is_empty() {
        return Err(Error::invalid_argument("gradient check needs a nonempty batch"));
    }
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::invalid_argument("epsilon must be positive"));
    }

    // analytic side: mean of per-triplet gradients
    let mut analytic = StackGrads::zeros_like(params);
    for t in batch {
        let ca = lstm::forward(params, &t.anchor.steps, None);
        let cp = lstm::forward(params, &t.positive.steps, None);
        let cn = lstm::forward(params, &t.negative.steps, None);
        let ea = lstm::embedding_from_cache(params, &ca);
        let ep = lstm::embedding_from_cache(params, &cp);
        let en = lstm::embedding_from_cache(params, &cn);
        if let (_, Some((da, dp, dn))) = triplet_grads(&ea, &ep, &en, margin) {
            analytic.add(&lstm::backward(params, &ca, &da));
            analytic.add(&lstm::backward(params, &cp, &dp));
            analytic.add(&lstm::backward(params, &cn, &dn));
        }
    }
    analytic.scale(1.0 / batch.len() as f64);

    let batch_loss = |p: &EncoderParams| -> f64 {
        batch
            .iter()
            .map(|t| {
                let ea = clean_embedding(p, &t.anchor);
                let ep = clean_embedding(p, &t.positive);
                let en = clean_embedding(p, &t.negative);
                super::triplet_loss(&ea, &ep, &en, margin)
            })
            .sum::<f64>()
            / batch.len() as f64
    };

    let mut work = params.clone();
    let mut max_rel_err = 0.0f64;
    let mut params_checked = 0usize;
    let mut min_abs_analytic = f64::INFINITY;

    for li in 0..params.layers.len() {
        for block in 0..3 {
            let len = match block {
                0 => params.layers[li].w_ih.len(),
                1 => params.layers[li].w_hh.len(),
                _ => params.layers[li].b.len(),
            };
            for k in 0..len {
                let select = |l: &super::LayerParams, b: usize| match b {
                    0 => l.w_ih[k],
                    1 => l.w_hh[k],
                    _ => l.b[k],
                };
                let orig = select(&params.layers[li], block);
                set_param(&mut work, li, block, k, orig + epsilon);
                let plus = batch_loss(&work);
                set_param(&mut work, li, block, k, orig - epsilon);
                let minus = batch_loss(&work);
                set_param(&mut work, li, block, k, orig);

                let numeric = (plus - minus) / (2.0 * epsilon);
                let an = match block {
                    0 => analytic.layers[li].w_ih[k],
                    1 => analytic.layers[li].w_hh[k],
                    _ => analytic.layers[li].b[k],
                };
                let rel = (an - numeric).abs() / (an.abs() + numeric.abs()).max(1e-12);
                max_rel_err = max_rel_err.max(rel);
                min_abs_analytic = min_abs_analytic.min(an.abs());
                params_checked += 1;
            }
        }
    }

    Ok(GradCheckReport { max_rel_err, params_checked, min_abs_analytic })
}

fn set_param(params: &mut EncoderParams, layer: usize, block: usize, k: usize, value: f64) {
    let l = &mut params.layers[layer];
    match block {
        0 => l.w_ih[k] = value,
        1 => l.w_hh[k] = value,
        _ => l.b[k] = value,
    }
}
