//! Stacked LSTM forward and backward passes, f64 throughout.
//!
//! Gates are packed along the row axis in the order [input, forget, cell,
//! output], so every per-layer parameter block has `4 * hidden` rows. The
//! backward pass is plain BPTT over cached activations; it exists to serve
//! the triplet loss, so the incoming gradient lands only on the embedding
//! (the final-timestep hidden states).

use super::{EmbeddingComposition, EncoderParams};

/// Inverted-dropout masks, `[boundary][timestep][unit]`. A boundary sits
/// between layer `l` and layer `l + 1`; layer 0 input is never masked.
pub(crate) type Masks = Vec<Vec<Vec<f64>>>;

pub(crate) struct LayerCache {
    /// Layer inputs after dropout from below, one row per timestep.
    xs: Vec<Vec<f64>>,
    /// Hidden states, `hs[0]` is the zero initial state (len T + 1).
    hs: Vec<Vec<f64>>,
    /// Cell states, same layout as `hs`.
    cs: Vec<Vec<f64>>,
    /// Activated gate values per timestep, packed [i f g o].
    gates: Vec<Vec<f64>>,
    /// tanh of the cell state per timestep.
    tanh_c: Vec<Vec<f64>>,
}

pub(crate) struct StackCache {
    pub(crate) layers: Vec<LayerCache>,
    masks: Option<Masks>,
}

#[derive(Clone)]
pub(crate) struct LayerGrads {
    pub(crate) w_ih: Vec<f64>,
    pub(crate) w_hh: Vec<f64>,
    pub(crate) b: Vec<f64>,
}

#[derive(Clone)]
pub(crate) struct StackGrads {
    pub(crate) layers: Vec<LayerGrads>,
}

impl StackGrads {
    pub(crate) fn zeros_like(params: &EncoderParams) -> Self {
        let layers = params
            .layers
            .iter()
            .map(|l| LayerGrads {
                w_ih: vec![0.0; l.w_ih.len()],
                w_hh: vec![0.0; l.w_hh.len()],
                b: vec![0.0; l.b.len()],
            })
            .collect();
        StackGrads { layers }
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            for v in l.w_ih.iter_mut().chain(l.w_hh.iter_mut()).chain(l.b.iter_mut()) {
                *v *= factor;
            }
        }
    }

    pub(crate) fn add(&mut self, other: &StackGrads) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.w_ih.iter_mut().zip(&b.w_ih) {
                *x += y;
            }
            for (x, y) in a.w_hh.iter_mut().zip(&b.w_hh) {
                *x += y;
            }
            for (x, y) in a.b.iter_mut().zip(&b.b) {
                *x += y;
            }
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Dot product with four independent accumulators; the f64 add latency
/// otherwise serializes the whole training loop.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let split = a.len() & !3;
    let (a4, a_tail) = a.split_at(split);
    let (b4, b_tail) = b.split_at(split);
    let mut acc = [0.0f64; 4];
    for (ca, cb) in a4.chunks_exact(4).zip(b4.chunks_exact(4)) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in a_tail.iter().zip(b_tail) {
        sum += x * y;
    }
    sum
}

/// out += m^T v where m is rows x cols row-major and v has len rows.
fn add_transposed_matvec(m: &[f64], v: &[f64], cols: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), cols);
    for (row, &vi) in m.chunks_exact(cols).zip(v) {
        if vi != 0.0 {
            for (o, &w) in out.iter_mut().zip(row) {
                *o += w * vi;
            }
        }
    }
}

/// Runs the whole stack over `steps`, caching everything the backward pass
/// needs. `masks` must match the configured layer count and sequence length
/// when present.
pub(crate) fn forward(params: &EncoderParams, steps: &[Vec<f64>], masks: Option<Masks>) -> StackCache {
    let hidden = params.config.hidden;
    let t_len = steps.len();
    let mut layers = Vec::with_capacity(params.layers.len());
    let mut input: Vec<Vec<f64>> = steps.to_vec();

    for (li, layer) in params.layers.iter().enumerate() {
        if li > 0 {
            if let Some(m) = masks.as_ref() {
                for (row, mask) in input.iter_mut().zip(&m[li - 1]) {
                    for (x, &k) in row.iter_mut().zip(mask) {
                        *x *= k;
                    }
                }
            }
        }
        let in_dim = input.first().map_or(0, |r| r.len());
        let mut hs = vec![vec![0.0; hidden]; t_len + 1];
        let mut cs = vec![vec![0.0; hidden]; t_len + 1];
        let mut gates = vec![vec![0.0; 4 * hidden]; t_len];
        let mut tanh_c = vec![vec![0.0; hidden]; t_len];

        for t in 0..t_len {
            let x = &input[t];
            let (h_prev, h_rest) = hs.split_at_mut(t + 1);
            let h_prev = &h_prev[t];
            let g = &mut gates[t];
            for r in 0..4 * hidden {
                g[r] = layer.b[r]
                    + dot(&layer.w_ih[r * in_dim..(r + 1) * in_dim], x)
                    + dot(&layer.w_hh[r * hidden..(r + 1) * hidden], h_prev);
            }
            let (c_prev, c_rest) = cs.split_at_mut(t + 1);
            let c_prev = &c_prev[t];
            for u in 0..hidden {
                let i = sigmoid(g[u]);
                let f = sigmoid(g[hidden + u]);
                let cand = g[2 * hidden + u].tanh();
                let o = sigmoid(g[3 * hidden + u]);
                g[u] = i;
                g[hidden + u] = f;
                g[2 * hidden + u] = cand;
                g[3 * hidden + u] = o;
                let c = f * c_prev[u] + i * cand;
                let tc = c.tanh();
                c_rest[0][u] = c;
                tanh_c[t][u] = tc;
                h_rest[0][u] = o * tc;
            }
        }
        let next_input = hs[1..].to_vec();
        layers.push(LayerCache { xs: input, hs, cs, gates, tanh_c });
        input = next_input;
    }

    StackCache { layers, masks }
}

/// Embedding read-out from a forward cache, concatenating final-timestep
/// hidden states bottom layer first.
pub(crate) fn embedding_from_cache(params: &EncoderParams, cache: &StackCache) -> Vec<f64> {
    let t_len = cache.layers[0].xs.len();
    match params.config.composition {
        EmbeddingComposition::FinalHiddenAllLayers => {
            let mut out = Vec::with_capacity(params.embedding_dim());
            for layer in &cache.layers {
                out.extend_from_slice(&layer.hs[t_len]);
            }
            out
        }
        EmbeddingComposition::FinalHiddenTopLayer => {
            cache.layers.last().expect("at least one layer").hs[t_len].clone()
        }
    }
}

/// BPTT given the gradient of the loss with respect to the embedding.
/// Returns parameter gradients; input gradients are discarded because the
/// preprocessing is not trained.
pub(crate) fn backward(params: &EncoderParams, cache: &StackCache, d_embedding: &[f64]) -> StackGrads {
    let hidden = params.config.hidden;
    let n_layers = params.layers.len();
    let t_len = cache.layers[0].xs.len();
    let mut grads = StackGrads::zeros_like(params);

    // gradient flowing into each layer's hidden outputs from above
    let mut dh_top: Vec<Vec<f64>> = vec![vec![0.0; hidden]; t_len];
    seed_final_step(params, n_layers - 1, d_embedding, &mut dh_top[t_len - 1]);

    for li in (0..n_layers).rev() {
        let layer = &params.layers[li];
        let lc = &cache.layers[li];
        let in_dim = lc.xs.first().map_or(0, |r| r.len());
        let lg = &mut grads.layers[li];

        let mut dh_rec = vec![0.0; hidden];
        let mut dc_rec = vec![0.0; hidden];
        let mut dx: Vec<Vec<f64>> = vec![vec![0.0; in_dim]; t_len];
        let mut dpre = vec![0.0; 4 * hidden];

        for t in (0..t_len).rev() {
            let g = &lc.gates[t];
            let tc = &lc.tanh_c[t];
            let c_prev = &lc.cs[t];
            for u in 0..hidden {
                let dh = dh_top[t][u] + dh_rec[u];
                let i = g[u];
                let f = g[hidden + u];
                let cand = g[2 * hidden + u];
                let o = g[3 * hidden + u];
                let dc = dh * o * (1.0 - tc[u] * tc[u]) + dc_rec[u];
                dpre[u] = dc * cand * i * (1.0 - i);
                dpre[hidden + u] = dc * c_prev[u] * f * (1.0 - f);
                dpre[2 * hidden + u] = dc * i * (1.0 - cand * cand);
                dpre[3 * hidden + u] = dh * tc[u] * o * (1.0 - o);
                dc_rec[u] = dc * f;
            }
            let x = &lc.xs[t];
            let h_prev = &lc.hs[t];
            for r in 0..4 * hidden {
                let d = dpre[r];
                if d == 0.0 {
                    continue;
                }
                lg.b[r] += d;
                for (w, &xv) in lg.w_ih[r * in_dim..(r + 1) * in_dim].iter_mut().zip(x) {
                    *w += d * xv;
                }
                for (w, &hv) in lg.w_hh[r * hidden..(r + 1) * hidden].iter_mut().zip(h_prev) {
                    *w += d * hv;
                }
            }
            dh_rec.iter_mut().for_each(|v| *v = 0.0);
            add_transposed_matvec(&layer.w_hh, &dpre, hidden, &mut dh_rec);
            add_transposed_matvec(&layer.w_ih, &dpre, in_dim, &mut dx[t]);
        }

        // hand dx down as the layer below's output gradient, through the
        // dropout mask that sat on this boundary
        if li > 0 {
            for t in 0..t_len {
                if let Some(m) = cache.masks.as_ref() {
                    for u in 0..hidden {
                        dh_top[t][u] = dx[t][u] * m[li - 1][t][u];
                    }
                } else {
                    dh_top[t].copy_from_slice(&dx[t]);
                }
            }
            seed_final_step(params, li - 1, d_embedding, &mut dh_top[t_len - 1]);
        }
    }

    grads
}

/// Adds the embedding-gradient slice belonging to `layer_idx` onto its
/// final-timestep hidden gradient.
fn seed_final_step(params: &EncoderParams, layer_idx: usize, d_embedding: &[f64], dh_final: &mut [f64]) {
    let hidden = params.config.hidden;
    match params.config.composition {
        EmbeddingComposition::FinalHiddenAllLayers => {
            let s = layer_idx * hidden;
            for (d, &g) in dh_final.iter_mut().zip(&d_embedding[s..s + hidden]) {
                *d += g;
            }
        }
        EmbeddingComposition::FinalHiddenTopLayer => {
            if layer_idx == params.layers.len() - 1 {
                for (d, &g) in dh_final.iter_mut().zip(d_embedding) {
                    *d += g;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{EncoderConfig, EncoderParams};

    fn tiny_params(input_dim: usize, hidden: usize, layers: usize) -> EncoderParams {
        let config = EncoderConfig {
            input_dim,
            hidden,
            layers,
            dropout: 0.0,
            composition: EmbeddingComposition::FinalHiddenAllLayers,
        };
        EncoderParams::init(&config, 9).unwrap()
    }

    #[test]
    fn dot_matches_naive_sum() {
        let a: Vec<f64> = (0..13).map(|i| i as f64 * 0.5).collect();
        let b: Vec<f64> = (0..13).map(|i| 1.0 - i as f64 * 0.1).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }

    #[test]
    fn single_cell_step_matches_gate_equations() {
        let config = EncoderConfig {
            input_dim: 1,
            hidden: 1,
            layers: 1,
            dropout: 0.0,
            composition: EmbeddingComposition::FinalHiddenTopLayer,
        };
        let mut params = EncoderParams::init(&config, 0).unwrap();
        params.layers[0].w_ih = vec![0.1, 0.2, 0.3, 0.4];
        params.layers[0].w_hh = vec![0.0; 4];
        params.layers[0].b = vec![0.0; 4];
        let cache = forward(&params, &[vec![1.0]], None);
        let i = 1.0 / (1.0 + (-0.1f64).exp());
        let f = 1.0 / (1.0 + (-0.2f64).exp());
        let g = 0.3f64.tanh();
        let o = 1.0 / (1.0 + (-0.4f64).exp());
        let c = f * 0.0 + i * g;
        let h = o * c.tanh();
        assert!((cache.layers[0].cs[1][0] - c).abs() < 1e-15);
        assert!((cache.layers[0].hs[1][0] - h).abs() < 1e-15);
        let emb = embedding_from_cache(&params, &cache);
        assert_eq!(emb, vec![cache.layers[0].hs[1][0]]);
    }

    #[test]
    fn zero_input_zero_bias_keeps_hidden_at_zero() {
        // candidate gate tanh(0) = 0, so the cell never accumulates anything
        let params = tiny_params(3, 4, 2);
        let steps = vec![vec![0.0; 3]; 5];
        let cache = forward(&params, &steps, None);
        let emb = embedding_from_cache(&params, &cache);
        assert!(emb.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn all_layers_composition_concatenates_bottom_first() {
        let params = tiny_params(2, 3, 2);
        let steps = vec![vec![0.3, -0.2], vec![0.1, 0.4]];
        let cache = forward(&params, &steps, None);
        let emb = embedding_from_cache(&params, &cache);
        assert_eq!(emb.len(), 6);
        assert_eq!(&emb[..3], &cache.layers[0].hs[2][..]);
        assert_eq!(&emb[3..], &cache.layers[1].hs[2][..]);
    }

    #[test]
    fn dropout_mask_scales_layer_input() {
        let params = tiny_params(2, 3, 2);
        let steps = vec![vec![0.5, -0.1]];
        // mask zeroing every unit makes layer 1 see pure zeros
        let masks = vec![vec![vec![0.0; 3]; 1]];
        let cache = forward(&params, &steps, Some(masks));
        assert!(cache.layers[1].xs[0].iter().all(|&v| v == 0.0));
        assert!(cache.layers[1].hs[1].iter().all(|&v| v == 0.0));
    }
}
