//! Seeded toy transformer backend.
//!
//! A desk-scale causal decoder: pre-norm blocks, multi-head self-attention,
//! SiLU feed-forward, sinusoidal positions, no weight tying. Weights come
//! from a seeded ChaCha8 stream, so the same constructor arguments always
//! produce the same model on any platform. All arithmetic is f64 and strictly
//! causal: position i never reads positions > i.
//!
//! Layer 0 states are the embedding output (token + position); layer l states
//! are the residual stream after block l, read before the final norm and the
//! output projection.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::logits::log_softmax;
use crate::model::{check_prefix, Backend, BackendInfo, StepOutput};
use crate::types::{LayerStates, TokenId};

const RMS_EPS: f64 = 1e-6;

/// Row-major matrix: `rows` inputs by `cols` outputs.
#[derive(Debug, Clone)]
struct Matrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Matrix {
    fn seeded(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Self {
        let scale = 1.0 / (rows as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0) * scale)
            .collect();
        Matrix { data, rows, cols }
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// y = x * W
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        out.fill(0.0);
        for (i, &xi) in x.iter().enumerate() {
            let row = self.row(i);
            for (o, w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
    }
}

#[derive(Debug, Clone)]
struct BlockWeights {
    wq: Matrix,
    wk: Matrix,
    wv: Matrix,
    wo: Matrix,
    up: Matrix,
    down: Matrix,
}

/// The toy backend.
pub struct TinyTransformer {
    info: BackendInfo,
    num_heads: usize,
    head_dim: usize,
    embed: Matrix,
    blocks: Vec<BlockWeights>,
    unembed: Matrix,
}

impl TinyTransformer {
    pub fn new(
        vocab_size: usize,
        num_layers: usize,
        hidden_dim: usize,
        num_heads: usize,
        seed: u64,
    ) -> Result<Self, Error> {
        let info = BackendInfo {
            vocab_size,
            num_layers,
            hidden_dim,
            name: format!("tiny-v{vocab_size}-l{num_layers}-d{hidden_dim}-h{num_heads}-s{seed}"),
        };
        info.validate()?;
        if num_heads == 0 || !hidden_dim.is_multiple_of(num_heads) {
            return Err(Error::InvalidConfig(format!(
                "hidden_dim {hidden_dim} must be divisible by num_heads {num_heads}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embed = Matrix::seeded(&mut rng, vocab_size, hidden_dim);
        let ff_dim = hidden_dim * 4;
        let blocks = (0..num_layers)
            .map(|_| BlockWeights {
                wq: Matrix::seeded(&mut rng, hidden_dim, hidden_dim),
                wk: Matrix::seeded(&mut rng, hidden_dim, hidden_dim),
                wv: Matrix::seeded(&mut rng, hidden_dim, hidden_dim),
                wo: Matrix::seeded(&mut rng, hidden_dim, hidden_dim),
                up: Matrix::seeded(&mut rng, hidden_dim, ff_dim),
                down: Matrix::seeded(&mut rng, ff_dim, hidden_dim),
            })
            .collect();
        let unembed = Matrix::seeded(&mut rng, hidden_dim, vocab_size);
        Ok(TinyTransformer {
            info,
            num_heads,
            head_dim: hidden_dim / num_heads,
            embed,
            blocks,
            unembed,
        })
    }

    fn position_encoding(&self, pos: usize) -> Vec<f64> {
        let d = self.info.hidden_dim;
        let mut pe = vec![0.0; d];
        for i in 0..d / 2 {
            let freq = 1.0 / 10000f64.powf(2.0 * i as f64 / d as f64);
            pe[2 * i] = (pos as f64 * freq).sin();
            pe[2 * i + 1] = (pos as f64 * freq).cos();
        }
        if d % 2 == 1 {
            let freq = 1.0 / 10000f64.powf((d - 1) as f64 / d as f64);
            pe[d - 1] = (pos as f64 * freq).sin();
        }
        pe
    }

    fn attention(&self, block: &BlockWeights, normed: &[Vec<f64>], out: &mut [Vec<f64>]) {
        let d = self.info.hidden_dim;
        let dh = self.head_dim;
        let seq = normed.len();
        let mut qs = vec![vec![0.0; d]; seq];
        let mut ks = vec![vec![0.0; d]; seq];
        let mut vs = vec![vec![0.0; d]; seq];
        for (i, x) in normed.iter().enumerate() {
            block.wq.apply(x, &mut qs[i]);
            block.wk.apply(x, &mut ks[i]);
            block.wv.apply(x, &mut vs[i]);
        }
        let scale = 1.0 / (dh as f64).sqrt();
        let mut mixed = vec![0.0; d];
        for i in 0..seq {
            mixed.fill(0.0);
            for h in 0..self.num_heads {
                let lo = h * dh;
                let hi = lo + dh;
                // causal scores over j <= i
                let mut scores = Vec::with_capacity(i + 1);
                let mut max = f64::NEG_INFINITY;
                for key in ks.iter().take(i + 1) {
                    let s: f64 = qs[i][lo..hi]
                        .iter()
                        .zip(&key[lo..hi])
                        .map(|(q, k)| q * k)
                        .sum::<f64>()
                        * scale;
                    max = max.max(s);
                    scores.push(s);
                }
                let mut denom = 0.0;
                for s in scores.iter_mut() {
                    *s = (*s - max).exp();
                    denom += *s;
                }
                for (j, w) in scores.iter().enumerate() {
                    let weight = w / denom;
                    for (m, v) in mixed[lo..hi].iter_mut().zip(&vs[j][lo..hi]) {
                        *m += weight * v;
                    }
                }
            }
            block.wo.apply(&mixed, &mut out[i]);
        }
    }
}

fn rms_norm(x: &[f64]) -> Vec<f64> {
    let mean_sq = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    let inv = 1.0 / (mean_sq + RMS_EPS).sqrt();
    x.iter().map(|v| v * inv).collect()
}

fn silu(x: f64) -> f64 {
    x / (1.0 + (-x).exp())
}

impl Backend for TinyTransformer {
    fn info(&self) -> &BackendInfo {
        &self.info
    }

    fn evaluate(&self, prefix: &[TokenId]) -> Result<StepOutput, Error> {
        check_prefix(prefix, self.info.vocab_size)?;
        let d = self.info.hidden_dim;
        let levels = self.info.num_layers + 1;
        let seq = prefix.len();

        // level 0: token embedding plus sinusoidal position
        let mut hidden: Vec<Vec<f64>> = prefix
            .iter()
            .enumerate()
            .map(|(pos, t)| {
                let mut h = self.embed.row(t.index()).to_vec();
                for (a, p) in h.iter_mut().zip(self.position_encoding(pos)) {
                    *a += p;
                }
                h
            })
            .collect();

        let mut flat = Vec::with_capacity(seq * levels * d);
        let mut per_level: Vec<Vec<Vec<f64>>> = Vec::with_capacity(levels);
        per_level.push(hidden.clone());

        let mut attn_out = vec![vec![0.0; d]; seq];
        let mut ff = vec![0.0; self.blocks[0].up.cols];
        let mut ff_down = vec![0.0; d];
        for block in &self.blocks {
            let normed: Vec<Vec<f64>> = hidden.iter().map(|h| rms_norm(h)).collect();
            self.attention(block, &normed, &mut attn_out);
            for (h, a) in hidden.iter_mut().zip(&attn_out) {
                for (x, y) in h.iter_mut().zip(a) {
                    *x += y;
                }
            }
            for h in hidden.iter_mut() {
                let normed = rms_norm(h);
                block.up.apply(&normed, &mut ff);
                for f in ff.iter_mut() {
                    *f = silu(*f);
                }
                block.down.apply(&ff, &mut ff_down);
                for (x, y) in h.iter_mut().zip(&ff_down) {
                    *x += y;
                }
            }
            per_level.push(hidden.clone());
        }

        for pos in 0..seq {
            for level in per_level.iter() {
                flat.extend_from_slice(&level[pos]);
            }
        }
        let layer_states = LayerStates::from_flat(flat, seq, self.info.num_layers, d)?;

        let final_normed = rms_norm(&hidden[seq - 1]);
        let mut logits = vec![0.0; self.info.vocab_size];
        self.unembed.apply(&final_normed, &mut logits);
        let next_log_probs = log_softmax(&logits)?;

        Ok(StepOutput {
            next_log_probs,
            layer_states,
        })
    }
}
