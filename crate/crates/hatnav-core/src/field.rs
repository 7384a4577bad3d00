//! Online-trained neural collision field.
//!
//! A small fully-connected network maps a normalized 2D position to two
//! logistic outputs: the probability that the cell is blocked and the
//! probability that it requires ducking. Inputs are Fourier-encoded so the
//! field can represent sharp obstacle boundaries; hidden layers use
//! softplus so the input gradient (consumed by the trajectory optimizer)
//! is continuous everywhere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb2, Vec2};
use crate::heightmap::{CellClass, PlanMode, TraversabilityGrid};
use crate::seeds;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    /// Number of Fourier bands L; the encoded input has 2(2L+1) features.
    pub fourier_bands: usize,
    pub hidden_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            fourier_bands: 6,
            hidden_sizes: vec![64, 64],
            learning_rate: 1e-3,
            batch_size: 256,
            seed: 0,
        }
    }
}

impl FieldConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_sizes.iter().any(|&w| w == 0) {
            return Err(Error::InvalidConfig("hidden layer widths must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        2 * (2 * self.fourier_bands + 1)
    }
}

/// Dense layer, weights row-major `[rows x cols]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    fn apply(&self, input: &[f64], out: &mut [f64]) {
        debug_assert_eq!(input.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for r in 0..self.rows {
            let row = &self.weights[r * self.cols..(r + 1) * self.cols];
            let mut acc = self.biases[r];
            for (w, x) in row.iter().zip(input) {
                acc += w * x;
            }
            out[r] = acc;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuralField {
    pub config: FieldConfig,
    pub world_rect: Aabb2,
    /// Hidden layers (softplus) followed by the 2-logit output layer.
    pub layers: Vec<DenseLayer>,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable binary cross-entropy from a logit.
fn bce_from_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

/// Initialize a field with scaled-uniform weights (zero biases),
/// deterministic under the config seed.
pub fn field_init(config: &FieldConfig, world_rect: Aabb2) -> Result<NeuralField> {
    config.validate()?;
    if world_rect.is_degenerate() {
        return Err(Error::InvalidConfig("degenerate world rect".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut sizes = vec![config.input_dim()];
    sizes.extend_from_slice(&config.hidden_sizes);
    sizes.push(2);
    let mut layers = Vec::with_capacity(sizes.len() - 1);
    for w in sizes.windows(2) {
        let (cols, rows) = (w[0], w[1]);
        let bound = (6.0 / (cols + rows) as f64).sqrt();
        let weights = (0..rows * cols)
            .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * bound)
            .collect();
        layers.push(DenseLayer {
            rows,
            cols,
            weights,
            biases: vec![0.0; rows],
        });
    }
    Ok(NeuralField {
        config: config.clone(),
        world_rect,
        layers,
    })
}

impl NeuralField {
    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    fn normalize(&self, p: Vec2) -> (Vec2, Vec2) {
        let mut u = [0.0; 2];
        let mut du_dp = [0.0; 2];
        for a in 0..2 {
            let extent = self.world_rect.max[a] - self.world_rect.min[a];
            u[a] = 2.0 * (p[a] - self.world_rect.min[a]) / extent - 1.0;
            du_dp[a] = 2.0 / extent;
        }
        (u, du_dp)
    }

    /// Fourier feature encoding of the normalized position: per axis the
    /// raw coordinate plus sin/cos pairs at frequencies `2^k * pi`, k < L.
    fn encode(&self, u: Vec2, feats: &mut Vec<f64>) {
        feats.clear();
        let bands = self.config.fourier_bands;
        for &ua in u.iter() {
            feats.push(ua);
            let mut freq = std::f64::consts::PI;
            for _ in 0..bands {
                feats.push((freq * ua).sin());
                feats.push((freq * ua).cos());
                freq *= 2.0;
            }
        }
    }

    /// Derivative of each encoded feature with respect to its axis'
    /// normalized coordinate, in encoding order.
    fn encode_grad(&self, u: Vec2, dfeats: &mut Vec<f64>) {
        dfeats.clear();
        let bands = self.config.fourier_bands;
        for &ua in u.iter() {
            dfeats.push(1.0);
            let mut freq = std::f64::consts::PI;
            for _ in 0..bands {
                dfeats.push(freq * (freq * ua).cos());
                dfeats.push(-freq * (freq * ua).sin());
                freq *= 2.0;
            }
        }
    }

    fn logits_from_feats(&self, feats: &[f64]) -> [f64; 2] {
        let n = self.layers.len();
        let mut cur = feats.to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            let mut out = vec![0.0; layer.rows];
            layer.apply(&cur, &mut out);
            if li + 1 < n {
                for v in out.iter_mut() {
                    *v = softplus(*v);
                }
            }
            cur = out;
        }
        [cur[0], cur[1]]
    }

    /// Blocking and ducking probabilities at a world position.
    pub fn forward(&self, p: Vec2) -> (f64, f64) {
        let (u, _) = self.normalize(p);
        let mut feats = Vec::with_capacity(self.config.input_dim());
        self.encode(u, &mut feats);
        let z = self.logits_from_feats(&feats);
        (sigmoid(z[0]), sigmoid(z[1]))
    }

    /// Probabilities plus their exact gradients with respect to the world
    /// position, `(p_block, p_duck, d p_block/dp, d p_duck/dp)`.
    pub fn forward_with_input_grad(&self, p: Vec2) -> (f64, f64, Vec2, Vec2) {
        let (u, du_dp) = self.normalize(p);
        let mut feats = Vec::new();
        self.encode(u, &mut feats);

        // forward pass keeping pre-activations
        let n = self.layers.len();
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut h = feats.clone();
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = vec![0.0; layer.rows];
            layer.apply(&h, &mut z);
            pre.push(z.clone());
            if li + 1 < n {
                for v in z.iter_mut() {
                    *v = softplus(*v);
                }
            }
            h = z;
        }
        let logits = [pre[n - 1][0], pre[n - 1][1]];
        let pb = sigmoid(logits[0]);
        let pd = sigmoid(logits[1]);

        // reverse pass: d logit_k / d feats
        let mut dfeats_enc = Vec::new();
        self.encode_grad(u, &mut dfeats_enc);
        let bands = self.config.fourier_bands;
        let per_axis = 2 * bands + 1;

        let mut grads = [[0.0; 2]; 2];
        for k in 0..2 {
            let out_layer = &self.layers[n - 1];
            let mut g: Vec<f64> =
                out_layer.weights[k * out_layer.cols..(k + 1) * out_layer.cols].to_vec();
            for li in (0..n - 1).rev() {
                let layer = &self.layers[li];
                // g <- (g .* softplus'(pre)) * W
                let z = &pre[li];
                let mut g_prev = vec![0.0; layer.cols];
                for r in 0..layer.rows {
                    let gr = g[r] * sigmoid(z[r]);
                    if gr == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[r * layer.cols..(r + 1) * layer.cols];
                    for (gp, w) in g_prev.iter_mut().zip(row) {
                        *gp += gr * w;
                    }
                }
                g = g_prev;
            }
            // contract the feature gradient per axis, then chain through the
            // normalization and the logistic
            let sig_grad = match k {
                0 => pb * (1.0 - pb),
                _ => pd * (1.0 - pd),
            };
            for a in 0..2 {
                let mut acc = 0.0;
                for j in 0..per_axis {
                    let idx = a * per_axis + j;
                    acc += g[idx] * dfeats_enc[idx];
                }
                grads[k][a] = sig_grad * acc * du_dp[a];
            }
        }
        (pb, pd, grads[0], grads[1])
    }
}

/// Loss trace and end-of-run per-channel accuracies.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainStats {
    pub losses: Vec<f64>,
    pub block_accuracy: f64,
    pub duck_accuracy: f64,
}

struct AdamState {
    m_w: Vec<f64>,
    v_w: Vec<f64>,
    m_b: Vec<f64>,
    v_b: Vec<f64>,
}

const ADAM_B1: f64 = 0.9;
const ADAM_B2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Incremental minibatch trainer over the labeled cell centers of a
/// traversability grid. Holds the shuffler and optimizer state so training
/// can be interleaved with other work (the planner alternates phases).
pub struct FieldTrainer {
    samples: Vec<([f64; 2], f64, f64)>,
    batch_size: usize,
    lr: f64,
    rng: ChaCha20Rng,
    perm: Vec<u32>,
    cursor: usize,
    step_count: u64,
    adam: Vec<AdamState>,
    pub losses: Vec<f64>,
}

/// Per-cell training labels for a mode. HAT keeps blocking and ducking as
/// separate channels; FLAT2D folds DUCK cells into the blocked channel,
/// reproducing a 2D planner that treats arches as obstacles.
pub fn cell_labels(class: CellClass, mode: PlanMode) -> (f64, f64) {
    match mode {
        PlanMode::Hat => (
            if class == CellClass::Blocked { 1.0 } else { 0.0 },
            if class == CellClass::Duck { 1.0 } else { 0.0 },
        ),
        PlanMode::Flat2d => (
            if class == CellClass::Blocked || class == CellClass::Duck {
                1.0
            } else {
                0.0
            },
            0.0,
        ),
    }
}

impl FieldTrainer {
    pub fn new(
        field: &NeuralField,
        tgrid: &TraversabilityGrid,
        mode: PlanMode,
        batch_seed: u64,
    ) -> Result<Self> {
        if tgrid.cells.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let [nx, ny] = tgrid.dims;
        let mut samples = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                let center = tgrid.cell_center([ix, iy]);
                let (yb, yd) = cell_labels(tgrid.cell(ix, iy).class, mode);
                samples.push((center, yb, yd));
            }
        }
        let adam = field
            .layers
            .iter()
            .map(|l| AdamState {
                m_w: vec![0.0; l.weights.len()],
                v_w: vec![0.0; l.weights.len()],
                m_b: vec![0.0; l.biases.len()],
                v_b: vec![0.0; l.biases.len()],
            })
            .collect();
        let perm = (0..samples.len() as u32).collect();
        Ok(FieldTrainer {
            samples,
            batch_size: field.config.batch_size,
            lr: field.config.learning_rate,
            rng: ChaCha20Rng::seed_from_u64(batch_seed),
            perm,
            cursor: usize::MAX, // force a shuffle on the first step
            step_count: 0,
            adam,
            losses: Vec::new(),
        })
    }

    fn next_batch(&mut self) -> Vec<usize> {
        let n = self.samples.len();
        let take = self.batch_size.min(n);
        let mut batch = Vec::with_capacity(take);
        for _ in 0..take {
            if self.cursor >= n {
                // Fisher-Yates reshuffle at each epoch boundary
                for i in (1..n).rev() {
                    let j = self.rng.random_range(0..=i);
                    self.perm.swap(i, j);
                }
                self.cursor = 0;
            }
            batch.push(self.perm[self.cursor] as usize);
            self.cursor += 1;
        }
        batch
    }

    /// One minibatch of summed-channel binary cross-entropy with an Adam
    /// update; returns the batch loss.
    pub fn step(&mut self, field: &mut NeuralField) -> f64 {
        let batch = self.next_batch();
        let n_layers = field.layers.len();
        let inv_batch = 1.0 / batch.len() as f64;

        let mut grad_w: Vec<Vec<f64>> = field
            .layers
            .iter()
            .map(|l| vec![0.0; l.weights.len()])
            .collect();
        let mut grad_b: Vec<Vec<f64>> =
            field.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect();

        let mut feats = Vec::with_capacity(field.config.input_dim());
        let mut loss = 0.0;
        for &si in &batch {
            let (p, yb, yd) = self.samples[si];
            let (u, _) = field.normalize(p);
            field.encode(u, &mut feats);

            // forward, keeping pre- and post-activations
            let mut pre: Vec<Vec<f64>> = Vec::with_capacity(n_layers);
            let mut post: Vec<Vec<f64>> = Vec::with_capacity(n_layers);
            let mut h = feats.clone();
            for (li, layer) in field.layers.iter().enumerate() {
                let mut z = vec![0.0; layer.rows];
                layer.apply(&h, &mut z);
                pre.push(z.clone());
                if li + 1 < n_layers {
                    for v in z.iter_mut() {
                        *v = softplus(*v);
                    }
                }
                post.push(z.clone());
                h = z;
            }
            let logits = [pre[n_layers - 1][0], pre[n_layers - 1][1]];
            loss += (bce_from_logit(logits[0], yb) + bce_from_logit(logits[1], yd)) * inv_batch;

            // backward
            let mut delta = vec![
                (sigmoid(logits[0]) - yb) * inv_batch,
                (sigmoid(logits[1]) - yd) * inv_batch,
            ];
            for li in (0..n_layers).rev() {
                let layer = &field.layers[li];
                let input: &[f64] = if li == 0 { &feats } else { &post[li - 1] };
                for r in 0..layer.rows {
                    let d = delta[r];
                    if d != 0.0 {
                        let gw = &mut grad_w[li][r * layer.cols..(r + 1) * layer.cols];
                        for (g, x) in gw.iter_mut().zip(input) {
                            *g += d * x;
                        }
                        grad_b[li][r] += d;
                    }
                }
                if li > 0 {
                    let mut prev = vec![0.0; layer.cols];
                    for r in 0..layer.rows {
                        let d = delta[r];
                        if d == 0.0 {
                            continue;
                        }
                        let row = &layer.weights[r * layer.cols..(r + 1) * layer.cols];
                        for (p, w) in prev.iter_mut().zip(row) {
                            *p += d * w;
                        }
                    }
                    // chain through softplus of the previous layer
                    for (p, z) in prev.iter_mut().zip(&pre[li - 1]) {
                        *p *= sigmoid(*z);
                    }
                    delta = prev;
                }
            }
        }

        // Adam
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - ADAM_B1.powi(t);
        let bc2 = 1.0 - ADAM_B2.powi(t);
        for (li, layer) in field.layers.iter_mut().enumerate() {
            let st = &mut self.adam[li];
            for (i, w) in layer.weights.iter_mut().enumerate() {
                let g = grad_w[li][i];
                st.m_w[i] = ADAM_B1 * st.m_w[i] + (1.0 - ADAM_B1) * g;
                st.v_w[i] = ADAM_B2 * st.v_w[i] + (1.0 - ADAM_B2) * g * g;
                *w -= self.lr * (st.m_w[i] / bc1) / ((st.v_w[i] / bc2).sqrt() + ADAM_EPS);
            }
            for (i, b) in layer.biases.iter_mut().enumerate() {
                let g = grad_b[li][i];
                st.m_b[i] = ADAM_B1 * st.m_b[i] + (1.0 - ADAM_B1) * g;
                st.v_b[i] = ADAM_B2 * st.v_b[i] + (1.0 - ADAM_B2) * g * g;
                *b -= self.lr * (st.m_b[i] / bc1) / ((st.v_b[i] / bc2).sqrt() + ADAM_EPS);
            }
        }
        self.losses.push(loss);
        loss
    }
}

/// Per-channel classification accuracy of a field against grid labels at
/// threshold 0.5.
pub fn field_accuracy(
    field: &NeuralField,
    tgrid: &TraversabilityGrid,
    mode: PlanMode,
) -> (f64, f64) {
    let [nx, ny] = tgrid.dims;
    let mut block_ok = 0usize;
    let mut duck_ok = 0usize;
    let total = nx * ny;
    for iy in 0..ny {
        for ix in 0..nx {
            let center = tgrid.cell_center([ix, iy]);
            let (yb, yd) = cell_labels(tgrid.cell(ix, iy).class, mode);
            let (pb, pd) = field.forward(center);
            if (pb > 0.5) == (yb > 0.5) {
                block_ok += 1;
            }
            if (pd > 0.5) == (yd > 0.5) {
                duck_ok += 1;
            }
        }
    }
    (block_ok as f64 / total as f64, duck_ok as f64 / total as f64)
}

/// Train a field on grid labels for `steps` minibatches.
pub fn field_train(
    field: &mut NeuralField,
    tgrid: &TraversabilityGrid,
    mode: PlanMode,
    steps: usize,
) -> Result<TrainStats> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be >= 1".into()));
    }
    let batch_seed = seeds::derive_seed(field.config.seed, "field-batches");
    let mut trainer = FieldTrainer::new(field, tgrid, mode, batch_seed)?;
    for _ in 0..steps {
        trainer.step(field);
    }
    let (block_accuracy, duck_accuracy) = field_accuracy(field, tgrid, mode);
    Ok(TrainStats {
        losses: trainer.losses,
        block_accuracy,
        duck_accuracy,
    })
}
