use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CLIP: f64 = 1e-12;

/// Logistic function kept strictly inside (0, 1).
pub fn sigmoid(x: f64) -> f64 {
    let y = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    y.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Feed-forward network with a sigmoid on every layer and a single output.
/// Parameters are stored flat, layer by layer, as the column-major weight
/// matrix followed by the bias vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layer_sizes: Vec<usize>,
    pub params: Vec<f64>,
}

pub fn param_count(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    pub fn new(layer_sizes: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) || *layer_sizes.last().unwrap() != 1 {
            return Err(Error::InvalidArgument(format!("bad layer sizes {layer_sizes:?}")));
        }
        if params.len() != param_count(&layer_sizes) {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters for layers {layer_sizes:?}",
                params.len()
            )));
        }
        Ok(Self { layer_sizes, params })
    }

    /// Uniform weights in ±√(6/(fan_in+fan_out)), zero biases.
    pub fn glorot(layer_sizes: Vec<usize>, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(param_count(&layer_sizes));
        for w in layer_sizes.windows(2) {
            let bound = (6.0 / (w[0] + w[1]) as f64).sqrt();
            params.extend((0..w[0] * w[1]).map(|_| rng.random_range(-bound..bound)));
            params.extend(std::iter::repeat_n(0.0, w[1]));
        }
        Self::new(layer_sizes, params)
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    fn activations(&self, params: &[f64], x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let mut off = 0;
        for w in self.layer_sizes.windows(2) {
            let (nin, nout) = (w[0], w[1]);
            let weights = &params[off..off + nin * nout];
            let bias = &params[off + nin * nout..off + nin * nout + nout];
            let prev = acts.last().unwrap();
            let mut z = bias.to_vec();
            for (j, &a) in prev.iter().enumerate() {
                let col = &weights[j * nout..(j + 1) * nout];
                for (zi, &wij) in z.iter_mut().zip(col) {
                    *zi += wij * a;
                }
            }
            acts.push(z.into_iter().map(sigmoid).collect());
            off += nin * nout + nout;
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        self.activations(&self.params, x).last().unwrap()[0]
    }

    /// Mean cross-entropy over the batch and its gradient with respect to `params`.
    pub fn loss_and_grad(&self, params: &[f64], xs: &[Vec<f64>], ys: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; params.len()];
        let mut loss = 0.0;
        let layers = self.layer_sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for w in self.layer_sizes.windows(2) {
            offsets.push(off);
            off += w[0] * w[1] + w[1];
        }
        for (x, &y) in xs.iter().zip(ys) {
            let acts = self.activations(params, x);
            let p = acts[layers][0].clamp(CLIP, 1.0 - CLIP);
            loss -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
            // sigmoid output with cross-entropy: dL/dz = p̂ − y
            let mut delta = vec![acts[layers][0] - y];
            for l in (0..layers).rev() {
                let (nin, nout) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
                let o = offsets[l];
                let prev = &acts[l];
                for j in 0..nin {
                    let g = &mut grad[o + j * nout..o + (j + 1) * nout];
                    for (gi, &d) in g.iter_mut().zip(&delta) {
                        *gi += d * prev[j];
                    }
                }
                for (gi, &d) in grad[o + nin * nout..o + nin * nout + nout].iter_mut().zip(&delta) {
                    *gi += d;
                }
                if l > 0 {
                    let weights = &params[o..o + nin * nout];
                    delta = (0..nin)
                        .map(|j| {
                            let back: f64 = weights[j * nout..(j + 1) * nout].iter().zip(&delta).map(|(w, d)| w * d).sum();
                            back * prev[j] * (1.0 - prev[j])
                        })
                        .collect();
                }
            }
        }
        let scale = 1.0 / xs.len().max(1) as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        (loss * scale, grad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSettings {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Number of evenly spaced loss checkpoints kept in the history.
    pub checkpoints: usize,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            epochs: 2000,
            learning_rate: 0.5,
            momentum: 0.9,
            checkpoints: 20,
        }
    }
}

/// Full-batch gradient descent with heavy-ball momentum. Returns the loss at
/// each checkpoint.
pub fn train_binary(net: &mut Mlp, xs: &[Vec<f64>], ys: &[f64], settings: &TrainSettings) -> Result<Vec<f64>> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::DimensionMismatch(format!("{} inputs with {} targets", xs.len(), ys.len())));
    }
    if xs.iter().any(|x| x.len() != net.input_dim()) {
        return Err(Error::DimensionMismatch("input dimension differs from the network".into()));
    }
    if !(settings.learning_rate > 0.0) || !(0.0..1.0).contains(&settings.momentum) {
        return Err(Error::InvalidArgument("learning rate must be positive and momentum in [0, 1)".into()));
    }
    let every = (settings.epochs / settings.checkpoints.max(1)).max(1);
    let mut velocity = vec![0.0; net.params.len()];
    let mut history = Vec::new();
    let mut params = net.params.clone();
    for epoch in 0..settings.epochs {
        let (loss, grad) = net.loss_and_grad(&params, xs, ys);
        if epoch % every == 0 {
            history.push(loss);
        }
        for ((p, v), g) in params.iter_mut().zip(&mut velocity).zip(&grad) {
            *v = settings.momentum * *v - settings.learning_rate * g;
            *p += *v;
        }
    }
    history.push(net.loss_and_grad(&params, xs, ys).0);
    net.params = params;
    Ok(history)
}
