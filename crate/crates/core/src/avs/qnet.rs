//! Small fully connected Q-network with hand-written backprop and Adam.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AvError;

/// Adam settings; the defaults are the conventional ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams { learning_rate: 0.003, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct LayerShape {
    n_in: usize,
    n_out: usize,
    /// Offset of the row-major `n_out x n_in` weight block; biases follow it.
    offset: usize,
}

/// Dense network with ReLU after every layer but the last.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    layers: Vec<LayerShape>,
    params: Vec<f64>,
}

/// One supervised sample: the output `action` should equal `target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<'a> {
    pub input: &'a [f64],
    pub action: usize,
    pub target: f64,
}

impl QNetwork {
    /// `sizes` lists layer widths from input to output, e.g. `[6, 32, 64, 32, 3]`.
    /// Weights and biases start uniform in `±1/sqrt(fan_in)`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2 && sizes.iter().all(|&s| s > 0), "bad layer sizes {sizes:?}");
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        let mut params = Vec::new();
        for w in sizes.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let bound = 1.0 / (n_in as f64).sqrt();
            layers.push(LayerShape { n_in, n_out, offset: params.len() });
            for _ in 0..n_out * n_in + n_out {
                params.push(rng.random_range(-bound..bound));
            }
        }
        QNetwork { layers, params }
    }

    fn zeros(sizes: &[usize]) -> Self {
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        let mut n = 0;
        for w in sizes.windows(2) {
            layers.push(LayerShape { n_in: w[0], n_out: w[1], offset: n });
            n += w[0] * w[1] + w[1];
        }
        QNetwork { layers, params: vec![0.0; n] }
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn output_len(&self) -> usize {
        self.layers.last().unwrap().n_out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].n_in];
        s.extend(self.layers.iter().map(|l| l.n_out));
        s
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut acts = Vec::new();
        self.forward_cached(input, &mut acts);
        acts.pop().unwrap()
    }

    // acts[0] is the input; acts[l + 1] the post-activation output of layer l.
    fn forward_cached(&self, input: &[f64], acts: &mut Vec<Vec<f64>>) {
        debug_assert_eq!(input.len(), self.input_len());
        acts.clear();
        acts.push(input.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let w = &self.params[layer.offset..layer.offset + layer.n_in * layer.n_out];
            let b = &self.params[layer.offset + layer.n_in * layer.n_out..][..layer.n_out];
            let x = &acts[l];
            let mut out = Vec::with_capacity(layer.n_out);
            for o in 0..layer.n_out {
                let row = &w[o * layer.n_in..(o + 1) * layer.n_in];
                let z = b[o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                out.push(if l < last { z.max(0.0) } else { z });
            }
            acts.push(out);
        }
    }

    /// Mean squared error over the batch and its gradient with respect to
    /// every parameter.
    pub fn loss_and_grad(&self, batch: &[Sample<'_>]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let n = batch.len() as f64;
        let mut acts = Vec::new();
        let mut delta = Vec::new();
        let mut next = Vec::new();
        for s in batch {
            self.forward_cached(s.input, &mut acts);
            let q = acts.last().unwrap()[s.action];
            let err = q - s.target;
            loss += err * err;
            delta.clear();
            delta.resize(self.output_len(), 0.0);
            delta[s.action] = 2.0 * err / n;
            for (l, layer) in self.layers.iter().enumerate().rev() {
                let x = &acts[l];
                let wo = layer.offset;
                let bo = layer.offset + layer.n_in * layer.n_out;
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    grad[bo + o] += d;
                    let row = &mut grad[wo + o * layer.n_in..wo + (o + 1) * layer.n_in];
                    for (g, xi) in row.iter_mut().zip(x) {
                        *g += d * xi;
                    }
                }
                if l == 0 {
                    break;
                }
                next.clear();
                next.resize(layer.n_in, 0.0);
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &self.params[wo + o * layer.n_in..wo + (o + 1) * layer.n_in];
                    for (acc, w) in next.iter_mut().zip(row) {
                        *acc += d * w;
                    }
                }
                // ReLU derivative of the previous layer's output.
                for (d, a) in next.iter_mut().zip(x) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
                std::mem::swap(&mut delta, &mut next);
            }
        }
        (loss / n, grad)
    }

    /// Flat-text checkpoint: a `sizes` line followed by one line per layer
    /// holding its weights (row-major) then biases.
    pub fn to_text(&self) -> String {
        let mut out = String::from("sizes");
        for s in self.sizes() {
            let _ = write!(out, ",{s}");
        }
        out.push('\n');
        for (l, layer) in self.layers.iter().enumerate() {
            let _ = write!(out, "layer{l}");
            let len = layer.n_in * layer.n_out + layer.n_out;
            for v in &self.params[layer.offset..layer.offset + len] {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, AvError> {
        let bad = |msg: String| AvError::Checkpoint(msg);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let head = lines.next().ok_or_else(|| bad("empty checkpoint".into()))?;
        let mut fields = head.split(',');
        if fields.next() != Some("sizes") {
            return Err(bad("missing sizes line".into()));
        }
        let sizes: Vec<usize> = fields
            .map(|f| f.trim().parse().map_err(|_| bad(format!("bad size `{f}`"))))
            .collect::<Result<_, _>>()?;
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(bad(format!("bad sizes {sizes:?}")));
        }
        let mut net = QNetwork::zeros(&sizes);
        let mut params = Vec::with_capacity(net.params.len());
        for (l, layer) in net.layers.iter().enumerate() {
            let line = lines.next().ok_or_else(|| bad(format!("missing layer{l}")))?;
            let mut f = line.split(',');
            if f.next() != Some(format!("layer{l}").as_str()) {
                return Err(bad(format!("expected layer{l}")));
            }
            let vals: Vec<f64> = f
                .map(|v| v.trim().parse().map_err(|_| bad(format!("bad value `{v}`"))))
                .collect::<Result<_, _>>()?;
            if vals.len() != layer.n_in * layer.n_out + layer.n_out {
                return Err(bad(format!("layer{l} has {} values", vals.len())));
            }
            params.extend(vals);
        }
        net.params = params;
        Ok(net)
    }
}

/// Adam optimizer state over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    params: AdamParams,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(params: AdamParams, n: usize) -> Self {
        Adam { params, step: 0, m: vec![0.0; n], v: vec![0.0; n] }
    }

    pub fn apply(&mut self, weights: &mut [f64], grad: &[f64]) {
        let AdamParams { learning_rate, beta1, beta2, eps } = self.params;
        self.step += 1;
        let c1 = 1.0 - beta1.powi(self.step);
        let c2 = 1.0 - beta2.powi(self.step);
        for (((w, g), m), v) in weights.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            *w -= learning_rate * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes_and_determinism() {
        let net = QNetwork::new(&[6, 32, 64, 32, 3], &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(net.params().len(), 6 * 32 + 32 + 32 * 64 + 64 + 64 * 32 + 32 + 32 * 3 + 3);
        let x = [1.0, 0.5, 0.0, 2.0, 0.0, 1.0];
        assert_eq!(net.forward(&x).len(), 3);
        assert_eq!(net.forward(&x), net.forward(&x));
        let again = QNetwork::new(&[6, 32, 64, 32, 3], &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(net, again);
    }

    #[test]
    fn init_bounds() {
        let net = QNetwork::new(&[4, 16, 2], &mut ChaCha8Rng::seed_from_u64(2));
        let (first, second) = net.params().split_at(4 * 16 + 16);
        assert!(first.iter().all(|w| w.abs() <= 0.5));
        assert!(second.iter().all(|w| w.abs() <= 0.25));
    }

    #[test]
    fn checkpoint_round_trip() {
        let net = QNetwork::new(&[6, 8, 3], &mut ChaCha8Rng::seed_from_u64(3));
        let back = QNetwork::from_text(&net.to_text()).unwrap();
        assert_eq!(back, net);
        assert!(QNetwork::from_text("sizes,6,8\nlayer0,1,2\n").is_err());
    }
}
