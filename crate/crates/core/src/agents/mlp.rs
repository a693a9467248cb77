use rand::Rng;
use serde::{Deserialize, Serialize};

use super::QFunction;
use crate::envs::EnvState;

/// Fully connected network: rectifier hidden layers, linear output with one unit per option.
///
/// Parameters live in one flat vector, layer by layer, each layer stored as its row-major
/// weight matrix `[out][in]` followed by its bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
    input_scale: Vec<f64>,
}

/// One regression example for the squared-TD loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TdSample {
    pub features: Vec<f64>,
    pub option_index: usize,
    pub target: f64,
}

impl Mlp {
    /// He-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(inputs: usize, hidden: &[usize], outputs: usize, input_scale: Vec<f64>, rng: &mut R) -> Self {
        assert_eq!(input_scale.len(), inputs);
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(inputs);
        sizes.extend_from_slice(hidden);
        sizes.push(outputs);
        let mut params = Vec::new();
        for pair in sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.gen_range(-bound..bound)));
            params.extend(std::iter::repeat(0.0).take(fan_out));
        }
        Mlp {
            sizes,
            params,
            input_scale,
        }
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn features(&self, state: &EnvState) -> Vec<f64> {
        state
            .obs
            .iter()
            .zip(&self.input_scale)
            .map(|(&x, &s)| if s > 0.0 { x as f64 / s } else { x as f64 })
            .collect()
    }

    /// Activations of every layer, input first.
    fn forward_all(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.sizes.len());
        acts.push(input.to_vec());
        let mut offset = 0;
        let last = self.sizes.len() - 2;
        for (l, pair) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (pair[0], pair[1]);
            let w = &self.params[offset..offset + n_in * n_out];
            let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            let x = acts.last().expect("input pushed");
            let mut y = Vec::with_capacity(n_out);
            for j in 0..n_out {
                let row = &w[j * n_in..(j + 1) * n_in];
                let z = b[j] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                y.push(if l < last { z.max(0.0) } else { z });
            }
            acts.push(y);
            offset += n_in * n_out + n_out;
        }
        acts
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.forward_all(input).pop().expect("at least one layer")
    }

    /// Mean squared TD error over `batch`, with targets held fixed.
    pub fn loss(&self, batch: &[TdSample]) -> f64 {
        batch
            .iter()
            .map(|s| {
                let d = s.target - self.forward(&s.features)[s.option_index];
                d * d
            })
            .sum::<f64>()
            / batch.len() as f64
    }

    /// Loss and its gradient with respect to every parameter, by backpropagation.
    pub fn loss_and_grad(&self, batch: &[TdSample]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let n = batch.len() as f64;
        let layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut offset = 0;
        for pair in self.sizes.windows(2) {
            offsets.push(offset);
            offset += pair[0] * pair[1] + pair[1];
        }

        for sample in batch {
            let acts = self.forward_all(&sample.features);
            let q = acts[layers][sample.option_index];
            let delta = sample.target - q;
            loss += delta * delta / n;

            // d loss / d output, nonzero only at the chosen option.
            let mut upstream = vec![0.0; self.sizes[layers]];
            upstream[sample.option_index] = -2.0 * delta / n;

            for l in (0..layers).rev() {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                let off = offsets[l];
                let x = &acts[l];
                for j in 0..n_out {
                    let g = upstream[j];
                    if g == 0.0 {
                        continue;
                    }
                    let row = &mut grad[off + j * n_in..off + (j + 1) * n_in];
                    for (gw, &xi) in row.iter_mut().zip(x) {
                        *gw += g * xi;
                    }
                    grad[off + n_in * n_out + j] += g;
                }
                if l == 0 {
                    break;
                }
                let w = &self.params[off..off + n_in * n_out];
                let mut down = vec![0.0; n_in];
                for j in 0..n_out {
                    let g = upstream[j];
                    if g == 0.0 {
                        continue;
                    }
                    for (d, &wji) in down.iter_mut().zip(&w[j * n_in..(j + 1) * n_in]) {
                        *d += g * wji;
                    }
                }
                // Rectifier derivative on the hidden layer feeding this one.
                for (d, &a) in down.iter_mut().zip(x) {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                }
                upstream = down;
            }
        }
        (loss, grad)
    }
}

impl QFunction for Mlp {
    fn num_options(&self) -> usize {
        *self.sizes.last().expect("sizes non-empty")
    }

    fn values(&self, state: &EnvState) -> Vec<f64> {
        self.forward(&self.features(state))
    }
}

/// Adaptive-moment optimizer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(num_params: usize, learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Rescales `grad` in place so its Euclidean norm is at most `max_norm`. Returns the norm
/// before clipping.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= scale);
    }
    norm
}
