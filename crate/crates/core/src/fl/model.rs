//! The shared classifier: multinomial softmax regression, optionally with one
//! ReLU hidden layer, over a flat parameter vector.
//!
//! Parameter layout (row-major):
//! - softmax: `W[num_classes x input_dim]`, `b[num_classes]`
//! - hidden:  `W1[hidden x input_dim]`, `b1[hidden]`, `W2[num_classes x hidden]`, `b2[num_classes]`

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::data::Sample;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input_dim: usize,
    pub num_classes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<usize>,
}

impl ModelSpec {
    pub fn softmax(input_dim: usize, num_classes: usize) -> Self {
        Self {
            input_dim,
            num_classes,
            hidden: None,
        }
    }

    pub fn with_hidden(self, hidden: usize) -> Self {
        Self {
            hidden: Some(hidden),
            ..self
        }
    }

    pub fn param_count(&self) -> usize {
        match self.hidden {
            None => self.input_dim * self.num_classes + self.num_classes,
            Some(h) => self.input_dim * h + h + h * self.num_classes + self.num_classes,
        }
    }

    pub fn zeros(&self) -> ModelParams {
        ModelParams {
            spec: *self,
            values: vec![0.0; self.param_count()],
        }
    }

    /// Softmax regression starts at zero. The hidden variant draws its weights
    /// from N(0, 2 / fan_in) so units are not symmetric; biases start at zero.
    pub fn init(&self, seed: u64) -> ModelParams {
        let mut params = self.zeros();
        if let Some(h) = self.hidden {
            let mut rng = seed::rng(seed, &[seed::INIT]);
            let w1 = Normal::new(0.0, (2.0 / self.input_dim as f64).sqrt()).expect("finite std");
            let w2 = Normal::new(0.0, (2.0 / h as f64).sqrt()).expect("finite std");
            let layout = Layout::new(self);
            for v in &mut params.values[..layout.b1] {
                *v = w1.sample(&mut rng);
            }
            for v in &mut params.values[layout.w2..layout.b2] {
                *v = w2.sample(&mut rng);
            }
        }
        params
    }
}

/// Offsets of each block inside the hidden-layer parameter vector.
struct Layout {
    b1: usize,
    w2: usize,
    b2: usize,
}

impl Layout {
    fn new(spec: &ModelSpec) -> Self {
        let h = spec.hidden.unwrap_or(0);
        let b1 = spec.input_dim * h;
        let w2 = b1 + h;
        let b2 = w2 + h * spec.num_classes;
        Self { b1, w2, b2 }
    }
}

/// Flat parameter vector together with the architecture it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    spec: ModelSpec,
    values: Vec<f64>,
}

impl ModelParams {
    pub fn new(spec: ModelSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.param_count() {
            return Err(Error::LengthMismatch {
                client: 0,
                expected: spec.param_count(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite model parameter".into()));
        }
        Ok(Self { spec, values })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn forward(&self, x: &[f64], hidden: &mut [f64], logits: &mut [f64]) {
        let spec = &self.spec;
        let p = &self.values;
        match spec.hidden {
            None => {
                let bias = spec.input_dim * spec.num_classes;
                for (c, out) in logits.iter_mut().enumerate() {
                    let row = &p[c * spec.input_dim..(c + 1) * spec.input_dim];
                    *out = p[bias + c] + dot(row, x);
                }
            }
            Some(h) => {
                let l = Layout::new(spec);
                for (j, out) in hidden.iter_mut().enumerate() {
                    let row = &p[j * spec.input_dim..(j + 1) * spec.input_dim];
                    *out = (p[l.b1 + j] + dot(row, x)).max(0.0);
                }
                for (c, out) in logits.iter_mut().enumerate() {
                    let row = &p[l.w2 + c * h..l.w2 + (c + 1) * h];
                    *out = p[l.b2 + c] + dot(row, hidden);
                }
            }
        }
    }

    fn scratch(&self) -> (Vec<f64>, Vec<f64>) {
        (
            vec![0.0; self.spec.hidden.unwrap_or(0)],
            vec![0.0; self.spec.num_classes],
        )
    }

    /// Index of the largest logit; ties go to the lowest class.
    pub fn predict(&self, x: &[f64]) -> usize {
        let (mut hidden, mut logits) = self.scratch();
        self.forward(x, &mut hidden, &mut logits);
        argmax(&logits)
    }

    /// Mean cross-entropy over `samples`.
    pub fn loss(&self, samples: &[Sample]) -> f64 {
        let (mut hidden, mut logits) = self.scratch();
        let total: f64 = samples
            .iter()
            .map(|s| {
                self.forward(&s.features, &mut hidden, &mut logits);
                log_sum_exp(&logits) - logits[s.label]
            })
            .sum();
        total / samples.len() as f64
    }

    /// Mean cross-entropy over `batch`, writing its gradient into `grad`.
    pub fn loss_and_gradient(&self, batch: &[&Sample], grad: &mut [f64]) -> f64 {
        let spec = &self.spec;
        let p = &self.values;
        grad.fill(0.0);
        let (mut hidden, mut logits) = self.scratch();
        let mut back = vec![0.0; spec.hidden.unwrap_or(0)];
        let mut total = 0.0;

        for s in batch {
            let x = &s.features;
            self.forward(x, &mut hidden, &mut logits);
            let lse = log_sum_exp(&logits);
            total += lse - logits[s.label];
            // logits become dL/dlogits = softmax - onehot
            for (c, l) in logits.iter_mut().enumerate() {
                *l = (*l - lse).exp() - f64::from(u8::from(c == s.label));
            }

            match spec.hidden {
                None => {
                    let bias = spec.input_dim * spec.num_classes;
                    for (c, &g) in logits.iter().enumerate() {
                        axpy(g, x, &mut grad[c * spec.input_dim..(c + 1) * spec.input_dim]);
                        grad[bias + c] += g;
                    }
                }
                Some(h) => {
                    let l = Layout::new(spec);
                    back.fill(0.0);
                    for (c, &g) in logits.iter().enumerate() {
                        axpy(g, &hidden, &mut grad[l.w2 + c * h..l.w2 + (c + 1) * h]);
                        grad[l.b2 + c] += g;
                        axpy(g, &p[l.w2 + c * h..l.w2 + (c + 1) * h], &mut back);
                    }
                    for j in 0..h {
                        // relu'(z) = 1 exactly when the activation is positive
                        if hidden[j] > 0.0 {
                            let g = back[j];
                            axpy(g, x, &mut grad[j * spec.input_dim..(j + 1) * spec.input_dim]);
                            grad[l.b1 + j] += g;
                        }
                    }
                }
            }
        }

        let scale = 1.0 / batch.len() as f64;
        for g in grad.iter_mut() {
            *g *= scale;
        }
        total * scale
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}
