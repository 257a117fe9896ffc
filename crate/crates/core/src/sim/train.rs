//! Softmax regression trained by mini-batch gradient descent.
//!
//! Every objective is written as a row-weighted KL divergence from a target
//! distribution `q` to the model's softmax `p`:
//! `sum_i w_i KL(q_i || p_i) / B + wd/2 |W|^2`. One-hot `q` makes this plain
//! cross-entropy, so one gradient, `w_i (p_i - q_i) x_i^T / B + wd W`, serves
//! all four losses.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::config::Resample;
use super::generate::{dot, rng_for, Dataset};
use crate::labeling::ClassMatrix;
use crate::scoring::{log_sum_exp, softmax_into};
use crate::{Error, LogitMatrix, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    k: usize,
    d: usize,
    /// `k x d`, row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(k: usize, d: usize) -> Self {
        Self {
            k,
            d,
            weights: vec![0.0; k * d],
            bias: vec![0.0; k],
        }
    }

    pub fn from_parts(k: usize, d: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != k * d {
            return Err(Error::ShapeMismatch {
                expected: k * d,
                found: weights.len(),
            });
        }
        if bias.len() != k {
            return Err(Error::ShapeMismatch {
                expected: k,
                found: bias.len(),
            });
        }
        Ok(Self {
            k,
            d,
            weights,
            bias,
        })
    }

    pub fn classes(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn logits_into(&self, x: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.bias[c] + dot(&self.weights[c * self.d..(c + 1) * self.d], x);
        }
    }

    pub fn logits(&self, data: &Dataset) -> Result<LogitMatrix> {
        let mut values = vec![0.0; data.len() * self.k];
        for (i, out) in values.chunks_exact_mut(self.k).enumerate() {
            self.logits_into(data.row(i), out);
        }
        LogitMatrix::new(data.len(), self.k, values)
    }

    /// Argmax with ties to the lowest class.
    pub fn predict(&self, x: &[f64]) -> u32 {
        let mut z = vec![0.0; self.k];
        self.logits_into(x, &mut z);
        let mut best = 0;
        for c in 1..self.k {
            if z[c] > z[best] {
                best = c;
            }
        }
        best as u32
    }

    pub fn accuracy(&self, data: &Dataset) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let hits = (0..data.len())
            .filter(|&i| self.predict(data.row(i)) == data.labels[i])
            .count();
        hits as f64 / data.len() as f64
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

/// Per-row training targets.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Hard(Vec<u32>),
    /// Row-stochastic, `n x k`.
    Soft(Vec<f64>),
    /// Each row draws its target from `Dir(alphas[hard_i])`.
    Dirichlet {
        hard: Vec<u32>,
        alphas: ClassMatrix,
        resample: Resample,
    },
}

impl Targets {
    fn len(&self, k: usize) -> usize {
        match self {
            Targets::Hard(h) | Targets::Dirichlet { hard: h, .. } => h.len(),
            Targets::Soft(q) => q.len() / k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub seed: u64,
    pub stream: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Objective and gradient over the rows `batch`.
///
/// `q` holds one dense target row per entry of `batch`; `w` optionally
/// weights rows (indexed like `batch`).
pub fn loss_and_grad(
    model: &LinearModel,
    data: &Dataset,
    batch: &[usize],
    q: &[f64],
    w: Option<&[f64]>,
    weight_decay: f64,
) -> (f64, Gradient) {
    let (k, d) = (model.k, model.d);
    let mut grad = Gradient {
        weights: vec![0.0; k * d],
        bias: vec![0.0; k],
    };
    let mut z = vec![0.0; k];
    let mut p = vec![0.0; k];
    let mut loss = 0.0;
    let inv_b = 1.0 / batch.len() as f64;
    for (j, &i) in batch.iter().enumerate() {
        let x = data.row(i);
        let qi = &q[j * k..(j + 1) * k];
        let wi = w.map_or(1.0, |w| w[j]);
        model.logits_into(x, &mut z);
        let lse = log_sum_exp(&z, 1.0);
        softmax_into(&z, 1.0, &mut p);
        let mut kl = 0.0;
        for c in 0..k {
            if qi[c] > 0.0 {
                kl += qi[c] * (qi[c].ln() - (z[c] - lse));
            }
        }
        loss += wi * kl;
        for c in 0..k {
            let g = wi * (p[c] - qi[c]) * inv_b;
            grad.bias[c] += g;
            for (gw, xv) in grad.weights[c * d..(c + 1) * d].iter_mut().zip(x) {
                *gw += g * xv;
            }
        }
    }
    loss *= inv_b;
    if weight_decay > 0.0 {
        loss += 0.5 * weight_decay * model.weights.iter().map(|v| v * v).sum::<f64>();
        for (g, v) in grad.weights.iter_mut().zip(&model.weights) {
            *g += weight_decay * v;
        }
    }
    (loss, grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub model: LinearModel,
    /// Mean mini-batch objective per epoch, measured before each step.
    pub loss_trace: Vec<f64>,
}

/// Fits a fresh zero-initialized model. Deterministic in `params.seed` and
/// `params.stream`.
pub fn train_softmax(
    data: &Dataset,
    k: usize,
    targets: &Targets,
    weights: Option<&[f64]>,
    params: &TrainParams,
) -> Result<Trained> {
    let n = data.len();
    if n == 0 {
        return Err(Error::InvalidShape("no training rows".into()));
    }
    if targets.len(k) != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            found: targets.len(k),
        });
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                found: w.len(),
            });
        }
    }
    if params.batch_size == 0 || !(params.learning_rate > 0.0) {
        return Err(Error::InvalidParameter(
            "batch_size and learning_rate must be positive".into(),
        ));
    }

    let mut rng = rng_for(params.seed, params.stream);
    let mut model = LinearModel::zeros(k, data.dim);
    let mut dense = dense_targets(targets, k, &mut rng)?;
    let mut order: Vec<usize> = (0..n).collect();
    let mut loss_trace = Vec::with_capacity(params.epochs);
    let mut q = Vec::new();
    let mut wb = Vec::new();

    for epoch in 0..params.epochs {
        if epoch > 0 {
            if let Targets::Dirichlet {
                resample: Resample::PerEpoch,
                ..
            } = targets
            {
                dense = dense_targets(targets, k, &mut rng)?;
            }
        }
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(params.batch_size) {
            q.clear();
            for &i in batch {
                q.extend_from_slice(&dense[i * k..(i + 1) * k]);
            }
            let w = weights.map(|w| {
                wb.clear();
                wb.extend(batch.iter().map(|&i| w[i]));
                wb.as_slice()
            });
            let (loss, grad) = loss_and_grad(&model, data, batch, &q, w, params.weight_decay);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            total += loss;
            batches += 1;
            for (v, g) in model.weights.iter_mut().zip(&grad.weights) {
                *v -= params.learning_rate * g;
            }
            for (v, g) in model.bias.iter_mut().zip(&grad.bias) {
                *v -= params.learning_rate * g;
            }
        }
        if !model.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        loss_trace.push(total / batches as f64);
    }
    Ok(Trained { model, loss_trace })
}

fn dense_targets(targets: &Targets, k: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    Ok(match targets {
        Targets::Hard(h) => {
            let mut q = vec![0.0; h.len() * k];
            for (i, &c) in h.iter().enumerate() {
                if c as usize >= k {
                    return Err(Error::LabelOutOfRange { label: c as u64, k });
                }
                q[i * k + c as usize] = 1.0;
            }
            q
        }
        Targets::Soft(q) => q.clone(),
        Targets::Dirichlet { hard, alphas, .. } => {
            if alphas.k() != k {
                return Err(Error::ShapeMismatch {
                    expected: k,
                    found: alphas.k(),
                });
            }
            let mut q = Vec::with_capacity(hard.len() * k);
            for &c in hard {
                if c as usize >= k {
                    return Err(Error::LabelOutOfRange { label: c as u64, k });
                }
                q.extend(sample_dirichlet(alphas.row(c as usize), rng));
            }
            q
        }
    })
}

/// One draw from `Dir(alpha)` via normalized Gamma variates. Falls back to
/// the mean when every variate underflows.
pub fn sample_dirichlet(alpha: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    let mut g: Vec<f64> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).map_or(0.0, |dist| dist.sample(rng)))
        .collect();
    let mut sum: f64 = g.iter().sum();
    if !(sum > 0.0 && sum.is_finite()) {
        g = alpha.to_vec();
        sum = g.iter().sum();
    }
    g.iter_mut().for_each(|v| *v /= sum);
    g
}
