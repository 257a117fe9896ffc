//! Per-row uncertainty scores over a [`LogitMatrix`].
//!
//! Lower is better for every metric here: low energy and low entropy both
//! mean a confident, in-distribution teacher prediction. Metrics are looked
//! up by name through [`metric_by_name`] so front-ends can pick one at
//! runtime.

use crate::{Error, LogitMatrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Energy,
    Entropy,
    /// Max-of-ranks cost produced by [`consensus_cost`].
    Consensus,
    /// Scores that came from outside the library (e.g. a CSV file).
    External,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    scores: Vec<f64>,
    metric: Metric,
    temperature: f64,
}

impl ScoreVector {
    pub fn new(scores: Vec<f64>, metric: Metric, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter(format!("score {i} is not finite")));
        }
        Ok(Self {
            scores,
            metric,
            temperature,
        })
    }

    /// Wraps externally produced scores.
    pub fn external(scores: Vec<f64>) -> Result<Self> {
        Self::new(scores, Metric::External, 1.0)
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn into_scores(self) -> Vec<f64> {
        self.scores
    }
}

/// Normalized ascending ranks in `[0, 1]`; the lowest score gets 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RankVector {
    ranks: Vec<f64>,
}

impl RankVector {
    pub fn new(ranks: Vec<f64>) -> Result<Self> {
        if let Some(r) = ranks.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::InvalidParameter(format!("rank {r} outside [0, 1]")));
        }
        Ok(Self { ranks })
    }

    pub fn ranks(&self) -> &[f64] {
        &self.ranks
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }
}

/// A per-row scoring rule over logits.
pub trait ScoreMetric: Send + Sync {
    fn name(&self) -> &'static str;

    fn metric(&self) -> Metric;

    fn score_row(&self, logits: &[f64], temperature: f64) -> f64;

    fn score(&self, m: &LogitMatrix, temperature: f64) -> Result<ScoreVector> {
        check_temperature(temperature)?;
        let scores = m
            .rows()
            .map(|row| self.score_row(row, temperature))
            .collect();
        ScoreVector::new(scores, self.metric(), temperature)
    }
}

/// Free energy `-T * logsumexp(logits / T)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Energy;

/// Shannon entropy of `softmax(logits / T)`, in nats.
#[derive(Debug, Clone, Copy, Default)]
pub struct Entropy;

impl ScoreMetric for Energy {
    fn name(&self) -> &'static str {
        "energy"
    }

    fn metric(&self) -> Metric {
        Metric::Energy
    }

    fn score_row(&self, logits: &[f64], temperature: f64) -> f64 {
        -temperature * log_sum_exp(logits, temperature)
    }
}

impl ScoreMetric for Entropy {
    fn name(&self) -> &'static str {
        "entropy"
    }

    fn metric(&self) -> Metric {
        Metric::Entropy
    }

    fn score_row(&self, logits: &[f64], temperature: f64) -> f64 {
        let lse = log_sum_exp(logits, temperature);
        let h: f64 = logits
            .iter()
            .map(|&x| {
                let log_p = x / temperature - lse;
                let p = log_p.exp();
                if p > 0.0 {
                    -p * log_p
                } else {
                    0.0
                }
            })
            .sum();
        h.clamp(0.0, (logits.len() as f64).ln())
    }
}

static METRICS: [&dyn ScoreMetric; 2] = [&Energy, &Entropy];

/// All built-in metrics, in registration order.
pub fn metrics() -> &'static [&'static dyn ScoreMetric] {
    &METRICS
}

pub fn metric_by_name(name: &str) -> Result<&'static dyn ScoreMetric> {
    METRICS
        .iter()
        .copied()
        .find(|m| m.name() == name)
        .ok_or_else(|| Error::UnknownName {
            kind: "metric",
            name: name.to_string(),
        })
}

pub fn energy(m: &LogitMatrix, temperature: f64) -> Result<ScoreVector> {
    Energy.score(m, temperature)
}

pub fn entropy(m: &LogitMatrix, temperature: f64) -> Result<ScoreVector> {
    Entropy.score(m, temperature)
}

/// `logsumexp(logits / T)` with the row maximum factored out.
pub(crate) fn log_sum_exp(logits: &[f64], temperature: f64) -> f64 {
    let max = logits
        .iter()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b / temperature));
    let sum: f64 = logits.iter().map(|&x| (x / temperature - max).exp()).sum();
    max + sum.ln()
}

/// `softmax(logits / T)` written into `out`.
pub(crate) fn softmax_into(logits: &[f64], temperature: f64, out: &mut [f64]) {
    let max = logits
        .iter()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b / temperature));
    let mut sum = 0.0;
    for (o, &x) in out.iter_mut().zip(logits) {
        *o = (x / temperature - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

fn check_temperature(temperature: f64) -> Result<()> {
    if temperature > 0.0 && temperature.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "temperature must be positive, got {temperature}"
        )))
    }
}

/// Stable ascending order of `scores`: ties keep their original index order.
pub(crate) fn ascending_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    order
}

/// Maps each score to `rank / (n - 1)` where rank is its 0-based position in
/// the stable ascending order.
pub fn rank_normalize(s: &ScoreVector) -> Result<RankVector> {
    let n = s.len();
    if n < 2 {
        return Err(Error::DegenerateLength(n));
    }
    let denom = (n - 1) as f64;
    let mut ranks = vec![0.0; n];
    for (rank, idx) in ascending_order(s.scores()).into_iter().enumerate() {
        ranks[idx] = rank as f64 / denom;
    }
    Ok(RankVector { ranks })
}

/// Elementwise maximum over several rank vectors.
pub fn consensus_cost(ranks: &[RankVector]) -> Result<ScoreVector> {
    let first = ranks.first().ok_or_else(|| {
        Error::InvalidParameter("consensus needs at least one rank vector".into())
    })?;
    let n = first.len();
    let mut cost = first.ranks.clone();
    for r in &ranks[1..] {
        if r.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                found: r.len(),
            });
        }
        for (c, &v) in cost.iter_mut().zip(&r.ranks) {
            *c = c.max(v);
        }
    }
    ScoreVector::new(cost, Metric::Consensus, 1.0)
}
