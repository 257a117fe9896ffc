//! Label artifacts derived from teacher logits: hard labels, per-class
//! average soft labels, per-class Dirichlet concentrations, and per-row
//! importance weights.

use crate::scoring::{softmax_into, ScoreVector};
use crate::{Error, LogitMatrix, Result};

/// Lower clamp on the per-class probability variance.
pub const VARIANCE_FLOOR: f64 = 1e-12;
/// Clip range for the Dirichlet precision `s`.
pub const PRECISION_MIN: f64 = 0.1;
pub const PRECISION_MAX: f64 = 1e6;
/// Smallest concentration emitted, for softmax entries that underflow to 0.
pub const CONCENTRATION_FLOOR: f64 = 1e-12;

/// A `k x k` matrix indexed by hard class (row) and target class (column).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMatrix {
    k: usize,
    values: Vec<f64>,
}

impl ClassMatrix {
    pub fn new(k: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != k * k {
            return Err(Error::ShapeMismatch {
                expected: k * k,
                found: values.len(),
            });
        }
        Ok(Self { k, values })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, c: usize) -> &[f64] {
        &self.values[c * self.k..(c + 1) * self.k]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.k)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// What to do with a class that has no rows assigned to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmptyClassPolicy {
    /// Fail with [`Error::EmptyClass`].
    #[default]
    Error,
    /// Emit an uninformative row: the uniform distribution for prototypes,
    /// all-ones concentrations for Dirichlet.
    Uniform,
}

/// Everything shipped alongside the kept indices.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    pub hard: Vec<u32>,
    pub soft_prototypes: Option<ClassMatrix>,
    pub dirichlet_alphas: Option<ClassMatrix>,
    pub weights: Option<Vec<f64>>,
}

impl LabelSet {
    pub fn from_hard(hard: Vec<u32>) -> Self {
        Self {
            hard,
            soft_prototypes: None,
            dirichlet_alphas: None,
            weights: None,
        }
    }

    /// Checks the stated invariants against `k` classes.
    pub fn validate(&self, k: usize) -> Result<()> {
        if let Some(&bad) = self.hard.iter().find(|&&l| l as usize >= k) {
            return Err(Error::LabelOutOfRange {
                label: bad as u64,
                k,
            });
        }
        if let Some(protos) = &self.soft_prototypes {
            check_k(protos, k)?;
            for (c, row) in protos.rows().enumerate() {
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-9 || row.iter().any(|&v| v < 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "prototype row {c} is not a distribution (sum {sum})"
                    )));
                }
            }
        }
        if let Some(alphas) = &self.dirichlet_alphas {
            check_k(alphas, k)?;
            if alphas.values().iter().any(|&a| !(a > 0.0)) {
                return Err(Error::InvalidParameter("non-positive concentration".into()));
            }
        }
        if let Some(w) = &self.weights {
            if w.len() != self.hard.len() {
                return Err(Error::ShapeMismatch {
                    expected: self.hard.len(),
                    found: w.len(),
                });
            }
            let mean = w.iter().sum::<f64>() / w.len().max(1) as f64;
            if (!w.is_empty() && (mean - 1.0).abs() > 1e-9) || w.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::InvalidParameter(format!("weights have mean {mean}")));
            }
        }
        Ok(())
    }
}

fn check_k(m: &ClassMatrix, k: usize) -> Result<()> {
    if m.k() == k {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            expected: k,
            found: m.k(),
        })
    }
}

/// Argmax of each row; ties go to the lowest class index.
pub fn hard_labels(m: &LogitMatrix) -> Vec<u32> {
    m.rows()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            best as u32
        })
        .collect()
}

/// Softmax rows grouped by hard class, in row order.
fn class_softmax_members(
    m: &LogitMatrix,
    hard: &[u32],
    temperature: f64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    if hard.len() != m.n() {
        return Err(Error::ShapeMismatch {
            expected: m.n(),
            found: hard.len(),
        });
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let k = m.k();
    let mut members: Vec<Vec<Vec<f64>>> = vec![Vec::new(); k];
    for (row, &label) in m.rows().zip(hard) {
        let bucket = members
            .get_mut(label as usize)
            .ok_or(Error::LabelOutOfRange {
                label: label as u64,
                k,
            })?;
        let mut p = vec![0.0; k];
        softmax_into(row, temperature, &mut p);
        bucket.push(p);
    }
    Ok(members)
}

/// Mean of `softmax(logits / T)` over the rows assigned to each class.
pub fn average_soft_labels(
    m: &LogitMatrix,
    hard: &[u32],
    temperature: f64,
    policy: EmptyClassPolicy,
) -> Result<ClassMatrix> {
    let k = m.k();
    let members = class_softmax_members(m, hard, temperature)?;
    let mut values = Vec::with_capacity(k * k);
    for (c, rows) in members.iter().enumerate() {
        if rows.is_empty() {
            match policy {
                EmptyClassPolicy::Error => return Err(Error::EmptyClass(c)),
                EmptyClassPolicy::Uniform => {
                    values.extend(std::iter::repeat_n(1.0 / k as f64, k));
                    continue;
                }
            }
        }
        values.extend(column_means(rows, k));
    }
    ClassMatrix::new(k, values)
}

/// Method-of-moments Dirichlet fit per hard class.
///
/// The precision comes from the diagonal entry only:
/// `s = mu_c (1 - mu_c) / var_c - 1`, with the population variance floored at
/// [`VARIANCE_FLOOR`] and `s` clipped to `[PRECISION_MIN, PRECISION_MAX]`.
/// The concentration row is `mu * s`.
pub fn dirichlet_mom(
    m: &LogitMatrix,
    hard: &[u32],
    temperature: f64,
    policy: EmptyClassPolicy,
) -> Result<ClassMatrix> {
    let k = m.k();
    let members = class_softmax_members(m, hard, temperature)?;
    let mut values = Vec::with_capacity(k * k);
    for (c, rows) in members.iter().enumerate() {
        if rows.is_empty() {
            match policy {
                EmptyClassPolicy::Error => return Err(Error::EmptyClass(c)),
                EmptyClassPolicy::Uniform => {
                    values.extend(std::iter::repeat_n(1.0, k));
                    continue;
                }
            }
        }
        let mu = column_means(rows, k);
        let var = rows.iter().map(|p| (p[c] - mu[c]).powi(2)).sum::<f64>() / rows.len() as f64;
        let s = dirichlet_precision(mu[c], var);
        values.extend(mu.iter().map(|&mu_j| (mu_j * s).max(CONCENTRATION_FLOOR)));
    }
    ClassMatrix::new(k, values)
}

/// Clipped method-of-moments precision for one Beta marginal.
pub fn dirichlet_precision(mean: f64, variance: f64) -> f64 {
    let s = mean * (1.0 - mean) / variance.max(VARIANCE_FLOOR) - 1.0;
    s.clamp(PRECISION_MIN, PRECISION_MAX)
}

fn column_means(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
    let mut acc = vec![0.0; k];
    for p in rows {
        for (a, &v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    let n = rows.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Boltzmann weights `exp(-s_i / T)` normalized to unit mean.
pub fn importance_weights(s: &ScoreVector, t_weight: f64) -> Result<Vec<f64>> {
    importance_weights_from(s.scores(), t_weight)
}

pub fn importance_weights_from(scores: &[f64], t_weight: f64) -> Result<Vec<f64>> {
    if !(t_weight > 0.0 && t_weight.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "weight temperature must be positive, got {t_weight}"
        )));
    }
    if scores.is_empty() {
        return Ok(Vec::new());
    }
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = scores
        .iter()
        .map(|&s| (-(s - min) / t_weight).exp())
        .collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    Ok(raw.into_iter().map(|w| w / mean).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logits_for_probs(rows: &[[f64; 2]]) -> LogitMatrix {
        let rows: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().map(|p| p.ln()).collect())
            .collect();
        LogitMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn argmax_and_ties() {
        let m = LogitMatrix::from_rows(&[[0.1, 2.5, -1.0], [1.0, 1.0, 0.0], [-3.0, -2.0, -2.0]])
            .unwrap();
        assert_eq!(hard_labels(&m), [1, 0, 1]);
    }

    #[test]
    fn prototype_is_mean_softmax() {
        let m = logits_for_probs(&[[0.6, 0.4], [0.8, 0.2], [0.1, 0.9]]);
        let protos = average_soft_labels(&m, &[0, 0, 1], 1.0, EmptyClassPolicy::Error).unwrap();
        assert!((protos.row(0)[0] - 0.7).abs() < 1e-12);
        assert!((protos.row(0)[1] - 0.3).abs() < 1e-12);
        assert!((protos.row(1)[1] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn empty_class_policy() {
        let m = logits_for_probs(&[[0.6, 0.4]]);
        assert!(matches!(
            average_soft_labels(&m, &[0], 1.0, EmptyClassPolicy::Error),
            Err(Error::EmptyClass(1))
        ));
        let protos = average_soft_labels(&m, &[0], 1.0, EmptyClassPolicy::Uniform).unwrap();
        assert_eq!(protos.row(1), &[0.5, 0.5]);
        assert!(matches!(
            dirichlet_mom(&m, &[0], 1.0, EmptyClassPolicy::Error),
            Err(Error::EmptyClass(1))
        ));
        let alphas = dirichlet_mom(&m, &[0], 1.0, EmptyClassPolicy::Uniform).unwrap();
        assert_eq!(alphas.row(1), &[1.0, 1.0]);
    }

    #[test]
    fn dirichlet_hand_fixture() {
        // mu = [0.7, 0.3], var_0 = 0.01, s = 0.21 / 0.01 - 1 = 20.
        let m = logits_for_probs(&[[0.6, 0.4], [0.8, 0.2], [0.3, 0.7], [0.1, 0.9]]);
        let alphas = dirichlet_mom(&m, &[0, 0, 1, 1], 1.0, EmptyClassPolicy::Error).unwrap();
        assert!(
            (alphas.row(0)[0] - 14.0).abs() < 1e-9,
            "{:?}",
            alphas.row(0)
        );
        assert!((alphas.row(0)[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn dirichlet_constant_class_hits_upper_clip() {
        let m = logits_for_probs(&[[0.5, 0.5], [0.5, 0.5]]);
        let alphas = dirichlet_mom(&m, &[0, 0], 1.0, EmptyClassPolicy::Uniform).unwrap();
        assert_eq!(alphas.row(0), &[5e5, 5e5]);
    }

    #[test]
    fn precision_lower_clip() {
        // Variance at the Bernoulli maximum gives s = 0 before clipping.
        assert_eq!(dirichlet_precision(0.5, 0.25), PRECISION_MIN);
    }

    #[test]
    fn weight_fixtures() {
        let w = importance_weights_from(&[2.0, 2.0, 2.0], 0.7).unwrap();
        assert!(w.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        let t = 1.5;
        let w = importance_weights_from(&[0.0, t * 2f64.ln()], t).unwrap();
        assert!((w[0] - 4.0 / 3.0).abs() < 1e-12);
        assert!((w[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!(importance_weights_from(&[1.0], 0.0).is_err());
    }

    #[test]
    fn label_set_validation() {
        let mut set = LabelSet::from_hard(vec![0, 1, 1]);
        set.validate(2).unwrap();
        assert!(set.validate(1).is_err());
        set.weights = Some(vec![1.0, 1.0, 1.5]);
        assert!(set.validate(2).is_err());
        set.weights = Some(vec![0.5, 1.0, 1.5]);
        set.validate(2).unwrap();
        set.soft_prototypes = Some(ClassMatrix::new(2, vec![0.5, 0.5, 0.2, 0.7]).unwrap());
        assert!(set.validate(2).is_err());
    }
}
