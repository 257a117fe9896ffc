//! Gaussian-mixture data for the bench.
//!
//! Target class means sit on an orthonormal frame scaled so that every pair
//! is exactly `cluster_separation` apart. Distractor means live in the
//! orthogonal complement of that frame, at least `3 * cluster_separation`
//! from every target mean, so a teacher fit on the targets sees them as
//! unfamiliar rather than as a confident member of some class.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::SimConfig;

/// Independent random stream `stream` of a run seeded with `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) const STREAM_DATA: u64 = 0;
pub(crate) const STREAM_TEACHER: u64 = 1;
pub(crate) const STREAM_STUDENT: u64 = 2;
pub(crate) const STREAM_BASELINE: u64 = 3;

/// Row-major feature matrix with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub features: Vec<f64>,
    pub labels: Vec<u32>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// Rows `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            dim: self.dim,
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimData {
    pub target_train: Dataset,
    pub target_test: Dataset,
    /// Labels are the source cluster: a target class, or a distractor
    /// cluster id when `is_distractor` is set.
    pub reference: Dataset,
    pub is_distractor: Vec<bool>,
    pub target_means: Vec<Vec<f64>>,
    pub distractor_means: Vec<Vec<f64>>,
}

pub fn generate(cfg: &SimConfig) -> SimData {
    let d = cfg.feature_dim;
    let k = cfg.classes;
    let mut rng = rng_for(cfg.seed, STREAM_DATA);

    let frame = orthonormal_frame(d, &mut rng);
    let scale = cfg.cluster_separation / std::f64::consts::SQRT_2;
    let target_means: Vec<Vec<f64>> = frame[..k]
        .iter()
        .map(|e| e.iter().map(|v| v * scale).collect())
        .collect();

    let min_dist = 3.0 * cfg.cluster_separation;
    let mut distractor_means = Vec::with_capacity(cfg.distractor_clusters);
    while distractor_means.len() < cfg.distractor_clusters {
        let mut m: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if d > k {
            for e in &frame[..k] {
                let proj = dot(&m, e);
                m.iter_mut().zip(e).for_each(|(v, ev)| *v -= proj * ev);
            }
        }
        let norm = dot(&m, &m).sqrt();
        if norm < 1e-9 {
            continue;
        }
        let radius = min_dist * (1.0 + 0.5 * rng.random::<f64>());
        m.iter_mut().for_each(|v| *v *= radius / norm);
        if target_means.iter().all(|t| dist(t, &m) >= min_dist) {
            distractor_means.push(m);
        }
    }

    let balanced = |per_class: usize| {
        (0..k)
            .flat_map(move |c| std::iter::repeat_n(c, per_class))
            .collect::<Vec<_>>()
    };
    let target_train = sample(
        &target_means,
        &balanced(cfg.samples_per_class),
        cfg.noise_sigma,
        &mut rng,
    );
    let target_test = sample(
        &target_means,
        &balanced(cfg.test_per_class),
        cfg.noise_sigma,
        &mut rng,
    );

    let n = cfg.reference_size;
    let n_distractor = ((n as f64 * cfg.distractor_fraction) + 1e-9).floor() as usize;
    let mut sources: Vec<(bool, usize)> = Vec::with_capacity(n);
    sources.extend((0..n - n_distractor).map(|_| (false, rng.random_range(0..k))));
    sources.extend((0..n_distractor).map(|_| (true, rng.random_range(0..cfg.distractor_clusters))));
    sources.shuffle(&mut rng);
    let mut reference = Dataset {
        dim: d,
        features: Vec::with_capacity(n * d),
        labels: Vec::with_capacity(n),
    };
    for &(is_d, c) in &sources {
        let mean = if is_d {
            &distractor_means[c]
        } else {
            &target_means[c]
        };
        push_sample(&mut reference, mean, c, cfg.noise_sigma, &mut rng);
    }

    SimData {
        target_train,
        target_test,
        reference,
        is_distractor: sources.iter().map(|s| s.0).collect(),
        target_means,
        distractor_means,
    }
}

/// Rows of a random orthogonal `d x d` matrix, by Gram-Schmidt.
fn orthonormal_frame(d: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(d);
    while frame.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for e in &frame {
                let proj = dot(&v, e);
                v.iter_mut().zip(e).for_each(|(x, ex)| *x -= proj * ex);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            frame.push(v);
        }
    }
    frame
}

fn sample(means: &[Vec<f64>], classes: &[usize], sigma: f64, rng: &mut impl Rng) -> Dataset {
    let d = means[0].len();
    let mut out = Dataset {
        dim: d,
        features: Vec::with_capacity(classes.len() * d),
        labels: Vec::new(),
    };
    for &c in classes {
        push_sample(&mut out, &means[c], c, sigma, rng);
    }
    out
}

fn push_sample(out: &mut Dataset, mean: &[f64], label: usize, sigma: f64, rng: &mut impl Rng) {
    out.features.extend(
        mean.iter()
            .map(|&m| m + sigma * rng.sample::<f64, _>(StandardNormal)),
    );
    out.labels.push(label as u32);
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
