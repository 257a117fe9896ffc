//! Independent reference implementations used as test oracles. They favor
//! obviousness over speed and share no code with the library.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn keep_count(n: usize, p: f64) -> usize {
    (((n as f64) * p + 1e-9).floor() as usize).clamp(1, n)
}

/// Indices ordered best-first; ties go to the lower index either way.
pub fn preference(scores: &[f64], highest_first: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        let ord = scores[a].partial_cmp(&scores[b]).unwrap();
        let ord = if highest_first { ord.reverse() } else { ord };
        ord.then(a.cmp(&b))
    });
    idx
}

pub fn top_fraction(scores: &[f64], p: f64, highest_first: bool) -> Vec<usize> {
    let mut kept: Vec<usize> = preference(scores, highest_first)
        .into_iter()
        .take(keep_count(scores.len(), p))
        .collect();
    kept.sort();
    kept
}

/// Floors of one per non-empty class (when affordable), largest-remainder
/// over `N^alpha`, then capping. Returns (quotas, leftover).
pub fn quotas(counts: &[usize], budget: usize, alpha: f64) -> (Vec<usize>, usize) {
    let k = counts.len();
    let nonempty: Vec<usize> = (0..k).filter(|&c| counts[c] > 0).collect();
    let mut q = vec![0usize; k];
    let mut remaining = budget;
    if !nonempty.is_empty() && budget >= nonempty.len() {
        for &c in &nonempty {
            q[c] = 1;
        }
        remaining -= nonempty.len();
    }
    let w: Vec<f64> = (0..k)
        .map(|c| {
            if counts[c] > 0 {
                (counts[c] as f64).powf(alpha)
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = w.iter().sum();
    if total > 0.0 && remaining > 0 {
        let shares: Vec<f64> = w.iter().map(|x| x / total * remaining as f64).collect();
        let mut given = 0;
        for c in 0..k {
            let f = shares[c].floor() as usize;
            q[c] += f;
            given += f;
        }
        let mut by_rem: Vec<usize> = (0..k).filter(|&c| w[c] > 0.0).collect();
        by_rem.sort_by(|&a, &b| {
            let ra = shares[a] - shares[a].floor();
            let rb = shares[b] - shares[b].floor();
            rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
        });
        for &c in by_rem.iter().cycle().take(remaining - given) {
            q[c] += 1;
        }
    }
    let mut leftover = if nonempty.is_empty() { budget } else { 0 };
    for c in 0..k {
        if q[c] > counts[c] {
            leftover += q[c] - counts[c];
            q[c] = counts[c];
        }
    }
    (q, leftover)
}

/// Per-class best rows up to quota, then the global best of the rest.
pub fn safety_net(
    scores: &[f64],
    labels: &[u32],
    k: usize,
    p: f64,
    reserve: f64,
    alpha: f64,
    highest_first: bool,
) -> Vec<usize> {
    let n = scores.len();
    let total = keep_count(n, p);
    let budget = ((total as f64) * reserve + 1e-9).floor() as usize;
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l as usize] += 1;
    }
    let (q, _) = quotas(&counts, budget, alpha);
    let order = preference(scores, highest_first);
    let mut taken = vec![false; n];
    let mut kept = Vec::new();
    for c in 0..k {
        let members: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&i| labels[i] as usize == c)
            .collect();
        for &i in members.iter().take(q[c]) {
            taken[i] = true;
            kept.push(i);
        }
    }
    for &i in &order {
        if kept.len() == total {
            break;
        }
        if !taken[i] {
            taken[i] = true;
            kept.push(i);
        }
    }
    kept.sort();
    kept
}

/// Shannon entropy (bits) of the empirical distribution.
pub fn entropy_bits(freqs: &[u64]) -> f64 {
    let n: u64 = freqs.iter().sum();
    freqs
        .iter()
        .filter(|&&f| f > 0)
        .map(|&f| {
            let p = f as f64 / n as f64;
            -p * p.log2()
        })
        .sum()
}

/// Cheapest prefix code by exhaustive search over length vectors that
/// satisfy Kraft. One present symbol costs one bit per occurrence.
pub fn optimal_prefix_cost(freqs: &[u64]) -> u64 {
    let present: Vec<u64> = freqs.iter().copied().filter(|&f| f > 0).collect();
    let m = present.len();
    match m {
        0 => return 0,
        1 => return present[0],
        _ => {}
    }
    let max_len = (m - 1) as u32;
    let mut best = u64::MAX;
    let mut lens = vec![1u32; m];
    loop {
        let kraft: u64 = lens.iter().map(|&l| 1u64 << (max_len - l)).sum();
        if kraft <= 1u64 << max_len {
            best = best.min(present.iter().zip(&lens).map(|(&f, &l)| f * l as u64).sum());
        }
        let mut i = 0;
        loop {
            if i == m {
                return best;
            }
            if lens[i] < max_len {
                lens[i] += 1;
                break;
            }
            lens[i] = 1;
            i += 1;
        }
    }
}

pub fn random_scores(rng: &mut impl Rng, n: usize, distinct: bool) -> Vec<f64> {
    if distinct {
        let mut v: Vec<f64> = (0..n)
            .map(|i| i as f64 + rng.random::<f64>() * 0.5)
            .collect();
        for i in (1..n).rev() {
            v.swap(i, rng.random_range(0..=i));
        }
        v
    } else {
        (0..n)
            .map(|_| rng.random_range(0..8) as f64 * 0.25)
            .collect()
    }
}

/// Uniform random `m`-subset of `0..n`, sorted.
pub fn random_subset(rng: &mut impl Rng, n: usize, m: usize) -> Vec<usize> {
    rand::seq::index::sample(rng, n, m)
        .into_vec()
        .into_iter()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect()
}
