//! Near-duplicate search between two sets of `[0, 1]`-valued vectors.
//!
//! Vectors are bucketed by (mean, variance) and only same-bucket pairs are
//! compared, so identical vectors always meet.

use std::collections::HashMap;

use crate::{Error, Result};

/// Bucket key: `floor(mean * bins)` and `floor(var * 4 * bins)`, both
/// clamped to `bins - 1`. Variance of `[0, 1]` data is at most 1/4.
pub fn bucket(v: &[f64], bins: usize) -> (usize, usize) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let clamp = |x: f64| ((x * bins as f64).floor().max(0.0) as usize).min(bins - 1);
    (clamp(mean), clamp(4.0 * var))
}

pub fn mean_l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// Pairs `(a_index, b_index)` in the same bucket whose mean absolute
/// difference is below `eps`, sorted.
pub fn find_duplicates<A: AsRef<[f64]>, B: AsRef<[f64]>>(
    set_a: &[A],
    set_b: &[B],
    bins: usize,
    eps: f64,
) -> Result<Vec<(usize, usize)>> {
    if bins == 0 {
        return Err(Error::InvalidParameter("bins must be at least 1".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let dim = set_a
        .first()
        .map(|v| v.as_ref().len())
        .or_else(|| set_b.first().map(|v| v.as_ref().len()));
    let Some(dim) = dim else {
        return Ok(Vec::new());
    };
    if dim == 0 {
        return Err(Error::InvalidShape("vectors must be non-empty".into()));
    }
    check(set_a, dim)?;
    check(set_b, dim)?;

    let mut buckets: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (j, v) in set_b.iter().enumerate() {
        buckets.entry(bucket(v.as_ref(), bins)).or_default().push(j);
    }
    let mut pairs = Vec::new();
    for (i, a) in set_a.iter().enumerate() {
        let a = a.as_ref();
        if let Some(candidates) = buckets.get(&bucket(a, bins)) {
            pairs.extend(
                candidates
                    .iter()
                    .filter(|&&j| mean_l1(a, set_b[j].as_ref()) < eps)
                    .map(|&j| (i, j)),
            );
        }
    }
    Ok(pairs)
}

fn check<V: AsRef<[f64]>>(set: &[V], dim: usize) -> Result<()> {
    for (row, v) in set.iter().enumerate() {
        let v = v.as_ref();
        if v.len() != dim {
            return Err(Error::ShapeMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        if let Some(col) = v.iter().position(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::CoordinateOutOfRange {
                row,
                col,
                value: v[col],
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_vectors_are_flagged() {
        let a = vec![vec![0.2, 0.4, 0.9]];
        assert_eq!(find_duplicates(&a, &a, 1024, 1e-5).unwrap(), [(0, 0)]);
    }

    #[test]
    fn one_coordinate_off_is_not_a_duplicate() {
        let a: Vec<f64> = (0..100).map(|i| i as f64 / 200.0).collect();
        let mut b = a.clone();
        b[7] += 0.1;
        assert!((mean_l1(&a, &b) - 1e-3).abs() < 1e-12);
        assert!(find_duplicates(&[a], &[b], 1024, 1e-5).unwrap().is_empty());
    }

    #[test]
    fn bucket_edges_clamp() {
        assert_eq!(bucket(&[1.0, 1.0], 8), (7, 0));
        assert_eq!(bucket(&[0.0, 1.0], 8), (4, 7));
        assert_eq!(bucket(&[0.0, 0.0], 1), (0, 0));
    }

    #[test]
    fn out_of_range_is_rejected() {
        let a = vec![vec![0.5, 1.5]];
        let b = vec![vec![0.5, 0.5]];
        assert!(matches!(
            find_duplicates(&b, &a, 16, 1e-5),
            Err(Error::CoordinateOutOfRange { row: 0, col: 1, .. })
        ));
        assert!(find_duplicates(&b, &b, 0, 1e-5).is_err());
        assert!(find_duplicates(&b, &b, 4, 0.0).is_err());
    }
}
