//! Class-quota ("safety-net") selection.
//!
//! Part of the keep budget is reserved and split across pseudo-label classes
//! with weights `N_c^alpha`, so that tail classes survive aggressive pruning.
//! The rest of the budget, plus anything a class could not absorb, is filled
//! globally by score.

use super::{
    preference_order, Direction, KeepRatio, Method, SelectionInput, SelectionResult,
    SelectionStrategy, FLOOR_SLACK,
};
use crate::matrix::class_histogram;
use crate::scoring::ScoreVector;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuotaPlan {
    pub alpha: f64,
    pub reserve_fraction: f64,
    /// Per-class quota, each at most the class's availability.
    pub quotas: Vec<usize>,
    /// Reserve budget that no class could absorb.
    pub leftover_to_global: usize,
}

impl QuotaPlan {
    pub fn budget(&self) -> usize {
        self.quotas.iter().sum::<usize>() + self.leftover_to_global
    }
}

/// Splits `budget` over classes with weights `counts[c]^alpha`.
///
/// Every non-empty class first gets one slot when the budget allows it. The
/// remainder is apportioned by largest remainder (ties to the lower class id),
/// then quotas are capped at class availability and the excess is reported as
/// `leftover_to_global`. Empty classes have weight 0 for every `alpha`.
pub fn plan_quotas(counts: &[usize], budget: usize, alpha: f64) -> QuotaPlan {
    let k = counts.len();
    let mut quotas = vec![0usize; k];
    let non_empty = counts.iter().filter(|&&c| c > 0).count();

    let mut remaining = budget;
    if non_empty > 0 && budget >= non_empty {
        for (q, &c) in quotas.iter_mut().zip(counts) {
            if c > 0 {
                *q = 1;
            }
        }
        remaining -= non_empty;
    }

    let weights: Vec<f64> = counts
        .iter()
        .map(|&c| if c == 0 { 0.0 } else { (c as f64).powf(alpha) })
        .collect();
    let total_weight: f64 = weights.iter().sum();

    let mut leftover = 0usize;
    if remaining > 0 && total_weight > 0.0 && total_weight.is_finite() {
        let shares: Vec<f64> = weights
            .iter()
            .map(|w| remaining as f64 * w / total_weight)
            .collect();
        let mut base: Vec<usize> = shares
            .iter()
            .map(|s| (s + FLOOR_SLACK).floor() as usize)
            .collect();
        let mut fractions: Vec<f64> = shares
            .iter()
            .zip(&base)
            .map(|(s, &b)| s - b as f64)
            .collect();

        // The slack can push the floors one past the budget; take it back from
        // the smallest remainders.
        while base.iter().sum::<usize>() > remaining {
            let c = (0..k)
                .filter(|&c| base[c] > 0)
                .min_by(|&a, &b| fractions[a].total_cmp(&fractions[b]).then(b.cmp(&a)))
                .expect("some class has a positive floor");
            base[c] -= 1;
            fractions[c] += 1.0;
        }

        let residue = remaining - base.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..k).filter(|&c| weights[c] > 0.0).collect();
        order.sort_by(|&a, &b| fractions[b].total_cmp(&fractions[a]).then(a.cmp(&b)));
        for &c in order.iter().cycle().take(residue) {
            base[c] += 1;
        }
        for (q, b) in quotas.iter_mut().zip(base) {
            *q += b;
        }
    } else {
        leftover += remaining;
    }

    for (q, &c) in quotas.iter_mut().zip(counts) {
        if *q > c {
            leftover += *q - c;
            *q = c;
        }
    }

    QuotaPlan {
        alpha,
        reserve_fraction: 1.0,
        quotas,
        leftover_to_global: leftover,
    }
}

/// Fills per-class quotas with each class's best rows, then the remaining
/// budget globally from rows not yet taken.
pub fn select_safety_net(
    s: &ScoreVector,
    labels: &[u32],
    classes: usize,
    keep: KeepRatio,
    reserve_fraction: f64,
    alpha: f64,
    direction: Direction,
) -> Result<SelectionResult> {
    check_reserve(reserve_fraction)?;
    let n = s.len();
    if n == 0 {
        return Err(Error::InvalidShape(
            "cannot select from an empty score vector".into(),
        ));
    }
    if labels.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    let counts = class_histogram(labels, classes)?;
    let total = keep.keep_count(n);
    let reserve = (total as f64 * reserve_fraction + FLOOR_SLACK).floor() as usize;
    let mut plan = plan_quotas(&counts, reserve.min(total), alpha);
    plan.reserve_fraction = reserve_fraction;

    let order = preference_order(s.scores(), direction);
    let mut taken = vec![false; n];
    let mut remaining_quota = plan.quotas.clone();
    let mut kept = Vec::with_capacity(total);
    for &i in &order {
        let slot = &mut remaining_quota[labels[i] as usize];
        if *slot > 0 {
            *slot -= 1;
            taken[i] = true;
            kept.push(i);
        }
    }
    for &i in &order {
        if kept.len() == total {
            break;
        }
        if !taken[i] {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    Ok(
        SelectionResult::new(kept, n, Method::SafetyNet, keep.get(), direction)?
            .with_quota_plan(plan),
    )
}

fn check_reserve(reserve_fraction: f64) -> Result<()> {
    if (0.0..=1.0).contains(&reserve_fraction) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "reserve fraction {reserve_fraction} is outside [0, 1]"
        )))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SafetyNet {
    reserve_fraction: f64,
    alpha: f64,
    direction: Direction,
}

impl SafetyNet {
    pub fn new(reserve_fraction: f64, alpha: f64, direction: Direction) -> Result<Self> {
        check_reserve(reserve_fraction)?;
        if !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "alpha {alpha} is not finite"
            )));
        }
        Ok(Self {
            reserve_fraction,
            alpha,
            direction,
        })
    }
}

impl SelectionStrategy for SafetyNet {
    fn name(&self) -> &'static str {
        "safetynet"
    }

    fn select(&self, input: &SelectionInput<'_>, keep: KeepRatio) -> Result<SelectionResult> {
        let scores = input.primary()?;
        let labels = input
            .labels
            .ok_or_else(|| Error::InvalidParameter("safety-net selection needs labels".into()))?;
        let classes = input
            .classes
            .unwrap_or_else(|| labels.iter().max().map_or(0, |&m| m as usize + 1));
        select_safety_net(
            scores,
            labels,
            classes,
            keep,
            self.reserve_fraction,
            self.alpha,
            self.direction,
        )
    }
}
