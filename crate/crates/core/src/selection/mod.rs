//! Turning scores into the kept-index set.
//!
//! Every strategy implements [`SelectionStrategy`] and is constructed by name
//! through a [`StrategyRegistry`]. All of them keep exactly
//! [`KeepRatio::keep_count`] rows, break score ties by the lower row index,
//! and return indices in ascending order.

mod consensus;
mod safety_net;

use std::fmt;

pub use consensus::{select_consensus, Consensus};
pub use safety_net::{plan_quotas, select_safety_net, QuotaPlan, SafetyNet};

use crate::scoring::{ascending_order, ScoreVector};
use crate::{Error, Result};

/// Slack added before flooring `n * p` so that ratios like 0.29 of 100 do
/// not lose a row to binary rounding.
const FLOOR_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Keep the lowest scores (most confident).
    LowestFirst,
    /// Keep the highest scores.
    HighestFirst,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::LowestFirst => "lowest",
            Direction::HighestFirst => "highest",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "lowest" => Ok(Direction::LowestFirst),
            "highest" => Ok(Direction::HighestFirst),
            _ => Err(Error::UnknownName {
                kind: "direction",
                name: name.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    TopFraction,
    Inverse,
    Consensus,
    SafetyNet,
    /// Indices supplied from outside, e.g. read from CSV or a decoded payload.
    External,
}

/// Fraction of rows to keep, in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct KeepRatio(f64);

impl KeepRatio {
    pub fn new(p: f64) -> Result<Self> {
        if p > 0.0 && p <= 1.0 {
            Ok(Self(p))
        } else {
            Err(Error::InvalidKeepRatio(p))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `floor(n * p)`, but never below 1 or above `n`.
    pub fn keep_count(self, n: usize) -> usize {
        let raw = (n as f64 * self.0 + FLOOR_SLACK).floor() as usize;
        raw.clamp(1, n.max(1))
    }
}

impl fmt::Display for KeepRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    kept: Vec<usize>,
    n_ref: usize,
    method: Method,
    keep_ratio: f64,
    direction: Direction,
    quota_plan: Option<QuotaPlan>,
}

impl SelectionResult {
    /// Builds a result from indices that must already be strictly increasing
    /// and below `n_ref`.
    pub fn new(
        kept: Vec<usize>,
        n_ref: usize,
        method: Method,
        keep_ratio: f64,
        direction: Direction,
    ) -> Result<Self> {
        check_indices(&kept, n_ref)?;
        Ok(Self {
            kept,
            n_ref,
            method,
            keep_ratio,
            direction,
            quota_plan: None,
        })
    }

    /// Wraps externally supplied indices; the keep ratio becomes `m / n_ref`.
    pub fn from_indices(kept: Vec<usize>, n_ref: usize) -> Result<Self> {
        let ratio = if n_ref == 0 {
            0.0
        } else {
            kept.len() as f64 / n_ref as f64
        };
        Self::new(kept, n_ref, Method::External, ratio, Direction::LowestFirst)
    }

    pub(crate) fn with_quota_plan(mut self, plan: QuotaPlan) -> Self {
        self.quota_plan = Some(plan);
        self
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn n_ref(&self) -> usize {
        self.n_ref
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn keep_ratio(&self) -> f64 {
        self.keep_ratio
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn quota_plan(&self) -> Option<&QuotaPlan> {
        self.quota_plan.as_ref()
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }
}

fn check_indices(kept: &[usize], n_ref: usize) -> Result<()> {
    for (pos, pair) in kept.windows(2).enumerate() {
        if pair[1] <= pair[0] {
            return Err(Error::NonMonotoneIndices {
                position: pos as u64 + 1,
            });
        }
    }
    if let Some(&last) = kept.last() {
        if last >= n_ref {
            return Err(Error::IndexOverflow {
                index: last as u64,
                n_ref: n_ref as u64,
            });
        }
    }
    Ok(())
}

/// Row indices ordered best-first for `direction`, ties by lower index.
pub(crate) fn preference_order(scores: &[f64], direction: Direction) -> Vec<usize> {
    match direction {
        Direction::LowestFirst => ascending_order(scores),
        Direction::HighestFirst => {
            let mut order: Vec<usize> = (0..scores.len()).collect();
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
            order
        }
    }
}

/// Keeps `floor(n * p)` rows by score and returns them sorted by index.
pub fn select_top_fraction(
    s: &ScoreVector,
    keep: KeepRatio,
    direction: Direction,
) -> Result<SelectionResult> {
    let n = s.len();
    if n == 0 {
        return Err(Error::InvalidShape(
            "cannot select from an empty score vector".into(),
        ));
    }
    let mut kept = preference_order(s.scores(), direction);
    kept.truncate(keep.keep_count(n));
    kept.sort_unstable();
    let method = match direction {
        Direction::LowestFirst => Method::TopFraction,
        Direction::HighestFirst => Method::Inverse,
    };
    SelectionResult::new(kept, n, method, keep.get(), direction)
}

/// What a strategy gets to look at.
#[derive(Debug, Clone, Copy)]
pub struct SelectionInput<'a> {
    /// One score vector per criterion. Single-criterion strategies use the
    /// first one.
    pub scores: &'a [ScoreVector],
    /// Pseudo hard labels aligned with the scores, when available.
    pub labels: Option<&'a [u32]>,
    /// Number of classes; inferred from `labels` when absent.
    pub classes: Option<usize>,
}

impl<'a> SelectionInput<'a> {
    pub fn scores(scores: &'a [ScoreVector]) -> Self {
        Self {
            scores,
            labels: None,
            classes: None,
        }
    }

    pub fn with_labels(mut self, labels: &'a [u32], classes: usize) -> Self {
        self.labels = Some(labels);
        self.classes = Some(classes);
        self
    }

    pub(crate) fn primary(&self) -> Result<&'a ScoreVector> {
        self.scores
            .first()
            .ok_or_else(|| Error::InvalidParameter("no score vector supplied".into()))
    }
}

pub trait SelectionStrategy: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn select(&self, input: &SelectionInput<'_>, keep: KeepRatio) -> Result<SelectionResult>;
}

/// Keep the best `p` fraction by a single score.
#[derive(Debug, Clone, Copy)]
pub struct TopFraction {
    pub direction: Direction,
}

/// Keep the highest-scoring `p` fraction.
#[derive(Debug, Clone, Copy, Default)]
pub struct Inverse;

impl SelectionStrategy for TopFraction {
    fn name(&self) -> &'static str {
        "top"
    }

    fn select(&self, input: &SelectionInput<'_>, keep: KeepRatio) -> Result<SelectionResult> {
        select_top_fraction(input.primary()?, keep, self.direction)
    }
}

impl SelectionStrategy for Inverse {
    fn name(&self) -> &'static str {
        "inverse"
    }

    fn select(&self, input: &SelectionInput<'_>, keep: KeepRatio) -> Result<SelectionResult> {
        select_top_fraction(input.primary()?, keep, Direction::HighestFirst)
    }
}

/// Knobs shared by the strategy constructors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyParams {
    pub direction: Direction,
    pub alpha: f64,
    pub reserve_fraction: f64,
}

impl Default for StrategyParams {
    fn default() -> Self {
        Self {
            direction: Direction::LowestFirst,
            alpha: -0.2,
            reserve_fraction: 0.5,
        }
    }
}

pub type StrategyFactory = fn(&StrategyParams) -> Result<Box<dyn SelectionStrategy>>;

/// Name-to-constructor table for selection strategies.
pub struct StrategyRegistry {
    entries: Vec<(&'static str, StrategyFactory)>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register("top", |p| {
            Ok(Box::new(TopFraction {
                direction: p.direction,
            }))
        });
        reg.register("inverse", |_| Ok(Box::new(Inverse)));
        reg.register("consensus", |_| Ok(Box::new(Consensus)));
        reg.register("safetynet", |p| {
            Ok(Box::new(SafetyNet::new(
                p.reserve_fraction,
                p.alpha,
                p.direction,
            )?))
        });
        reg
    }

    /// Adds or replaces a strategy constructor.
    pub fn register(&mut self, name: &'static str, factory: StrategyFactory) {
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some(entry) => entry.1 = factory,
            None => self.entries.push((name, factory)),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.iter().map(|(n, _)| *n)
    }

    pub fn build(&self, name: &str, params: &StrategyParams) -> Result<Box<dyn SelectionStrategy>> {
        let (_, factory) = self
            .entries
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::UnknownName {
                kind: "strategy",
                name: name.to_string(),
            })?;
        factory(params)
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(v: &[f64]) -> ScoreVector {
        ScoreVector::external(v.to_vec()).unwrap()
    }

    #[test]
    fn keep_ratio_bounds() {
        assert!(KeepRatio::new(0.0).is_err());
        assert!(KeepRatio::new(1.01).is_err());
        assert!(KeepRatio::new(f64::NAN).is_err());
        assert_eq!(KeepRatio::new(1.0).unwrap().keep_count(7), 7);
        assert_eq!(KeepRatio::new(0.29).unwrap().keep_count(100), 29);
        assert_eq!(KeepRatio::new(0.001).unwrap().keep_count(10), 1);
    }

    #[test]
    fn top_fraction_fixture() {
        let s = scores(&[0.1, 0.9, 0.5, 0.3]);
        let p = KeepRatio::new(0.5).unwrap();
        let low = select_top_fraction(&s, p, Direction::LowestFirst).unwrap();
        assert_eq!(low.kept(), &[0, 3]);
        assert_eq!(low.method(), Method::TopFraction);
        let high = select_top_fraction(&s, p, Direction::HighestFirst).unwrap();
        assert_eq!(high.kept(), &[1, 2]);
        assert_eq!(high.method(), Method::Inverse);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let s = scores(&[1.0, 1.0, 1.0, 1.0]);
        let p = KeepRatio::new(0.5).unwrap();
        assert_eq!(
            select_top_fraction(&s, p, Direction::LowestFirst)
                .unwrap()
                .kept(),
            &[0, 1]
        );
        assert_eq!(
            select_top_fraction(&s, p, Direction::HighestFirst)
                .unwrap()
                .kept(),
            &[0, 1]
        );
    }

    #[test]
    fn result_rejects_bad_indices() {
        let dir = Direction::LowestFirst;
        assert!(matches!(
            SelectionResult::new(vec![1, 1], 4, Method::External, 0.5, dir),
            Err(Error::NonMonotoneIndices { position: 1 })
        ));
        assert!(matches!(
            SelectionResult::new(vec![1, 4], 4, Method::External, 0.5, dir),
            Err(Error::IndexOverflow { index: 4, n_ref: 4 })
        ));
    }

    #[test]
    fn registry_builds_every_builtin() {
        let reg = StrategyRegistry::with_builtins();
        let names: Vec<_> = reg.names().collect();
        assert_eq!(names, ["top", "inverse", "consensus", "safetynet"]);
        for name in names {
            assert_eq!(
                reg.build(name, &StrategyParams::default()).unwrap().name(),
                name
            );
        }
        assert!(matches!(
            reg.build("kcenter", &StrategyParams::default()),
            Err(Error::UnknownName { .. })
        ));
    }

    #[test]
    fn registry_accepts_custom_strategies() {
        #[derive(Debug)]
        struct FirstRows;
        impl SelectionStrategy for FirstRows {
            fn name(&self) -> &'static str {
                "first"
            }
            fn select(
                &self,
                input: &SelectionInput<'_>,
                keep: KeepRatio,
            ) -> Result<SelectionResult> {
                let n = input.primary()?.len();
                SelectionResult::from_indices((0..keep.keep_count(n)).collect(), n)
            }
        }
        let mut reg = StrategyRegistry::with_builtins();
        reg.register("first", |_| Ok(Box::new(FirstRows)));
        let s = [scores(&[3.0, 2.0, 1.0, 0.0])];
        let out = reg
            .build("first", &StrategyParams::default())
            .unwrap()
            .select(&SelectionInput::scores(&s), KeepRatio::new(0.5).unwrap())
            .unwrap();
        assert_eq!(out.kept(), &[0, 1]);
    }
}
