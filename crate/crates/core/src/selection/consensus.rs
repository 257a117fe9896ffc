use super::{KeepRatio, Method, SelectionInput, SelectionResult, SelectionStrategy};
use crate::scoring::{ascending_order, consensus_cost, rank_normalize, RankVector};
use crate::selection::Direction;
use crate::Result;

/// Keeps the rows whose worst rank across all criteria is smallest.
pub fn select_consensus(ranks: &[RankVector], keep: KeepRatio) -> Result<SelectionResult> {
    let cost = consensus_cost(ranks)?;
    let n = cost.len();
    let mut kept = ascending_order(cost.scores());
    kept.truncate(keep.keep_count(n));
    kept.sort_unstable();
    SelectionResult::new(
        kept,
        n,
        Method::Consensus,
        keep.get(),
        Direction::LowestFirst,
    )
}

/// Rank-normalizes every supplied score vector, then applies
/// [`select_consensus`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Consensus;

impl SelectionStrategy for Consensus {
    fn name(&self) -> &'static str {
        "consensus"
    }

    fn select(&self, input: &SelectionInput<'_>, keep: KeepRatio) -> Result<SelectionResult> {
        input.primary()?;
        let ranks = input
            .scores
            .iter()
            .map(rank_normalize)
            .collect::<Result<Vec<_>>>()?;
        select_consensus(&ranks, keep)
    }
}
