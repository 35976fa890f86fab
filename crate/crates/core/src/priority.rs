//! Decentralized priority ordering between agents.
//!
//! Two agents are compared on quantities either of them can observe: the
//! size of their neighborhoods, their remaining energy to their goal and,
//! as a last resort, their index. The composite indicator is antisymmetric
//! for any distinct pair and agrees with a lexicographic comparison of
//! `(neighborhood_size, energy_to_go, agent_id)`, so it totally orders any
//! set of agents.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::AgentId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentSummary {
    pub agent_id: AgentId,
    pub neighborhood_size: usize,
    /// Unconstrained energy-to-go toward the agent's prescribed goal (J/kg).
    pub energy_to_go: f64,
}

impl AgentSummary {
    pub fn new(agent_id: AgentId, neighborhood_size: usize, energy_to_go: f64) -> Self {
        AgentSummary {
            agent_id,
            neighborhood_size,
            energy_to_go,
        }
    }
}

fn indicator(condition: bool) -> u8 {
    u8::from(condition)
}

/// Returns `true` when agent `i` has priority over agent `j`.
pub fn has_priority(i: &AgentSummary, j: &AgentSummary) -> Result<bool> {
    if i.agent_id == j.agent_id {
        return Err(Error::IdentityComparison(i.agent_id));
    }
    let n_ij = indicator(i.neighborhood_size > j.neighborhood_size);
    let n_ji = indicator(j.neighborhood_size > i.neighborhood_size);
    let e_ij = indicator(i.energy_to_go > j.energy_to_go);
    let e_ji = indicator(j.energy_to_go > i.energy_to_go);
    let a_ij = indicator(i.agent_id > j.agent_id);

    let composite = n_ij + (1 - n_ij) * (1 - n_ji) * (e_ij + (1 - e_ij) * (1 - e_ji) * a_ij);
    Ok(composite == 1)
}

/// The ordering implied by [`has_priority`]: `Greater` means `i` wins.
pub fn compare(i: &AgentSummary, j: &AgentSummary) -> Ordering {
    i.neighborhood_size
        .cmp(&j.neighborhood_size)
        .then_with(|| {
            i.energy_to_go
                .partial_cmp(&j.energy_to_go)
                .unwrap_or(Ordering::Equal)
        })
        .then_with(|| i.agent_id.cmp(&j.agent_id))
}

/// The id of the candidate that has priority over every other candidate.
///
/// Panics if `candidates` is empty.
pub fn priority_winner(candidates: &[AgentSummary]) -> AgentId {
    candidates
        .iter()
        .copied()
        .reduce(|best, c| {
            if has_priority(&c, &best).unwrap_or(false) {
                c
            } else {
                best
            }
        })
        .expect("priority_winner needs at least one candidate")
        .agent_id
}

/// Sorts summaries from highest to lowest priority.
pub fn sort_by_priority(summaries: &mut [AgentSummary]) {
    summaries.sort_by(|a, b| compare(b, a));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighborhood_size_dominates() {
        let i = AgentSummary::new(1, 3, 1.0);
        let j = AgentSummary::new(9, 2, 9.0);
        assert!(has_priority(&i, &j).unwrap());
        assert!(!has_priority(&j, &i).unwrap());
    }

    #[test]
    fn energy_breaks_neighborhood_ties() {
        let i = AgentSummary::new(1, 2, 5.0);
        let j = AgentSummary::new(9, 2, 3.0);
        assert!(has_priority(&i, &j).unwrap());
    }

    #[test]
    fn index_breaks_full_ties() {
        let i = AgentSummary::new(7, 2, 4.0);
        let j = AgentSummary::new(4, 2, 4.0);
        assert!(has_priority(&i, &j).unwrap());
        assert!(!has_priority(&j, &i).unwrap());
    }

    #[test]
    fn self_comparison_is_an_error() {
        let i = AgentSummary::new(3, 1, 0.0);
        assert_eq!(has_priority(&i, &i), Err(Error::IdentityComparison(3)));
    }

    #[test]
    fn winner_of_singleton_and_triple() {
        let a = AgentSummary::new(1, 3, 1.0);
        assert_eq!(priority_winner(&[a]), 1);
        let b = AgentSummary::new(9, 2, 9.0);
        let c = AgentSummary::new(4, 2, 4.0);
        assert_eq!(priority_winner(&[b, a, c]), 1);
    }

    #[test]
    fn winner_with_distinct_neighborhoods() {
        let summaries: Vec<_> = (1..=10)
            .map(|id| AgentSummary::new(id, ((id * 7) % 10) as usize, 1.0))
            .collect();
        let expected = summaries
            .iter()
            .max_by_key(|s| s.neighborhood_size)
            .unwrap()
            .agent_id;
        assert_eq!(priority_winner(&summaries), expected);
    }
}
