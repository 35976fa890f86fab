//! The iterated assign / detect / ban loop run by all agents in lockstep.

use std::collections::{BTreeMap, BTreeSet};

use super::{build_cost_matrix, solve_local_assignment, CostRow, GoalSource, PrescribedGoal};
use crate::dynamics::{solve_unconstrained_bvp, AgentState};
use crate::error::{Error, Result};
use crate::priority::{has_priority, AgentSummary};
use crate::{AgentId, GoalId};

/// What one agent observes of itself at the snapshot time.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentRecord {
    pub state: AgentState,
    /// Ids within the sensing horizon, sorted, including the agent itself.
    pub neighbors: Vec<AgentId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodSnapshot {
    pub now: f64,
    pub agents: BTreeMap<AgentId, AgentRecord>,
}

impl NeighborhoodSnapshot {
    pub fn neighbors(&self, id: AgentId) -> &[AgentId] {
        &self.agents[&id].neighbors
    }
}

/// Deadlines, prescriptions and bans of every agent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssignmentState {
    pub deadlines: BTreeMap<AgentId, f64>,
    pub prescriptions: BTreeMap<AgentId, GoalId>,
    pub bans: BTreeMap<AgentId, BTreeSet<GoalId>>,
}

impl AssignmentState {
    /// Every agent starts with the same deadline, no goal and no bans.
    pub fn new(agents: impl IntoIterator<Item = AgentId>, initial_deadline: f64) -> Self {
        let deadlines = agents.into_iter().map(|a| (a, initial_deadline)).collect();
        AssignmentState {
            deadlines,
            ..Default::default()
        }
    }

    pub fn prescribed(&self, agent: AgentId) -> Option<PrescribedGoal> {
        Some(PrescribedGoal {
            agent_id: agent,
            goal_index: *self.prescriptions.get(&agent)?,
            deadline: self.deadlines[&agent],
        })
    }

    pub fn banned(&self, agent: AgentId) -> &BTreeSet<GoalId> {
        static EMPTY: BTreeSet<GoalId> = BTreeSet::new();
        self.bans.get(&agent).unwrap_or(&EMPTY)
    }

    pub fn total_bans(&self) -> usize {
        self.bans.values().map(BTreeSet::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Time granted to reach a new goal after a ban (T).
    pub ban_extension: f64,
    /// Cost horizons are never shorter than this, so agents at or past their
    /// deadline still produce finite costs.
    pub min_cost_horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BanEvent {
    pub agent: AgentId,
    pub goal: GoalId,
    /// The competing agent with priority over `agent`.
    pub winner: AgentId,
    pub round: usize,
    pub new_deadline: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoundReport {
    /// Number of ban rounds, or one if the first round was already conflict free.
    pub rounds: usize,
    /// Most ban rounds spent on any single goal.
    pub goal_rounds: usize,
    pub bans: Vec<BanEvent>,
    /// Local binary programs solved.
    pub solves: usize,
    /// Agents whose goal or deadline changed.
    pub changed: BTreeSet<AgentId>,
}

fn effective_deadline(deadline: f64, now: f64, params: &ProtocolParams) -> f64 {
    deadline.max(now + params.min_cost_horizon)
}

/// The goal agent `id` picks for itself from its local program.
fn local_choice<G: GoalSource + ?Sized>(
    id: AgentId,
    snapshot: &NeighborhoodSnapshot,
    goals: &G,
    state: &AssignmentState,
    params: &ProtocolParams,
) -> Result<GoalId> {
    let now = snapshot.now;
    let rows: Vec<CostRow<'_>> = snapshot
        .neighbors(id)
        .iter()
        .map(|&n| CostRow {
            agent: n,
            state: snapshot.agents[&n].state,
            deadline: effective_deadline(state.deadlines[&n], now, params),
            banned: state.banned(n),
        })
        .collect();
    let costs = build_cost_matrix(id, &rows, goals, now)?;
    let assignment = solve_local_assignment(&costs)?;
    Ok(assignment.goal_of(id).expect("owner is a row of its own program"))
}

/// Priority summaries of every agent in the snapshot. The energy is the
/// unconstrained energy-to-go toward the current prescription (zero without
/// one).
pub fn agent_summaries<G: GoalSource + ?Sized>(
    snapshot: &NeighborhoodSnapshot,
    goals: &G,
    state: &AssignmentState,
    params: &ProtocolParams,
) -> Result<BTreeMap<AgentId, AgentSummary>> {
    let now = snapshot.now;
    snapshot
        .agents
        .iter()
        .map(|(&id, rec)| {
            let energy = match state.prescriptions.get(&id) {
                Some(&goal) => {
                    let tf = effective_deadline(state.deadlines[&id], now, params);
                    let target = goals.goal_state(goal, tf);
                    solve_unconstrained_bvp(rec.state, now, target, tf)?.energy_between(now, tf)
                }
                None => 0.0,
            };
            Ok((id, AgentSummary::new(id, rec.neighbors.len(), energy.max(0.0))))
        })
        .collect()
}

/// Runs assignment rounds until no two neighbors claim the same goal.
///
/// Agents in `resolvers` (plus any agent without a goal) solve their local
/// program in the first round; afterwards only agents that were just banned
/// re-solve. Priorities are frozen after the first round's solves. A banned
/// agent gets the deadline `now + ban_extension`.
pub fn resolve_round<G: GoalSource + ?Sized>(
    snapshot: &NeighborhoodSnapshot,
    goals: &G,
    state: &AssignmentState,
    resolvers: &BTreeSet<AgentId>,
    params: &ProtocolParams,
) -> Result<(AssignmentState, RoundReport)> {
    let now = snapshot.now;
    let mut next = state.clone();
    let mut report = RoundReport::default();
    // Every ban round on a goal permanently removes one claimant and leaves
    // the winner, so no goal sees more than N - 1 of them.
    let limit = snapshot.agents.len().saturating_sub(1).max(1);
    let total_limit = snapshot.agents.len() * goals.goal_count();
    let mut per_goal: BTreeMap<GoalId, usize> = BTreeMap::new();

    let mut to_solve: BTreeSet<AgentId> = snapshot
        .agents
        .keys()
        .copied()
        .filter(|id| resolvers.contains(id) || !next.prescriptions.contains_key(id))
        .collect();
    let mut ranking: Option<BTreeMap<AgentId, AgentSummary>> = None;
    let mut ban_rounds = 0;

    loop {
        // Every solver works from the same start-of-round state.
        let round_state = next.clone();
        for &id in &to_solve {
            let goal = local_choice(id, snapshot, goals, &round_state, params)?;
            report.solves += 1;
            if next.prescriptions.insert(id, goal) != Some(goal) {
                report.changed.insert(id);
            }
        }
        let ranks = match &ranking {
            Some(r) => r,
            None => ranking.insert(agent_summaries(snapshot, goals, &next, params)?),
        };

        // Agent k loses its goal if a neighbor claiming it has priority.
        let mut losers: Vec<(AgentId, GoalId, AgentId)> = Vec::new();
        for (&k, rec) in &snapshot.agents {
            let goal = next.prescriptions[&k];
            let winner = rec
                .neighbors
                .iter()
                .copied()
                .filter(|&j| j != k && next.prescriptions.get(&j) == Some(&goal))
                .filter(|&j| has_priority(&ranks[&j], &ranks[&k]).unwrap_or(false))
                .reduce(|best, j| {
                    if has_priority(&ranks[&j], &ranks[&best]).unwrap_or(false) {
                        j
                    } else {
                        best
                    }
                });
            if let Some(w) = winner {
                losers.push((k, goal, w));
            }
        }
        if losers.is_empty() {
            break;
        }
        ban_rounds += 1;
        let contested: BTreeSet<GoalId> = losers.iter().map(|&(_, g, _)| g).collect();
        for g in contested {
            let n = per_goal.entry(g).or_default();
            *n += 1;
            if *n > limit {
                return Err(Error::NonTermination { rounds: *n, limit });
            }
        }
        if ban_rounds > total_limit {
            return Err(Error::NonTermination {
                rounds: ban_rounds,
                limit: total_limit,
            });
        }
        to_solve.clear();
        for (agent, goal, winner) in losers {
            next.bans.entry(agent).or_default().insert(goal);
            let new_deadline = now + params.ban_extension;
            next.deadlines.insert(agent, new_deadline);
            report.changed.insert(agent);
            report.bans.push(BanEvent {
                agent,
                goal,
                winner,
                round: ban_rounds,
                new_deadline,
            });
            to_solve.insert(agent);
        }
    }
    report.rounds = ban_rounds.max(1);
    report.goal_rounds = per_goal.values().copied().max().unwrap_or(0);
    Ok((next, report))
}
