//! Decentralized goal assignment.
//!
//! Every agent solves a local binary program over its own neighborhood: each
//! neighbor gets exactly one goal, each goal at most one neighbor, and no
//! neighbor may take a goal it has been banned from. The agent keeps the goal
//! its own row receives. When neighbors end up claiming the same goal, the
//! ones without priority are banned from it for good and get a fresh
//! deadline; the loop in [`resolve_round`] repeats until every claim in every
//! neighborhood is unique.

mod hungarian;
mod protocol;

use std::collections::{BTreeMap, BTreeSet};

pub use protocol::{
    agent_summaries, resolve_round, AgentRecord, AssignmentState, BanEvent, NeighborhoodSnapshot, ProtocolParams,
    RoundReport,
};

use crate::dynamics::{solve_unconstrained_bvp, AgentState};
use crate::error::{Error, Result};
use crate::formation::{goal_state, GoalMotion};
use crate::{AgentId, GoalId};

/// Marks a banned (agent, goal) cell.
pub const INFEASIBLE: f64 = f64::INFINITY;

/// Anything that can report goal states over time. Goals are numbered `1..=M`.
pub trait GoalSource {
    fn goal_count(&self) -> usize;
    fn goal_state(&self, goal: GoalId, t: f64) -> AgentState;
}

impl GoalSource for [GoalMotion] {
    fn goal_count(&self) -> usize {
        self.len()
    }

    fn goal_state(&self, goal: GoalId, t: f64) -> AgentState {
        goal_state(&self[goal as usize - 1], t)
    }
}

impl GoalSource for Vec<GoalMotion> {
    fn goal_count(&self) -> usize {
        self.len()
    }

    fn goal_state(&self, goal: GoalId, t: f64) -> AgentState {
        self.as_slice().goal_state(goal, t)
    }
}

/// Energy cost of every (neighbor, goal) pair as seen by one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    owner: AgentId,
    rows: Vec<AgentId>,
    goals: usize,
    cells: Vec<f64>,
}

impl CostMatrix {
    /// `cells` is row-major; entries must be non-negative or [`INFEASIBLE`].
    pub fn new(owner: AgentId, rows: Vec<AgentId>, goals: usize, cells: Vec<f64>) -> Result<Self> {
        if cells.len() != rows.len() * goals {
            return Err(Error::Invariant(format!(
                "cost matrix has {} cells, expected {} x {}",
                cells.len(),
                rows.len(),
                goals
            )));
        }
        if let Some(bad) = cells.iter().find(|c| !(**c >= 0.0)) {
            return Err(Error::Invariant(format!("negative or NaN cost {bad}")));
        }
        Ok(CostMatrix {
            owner,
            rows,
            goals,
            cells,
        })
    }

    pub fn owner(&self) -> AgentId {
        self.owner
    }

    pub fn rows(&self) -> &[AgentId] {
        &self.rows
    }

    pub fn goal_count(&self) -> usize {
        self.goals
    }

    /// Cost of giving goal `goal` (1-based) to the agent in row `row`.
    pub fn get(&self, row: usize, goal: GoalId) -> f64 {
        self.cells[row * self.goals + goal as usize - 1]
    }

    pub fn is_feasible(&self, row: usize, goal: GoalId) -> bool {
        self.get(row, goal).is_finite()
    }

    pub fn ban(&mut self, row: usize, goal: GoalId) {
        self.cells[row * self.goals + goal as usize - 1] = INFEASIBLE;
    }
}

/// A binary agent × goal matrix, stored as the chosen column of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentMatrix {
    rows: Vec<AgentId>,
    goals: usize,
    choice: Vec<GoalId>,
}

impl AssignmentMatrix {
    pub fn rows(&self) -> &[AgentId] {
        &self.rows
    }

    pub fn get(&self, row: usize, goal: GoalId) -> bool {
        self.choice[row] == goal
    }

    pub fn goal_of_row(&self, row: usize) -> GoalId {
        self.choice[row]
    }

    pub fn goal_of(&self, agent: AgentId) -> Option<GoalId> {
        let row = self.rows.iter().position(|&a| a == agent)?;
        Some(self.choice[row])
    }

    /// `(agent, goal)` pairs in row order.
    pub fn pairs(&self) -> impl Iterator<Item = (AgentId, GoalId)> + '_ {
        self.rows.iter().copied().zip(self.choice.iter().copied())
    }

    pub fn total_cost(&self, costs: &CostMatrix) -> f64 {
        self.choice
            .iter()
            .enumerate()
            .map(|(r, &g)| costs.get(r, g))
            .sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        self.choice
            .iter()
            .map(|&g| (1..=self.goals as GoalId).map(|k| u8::from(k == g)).collect())
            .collect()
    }

    /// Row sums are one, column sums at most one and no banned cell is used.
    pub fn check(&self, costs: &CostMatrix) -> Result<()> {
        let mut used = BTreeSet::new();
        for (r, &g) in self.choice.iter().enumerate() {
            if g == 0 || g as usize > self.goals {
                return Err(Error::Invariant(format!("row {r} has no goal")));
            }
            if !used.insert(g) {
                return Err(Error::Invariant(format!("goal {g} assigned twice")));
            }
            if !costs.is_feasible(r, g) {
                return Err(Error::Invariant(format!(
                    "agent {} assigned to banned goal {g}",
                    self.rows[r]
                )));
            }
        }
        Ok(())
    }
}

/// One row of a cost matrix: a neighbor's state, deadline and bans.
#[derive(Debug, Clone, Copy)]
pub struct CostRow<'a> {
    pub agent: AgentId,
    pub state: AgentState,
    pub deadline: f64,
    pub banned: &'a BTreeSet<GoalId>,
}

/// Unconstrained energy from each row's state at `now` to each goal's state
/// at that row's deadline. Banned cells are [`INFEASIBLE`].
pub fn build_cost_matrix<G: GoalSource + ?Sized>(
    owner: AgentId,
    rows: &[CostRow<'_>],
    goals: &G,
    now: f64,
) -> Result<CostMatrix> {
    let m = goals.goal_count();
    let mut cells = Vec::with_capacity(rows.len() * m);
    for row in rows {
        for goal in 1..=m as GoalId {
            if row.banned.contains(&goal) {
                cells.push(INFEASIBLE);
                continue;
            }
            let target = goals.goal_state(goal, row.deadline);
            let traj = solve_unconstrained_bvp(row.state, now, target, row.deadline)?;
            cells.push(traj.energy_between(now, row.deadline).max(0.0));
        }
    }
    CostMatrix::new(owner, rows.iter().map(|r| r.agent).collect(), m, cells)
}

/// Minimum total cost assignment of every row to a distinct allowed goal.
pub fn solve_local_assignment(costs: &CostMatrix) -> Result<AssignmentMatrix> {
    let (n, m) = (costs.rows.len(), costs.goals);
    let allowed: Vec<bool> = costs.cells.iter().map(|c| c.is_finite()).collect();
    let infeasible = || {
        let available = (0..m).filter(|&c| (0..n).any(|r| allowed[r * m + c])).count();
        Error::InfeasibleAssignment {
            anchor: costs.owner,
            rows: n,
            available,
        }
    };
    if !hungarian::has_perfect_matching(&allowed, n, m) {
        return Err(infeasible());
    }
    let choice = hungarian::solve(&costs.cells, n, m).ok_or_else(infeasible)?;
    let assignment = AssignmentMatrix {
        rows: costs.rows.clone(),
        goals: m,
        choice: choice.into_iter().map(|c| c as GoalId + 1).collect(),
    };
    assignment.check(costs)?;
    Ok(assignment)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrescribedGoal {
    pub agent_id: AgentId,
    pub goal_index: GoalId,
    pub deadline: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BannedSet {
    pub owner: AgentId,
    pub goals: BTreeSet<GoalId>,
}

/// Agents claiming the same goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictSet {
    pub anchor: AgentId,
    pub goal: GoalId,
    pub members: BTreeSet<AgentId>,
}

impl ConflictSet {
    pub fn is_singleton(&self) -> bool {
        self.members.len() == 1
    }
}

/// Groups the prescriptions of one neighborhood by goal, one set per claimed
/// goal, ordered by goal index. The anchor is the lowest member id.
pub fn detect_conflicts(prescribed: &[PrescribedGoal]) -> Vec<ConflictSet> {
    let mut by_goal: BTreeMap<GoalId, BTreeSet<AgentId>> = BTreeMap::new();
    for p in prescribed {
        by_goal.entry(p.goal_index).or_default().insert(p.agent_id);
    }
    by_goal
        .into_iter()
        .map(|(goal, members)| ConflictSet {
            anchor: *members.first().expect("non-empty group"),
            goal,
            members,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec2::Vec2;

    fn matrix(rows: &[&[f64]]) -> CostMatrix {
        let m = rows[0].len();
        let ids = (1..=rows.len() as AgentId).collect();
        CostMatrix::new(1, ids, m, rows.iter().flat_map(|r| r.iter().copied()).collect()).unwrap()
    }

    #[test]
    fn outer_product_instance() {
        let costs = matrix(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0], &[3.0, 6.0, 9.0]]);
        let a = solve_local_assignment(&costs).unwrap();
        assert_eq!(a.pairs().collect::<Vec<_>>(), vec![(1, 3), (2, 2), (3, 1)]);
        assert_eq!(a.total_cost(&costs), 10.0);
    }

    #[test]
    fn banned_cell_changes_the_optimum() {
        let mut costs = matrix(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0], &[3.0, 6.0, 9.0]]);
        costs.ban(0, 3);
        let a = solve_local_assignment(&costs).unwrap();
        assert_eq!(a.pairs().collect::<Vec<_>>(), vec![(1, 2), (2, 3), (3, 1)]);
        assert_eq!(a.total_cost(&costs), 11.0);
    }

    #[test]
    fn single_cell() {
        let costs = matrix(&[&[5.0]]);
        let a = solve_local_assignment(&costs).unwrap();
        assert_eq!(a.goal_of(1), Some(1));
        assert_eq!(a.total_cost(&costs), 5.0);
        assert_eq!(a.to_dense(), vec![vec![1]]);
    }

    #[test]
    fn infeasible_when_bans_exhaust_goals() {
        let mut costs = matrix(&[&[1.0, 2.0], &[2.0, 1.0]]);
        costs.ban(0, 1);
        costs.ban(1, 1);
        assert!(matches!(
            solve_local_assignment(&costs),
            Err(Error::InfeasibleAssignment { rows: 2, available: 1, .. })
        ));
    }

    #[test]
    fn cost_matrix_entries() {
        let goals = vec![
            GoalMotion::fixed(1, Vec2::new(1.0, 0.0)),
            GoalMotion::fixed(2, Vec2::new(0.0, 0.0)),
        ];
        let none = BTreeSet::new();
        let banned: BTreeSet<GoalId> = [1].into();
        let rows = [
            CostRow {
                agent: 1,
                state: AgentState::at_rest(Vec2::ZERO),
                deadline: 1.0,
                banned: &none,
            },
            CostRow {
                agent: 2,
                state: AgentState::at_rest(Vec2::ZERO),
                deadline: 1.0,
                banned: &banned,
            },
        ];
        let costs = build_cost_matrix(1, &rows, &goals, 0.0).unwrap();
        assert!((costs.get(0, 1) - 12.0).abs() < 1e-12);
        assert_eq!(costs.get(0, 2), 0.0);
        assert_eq!(costs.get(1, 1), INFEASIBLE);
        assert_eq!(costs.get(1, 2), 0.0);
    }

    #[test]
    fn cost_matrix_propagates_degenerate_horizon() {
        let goals = vec![GoalMotion::fixed(1, Vec2::new(1.0, 0.0))];
        let none = BTreeSet::new();
        let rows = [CostRow {
            agent: 1,
            state: AgentState::at_rest(Vec2::ZERO),
            deadline: 1.0,
            banned: &none,
        }];
        assert!(matches!(
            build_cost_matrix(1, &rows, &goals, 1.0),
            Err(Error::DegenerateHorizon { .. })
        ));
    }

    fn p(agent: AgentId, goal: GoalId) -> PrescribedGoal {
        PrescribedGoal {
            agent_id: agent,
            goal_index: goal,
            deadline: 10.0,
        }
    }

    #[test]
    fn conflict_detection() {
        let sets = detect_conflicts(&[p(1, 1), p(2, 2), p(3, 3)]);
        assert!(sets.iter().all(ConflictSet::is_singleton));
        assert_eq!(sets.len(), 3);

        let sets = detect_conflicts(&[p(5, 4), p(2, 4)]);
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0].members.len(), 2);
        assert_eq!(sets[0].anchor, 2);

        let sets = detect_conflicts(&[p(1, 1), p(2, 1), p(3, 2)]);
        let mut sizes: Vec<_> = sets.iter().map(|s| s.members.len()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![1, 2]);
    }
}
