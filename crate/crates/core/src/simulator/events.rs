//! Run records: the event log, per-tick trajectory rows and aggregate
//! metrics. Every record lists its fields in a fixed order.

use crate::dynamics::BoundKind;
use crate::vec2::Vec2;
use crate::{AgentId, GoalId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplanReason {
    /// First plan of the agent.
    Initial,
    /// New goal or new deadline.
    Reassigned,
    /// The current plan conflicts with a higher-priority plan.
    Conflict,
}

impl ReplanReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReplanReason::Initial => "initial",
            ReplanReason::Reassigned => "reassigned",
            ReplanReason::Conflict => "conflict",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Assignment {
        time: f64,
        agent: AgentId,
        goal: GoalId,
        deadline: f64,
    },
    Ban {
        time: f64,
        agent: AgentId,
        goal: GoalId,
        winner: AgentId,
        round: usize,
        new_deadline: f64,
    },
    Replan {
        time: f64,
        agent: AgentId,
        reason: ReplanReason,
        arcs: usize,
        energy: f64,
        arrival: f64,
    },
    Junction {
        time: f64,
        agent: AgentId,
        leader: AgentId,
        t1: f64,
        t2: f64,
        entry_angle: f64,
        relative_speed: f64,
        rotation_sign: f64,
    },
    BoundViolation {
        time: f64,
        agent: AgentId,
        kind: BoundKind,
        at: f64,
        magnitude: f64,
    },
    Arrival {
        time: f64,
        agent: AgentId,
        goal: GoalId,
    },
    Halt {
        time: f64,
        reason: String,
    },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::Assignment { .. } => "assignment",
            Event::Ban { .. } => "ban",
            Event::Replan { .. } => "replan",
            Event::Junction { .. } => "junction",
            Event::BoundViolation { .. } => "bound_violation",
            Event::Arrival { .. } => "arrival",
            Event::Halt { .. } => "halt",
        }
    }

    pub fn time(&self) -> f64 {
        match self {
            Event::Assignment { time, .. }
            | Event::Ban { time, .. }
            | Event::Replan { time, .. }
            | Event::Junction { time, .. }
            | Event::BoundViolation { time, .. }
            | Event::Arrival { time, .. }
            | Event::Halt { time, .. } => *time,
        }
    }

    /// `(key, value)` pairs after the kind, in output order.
    pub fn fields(&self) -> Vec<(&'static str, String)> {
        let mut f = vec![("time", self.time().to_string())];
        match self {
            Event::Assignment {
                agent, goal, deadline, ..
            } => {
                f.push(("agent", agent.to_string()));
                f.push(("goal", goal.to_string()));
                f.push(("deadline", deadline.to_string()));
            }
            Event::Ban {
                agent,
                goal,
                winner,
                round,
                new_deadline,
                ..
            } => {
                f.push(("agent", agent.to_string()));
                f.push(("goal", goal.to_string()));
                f.push(("winner", winner.to_string()));
                f.push(("round", round.to_string()));
                f.push(("new_deadline", new_deadline.to_string()));
            }
            Event::Replan {
                agent,
                reason,
                arcs,
                energy,
                arrival,
                ..
            } => {
                f.push(("agent", agent.to_string()));
                f.push(("reason", reason.as_str().to_string()));
                f.push(("arcs", arcs.to_string()));
                f.push(("energy", energy.to_string()));
                f.push(("arrival", arrival.to_string()));
            }
            Event::Junction {
                agent,
                leader,
                t1,
                t2,
                entry_angle,
                relative_speed,
                rotation_sign,
                ..
            } => {
                f.push(("agent", agent.to_string()));
                f.push(("leader", leader.to_string()));
                f.push(("t1", t1.to_string()));
                f.push(("t2", t2.to_string()));
                f.push(("entry_angle", entry_angle.to_string()));
                f.push(("relative_speed", relative_speed.to_string()));
                f.push(("rotation_sign", rotation_sign.to_string()));
            }
            Event::BoundViolation {
                agent,
                kind,
                at,
                magnitude,
                ..
            } => {
                f.push(("agent", agent.to_string()));
                f.push(("bound", kind.as_str().to_string()));
                f.push(("at", at.to_string()));
                f.push(("magnitude", magnitude.to_string()));
            }
            Event::Arrival { agent, goal, .. } => {
                f.push(("agent", agent.to_string()));
                f.push(("goal", goal.to_string()));
            }
            Event::Halt { reason, .. } => f.push(("reason", reason.clone())),
        }
        f
    }
}

/// One agent at one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub agent_id: AgentId,
    pub position: Vec2,
    pub velocity: Vec2,
    pub control: Vec2,
    /// Prescribed goal, 0 when the agent has none.
    pub goal: GoalId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// Smallest distance between any two agents over the run (m).
    pub min_separation: f64,
    /// ∫ ‖u‖² summed over agents while in transit (J/kg).
    pub total_energy: f64,
    /// ∫ ‖u‖² spent riding on goals after arrival.
    pub formation_energy: f64,
    /// Last arrival time.
    pub t_f: f64,
    pub total_bans: usize,
    /// Ticks in which some prescription or deadline changed.
    pub assignment_events: usize,
    /// Most ban rounds needed in a single tick.
    pub max_rounds: usize,
    pub replans: usize,
    pub end_time: f64,
    /// Every agent reached its goal before the run ended.
    pub completed: bool,
    /// Largest distance between an agent and its goal at arrival.
    pub max_arrival_error: f64,
    /// Every arrival is within `initial deadline + M T`.
    pub arrival_bound_holds: bool,
}

impl Default for Metrics {
    fn default() -> Self {
        Metrics {
            min_separation: f64::INFINITY,
            total_energy: 0.0,
            formation_energy: 0.0,
            t_f: 0.0,
            total_bans: 0,
            assignment_events: 0,
            max_rounds: 0,
            replans: 0,
            end_time: 0.0,
            completed: false,
            max_arrival_error: 0.0,
            arrival_bound_holds: true,
        }
    }
}

impl Metrics {
    pub fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("min_separation", self.min_separation.to_string()),
            ("total_energy", self.total_energy.to_string()),
            ("formation_energy", self.formation_energy.to_string()),
            ("t_f", self.t_f.to_string()),
            ("total_bans", self.total_bans.to_string()),
            ("assignment_events", self.assignment_events.to_string()),
            ("max_rounds", self.max_rounds.to_string()),
            ("replans", self.replans.to_string()),
            ("end_time", self.end_time.to_string()),
            ("completed", self.completed.to_string()),
            ("max_arrival_error", self.max_arrival_error.to_string()),
            ("arrival_bound_holds", self.arrival_bound_holds.to_string()),
        ]
    }
}
