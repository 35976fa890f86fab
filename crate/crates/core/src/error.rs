use thiserror::Error;

use crate::AgentId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate horizon: tf - t0 = {horizon} s is below {epsilon} s")]
    DegenerateHorizon { horizon: f64, epsilon: f64 },

    #[error("time {t} is outside the trajectory domain [{t0}, {tf}]")]
    OutOfDomain { t: f64, t0: f64, tf: f64 },

    #[error("agent {0} cannot be compared with itself")]
    IdentityComparison(AgentId),

    #[error("no feasible assignment for the neighborhood of agent {anchor}: {rows} agents, {available} usable goals")]
    InfeasibleAssignment {
        anchor: AgentId,
        rows: usize,
        available: usize,
    },

    #[error("ban loop did not reach a fixed point after {rounds} rounds (limit {limit})")]
    NonTermination { rounds: usize, limit: usize },

    #[error("relative speed {speed} is too small to define a contact basis")]
    ZeroRelativeSpeed { speed: f64 },

    #[error("leaders are {separation} m apart, beyond the 4R = {limit} m contact limit")]
    ContactBroken { separation: f64, limit: f64 },

    #[error("costate jump is singular at t = {t}: s . v = {value}")]
    SingularNu { t: f64, value: f64 },

    #[error("no feasible trajectory for agent {agent}: {reason}")]
    NoFeasibleTrajectory { agent: AgentId, reason: String },

    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}
