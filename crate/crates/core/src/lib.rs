//! Decentralized goal assignment and minimum-energy trajectory generation
//! for swarms of double-integrator agents.

pub mod assignment;
pub mod dynamics;
pub mod error;
pub mod formation;
pub mod numeric;
pub mod priority;
pub mod simulator;
pub mod trajectory;
pub mod vec2;

pub use dynamics::{AgentState, Bounds, Kinematics, PolyTrajectory};
pub use error::{Error, Result};
pub use formation::GoalMotion;
pub use vec2::Vec2;

/// Agent index (positive, unique within a run).
pub type AgentId = u32;
/// Goal index, numbered from 1.
pub type GoalId = u32;
