//! Ready-made scenarios: close encounters between a few agents and a ten
//! agent moving formation.

use super::{AgentSpec, ScenarioConfig};
use crate::dynamics::AgentState;
use crate::formation::GoalMotion;
use crate::vec2::Vec2;

const R: f64 = 0.05;

fn encounter(agents: Vec<AgentSpec>, goals: Vec<Vec2>) -> ScenarioConfig {
    let goals = goals
        .into_iter()
        .enumerate()
        .map(|(k, p)| GoalMotion::fixed(k as u32 + 1, p))
        .collect();
    let mut c = ScenarioConfig::new(agents.len(), goals);
    c.radius = R;
    c.agents = agents;
    c.min_time = 0.0;
    c.max_time = 30.0;
    c
}

fn spec(id: u32, position: Vec2, velocity: Vec2) -> AgentSpec {
    AgentSpec {
        id,
        state: AgentState::new(position, velocity),
    }
}

/// One agent at rest flying to a fixed goal.
pub fn single_agent(start: Vec2, goal: Vec2) -> ScenarioConfig {
    encounter(vec![spec(1, start, Vec2::ZERO)], vec![goal])
}

/// Two agents flying at each other along the x axis, `offset` apart
/// laterally. Their momentum makes the crossing assignment the cheap one.
pub fn head_on(offset: f64, speed: f64) -> ScenarioConfig {
    encounter(
        vec![
            spec(1, Vec2::new(-1.0, 0.0), Vec2::new(speed, 0.0)),
            spec(2, Vec2::new(1.0, offset), Vec2::new(-speed, 0.0)),
        ],
        vec![Vec2::new(1.6, 0.0), Vec2::new(-1.6, offset)],
    )
}

/// Two agents whose straight paths cross at the origin at the same time,
/// at angle `angle` between them.
pub fn crossing(angle: f64, speed: f64) -> ScenarioConfig {
    let dir = Vec2::from_angle(angle);
    encounter(
        vec![
            spec(1, Vec2::new(-1.0, 0.0), Vec2::new(speed, 0.0)),
            spec(2, dir * -1.0, dir * speed),
        ],
        vec![Vec2::new(1.6, 0.0), dir * 1.6],
    )
}

/// A fast agent catching up with a slow one on the same line.
pub fn overtaking(offset: f64, fast: f64, slow: f64) -> ScenarioConfig {
    encounter(
        vec![
            spec(1, Vec2::new(-0.5, 0.0), Vec2::new(slow, 0.0)),
            spec(2, Vec2::new(-1.5, offset), Vec2::new(fast, 0.0)),
        ],
        vec![Vec2::new(-0.5 + 10.0 * slow + 0.1, 0.0), Vec2::new(-1.5 + 8.0 * fast, offset)],
    )
}

/// Three agents converging on the origin from evenly spread directions,
/// each heading for the far side.
pub fn squeeze(speed: f64, twist: f64) -> ScenarioConfig {
    let dirs: Vec<Vec2> = (0..3)
        .map(|k| Vec2::from_angle(twist + k as f64 * 2.0 * std::f64::consts::PI / 3.0))
        .collect();
    encounter(
        dirs.iter()
            .enumerate()
            .map(|(k, &d)| spec(k as u32 + 1, d * -1.0, d * speed))
            .collect(),
        dirs.iter().map(|&d| d * 1.6).collect(),
    )
}

/// Twenty engineered close encounters.
pub fn close_encounters() -> Vec<(String, ScenarioConfig)> {
    let mut out = Vec::new();
    for (offset, speed) in [(0.0, 0.3), (0.03, 0.3), (0.07, 0.3), (0.0, 0.5), (0.05, 0.5), (0.09, 0.4)] {
        out.push((format!("head_on offset={offset} speed={speed}"), head_on(offset, speed)));
    }
    for (angle, speed) in [(1.0, 0.3), (1.5707963267948966, 0.3), (2.0, 0.3), (0.8, 0.4), (1.2, 0.5), (2.4, 0.35)] {
        out.push((format!("crossing angle={angle} speed={speed}"), crossing(angle, speed)));
    }
    for (offset, fast, slow) in [(0.0, 0.5, 0.1), (0.04, 0.5, 0.1), (0.0, 0.4, 0.0), (-0.06, 0.6, 0.15)] {
        out.push((format!("overtaking offset={offset} fast={fast} slow={slow}"), overtaking(offset, fast, slow)));
    }
    for (speed, twist) in [(0.3, 0.0), (0.3, 0.4), (0.45, 1.0), (0.25, 2.0)] {
        out.push((format!("squeeze speed={speed} twist={twist}"), squeeze(speed, twist)));
    }
    out
}

/// Ten goals on a line moving as a formation. The outer three on each side
/// also sway along x.
pub fn formation_goals() -> Vec<GoalMotion> {
    (1..=10u32)
        .map(|k| {
            let sway = matches!(k, 1..=3 | 8..=10);
            GoalMotion {
                goal_index: k,
                base_offset: Vec2::new(-2.25 + 0.5 * (k - 1) as f64, 3.0),
                formation_velocity: Vec2::new(0.15, 0.35),
                periodic_amplitude: if sway { Vec2::new(0.125, 0.0) } else { Vec2::ZERO },
                periodic_frequency: if sway { 0.75 } else { 0.0 },
            }
        })
        .collect()
}

/// Ten agents drawn at rest from a box below the formation, T = 10 s,
/// initial deadline 10 s, sensing horizon `horizon`.
pub fn formation(horizon: f64, seed: u64) -> ScenarioConfig {
    let mut c = ScenarioConfig::new(10, formation_goals());
    c.radius = R;
    c.horizon = horizon;
    c.ban_extension = 10.0;
    c.initial_deadline = 10.0;
    c.seed = seed;
    c.spawn_box = Some([Vec2::new(-2.0, -1.0), Vec2::new(2.0, 1.0)]);
    c
}
