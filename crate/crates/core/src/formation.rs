//! The desired formation: a set of goal points moving along known laws.

use crate::dynamics::{AgentState, Kinematics};
use crate::error::{Error, Result};
use crate::vec2::Vec2;
use crate::GoalId;

/// Motion law of one goal: a base offset carried by a constant formation
/// velocity plus an optional periodic velocity `amplitude * cos(frequency t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoalMotion {
    pub goal_index: GoalId,
    pub base_offset: Vec2,
    pub formation_velocity: Vec2,
    /// Peak of the periodic velocity term (m/s).
    pub periodic_amplitude: Vec2,
    /// Angular frequency of the periodic term (rad/s).
    pub periodic_frequency: f64,
}

impl GoalMotion {
    pub fn fixed(goal_index: GoalId, position: Vec2) -> Self {
        GoalMotion {
            goal_index,
            base_offset: position,
            formation_velocity: Vec2::ZERO,
            periodic_amplitude: Vec2::ZERO,
            periodic_frequency: 0.0,
        }
    }

    pub fn kinematics(&self, t: f64) -> Kinematics {
        let w = self.periodic_frequency;
        let amp = self.periodic_amplitude;
        let (periodic_pos, periodic_vel, periodic_acc) = if w == 0.0 {
            (amp * t, amp, Vec2::ZERO)
        } else {
            let (s, c) = (w * t).sin_cos();
            (amp * (s / w), amp * c, amp * (-w * s))
        };
        Kinematics {
            position: self.base_offset + self.formation_velocity * t + periodic_pos,
            velocity: self.formation_velocity + periodic_vel,
            control: periodic_acc,
        }
    }

    /// ∫ ‖p̈‖² over `[from, to]` for an agent riding exactly on this goal.
    pub fn tracking_energy(&self, from: f64, to: f64) -> f64 {
        let w = self.periodic_frequency;
        if w == 0.0 {
            return 0.0;
        }
        // ‖amp‖² w² ∫ sin²(w t) dt
        let primitive = |t: f64| t / 2.0 - (2.0 * w * t).sin() / (4.0 * w);
        self.periodic_amplitude.norm_squared() * w * w * (primitive(to) - primitive(from))
    }
}

/// Position and velocity of a goal at time `t`.
pub fn goal_state(motion: &GoalMotion, t: f64) -> AgentState {
    motion.kinematics(t).state()
}

/// Checks that every pair of goals stays strictly more than `min_distance`
/// apart on the sample grid `0, step, 2 step, ..., horizon`.
pub fn validate_goal_spacing(goals: &[GoalMotion], min_distance: f64, horizon: f64, step: f64) -> Result<()> {
    assert!(step > 0.0);
    let steps = (horizon / step).ceil() as usize;
    for k in 0..=steps {
        let t = (k as f64 * step).min(horizon);
        for (n, gi) in goals.iter().enumerate() {
            let pi = gi.kinematics(t).position;
            for gj in &goals[n + 1..] {
                let d = pi.distance(gj.kinematics(t).position);
                if !(d > min_distance) {
                    return Err(Error::Validation(format!(
                        "goals {} and {} are {d} m apart at t = {t}, need more than {min_distance} m",
                        gi.goal_index, gj.goal_index
                    )));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_goal_never_moves() {
        let g = GoalMotion::fixed(1, Vec2::new(2.0, -1.0));
        for t in [0.0, 1.0, 17.5] {
            let s = goal_state(&g, t);
            assert_eq!(s.position, Vec2::new(2.0, -1.0));
            assert_eq!(s.velocity, Vec2::ZERO);
        }
    }

    #[test]
    fn formation_drift() {
        let g = GoalMotion {
            formation_velocity: Vec2::new(0.15, 0.35),
            ..GoalMotion::fixed(1, Vec2::new(1.0, 1.0))
        };
        let s = goal_state(&g, 10.0);
        assert!((s.position - Vec2::new(2.5, 4.5)).norm() < 1e-12);
    }

    #[test]
    fn periodic_velocity_at_time_zero() {
        let g = GoalMotion {
            periodic_amplitude: Vec2::new(0.125, 0.0),
            periodic_frequency: 0.75,
            ..GoalMotion::fixed(1, Vec2::ZERO)
        };
        assert_eq!(goal_state(&g, 0.0).velocity, Vec2::new(0.125, 0.0));
    }

    #[test]
    fn velocity_is_the_derivative_of_position() {
        let g = GoalMotion {
            goal_index: 3,
            base_offset: Vec2::new(0.5, 0.0),
            formation_velocity: Vec2::new(0.15, 0.35),
            periodic_amplitude: Vec2::new(0.125, 0.0),
            periodic_frequency: 0.75,
        };
        let h = 1e-6;
        for t in [0.3, 2.0, 9.1] {
            let fd = (g.kinematics(t + h).position - g.kinematics(t - h).position) / (2.0 * h);
            assert!((fd - g.kinematics(t).velocity).norm() < 1e-8);
            let fd = (g.kinematics(t + h).velocity - g.kinematics(t - h).velocity) / (2.0 * h);
            assert!((fd - g.kinematics(t).control).norm() < 1e-8);
        }
    }

    #[test]
    fn tracking_energy_matches_quadrature() {
        let g = GoalMotion {
            periodic_amplitude: Vec2::new(0.125, 0.05),
            periodic_frequency: 0.75,
            ..GoalMotion::fixed(1, Vec2::ZERO)
        };
        let (a, b) = (1.3, 6.2);
        let n = 20_000;
        let h = (b - a) / n as f64;
        let mid: f64 = (0..n)
            .map(|k| g.kinematics(a + (k as f64 + 0.5) * h).control.norm_squared() * h)
            .sum();
        assert!((g.tracking_energy(a, b) - mid).abs() < 1e-8);
    }

    #[test]
    fn spacing_rejects_close_goals() {
        let goals = [
            GoalMotion::fixed(1, Vec2::ZERO),
            GoalMotion::fixed(2, Vec2::new(0.15, 0.0)),
        ];
        assert!(validate_goal_spacing(&goals, 0.2, 1.0, 0.1).is_err());
        assert!(validate_goal_spacing(&goals, 0.1, 1.0, 0.1).is_ok());
    }
}
