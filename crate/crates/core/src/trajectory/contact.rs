//! The contact arc with constant relative speed: the separation to the
//! leader keeps its length and rotates at a constant rate.

use std::sync::Arc;

use super::{ContactBasis, Motion, PiecewiseTrajectory};
use crate::dynamics::{AgentState, Kinematics};
use crate::error::{Error, Result};
use crate::vec2::Vec2;
use crate::AgentId;

/// Follower law on `[t1, t2]`: `p_i = p_j − s` where
/// `s = d (cos φ, sin φ)` and `φ = entry_angle + σ (a/d)(t − t1)`.
#[derive(Debug, Clone)]
pub struct ConstrainedArc {
    pub leader_id: AgentId,
    pub leader: Arc<PiecewiseTrajectory>,
    pub t1: f64,
    pub t2: f64,
    /// Orientation of the separation `p_j − p_i` at `t1`.
    pub entry_angle: f64,
    /// Relative speed `‖ṡ‖`, constant along the arc.
    pub relative_speed: f64,
    /// +1 for counter-clockwise rotation of the separation, −1 otherwise.
    pub rotation_sign: f64,
    /// Contact distance, normally `2R`.
    pub distance: f64,
}

impl ConstrainedArc {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        leader_id: AgentId,
        leader: Arc<PiecewiseTrajectory>,
        t1: f64,
        t2: f64,
        entry_angle: f64,
        relative_speed: f64,
        rotation_sign: f64,
        distance: f64,
    ) -> Result<Self> {
        if !(t1 < t2) {
            return Err(Error::Validation(format!("arc needs t1 < t2, got [{t1}, {t2}]")));
        }
        if !(relative_speed >= 0.0) || !relative_speed.is_finite() {
            return Err(Error::Validation(format!("relative speed {relative_speed} must be >= 0")));
        }
        if rotation_sign != 1.0 && rotation_sign != -1.0 {
            return Err(Error::Validation(format!("rotation sign {rotation_sign} must be +1 or -1")));
        }
        if !(distance > 0.0) {
            return Err(Error::Validation(format!("contact distance {distance} must be positive")));
        }
        Ok(ConstrainedArc {
            leader_id,
            leader,
            t1,
            t2,
            entry_angle,
            relative_speed,
            rotation_sign,
            distance,
        })
    }

    pub fn angular_rate(&self) -> f64 {
        self.relative_speed / self.distance
    }

    pub fn angle_at(&self, t: f64) -> f64 {
        self.entry_angle + self.rotation_sign * self.angular_rate() * (t - self.t1)
    }

    /// `(s, ṡ, s̈)` at `t`.
    pub fn separation(&self, t: f64) -> (Vec2, Vec2, Vec2) {
        let w = self.angular_rate();
        let radial = Vec2::from_angle(self.angle_at(t));
        let s = radial * self.distance;
        let s_dot = radial.perp() * (self.rotation_sign * self.relative_speed);
        let s_ddot = radial * (-self.distance * w * w);
        (s, s_dot, s_ddot)
    }

    /// Contact basis along the arc. With zero relative speed `q_hat` is
    /// taken as the direction the separation would rotate toward.
    pub fn basis(&self, t: f64) -> ContactBasis {
        let p_hat = Vec2::from_angle(self.angle_at(t));
        ContactBasis {
            p_hat,
            q_hat: p_hat.perp() * self.rotation_sign,
        }
    }

    pub fn sample(&self, t: f64) -> Kinematics {
        follower_kinematics(self, self.leader.sample(t), t)
    }

    pub fn entry_state(&self) -> AgentState {
        self.sample(self.t1).state()
    }

    pub fn exit_state(&self) -> AgentState {
        self.sample(self.t2).state()
    }
}

fn follower_kinematics(arc: &ConstrainedArc, leader: Kinematics, t: f64) -> Kinematics {
    let (s, s_dot, s_ddot) = arc.separation(t);
    Kinematics {
        position: leader.position - s,
        velocity: leader.velocity - s_dot,
        control: leader.control - s_ddot,
    }
}

/// Follower state on the arc at `t`, with the leader given explicitly.
pub fn constrained_arc_eval<L: Motion + ?Sized>(arc: &ConstrainedArc, leader: &L, t: f64) -> Result<Kinematics> {
    if t < arc.t1 || t > arc.t2 {
        return Err(Error::OutOfDomain {
            t,
            t0: arc.t1,
            tf: arc.t2,
        });
    }
    Ok(follower_kinematics(arc, leader.sample(t), t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formation::GoalMotion;
    use crate::trajectory::tangency;
    use std::f64::consts::PI;

    const R: f64 = 0.05;

    fn static_leader() -> Arc<PiecewiseTrajectory> {
        Arc::new(PiecewiseTrajectory::hold(GoalMotion::fixed(1, Vec2::ZERO), 0.0))
    }

    fn arc(a: f64, t2: f64) -> ConstrainedArc {
        ConstrainedArc::new(7, static_leader(), 0.0, t2, 0.3, a, 1.0, 2.0 * R).unwrap()
    }

    #[test]
    fn static_leader_gives_a_circle() {
        let a = 0.4;
        let arc = arc(a, 1.0);
        let w = a / (2.0 * R);
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            let k = arc.sample(t);
            let expected = -Vec2::from_angle(0.3 + w * t) * (2.0 * R);
            assert!(k.position.distance(expected) < 1e-12);
            assert!((k.velocity.norm() - a).abs() < 1e-12);
            assert!((k.control.norm() - a * a / (2.0 * R)).abs() < 1e-12);
            let (s, sd, sdd) = arc.separation(t);
            assert!(tangency(s, sd, sdd, R).iter().all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn full_period_returns_to_entry() {
        let a = 0.25;
        let period = 2.0 * PI * 2.0 * R / a;
        let arc = arc(a, period);
        assert!(arc.entry_state().position.distance(arc.exit_state().position) < 1e-12);
        assert!(arc.entry_state().velocity.distance(arc.exit_state().velocity) < 1e-12);
    }

    #[test]
    fn zero_relative_speed_copies_leader_control() {
        let mut goal = GoalMotion::fixed(1, Vec2::ZERO);
        goal.periodic_amplitude = Vec2::new(0.125, 0.0);
        goal.periodic_frequency = 0.75;
        let leader = Arc::new(PiecewiseTrajectory::hold(goal, 0.0));
        let arc = ConstrainedArc::new(1, leader.clone(), 0.0, 2.0, 1.0, 0.0, -1.0, 2.0 * R).unwrap();
        for t in [0.0, 0.5, 1.7] {
            assert_eq!(arc.sample(t).control, leader.sample(t).control);
        }
    }

    #[test]
    fn eval_checks_domain() {
        let arc = arc(0.3, 1.0);
        assert!(matches!(
            constrained_arc_eval(&arc, &*arc.leader, 1.5),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(constrained_arc_eval(&arc, &*arc.leader, 0.5).is_ok());
    }

    #[test]
    fn invalid_arcs_are_rejected() {
        assert!(ConstrainedArc::new(1, static_leader(), 1.0, 1.0, 0.0, 1.0, 1.0, 0.1).is_err());
        assert!(ConstrainedArc::new(1, static_leader(), 0.0, 1.0, 0.0, -1.0, 1.0, 0.1).is_err());
        assert!(ConstrainedArc::new(1, static_leader(), 0.0, 1.0, 0.0, 1.0, 0.5, 0.1).is_err());
    }
}
