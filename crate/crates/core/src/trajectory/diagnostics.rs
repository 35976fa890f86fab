//! Optimality residuals at the junctions of contact arcs.
//!
//! On a free arc the costates follow from the control: `λᵛ = −u` and
//! `λᵖ = u̇`. On a contact arc with constant relative speed they follow from
//! the contact-basis projections, with the multiplier `μ` fixed by the
//! entry junction and carried along by `a μ̇ = −ü_j·q̂`. None of these
//! conditions is imposed by the planner; they are reported here.

use super::{ConstrainedArc, Motion, PiecewiseTrajectory, Segment};
use crate::dynamics::Kinematics;
use crate::error::{Error, Result};
use crate::numeric::gauss_legendre;
use crate::vec2::Vec2;
use crate::AgentId;

/// `|s·v|` below this makes the entry multiplier `ν` singular.
pub const NU_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpDiagnostics {
    pub leader_id: AgentId,
    pub t1: f64,
    pub t2: f64,
    /// Largest of the position and velocity jumps at entry.
    pub entry_state_residual: f64,
    /// Largest of the position and velocity jumps at exit.
    pub exit_state_residual: f64,
    /// Constant multiplier of the tangency conditions at entry.
    pub nu: [f64; 2],
    /// Contact multiplier implied by the entry state.
    pub mu_entry: f64,
    /// Mismatch of the tangential costate equation at entry.
    pub tangential_residual: f64,
    /// Position costate jump residual at entry.
    pub costate_residual_t1: f64,
    pub hamiltonian_mismatch_t1: f64,
    /// Costate continuity residual at exit.
    pub costate_residual_t2: f64,
    pub hamiltonian_mismatch_t2: f64,
    /// Largest residuals of the two arc differential equations.
    pub ode_residual: [f64; 2],
}

#[derive(Debug, Clone, Copy)]
struct Costates {
    p: Vec2,
    v: Vec2,
}

fn hamiltonian(k: &Kinematics, lambda: &Costates) -> f64 {
    0.5 * k.control.norm_squared() + lambda.p.dot(k.velocity) + lambda.v.dot(k.control)
}

const FD_STEP: f64 = 1e-4;

fn control_rate<M: Motion + ?Sized>(m: &M, t: f64) -> Vec2 {
    (m.sample(t + FD_STEP).control - m.sample(t - FD_STEP).control) / (2.0 * FD_STEP)
}

fn control_accel<M: Motion + ?Sized>(m: &M, t: f64) -> Vec2 {
    let h = 1e-3;
    (m.sample(t + h).control - m.sample(t).control * 2.0 + m.sample(t - h).control) / (h * h)
}

/// Kinematics and free-arc costates of a neighboring segment at `t`. A
/// missing neighbor coasts.
fn free_side(seg: Option<&Segment>, boundary: Kinematics, t: f64) -> (Kinematics, Costates) {
    match seg {
        Some(Segment::Free(p)) => {
            let k = p.sample(t);
            (k, Costates { p: p.control_rate(), v: -k.control })
        }
        Some(other) => {
            let k = other.sample(t);
            (k, Costates { p: control_rate(other, t), v: -k.control })
        }
        None => {
            let k = Kinematics {
                control: Vec2::ZERO,
                ..boundary
            };
            (k, Costates { p: Vec2::ZERO, v: Vec2::ZERO })
        }
    }
}

/// Costates on the arc from the contact-basis projections.
fn arc_costates(arc: &ConstrainedArc, t: f64, mu: f64) -> Costates {
    let d = arc.distance;
    let a = arc.relative_speed;
    let basis = arc.basis(t);
    let (s, _, _) = arc.separation(t);
    let follower = arc.sample(t);
    let leader = &*arc.leader;
    let u_dot_j = control_rate(leader, t);
    let mu_dot = mu_rate(arc, t);
    Costates {
        p: basis.p_hat * (d * mu_dot + u_dot_j.dot(basis.p_hat))
            + basis.q_hat * (u_dot_j.dot(basis.q_hat) + a * a * a / (d * d)),
        v: -follower.control - s * mu,
    }
}

fn mu_rate(arc: &ConstrainedArc, t: f64) -> f64 {
    if arc.relative_speed < super::MIN_RELATIVE_SPEED {
        return 0.0;
    }
    -control_accel(&*arc.leader, t).dot(arc.basis(t).q_hat) / arc.relative_speed
}

fn state_jump(a: &Kinematics, b: &Kinematics) -> f64 {
    a.position.distance(b.position).max(a.velocity.distance(b.velocity))
}

/// Residuals at every contact arc of `traj`.
pub fn jump_diagnostics(traj: &PiecewiseTrajectory) -> Result<Vec<JumpDiagnostics>> {
    let segments = traj.segments();
    let mut out = Vec::new();
    for (k, seg) in segments.iter().enumerate() {
        let Segment::Contact(arc) = seg else { continue };
        let before = k.checked_sub(1).map(|i| &segments[i]);
        let after = segments.get(k + 1);
        let (t1, t2) = (arc.t1, arc.t2);
        let d = arc.distance;
        let a = arc.relative_speed;

        // Entry.
        let on_entry = arc.sample(t1);
        let (pre, lambda_pre) = free_side(before, on_entry, t1);
        let leader_entry = arc.leader.sample(t1);
        let s = leader_entry.position - pre.position;
        let s_dot_v = s.dot(pre.velocity);
        if s_dot_v.abs() < NU_EPSILON {
            return Err(Error::SingularNu { t: t1, value: s_dot_v });
        }
        let nu1 = -pre.control.norm_squared() / (2.0 * s_dot_v);
        let (s_arc, _, _) = arc.separation(t1);
        let basis = arc.basis(t1);
        // The velocity costate is continuous at entry, which fixes μ.
        let implied = -lambda_pre.v - on_entry.control;
        let mu_entry = implied.dot(s_arc) / (d * d);
        let tangential_residual = implied.dot(basis.q_hat);
        let lambda_entry = arc_costates(arc, t1, mu_entry);
        let costate_residual_t1 = (lambda_pre.p - lambda_entry.p - s_arc * (2.0 * nu1)).norm();
        let dn_dt = -2.0 * s_arc.dot(leader_entry.velocity);
        let hamiltonian_mismatch_t1 =
            hamiltonian(&pre, &lambda_pre) - hamiltonian(&on_entry, &lambda_entry) - nu1 * dn_dt;

        // μ along the arc and the arc equations.
        let pieces = ((t2 - t1) / 0.05).ceil().max(1.0) as usize;
        let mu_at = |t: f64| mu_entry + gauss_legendre(|x| mu_rate(arc, x), t1, t, pieces);
        let mut ode_residual = [0.0f64; 2];
        for i in 0..=32 {
            let t = t1 + (t2 - t1) * i as f64 / 32.0;
            let basis = arc.basis(t);
            let u_ddot_j = control_accel(&*arc.leader, t);
            let mu = mu_at(t);
            let mu_dot = mu_rate(arc, t);
            let eq1 = a * a * mu / d + a.powi(4) / d.powi(3) - d * mu_dot - u_ddot_j.dot(basis.p_hat);
            let eq2 = a * mu_dot + u_ddot_j.dot(basis.q_hat);
            ode_residual[0] = ode_residual[0].max(eq1.abs());
            ode_residual[1] = ode_residual[1].max(eq2.abs());
        }

        // Exit.
        let on_exit = arc.sample(t2);
        let lambda_exit = arc_costates(arc, t2, mu_at(t2));
        let (post, lambda_post) = free_side(after, on_exit, t2);
        let costate_residual_t2 = ((lambda_exit.p - lambda_post.p).norm_squared()
            + (lambda_exit.v - lambda_post.v).norm_squared())
        .sqrt();
        let hamiltonian_mismatch_t2 = hamiltonian(&on_exit, &lambda_exit) - hamiltonian(&post, &lambda_post);

        out.push(JumpDiagnostics {
            leader_id: arc.leader_id,
            t1,
            t2,
            entry_state_residual: state_jump(&pre, &on_entry),
            exit_state_residual: state_jump(&on_exit, &post),
            nu: [nu1, 0.0],
            mu_entry,
            tangential_residual,
            costate_residual_t1,
            hamiltonian_mismatch_t1,
            costate_residual_t2,
            hamiltonian_mismatch_t2,
            ode_residual,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{solve_unconstrained_bvp, AgentState, PolyTrajectory};
    use crate::formation::GoalMotion;
    use std::sync::Arc;

    const R: f64 = 0.05;

    fn moving_leader() -> Arc<PiecewiseTrajectory> {
        let p = PolyTrajectory::coast(0.0, 10.0, AgentState::new(Vec2::new(0.0, 0.0), Vec2::new(-0.5, 0.0)));
        Arc::new(PiecewiseTrajectory::from(p))
    }

    fn three_piece(leader: Arc<PiecewiseTrajectory>, exit_kick: Vec2) -> PiecewiseTrajectory {
        let arc = ConstrainedArc::new(1, leader, 1.0, 1.5, 0.4, 0.6, 1.0, 2.0 * R).unwrap();
        let entry = arc.entry_state();
        let exit = arc.exit_state();
        let before = solve_unconstrained_bvp(AgentState::at_rest(Vec2::new(-1.0, 0.3)), 0.0, entry, 1.0).unwrap();
        let after_start = AgentState::new(exit.position, exit.velocity + exit_kick);
        let after = solve_unconstrained_bvp(after_start, 1.5, AgentState::at_rest(Vec2::new(-0.5, -0.5)), 3.0).unwrap();
        PiecewiseTrajectory::from_segments_unchecked(vec![
            Segment::Free(before),
            Segment::Contact(arc),
            Segment::Free(after),
        ])
    }

    #[test]
    fn unconstrained_trajectory_has_no_junctions() {
        let p = solve_unconstrained_bvp(AgentState::default(), 0.0, AgentState::at_rest(Vec2::new(1.0, 0.0)), 1.0).unwrap();
        assert!(jump_diagnostics(&PiecewiseTrajectory::from(p)).unwrap().is_empty());
    }

    #[test]
    fn continuous_pieces_have_zero_state_residual() {
        let d = jump_diagnostics(&three_piece(moving_leader(), Vec2::ZERO)).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d[0].entry_state_residual < 1e-12);
        assert!(d[0].exit_state_residual < 1e-12);
        assert!(d[0].hamiltonian_mismatch_t1.is_finite());
        // A leader with no control variation keeps μ constant.
        assert!(d[0].ode_residual[1] < 1e-6);
    }

    #[test]
    fn velocity_jump_at_exit_is_reported() {
        let d = jump_diagnostics(&three_piece(moving_leader(), Vec2::new(0.0, 0.2))).unwrap();
        assert!((d[0].exit_state_residual - 0.2).abs() < 1e-12);
    }

    #[test]
    fn static_leader_makes_nu_singular() {
        let leader = Arc::new(PiecewiseTrajectory::hold(GoalMotion::fixed(1, Vec2::ZERO), 0.0));
        let r = jump_diagnostics(&three_piece(leader, Vec2::ZERO));
        assert!(matches!(r, Err(Error::SingularNu { .. })));
    }
}
