//! Collision-aware trajectories: piecewise laws built from unconstrained
//! cubic arcs, contact arcs that keep a fixed distance to a leader, and a
//! hold phase that rides on the goal.

mod contact;
mod diagnostics;
mod multi;
mod planner;
mod safety;

use std::sync::Arc;

pub use contact::{constrained_arc_eval, ConstrainedArc};
pub use diagnostics::{jump_diagnostics, JumpDiagnostics};
pub use multi::{multi_contact_segment, MultiContactArc};
pub use planner::{find_conflict, plan_to_goal, plan_trajectory, ArcChoice, GoalRequest, Leader, Plan, PlannerParams};
pub use safety::{first_breach, min_separation, Breach};

use crate::dynamics::{Kinematics, PolyTrajectory};
use crate::error::{Error, Result};
use crate::formation::GoalMotion;
use crate::numeric::gauss_legendre;
use crate::vec2::Vec2;

/// Position and velocity mismatch allowed where two segments meet.
pub const CONTINUITY_TOLERANCE: f64 = 1e-6;

/// Anything that can report position, velocity and control at a time.
pub trait Motion {
    fn sample(&self, t: f64) -> Kinematics;
}

impl Motion for PolyTrajectory {
    fn sample(&self, t: f64) -> Kinematics {
        PolyTrajectory::sample(self, t)
    }
}

impl Motion for GoalMotion {
    fn sample(&self, t: f64) -> Kinematics {
        self.kinematics(t)
    }
}

impl<M: Motion + ?Sized> Motion for Arc<M> {
    fn sample(&self, t: f64) -> Kinematics {
        (**self).sample(t)
    }
}

impl<M: Motion + ?Sized> Motion for &M {
    fn sample(&self, t: f64) -> Kinematics {
        (**self).sample(t)
    }
}

/// The residuals of the tangency conditions
/// `(4R² − s·s, −s·ṡ, −s·s̈ − ṡ·ṡ)`.
pub fn tangency(s: Vec2, s_dot: Vec2, s_ddot: Vec2, radius: f64) -> [f64; 3] {
    [
        4.0 * radius * radius - s.dot(s),
        -s.dot(s_dot),
        -s.dot(s_ddot) - s_dot.dot(s_dot),
    ]
}

/// Orthonormal frame of a contact: `p_hat` along the separation, `q_hat`
/// along its rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactBasis {
    pub p_hat: Vec2,
    pub q_hat: Vec2,
}

/// Relative speeds below this cannot define `q_hat`.
pub const MIN_RELATIVE_SPEED: f64 = 1e-12;

pub fn contact_basis(s: Vec2, s_dot: Vec2, radius: f64) -> Result<ContactBasis> {
    let contact = 2.0 * radius;
    if (s.norm() - contact).abs() > CONTINUITY_TOLERANCE {
        return Err(Error::Validation(format!(
            "separation {} is not at contact distance {contact}",
            s.norm()
        )));
    }
    let speed = s_dot.norm();
    if speed < MIN_RELATIVE_SPEED {
        return Err(Error::ZeroRelativeSpeed { speed });
    }
    Ok(ContactBasis {
        p_hat: s / contact,
        q_hat: s_dot / speed,
    })
}

/// Rides exactly on a goal from `t0` to `tf` (possibly forever).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoldSegment {
    pub t0: f64,
    pub tf: f64,
    pub goal: GoalMotion,
}

#[derive(Debug, Clone)]
pub enum Segment {
    Free(PolyTrajectory),
    Contact(ConstrainedArc),
    MultiContact(MultiContactArc),
    Hold(HoldSegment),
}

impl Segment {
    pub fn t0(&self) -> f64 {
        match self {
            Segment::Free(p) => p.t0(),
            Segment::Contact(a) => a.t1,
            Segment::MultiContact(m) => m.t1,
            Segment::Hold(h) => h.t0,
        }
    }

    pub fn tf(&self) -> f64 {
        match self {
            Segment::Free(p) => p.tf(),
            Segment::Contact(a) => a.t2,
            Segment::MultiContact(m) => m.t2,
            Segment::Hold(h) => h.tf,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Segment::Free(_) => "free",
            Segment::Contact(_) => "contact",
            Segment::MultiContact(_) => "multi_contact",
            Segment::Hold(_) => "hold",
        }
    }

    /// ∫ ‖u‖² over `[from, to]`, exact for free and hold segments.
    pub fn energy_between(&self, from: f64, to: f64) -> f64 {
        if to <= from {
            return 0.0;
        }
        match self {
            Segment::Free(p) => p.energy_between(from, to).max(0.0),
            Segment::Hold(h) => h.goal.tracking_energy(from, to).max(0.0),
            Segment::Contact(_) | Segment::MultiContact(_) => {
                let mut cuts = vec![from, to];
                self.push_breakpoints(from, to, &mut cuts);
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                cuts.windows(2)
                    .map(|w| {
                        let pieces = ((w[1] - w[0]) / 0.1).ceil().max(1.0) as usize;
                        gauss_legendre(|t| self.sample(t).control.norm_squared(), w[0], w[1], pieces)
                    })
                    .sum()
            }
        }
    }

    /// Times in `(from, to)` where the control of this segment may jump.
    fn push_breakpoints(&self, from: f64, to: f64, out: &mut Vec<f64>) {
        match self {
            Segment::Free(_) | Segment::Hold(_) => {}
            Segment::Contact(a) => a.leader.push_breakpoints(from, to, out),
            Segment::MultiContact(m) => {
                for (_, leader) in &m.leaders {
                    leader.push_breakpoints(from, to, out);
                }
            }
        }
    }
}

impl Motion for Segment {
    fn sample(&self, t: f64) -> Kinematics {
        match self {
            Segment::Free(p) => p.sample(t),
            Segment::Contact(a) => a.sample(t),
            Segment::MultiContact(m) => m.sample(t),
            Segment::Hold(h) => h.goal.kinematics(t),
        }
    }
}

/// Segments abutting in time. Outside its domain the trajectory coasts at
/// the boundary velocity.
#[derive(Debug, Clone)]
pub struct PiecewiseTrajectory {
    segments: Vec<Segment>,
}

impl PiecewiseTrajectory {
    /// Checks that the segments abut and that position and velocity are
    /// continuous at every junction.
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Invariant("piecewise trajectory has no segments".into()));
        }
        for (k, seg) in segments.iter().enumerate() {
            if !(seg.t0() < seg.tf()) {
                return Err(Error::Invariant(format!(
                    "segment {k} has empty domain [{}, {}]",
                    seg.t0(),
                    seg.tf()
                )));
            }
        }
        for (k, pair) in segments.windows(2).enumerate() {
            let (a, b) = (&pair[0], &pair[1]);
            let t = b.t0();
            if (a.tf() - t).abs() > 1e-9 {
                return Err(Error::Invariant(format!(
                    "segments {k} and {} do not abut: {} vs {t}",
                    k + 1,
                    a.tf()
                )));
            }
            let (left, right) = (a.sample(t), b.sample(t));
            let dp = left.position.distance(right.position);
            let dv = left.velocity.distance(right.velocity);
            if dp > CONTINUITY_TOLERANCE || dv > CONTINUITY_TOLERANCE {
                return Err(Error::Invariant(format!(
                    "state jump at t = {t}: position {dp:e}, velocity {dv:e}"
                )));
            }
        }
        Ok(PiecewiseTrajectory { segments })
    }

    /// Skips validation; used to probe candidate plans and broken inputs.
    pub fn from_segments_unchecked(segments: Vec<Segment>) -> Self {
        assert!(!segments.is_empty());
        PiecewiseTrajectory { segments }
    }

    pub fn hold(goal: GoalMotion, from: f64) -> Self {
        PiecewiseTrajectory {
            segments: vec![Segment::Hold(HoldSegment {
                t0: from,
                tf: f64::INFINITY,
                goal,
            })],
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn t0(&self) -> f64 {
        self.segments[0].t0()
    }

    pub fn tf(&self) -> f64 {
        self.segments[self.segments.len() - 1].tf()
    }

    /// Start of the trailing hold segment, or the end of the domain.
    pub fn settle_time(&self) -> f64 {
        match self.segments.last() {
            Some(Segment::Hold(h)) => h.t0,
            _ => self.tf(),
        }
    }

    pub fn is_unconstrained(&self) -> bool {
        self.segments
            .iter()
            .all(|s| matches!(s, Segment::Free(_) | Segment::Hold(_)))
    }

    pub fn contact_arcs(&self) -> impl Iterator<Item = &ConstrainedArc> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Contact(a) => Some(a),
            _ => None,
        })
    }

    /// Index of the segment governing time `t` (left segment at a junction).
    pub fn segment_index(&self, t: f64) -> usize {
        self.segments
            .partition_point(|s| s.tf() < t)
            .min(self.segments.len() - 1)
    }

    pub fn energy_between(&self, from: f64, to: f64) -> f64 {
        let (from, to) = (from.max(self.t0()), to.min(self.tf()));
        if to <= from {
            return 0.0;
        }
        self.segments
            .iter()
            .filter(|s| s.tf() > from && s.t0() < to)
            .map(|s| s.energy_between(from.max(s.t0()), to.min(s.tf())))
            .sum()
    }

    /// Transit energy: everything before the trailing hold.
    pub fn transit_energy(&self) -> f64 {
        self.energy_between(self.t0(), self.settle_time())
    }

    /// Junction times strictly inside `(from, to)`, including those of the
    /// leaders followed by contact segments.
    pub fn breakpoints(&self, from: f64, to: f64) -> Vec<f64> {
        let mut out = Vec::new();
        self.push_breakpoints(from, to, &mut out);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn push_breakpoints(&self, from: f64, to: f64, out: &mut Vec<f64>) {
        for seg in &self.segments {
            if seg.tf() <= from || seg.t0() >= to {
                continue;
            }
            for t in [seg.t0(), seg.tf()] {
                if t > from && t < to {
                    out.push(t);
                }
            }
            seg.push_breakpoints(from.max(seg.t0()), to.min(seg.tf()), out);
        }
    }
}

impl Motion for PiecewiseTrajectory {
    fn sample(&self, t: f64) -> Kinematics {
        let first = &self.segments[0];
        if t < first.t0() {
            let k = first.sample(first.t0());
            return coast(k, t - first.t0());
        }
        let last = &self.segments[self.segments.len() - 1];
        if t > last.tf() {
            let k = last.sample(last.tf());
            return coast(k, t - last.tf());
        }
        self.segments[self.segment_index(t)].sample(t)
    }
}

impl From<PolyTrajectory> for PiecewiseTrajectory {
    fn from(p: PolyTrajectory) -> Self {
        PiecewiseTrajectory {
            segments: vec![Segment::Free(p)],
        }
    }
}

fn coast(k: Kinematics, dt: f64) -> Kinematics {
    Kinematics {
        position: k.position + k.velocity * dt,
        velocity: k.velocity,
        control: Vec2::ZERO,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{solve_unconstrained_bvp, AgentState};

    const R: f64 = 0.05;

    #[test]
    fn tangency_examples() {
        let a = 0.7;
        let t = tangency(Vec2::new(2.0 * R, 0.0), Vec2::new(0.0, a), Vec2::new(-a * a / (2.0 * R), 0.0), R);
        assert!(t.iter().all(|x| x.abs() < 1e-15));

        let t = tangency(Vec2::new(3.0 * R, 0.0), Vec2::ZERO, Vec2::ZERO, R);
        assert!((t[0] + 5.0 * R * R).abs() < 1e-15);
        assert_eq!((t[1], t[2]), (0.0, 0.0));

        let t = tangency(Vec2::new(2.0 * R, 0.0), Vec2::new(1.0, 0.0), Vec2::ZERO, R);
        assert_eq!(t[1], -2.0 * R);
    }

    #[test]
    fn contact_basis_examples() {
        let b = contact_basis(Vec2::new(2.0 * R, 0.0), Vec2::new(0.0, 3.0), R).unwrap();
        assert_eq!((b.p_hat, b.q_hat), (Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)));
        let b = contact_basis(Vec2::new(0.0, 2.0 * R), Vec2::new(-2.0, 0.0), R).unwrap();
        assert_eq!((b.p_hat, b.q_hat), (Vec2::new(0.0, 1.0), Vec2::new(-1.0, 0.0)));
        assert!(matches!(
            contact_basis(Vec2::new(2.0 * R, 0.0), Vec2::ZERO, R),
            Err(Error::ZeroRelativeSpeed { .. })
        ));
    }

    #[test]
    fn continuity_is_validated() {
        let a = solve_unconstrained_bvp(
            AgentState::at_rest(Vec2::ZERO),
            0.0,
            AgentState::new(Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0)),
            1.0,
        )
        .unwrap();
        let b = PolyTrajectory::coast(1.0, 2.0, AgentState::new(Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0)));
        let ok = PiecewiseTrajectory::new(vec![Segment::Free(a), Segment::Free(b)]).unwrap();
        assert_eq!(ok.sample(1.5).position, Vec2::new(1.5, 0.0));
        assert_eq!(ok.sample(3.0).position, Vec2::new(3.0, 0.0));
        assert!((ok.energy_between(0.0, 2.0) - a.energy_between(0.0, 1.0)).abs() < 1e-12);

        let c = PolyTrajectory::coast(1.0, 2.0, AgentState::at_rest(Vec2::new(1.0, 0.0)));
        assert!(PiecewiseTrajectory::new(vec![Segment::Free(a), Segment::Free(c)]).is_err());
    }

    #[test]
    fn hold_rides_the_goal() {
        let mut goal = GoalMotion::fixed(1, Vec2::new(1.0, 2.0));
        goal.formation_velocity = Vec2::new(0.15, 0.35);
        let h = PiecewiseTrajectory::hold(goal, 0.0);
        assert_eq!(h.sample(10.0).position, goal.kinematics(10.0).position);
        assert_eq!(h.transit_energy(), 0.0);
    }
}
