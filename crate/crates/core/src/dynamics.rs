//! Double-integrator state, the unconstrained minimum-energy boundary value
//! problem and its closed-form energy.
//!
//! Along an unconstrained arc the control is affine in time, `u = a t + b`,
//! velocity is quadratic and position cubic. Coefficients are stored about the
//! arc's own start time so that evaluation stays well conditioned late in a
//! run; [`PolyTrajectory::absolute_coefficients`] recovers the constants of
//! the absolute-time law.

use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// Horizons shorter than this make the boundary value system singular.
pub const MIN_HORIZON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AgentState {
    pub position: Vec2,
    pub velocity: Vec2,
}

impl AgentState {
    pub const fn new(position: Vec2, velocity: Vec2) -> Self {
        AgentState { position, velocity }
    }

    pub const fn at_rest(position: Vec2) -> Self {
        AgentState {
            position,
            velocity: Vec2::ZERO,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.velocity.is_finite()
    }
}

/// Position, velocity and control at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Kinematics {
    pub position: Vec2,
    pub velocity: Vec2,
    pub control: Vec2,
}

impl Kinematics {
    pub fn state(&self) -> AgentState {
        AgentState::new(self.position, self.velocity)
    }
}

/// Speed and acceleration magnitude limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub v_min: f64,
    pub v_max: f64,
    pub u_min: f64,
    pub u_max: f64,
}

impl Bounds {
    pub const UNBOUNDED: Bounds = Bounds {
        v_min: 0.0,
        v_max: f64::INFINITY,
        u_min: 0.0,
        u_max: f64::INFINITY,
    };

    pub fn validate(&self) -> Result<()> {
        let ok = self.v_min >= 0.0
            && self.v_min <= self.v_max
            && self.u_min >= 0.0
            && self.u_min <= self.u_max;
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "bounds must satisfy 0 <= v_min <= v_max and 0 <= u_min <= u_max, got {self:?}"
            )))
        }
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds::UNBOUNDED
    }
}

/// Cubic position law of an unconstrained minimum-energy arc on `[t0, tf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyTrajectory {
    t0: f64,
    tf: f64,
    /// Control slope (m/s³).
    jerk: Vec2,
    /// Control, velocity and position at `t0`.
    control0: Vec2,
    velocity0: Vec2,
    position0: Vec2,
}

impl PolyTrajectory {
    /// Builds the law from its state at `t0`, control at `t0` and control slope.
    pub fn from_initial(t0: f64, tf: f64, start: AgentState, control0: Vec2, jerk: Vec2) -> Self {
        PolyTrajectory {
            t0,
            tf,
            jerk,
            control0,
            velocity0: start.velocity,
            position0: start.position,
        }
    }

    /// Builds the law from the absolute-time constants of
    /// `u = a t + b`, `v = a t²/2 + b t + c`, `p = a t³/6 + b t²/2 + c t + d`.
    pub fn from_absolute(t0: f64, tf: f64, a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> Self {
        let t = t0;
        let control0 = a * t + b;
        let velocity0 = a * (t * t / 2.0) + b * t + c;
        let position0 = a * (t * t * t / 6.0) + b * (t * t / 2.0) + c * t + d;
        PolyTrajectory {
            t0,
            tf,
            jerk: a,
            control0,
            velocity0,
            position0,
        }
    }

    /// A trajectory with zero control that coasts from `start`.
    pub fn coast(t0: f64, tf: f64, start: AgentState) -> Self {
        Self::from_initial(t0, tf, start, Vec2::ZERO, Vec2::ZERO)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tf(&self) -> f64 {
        self.tf
    }

    /// The constants `(a, b, c, d)` of the absolute-time law.
    pub fn absolute_coefficients(&self) -> [Vec2; 4] {
        let t = self.t0;
        let a = self.jerk;
        let b = self.control0 - a * t;
        let c = self.velocity0 - self.control0 * t + a * (t * t / 2.0);
        let d = self.position0 - self.velocity0 * t + self.control0 * (t * t / 2.0)
            - a * (t * t * t / 6.0);
        [a, b, c, d]
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t0 && t <= self.tf
    }

    /// Evaluates the law without a domain check.
    pub fn sample(&self, t: f64) -> Kinematics {
        let s = t - self.t0;
        let a = self.jerk;
        let b = self.control0;
        Kinematics {
            position: self.position0
                + self.velocity0 * s
                + b * (s * s / 2.0)
                + a * (s * s * s / 6.0),
            velocity: self.velocity0 + b * s + a * (s * s / 2.0),
            control: b + a * s,
        }
    }

    /// Derivative of the control (constant along the arc).
    pub fn control_rate(&self) -> Vec2 {
        self.jerk
    }

    /// ∫ ‖u‖² over `[from, to]`, with no domain check.
    pub fn energy_between(&self, from: f64, to: f64) -> f64 {
        let (s0, s1) = (from - self.t0, to - self.t0);
        let a = self.jerk;
        let b = self.control0;
        let cube = (s1 * s1 * s1 - s0 * s0 * s0) / 3.0;
        let square = s1 * s1 - s0 * s0;
        a.norm_squared() * cube + a.dot(b) * square + b.norm_squared() * (s1 - s0)
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                t,
                t0: self.t0,
                tf: self.tf,
            })
        }
    }
}

/// Solves the unconstrained minimum-energy transfer from `start` at `t0` to
/// `end` at `tf`.
pub fn solve_unconstrained_bvp(
    start: AgentState,
    t0: f64,
    end: AgentState,
    tf: f64,
) -> Result<PolyTrajectory> {
    let horizon = tf - t0;
    if !(horizon >= MIN_HORIZON) {
        return Err(Error::DegenerateHorizon {
            horizon,
            epsilon: MIN_HORIZON,
        });
    }
    // Per axis: a H³/6 + b H²/2 = Δp and a H²/2 + b H = Δv, where Δp is the
    // displacement left after coasting and Δv the velocity change.
    let h = horizon;
    let dp = end.position - start.position - start.velocity * h;
    let dv = end.velocity - start.velocity;
    let jerk = (dv * (6.0 * h) - dp * 12.0) / (h * h * h);
    let control0 = (dp * 6.0 - dv * (2.0 * h)) / (h * h);
    Ok(PolyTrajectory::from_initial(t0, tf, start, control0, jerk))
}

/// Position, velocity and control at `t`.
pub fn eval_trajectory(traj: &PolyTrajectory, t: f64) -> Result<Kinematics> {
    traj.check_domain(t)?;
    Ok(traj.sample(t))
}

/// ∫ₜ^tf ‖u(τ)‖² dτ.
pub fn energy_to_go(traj: &PolyTrajectory, t: f64) -> Result<f64> {
    traj.check_domain(t)?;
    Ok(traj.energy_between(t, traj.tf).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    SpeedBelowMin,
    SpeedAboveMax,
    ControlBelowMin,
    ControlAboveMax,
}

impl BoundKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundKind::SpeedBelowMin => "speed_below_min",
            BoundKind::SpeedAboveMax => "speed_above_max",
            BoundKind::ControlBelowMin => "control_below_min",
            BoundKind::ControlAboveMax => "control_above_max",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundViolation {
    pub time: f64,
    pub kind: BoundKind,
    /// The offending norm (‖v‖ or ‖u‖).
    pub magnitude: f64,
}

/// Samples `traj` every `sample_dt` (always including both endpoints) and
/// reports every sample where the speed or control norm leaves `bounds`.
pub fn check_bounds(traj: &PolyTrajectory, bounds: &Bounds, sample_dt: f64) -> Vec<BoundViolation> {
    assert!(sample_dt > 0.0, "sample_dt must be positive");
    let span = traj.tf - traj.t0;
    let steps = (span / sample_dt).ceil().max(1.0) as usize;
    let mut out = Vec::new();
    for k in 0..=steps {
        let t = if k == steps {
            traj.tf
        } else {
            traj.t0 + k as f64 * sample_dt
        };
        let kin = traj.sample(t);
        let speed = kin.velocity.norm();
        let control = kin.control.norm();
        let mut push = |kind, magnitude| {
            out.push(BoundViolation {
                time: t,
                kind,
                magnitude,
            })
        };
        if speed < bounds.v_min {
            push(BoundKind::SpeedBelowMin, speed);
        }
        if speed > bounds.v_max {
            push(BoundKind::SpeedAboveMax, speed);
        }
        if control < bounds.u_min {
            push(BoundKind::ControlBelowMin, control);
        }
        if control > bounds.u_max {
            push(BoundKind::ControlAboveMax, control);
        }
    }
    out
}
