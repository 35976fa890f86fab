//! Contact with two leaders at once: the follower sits at the apex of the
//! isosceles triangle whose legs have the contact length.

use std::sync::Arc;

use super::{Motion, PiecewiseTrajectory};
use crate::dynamics::Kinematics;
use crate::error::{Error, Result};
use crate::vec2::Vec2;
use crate::AgentId;

/// A scalar with its first two time derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Jet {
    v: f64,
    d: f64,
    dd: f64,
}

impl Jet {
    const ZERO: Jet = Jet { v: 0.0, d: 0.0, dd: 0.0 };

    fn constant(v: f64) -> Jet {
        Jet { v, d: 0.0, dd: 0.0 }
    }

    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            d: self.d + o.d,
            dd: self.dd + o.dd,
        }
    }

    fn sub(self, o: Jet) -> Jet {
        self.add(o.scale(-1.0))
    }

    fn scale(self, k: f64) -> Jet {
        Jet {
            v: self.v * k,
            d: self.d * k,
            dd: self.dd * k,
        }
    }

    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            d: self.d * o.v + self.v * o.d,
            dd: self.dd * o.v + 2.0 * self.d * o.d + self.v * o.dd,
        }
    }

    fn div(self, o: Jet) -> Jet {
        let q = self.v / o.v;
        let qd = (self.d - q * o.d) / o.v;
        let qdd = (self.dd - 2.0 * qd * o.d - q * o.dd) / o.v;
        Jet { v: q, d: qd, dd: qdd }
    }

    fn sqrt(self) -> Jet {
        let r = self.v.sqrt();
        let rd = self.d / (2.0 * r);
        let rdd = (self.dd - 2.0 * rd * rd) / (2.0 * r);
        Jet { v: r, d: rd, dd: rdd }
    }
}

#[derive(Debug, Clone, Copy)]
struct JetVec {
    x: Jet,
    y: Jet,
}

impl JetVec {
    fn from_kinematics(k: Kinematics) -> JetVec {
        JetVec {
            x: Jet {
                v: k.position.x,
                d: k.velocity.x,
                dd: k.control.x,
            },
            y: Jet {
                v: k.position.y,
                d: k.velocity.y,
                dd: k.control.y,
            },
        }
    }

    fn add(self, o: JetVec) -> JetVec {
        JetVec {
            x: self.x.add(o.x),
            y: self.y.add(o.y),
        }
    }

    fn sub(self, o: JetVec) -> JetVec {
        JetVec {
            x: self.x.sub(o.x),
            y: self.y.sub(o.y),
        }
    }

    fn scale(self, k: f64) -> JetVec {
        JetVec {
            x: self.x.scale(k),
            y: self.y.scale(k),
        }
    }

    fn times(self, k: Jet) -> JetVec {
        JetVec {
            x: self.x.mul(k),
            y: self.y.mul(k),
        }
    }

    fn dot(self, o: JetVec) -> Jet {
        self.x.mul(o.x).add(self.y.mul(o.y))
    }

    fn perp(self) -> JetVec {
        JetVec {
            x: self.y.scale(-1.0),
            y: self.x,
        }
    }

    fn kinematics(self) -> Kinematics {
        Kinematics {
            position: Vec2::new(self.x.v, self.y.v),
            velocity: Vec2::new(self.x.d, self.y.d),
            control: Vec2::new(self.x.dd, self.y.dd),
        }
    }
}

/// Apex at `distance` from both leaders, on the left of `a → b` when
/// `side > 0`.
fn apex(a: Kinematics, b: Kinematics, distance: f64, side: f64) -> Result<Kinematics> {
    let (ja, jb) = (JetVec::from_kinematics(a), JetVec::from_kinematics(b));
    let mid = ja.add(jb).scale(0.5);
    let half = jb.sub(ja).scale(0.5);
    let half_sq = half.dot(half);
    let leg_sq = distance * distance;
    let separation = 2.0 * half_sq.v.sqrt();
    if half_sq.v > leg_sq * (1.0 + 1e-12) {
        return Err(Error::ContactBroken {
            separation,
            limit: 2.0 * distance,
        });
    }
    if half_sq.v == 0.0 {
        return Err(Error::Validation("leaders coincide".into()));
    }
    let height_sq = Jet::constant(leg_sq).sub(half_sq);
    // At exactly twice the contact distance the apex is the midpoint and the
    // height is not differentiable; it is held at zero.
    let height = if height_sq.v <= 0.0 { Jet::ZERO } else { height_sq.sqrt() };
    let ratio = height.div(half_sq.sqrt());
    Ok(mid.add(half.perp().times(ratio).scale(side)).kinematics())
}

fn side_of(a: Vec2, b: Vec2, reference: Vec2) -> f64 {
    let mid = (a + b) / 2.0;
    if (b - a).cross(reference - mid) < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Follower kinematics in simultaneous contact with all `leaders` (at least
/// two). Of the two apex points the one on the side of `reference` (the
/// follower's entry position) is returned.
pub fn multi_contact_segment(reference: Vec2, leaders: &[Kinematics], distance: f64) -> Result<Kinematics> {
    if leaders.len() < 2 {
        return Err(Error::Validation(format!(
            "multi-contact needs at least two leaders, got {}",
            leaders.len()
        )));
    }
    let (a, b) = (leaders[0], leaders[1]);
    let out = apex(a, b, distance, side_of(a.position, b.position, reference))?;
    for extra in &leaders[2..] {
        let gap = out.position.distance(extra.position);
        if (gap - distance).abs() > super::CONTINUITY_TOLERANCE {
            return Err(Error::Validation(format!(
                "leader at {} is {gap} away, not in contact",
                extra.position
            )));
        }
    }
    Ok(out)
}

/// A multi-contact segment between two leader trajectories.
#[derive(Debug, Clone)]
pub struct MultiContactArc {
    pub leaders: [(AgentId, Arc<PiecewiseTrajectory>); 2],
    pub t1: f64,
    pub t2: f64,
    /// +1 when the follower is on the left of the first → second leader line.
    pub side: f64,
    pub distance: f64,
}

impl MultiContactArc {
    /// Picks the apex branch continuous with `entry_position` and checks
    /// that the leaders stay close enough on a grid over `[t1, t2]`.
    pub fn new(
        leaders: [(AgentId, Arc<PiecewiseTrajectory>); 2],
        t1: f64,
        t2: f64,
        distance: f64,
        entry_position: Vec2,
    ) -> Result<Self> {
        if !(t1 < t2) {
            return Err(Error::Validation(format!("arc needs t1 < t2, got [{t1}, {t2}]")));
        }
        let (a, b) = (leaders[0].1.sample(t1), leaders[1].1.sample(t1));
        let side = side_of(a.position, b.position, entry_position);
        let arc = MultiContactArc {
            leaders,
            t1,
            t2,
            side,
            distance,
        };
        for k in 0..=200 {
            arc.try_sample(t1 + (t2 - t1) * k as f64 / 200.0)?;
        }
        Ok(arc)
    }

    pub fn try_sample(&self, t: f64) -> Result<Kinematics> {
        apex(
            self.leaders[0].1.sample(t),
            self.leaders[1].1.sample(t),
            self.distance,
            self.side,
        )
    }

    /// Like [`Self::try_sample`], but past the geometric limit returns the
    /// midpoint of the leaders.
    pub fn sample(&self, t: f64) -> Kinematics {
        self.try_sample(t).unwrap_or_else(|_| {
            let (a, b) = (self.leaders[0].1.sample(t), self.leaders[1].1.sample(t));
            Kinematics {
                position: (a.position + b.position) / 2.0,
                velocity: (a.velocity + b.velocity) / 2.0,
                control: (a.control + b.control) / 2.0,
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::PolyTrajectory;
    use crate::dynamics::AgentState;

    const R: f64 = 0.05;

    fn at(p: Vec2) -> Kinematics {
        Kinematics {
            position: p,
            ..Default::default()
        }
    }

    #[test]
    fn two_static_leaders_2r_apart() {
        let (a, b) = (Vec2::new(-R, 0.0), Vec2::new(R, 0.0));
        let h = (3.0f64).sqrt() * R;
        let up = multi_contact_segment(Vec2::new(0.0, 1.0), &[at(a), at(b)], 2.0 * R).unwrap();
        let down = multi_contact_segment(Vec2::new(0.3, -1.0), &[at(a), at(b)], 2.0 * R).unwrap();
        assert!(up.position.distance(Vec2::new(0.0, h)) < 1e-15);
        assert!(down.position.distance(Vec2::new(0.0, -h)) < 1e-15);
        assert_eq!(up.velocity, Vec2::ZERO);
    }

    #[test]
    fn leaders_4r_apart_give_midpoint() {
        let k = multi_contact_segment(Vec2::new(0.0, 1.0), &[at(Vec2::new(-2.0 * R, 0.0)), at(Vec2::new(2.0 * R, 0.0))], 2.0 * R)
            .unwrap();
        assert!(k.position.norm() < 1e-15);
    }

    #[test]
    fn leaders_past_4r_break_contact() {
        let r = multi_contact_segment(Vec2::ZERO, &[at(Vec2::new(-2.1 * R, 0.0)), at(Vec2::new(2.1 * R, 0.0))], 2.0 * R);
        assert!(matches!(r, Err(Error::ContactBroken { .. })));
    }

    #[test]
    fn jet_derivatives_match_finite_differences() {
        // Leaders drifting apart at different speeds.
        let la = PolyTrajectory::from_initial(
            0.0,
            1.0,
            AgentState::new(Vec2::new(-R, 0.0), Vec2::new(-0.02, 0.01)),
            Vec2::new(0.01, 0.0),
            Vec2::ZERO,
        );
        let lb = PolyTrajectory::from_initial(
            0.0,
            1.0,
            AgentState::new(Vec2::new(R, 0.0), Vec2::new(0.03, 0.0)),
            Vec2::new(0.0, -0.02),
            Vec2::new(0.01, 0.0),
        );
        let f = |t: f64| multi_contact_segment(Vec2::new(0.0, 1.0), &[la.sample(t), lb.sample(t)], 2.0 * R).unwrap();
        let (t, h) = (0.5, 1e-4);
        let (m, c, p) = (f(t - h), f(t), f(t + h));
        let vel = (p.position - m.position) / (2.0 * h);
        let acc = (p.position - c.position * 2.0 + m.position) / (h * h);
        assert!(vel.distance(c.velocity) < 1e-7);
        assert!(acc.distance(c.control) < 1e-4);
        assert!((c.position.distance(la.sample(t).position) - 2.0 * R).abs() < 1e-12);
        assert!((c.position.distance(lb.sample(t).position) - 2.0 * R).abs() < 1e-12);
    }
}
