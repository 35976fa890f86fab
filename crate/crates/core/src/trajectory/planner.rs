//! Minimum-energy planning around higher-priority agents.
//!
//! The planner starts from the unconstrained transfer. If that comes closer
//! than the contact distance to a leader it searches for a detour of the
//! form free arc → contact arc → free arc. The two free arcs are solved as
//! boundary value problems to and from the contact arc, so position and
//! velocity are continuous by construction, and the search runs over the
//! entry time, the arc duration, the entry angle, the relative speed and
//! the sense of rotation. When no single detour clears every leader the
//! best detour whose contact arc is clear is kept and the search repeats
//! from its exit.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::Arc;

use super::{first_breach, Breach, ConstrainedArc, HoldSegment, Motion, PiecewiseTrajectory, Segment};
use crate::dynamics::{solve_unconstrained_bvp, AgentState, Kinematics, PolyTrajectory};
use crate::error::{Error, Result};
use crate::formation::GoalMotion;
use crate::numeric::{golden_section, nelder_mead};
use crate::vec2::Vec2;
use crate::AgentId;

/// A published trajectory of a higher-priority agent.
#[derive(Debug, Clone)]
pub struct Leader {
    pub id: AgentId,
    pub trajectory: Arc<PiecewiseTrajectory>,
}

impl Motion for Leader {
    fn sample(&self, t: f64) -> Kinematics {
        self.trajectory.sample(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerParams {
    /// Agent radius R; the contact distance is 2R.
    pub radius: f64,
    /// Resolution of the final safety verification.
    pub sample_dt: f64,
    /// Samples per window used while searching.
    pub search_samples: usize,
    /// Allowed dip below the contact distance.
    pub tolerance: f64,
    /// Contact arcs per plan.
    pub max_arcs: usize,
    /// Extra time granted past a conflict with the hold phase.
    pub tail_margin: f64,
}

impl PlannerParams {
    pub fn new(radius: f64, sample_dt: f64) -> Self {
        PlannerParams {
            radius,
            sample_dt,
            search_samples: 400,
            tolerance: 1e-6,
            max_arcs: 3,
            tail_margin: 1.0,
        }
    }

    pub fn contact_distance(&self) -> f64 {
        2.0 * self.radius
    }

    fn threshold(&self) -> f64 {
        self.contact_distance() - 0.5 * self.tolerance
    }
}

/// Junction data of one contact arc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcChoice {
    pub leader: AgentId,
    pub t1: f64,
    pub t2: f64,
    pub entry_angle: f64,
    pub relative_speed: f64,
    pub rotation_sign: f64,
    /// Energy of the whole candidate plan this arc belongs to.
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub trajectory: PiecewiseTrajectory,
    /// ∫ ‖u‖² from the start of the plan to arrival.
    pub energy: f64,
    /// Time at which the goal is reached.
    pub arrival: f64,
    pub arcs: Vec<ArcChoice>,
    /// Runner-up detours found by the junction search.
    pub alternatives: Vec<ArcChoice>,
}

/// Transfer to a moving goal, followed by riding on it.
#[derive(Debug, Clone, Copy)]
pub struct GoalRequest<'a> {
    pub agent: AgentId,
    pub start: AgentState,
    pub now: f64,
    pub goal: &'a GoalMotion,
    pub deadline: f64,
}

/// Plans from `start` at `now` to the fixed `target` at `deadline`, keeping
/// clear of every leader on `[now, deadline]`.
pub fn plan_trajectory(
    agent: AgentId,
    start: AgentState,
    now: f64,
    target: AgentState,
    deadline: f64,
    leaders: &[Leader],
    params: &PlannerParams,
) -> Result<Plan> {
    let search = Search {
        leaders,
        params,
        deadline,
        target,
        tail: None,
        window_end: deadline,
    };
    match search.solve(start, now, params.max_arcs) {
        Ok(found) => finish(found, None, now, deadline),
        Err(Fail::Hard(e)) => Err(e),
        Err(Fail::Tail(_)) => unreachable!("no hold phase to conflict with"),
        Err(Fail::NoPath(reason)) => Err(Error::NoFeasibleTrajectory { agent, reason }),
    }
}

/// Plans to `goal` by `deadline` and appends a hold on the goal. If a leader
/// crosses the goal after arrival, the arrival is pushed past the conflict.
pub fn plan_to_goal(request: &GoalRequest<'_>, leaders: &[Leader], params: &PlannerParams) -> Result<Plan> {
    let settle = leaders
        .iter()
        .map(|l| l.trajectory.settle_time())
        .filter(|t| t.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let mut deadline = request.deadline;
    for _ in 0..4 {
        let search = Search {
            leaders,
            params,
            deadline,
            target: request.goal.kinematics(deadline).state(),
            tail: Some(*request.goal),
            window_end: deadline.max(settle) + params.tail_margin,
        };
        match search.solve(request.start, request.now, params.max_arcs) {
            Ok(found) => return finish(found, Some(*request.goal), request.now, deadline),
            Err(Fail::Tail(end)) => deadline = end + params.tail_margin,
            Err(Fail::Hard(e)) => return Err(e),
            Err(Fail::NoPath(reason)) => {
                return Err(Error::NoFeasibleTrajectory {
                    agent: request.agent,
                    reason,
                })
            }
        }
    }
    Err(Error::NoFeasibleTrajectory {
        agent: request.agent,
        reason: "goal stays occupied by higher-priority traffic".into(),
    })
}

/// First conflict of `traj` with any leader on `[from, until]`, checked on
/// the coarse search grid and then at `sample_dt`.
pub fn find_conflict(
    traj: &PiecewiseTrajectory,
    leaders: &[Leader],
    from: f64,
    until: f64,
    params: &PlannerParams,
) -> Option<Breach> {
    let coarse = ((until - from) / params.search_samples as f64).max(params.sample_dt);
    let threshold = params.threshold();
    first_breach(traj, leaders, from, until, coarse, threshold)
        .or_else(|| first_breach(traj, leaders, from, until, params.sample_dt, threshold))
}

fn finish(found: Found, tail: Option<GoalMotion>, now: f64, deadline: f64) -> Result<Plan> {
    let mut segments = found.segments;
    if let Some(goal) = tail {
        segments.push(Segment::Hold(HoldSegment {
            t0: deadline,
            tf: f64::INFINITY,
            goal,
        }));
    }
    let trajectory = PiecewiseTrajectory::new(segments)?;
    let energy = trajectory.energy_between(now, deadline);
    Ok(Plan {
        trajectory,
        energy,
        arrival: deadline,
        arcs: found.arcs,
        alternatives: found.alternatives,
    })
}

struct Found {
    segments: Vec<Segment>,
    arcs: Vec<ArcChoice>,
    alternatives: Vec<ArcChoice>,
}

enum Fail {
    /// The transfer is clear but a leader crosses the goal after arrival,
    /// until the given time.
    Tail(f64),
    NoPath(String),
    Hard(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Hard(e)
    }
}

/// Shortest free arc or contact arc the search will build.
const MIN_PIECE: f64 = 1e-3;

#[derive(Debug, Clone, Copy)]
struct ArcParams {
    leader: usize,
    t1: f64,
    duration: f64,
    angle: f64,
    speed: f64,
    sign: f64,
    /// Contact distance used by the arc.
    distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    /// Clear of every leader up to the end of the window.
    Complete,
    /// Clear through the contact arc, breached afterwards.
    Partial,
    Unsafe,
}

struct Candidate {
    params: ArcParams,
    segments: Vec<Segment>,
    energy: f64,
}

struct Search<'a> {
    leaders: &'a [Leader],
    params: &'a PlannerParams,
    deadline: f64,
    target: AgentState,
    tail: Option<GoalMotion>,
    window_end: f64,
}

impl Search<'_> {
    fn coarse_step(&self, from: f64) -> f64 {
        ((self.window_end - from) / self.params.search_samples as f64).max(self.params.sample_dt)
    }

    fn with_tail(&self, segments: &[Segment]) -> PiecewiseTrajectory {
        let mut all = segments.to_vec();
        if let Some(goal) = self.tail {
            all.push(Segment::Hold(HoldSegment {
                t0: self.deadline,
                tf: f64::INFINITY,
                goal,
            }));
        }
        PiecewiseTrajectory::from_segments_unchecked(all)
    }

    fn breach(&self, segments: &[Segment], from: f64, step: f64) -> Option<Breach> {
        let traj = self.with_tail(segments);
        first_breach(&traj, self.leaders, from, self.window_end, step, self.params.threshold())
    }

    fn verified(&self, segments: &[Segment], from: f64) -> bool {
        self.breach(segments, from, self.coarse_step(from)).is_none()
            && self.breach(segments, from, self.params.sample_dt).is_none()
    }

    fn solve(&self, start: AgentState, t: f64, arcs_left: usize) -> std::result::Result<Found, Fail> {
        let direct = solve_unconstrained_bvp(start, t, self.target, self.deadline)?;
        let direct_segments = vec![Segment::Free(direct)];
        let breach = self
            .breach(&direct_segments, t, self.coarse_step(t))
            .or_else(|| self.breach(&direct_segments, t, self.params.sample_dt));
        let Some(breach) = breach else {
            return Ok(Found {
                segments: direct_segments,
                arcs: Vec::new(),
                alternatives: Vec::new(),
            });
        };
        if breach.start >= self.deadline {
            return Err(Fail::Tail(breach.end));
        }
        if arcs_left == 0 {
            return Err(Fail::NoPath(format!(
                "still conflicts with agent {} at t = {:.4} after the last allowed contact arc",
                self.leaders[breach.leader].id, breach.start
            )));
        }

        let mut complete = Vec::new();
        let mut partial = Vec::new();
        self.search(start, t, &direct, &breach, &mut complete, &mut partial);

        let alternatives: Vec<ArcChoice> = complete.iter().skip(1).take(4).map(|c| self.choice(c)).collect();
        for c in &complete {
            if self.verified(&c.segments, t) {
                return Ok(Found {
                    segments: c.segments.clone(),
                    arcs: vec![self.choice(c)],
                    alternatives,
                });
            }
        }

        let mut tail_conflict = None;
        for c in partial.iter().take(2) {
            let exit_index = c.segments.len() - 1;
            let prefix = &c.segments[..exit_index];
            let t2 = c.params.t1 + c.params.duration;
            let clear = {
                let traj = PiecewiseTrajectory::from_segments_unchecked(prefix.to_vec());
                first_breach(&traj, self.leaders, t, t2, self.params.sample_dt, self.params.threshold()).is_none()
            };
            if !clear {
                continue;
            }
            let exit = prefix[prefix.len() - 1].sample(t2).state();
            match self.solve(exit, t2, arcs_left - 1) {
                Ok(rest) => {
                    let mut segments = prefix.to_vec();
                    segments.extend(rest.segments);
                    let mut arcs = vec![self.choice(c)];
                    arcs.extend(rest.arcs);
                    return Ok(Found {
                        segments,
                        arcs,
                        alternatives,
                    });
                }
                Err(Fail::Tail(end)) => tail_conflict = Some(end),
                Err(Fail::Hard(e)) => return Err(Fail::Hard(e)),
                Err(Fail::NoPath(_)) => {}
            }
        }
        if let Some(end) = tail_conflict {
            return Err(Fail::Tail(end));
        }
        Err(Fail::NoPath(format!(
            "no contact arc around agent {} clears all leaders (conflict at t = {:.4})",
            self.leaders[breach.leader].id, breach.start
        )))
    }

    fn choice(&self, c: &Candidate) -> ArcChoice {
        ArcChoice {
            leader: self.leaders[c.params.leader].id,
            t1: c.params.t1,
            t2: c.params.t1 + c.params.duration,
            entry_angle: c.params.angle,
            relative_speed: c.params.speed,
            rotation_sign: c.params.sign,
            energy: c.energy,
        }
    }

    /// Builds the three-piece candidate. `None` when the parameters are out
    /// of range or the free arcs would cut into the contact circle at the
    /// junctions.
    fn build(&self, start: AgentState, t: f64, p: &ArcParams) -> Option<Candidate> {
        let immediate = p.t1 == t;
        let t2 = p.t1 + p.duration;
        let valid = p.t1.is_finite()
            && p.duration.is_finite()
            && p.angle.is_finite()
            && p.speed.is_finite()
            && (immediate || p.t1 >= t + MIN_PIECE)
            && p.duration >= MIN_PIECE
            && t2 <= self.deadline - MIN_PIECE
            && p.speed >= 0.0;
        if !valid {
            return None;
        }
        let leader = &self.leaders[p.leader];
        let arc = ConstrainedArc {
            leader_id: leader.id,
            leader: leader.trajectory.clone(),
            t1: p.t1,
            t2,
            entry_angle: p.angle,
            relative_speed: p.speed,
            rotation_sign: p.sign,
            distance: p.distance,
        };
        let mut segments = Vec::with_capacity(3);
        let mut energy = 0.0;
        if !immediate {
            let entry = arc.sample(p.t1);
            let incoming = solve_unconstrained_bvp(start, t, entry.state(), p.t1).ok()?;
            if !bends_away(&arc, incoming.sample(p.t1).control, p.t1) {
                return None;
            }
            energy += incoming.energy_between(t, p.t1);
            segments.push(Segment::Free(incoming));
        }
        let exit = arc.sample(t2);
        let outgoing = solve_unconstrained_bvp(exit.state(), t2, self.target, self.deadline).ok()?;
        if !bends_away(&arc, outgoing.sample(t2).control, t2) {
            return None;
        }
        let contact = Segment::Contact(arc);
        energy += contact.energy_between(p.t1, t2);
        energy += outgoing.energy_between(t2, self.deadline);
        segments.push(contact);
        segments.push(Segment::Free(outgoing));
        Some(Candidate {
            params: *p,
            segments,
            energy,
        })
    }

    fn classify(&self, c: &Candidate, t: f64) -> Outcome {
        match self.breach(&c.segments, t, self.coarse_step(t)) {
            None => Outcome::Complete,
            Some(b) if b.start >= c.params.t1 + c.params.duration - 1e-9 => Outcome::Partial,
            Some(_) => Outcome::Unsafe,
        }
    }

    /// Fills `complete` and `partial` with candidates sorted by energy.
    fn search(
        &self,
        start: AgentState,
        t: f64,
        direct: &PolyTrajectory,
        breach: &Breach,
        complete: &mut Vec<Candidate>,
        partial: &mut Vec<Candidate>,
    ) {
        let seeds = if breach.start <= t + 1e-9 {
            self.immediate_seeds(start, t, breach.leader)
        } else {
            self.grid_seeds(t, direct, breach)
        };
        let mut built: Vec<Candidate> = seeds.iter().filter_map(|p| self.build(start, t, p)).collect();
        built.sort_by(|a, b| a.energy.total_cmp(&b.energy));

        let mut checks = 0;
        for c in built {
            if complete.len() >= 4 || checks >= 120 {
                break;
            }
            checks += 1;
            match self.classify(&c, t) {
                Outcome::Complete => complete.push(c),
                Outcome::Partial if partial.len() < 3 => partial.push(c),
                _ => {}
            }
        }

        let refined: Vec<Candidate> = complete.iter().filter_map(|c| self.refine(start, t, c)).collect();
        complete.extend(refined);
        complete.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    }

    fn grid_seeds(&self, t: f64, direct: &PolyTrajectory, breach: &Breach) -> Vec<ArcParams> {
        let leader = &self.leaders[breach.leader];
        let d = self.params.contact_distance();
        let width = (breach.end - breach.start).max(0.05);
        let rel = |time: f64| {
            let (l, f) = (leader.sample(time), direct.sample(time));
            (l.position - f.position, l.velocity - f.velocity)
        };
        let (s_start, _) = rel(breach.start);
        let (s_close, s_dot_close) = rel(breach.closest_time);
        let speed_ref = s_dot_close.norm().max(0.05);
        let base = s_start.angle();

        let mut seeds = Vec::new();
        for sign in [1.0, -1.0] {
            let mut mids = vec![base + sign * FRAC_PI_2, base + sign * FRAC_PI_4, base + sign * 3.0 * FRAC_PI_4];
            if s_close.norm() > 0.01 * d {
                mids.push(s_close.angle());
            }
            for &mid in &mids {
                for dur_scale in [0.5, 1.0, 1.5, 2.5] {
                    let duration = dur_scale * width;
                    for speed_scale in [0.5, 1.0, 1.5] {
                        let speed = speed_scale * speed_ref;
                        let sweep = speed * duration / d;
                        if sweep > 2.0 * PI {
                            continue;
                        }
                        for shift in [-0.25, 0.0, 0.25] {
                            let t1 = (breach.closest_time - duration / 2.0 + shift * width).max(t + MIN_PIECE);
                            seeds.push(ArcParams {
                                leader: breach.leader,
                                t1,
                                duration,
                                angle: mid - sign * sweep / 2.0,
                                speed,
                                sign,
                                distance: d,
                            });
                        }
                    }
                }
            }
        }
        seeds
    }

    /// Arcs starting right now, for an agent already touching the leader.
    fn immediate_seeds(&self, start: AgentState, t: f64, leader: usize) -> Vec<ArcParams> {
        let k = self.leaders[leader].sample(t);
        let s = k.position - start.position;
        let s_dot = k.velocity - start.velocity;
        let distance = s.norm();
        if distance == 0.0 || (s.dot(s_dot) / distance).abs() > super::CONTINUITY_TOLERANCE {
            return Vec::new();
        }
        let sign = if s.cross(s_dot) < 0.0 { -1.0 } else { 1.0 };
        let span = self.deadline - t - 2.0 * MIN_PIECE;
        (1..=24)
            .map(|i| ArcParams {
                leader,
                t1: t,
                duration: span * (i as f64 / 24.0).powi(2),
                angle: s.angle(),
                speed: s_dot.norm(),
                sign,
                distance,
            })
            .collect()
    }

    /// Local derivative-free refinement of a clear candidate.
    fn refine(&self, start: AgentState, t: f64, seed: &Candidate) -> Option<Candidate> {
        let p0 = seed.params;
        let mut incumbent = seed.energy;
        if p0.t1 == t {
            let mut objective = |duration: f64| {
                let p = ArcParams { duration, ..p0 };
                self.score(start, t, &p, &mut incumbent)
            };
            let lo = (p0.duration * 0.5).max(MIN_PIECE);
            let hi = (p0.duration * 1.5).min(self.deadline - t - MIN_PIECE);
            let (duration, _) = golden_section(&mut objective, lo, hi, 1e-6);
            let best = self.build(start, t, &ArcParams { duration, ..p0 })?;
            return (best.energy < seed.energy && self.classify(&best, t) == Outcome::Complete).then_some(best);
        }
        let unpack = |x: &[f64]| ArcParams {
            t1: x[0],
            duration: x[1],
            angle: x[2],
            speed: x[3],
            ..p0
        };
        let scale = [
            0.1 * p0.duration,
            0.2 * p0.duration,
            0.2,
            0.2 * p0.speed.max(0.05),
        ];
        let (x, _) = nelder_mead(
            |x| self.score(start, t, &unpack(x), &mut incumbent),
            &[p0.t1, p0.duration, p0.angle, p0.speed],
            &scale,
            300,
            1e-10,
        );
        let best = self.build(start, t, &unpack(&x))?;
        (best.energy < seed.energy && self.classify(&best, t) == Outcome::Complete).then_some(best)
    }

    /// Energy of a candidate, checked for clearance only when it improves on
    /// the best clear value seen so far.
    fn score(&self, start: AgentState, t: f64, p: &ArcParams, incumbent: &mut f64) -> f64 {
        let Some(c) = self.build(start, t, p) else {
            return f64::INFINITY;
        };
        if c.energy >= *incumbent {
            return c.energy;
        }
        if self.classify(&c, t) == Outcome::Complete {
            *incumbent = c.energy;
            c.energy
        } else {
            f64::INFINITY
        }
    }
}

/// Whether a free arc with control `u` at the junction time stays outside
/// the contact circle next to the junction: `s·s̈ + ṡ·ṡ ≥ 0`.
fn bends_away(arc: &ConstrainedArc, u: Vec2, t: f64) -> bool {
    let (s, s_dot, _) = arc.separation(t);
    let leader = arc.leader.sample(t);
    let s_ddot = leader.control - u;
    s.dot(s_ddot) + s_dot.dot(s_dot) >= -1e-6
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::min_separation;

    const R: f64 = 0.05;

    fn params() -> PlannerParams {
        PlannerParams::new(R, 0.001)
    }

    fn static_leader(p: Vec2) -> Leader {
        Leader {
            id: 1,
            trajectory: Arc::new(PiecewiseTrajectory::hold(GoalMotion::fixed(1, p), 0.0)),
        }
    }

    #[test]
    fn no_leaders_gives_the_direct_transfer() {
        let start = AgentState::at_rest(Vec2::ZERO);
        let target = AgentState::at_rest(Vec2::new(1.0, 0.5));
        let plan = plan_trajectory(2, start, 0.0, target, 2.0, &[], &params()).unwrap();
        let direct = solve_unconstrained_bvp(start, 0.0, target, 2.0).unwrap();
        assert_eq!(plan.trajectory.segments().len(), 1);
        match &plan.trajectory.segments()[0] {
            Segment::Free(p) => assert_eq!(*p, direct),
            _ => panic!("expected a free arc"),
        }
        assert!(plan.arcs.is_empty());
    }

    #[test]
    fn wraps_around_a_static_leader() {
        let start = AgentState::at_rest(Vec2::new(-0.5, 0.0));
        let target = AgentState::at_rest(Vec2::new(0.5, 0.0));
        let leaders = [static_leader(Vec2::ZERO)];
        let plan = plan_trajectory(2, start, 0.0, target, 2.0, &leaders, &params()).unwrap();
        let direct = solve_unconstrained_bvp(start, 0.0, target, 2.0).unwrap();
        assert_eq!(plan.arcs.len(), 1);
        assert!(plan.energy > direct.energy_between(0.0, 2.0));
        let (_, d) = min_separation(&plan.trajectory, &leaders[0], 0.0, 2.0, 0.0002);
        assert!(d >= 2.0 * R - 1e-6, "{d}");
        let end = plan.trajectory.sample(2.0);
        assert!(end.position.distance(target.position) < 1e-9);
        assert!(end.velocity.distance(target.velocity) < 1e-9);
    }
}
