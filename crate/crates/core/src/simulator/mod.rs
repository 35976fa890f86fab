//! Deterministic time-stepped world.
//!
//! Each tick senses neighborhoods, re-runs the assignment loop when some
//! neighborhood changed, replans in priority order and advances every agent
//! by exact evaluation of its active trajectory.

mod events;
pub mod scenarios;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use events::{Event, Metrics, ReplanReason, TrajectoryRow};

use crate::assignment::{agent_summaries, resolve_round, AgentRecord, AssignmentState, NeighborhoodSnapshot, ProtocolParams};
use crate::dynamics::{check_bounds, AgentState, Bounds};
use crate::error::{Error, Result};
use crate::formation::{validate_goal_spacing, GoalMotion};
use crate::priority::{compare, sort_by_priority};
use crate::trajectory::{find_conflict, plan_to_goal, GoalRequest, Leader, Motion, PiecewiseTrajectory, PlannerParams, Segment};
use crate::vec2::Vec2;
use crate::{AgentId, GoalId};

/// An agent with an explicit initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentSpec {
    pub id: AgentId,
    pub state: AgentState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// N.
    pub agent_count: usize,
    /// Agent radius R (m).
    pub radius: f64,
    /// Sensing horizon h (m), possibly infinite.
    pub horizon: f64,
    /// Time granted after a ban, T (s).
    pub ban_extension: f64,
    /// Deadline every agent starts with (s).
    pub initial_deadline: f64,
    pub dt: f64,
    /// The run lasts at least this long, even after every agent arrived.
    pub min_time: f64,
    pub max_time: f64,
    pub seed: u64,
    pub bounds: Bounds,
    /// Corners of the box random agents are drawn from.
    pub spawn_box: Option<[Vec2; 2]>,
    /// Agents with explicit initial states. The rest are drawn at random.
    pub agents: Vec<AgentSpec>,
    pub goals: Vec<GoalMotion>,
}

const DEFAULT_SPAWN_HALF_WIDTH: f64 = 1.0;
const SPAWN_ATTEMPTS: usize = 100_000;

impl ScenarioConfig {
    /// A config with default settings: R = 0.05, h = ∞, T = 10 s, initial
    /// deadline T, dt = 0.01 s, run time between 20 s and 60 s.
    pub fn new(agent_count: usize, goals: Vec<GoalMotion>) -> Self {
        ScenarioConfig {
            agent_count,
            radius: 0.05,
            horizon: f64::INFINITY,
            ban_extension: 10.0,
            initial_deadline: 10.0,
            dt: 0.01,
            min_time: 20.0,
            max_time: 60.0,
            seed: 0,
            bounds: Bounds::UNBOUNDED,
            spawn_box: None,
            agents: Vec::new(),
            goals,
        }
    }

    pub fn goal_count(&self) -> usize {
        self.goals.len()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(msg));
        let (n, m) = (self.agent_count, self.goal_count());
        if n == 0 {
            return fail("the scenario needs at least one agent".into());
        }
        if n > m {
            return fail(format!("N exceeds M: {n} agents for {m} goals"));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return fail(format!("radius must be positive, got {}", self.radius));
        }
        if self.horizon.is_nan() || self.horizon < 4.0 * self.radius {
            return fail(format!(
                "sensing horizon {} is below 4R = {}",
                self.horizon,
                4.0 * self.radius
            ));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return fail(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.ban_extension > 0.0 && self.ban_extension.is_finite()) {
            return fail(format!("ban extension T must be positive, got {}", self.ban_extension));
        }
        if !(self.initial_deadline > 0.0 && self.initial_deadline.is_finite()) {
            return fail(format!("initial deadline must be positive, got {}", self.initial_deadline));
        }
        if !(self.min_time >= 0.0 && self.max_time.is_finite() && self.max_time >= self.min_time && self.max_time > 0.0) {
            return fail(format!(
                "need 0 <= min_time <= max_time, got {} and {}",
                self.min_time, self.max_time
            ));
        }
        self.bounds.validate()?;
        for (k, g) in self.goals.iter().enumerate() {
            if g.goal_index as usize != k + 1 {
                return fail(format!("goal {} is listed in position {}; goals must be numbered 1..=M in order", g.goal_index, k + 1));
            }
            let finite = g.base_offset.is_finite()
                && g.formation_velocity.is_finite()
                && g.periodic_amplitude.is_finite()
                && g.periodic_frequency.is_finite();
            if !finite {
                return fail(format!("goal {} has non-finite motion terms", g.goal_index));
            }
        }
        if self.agents.len() > n {
            return fail(format!("{} agents listed but N = {n}", self.agents.len()));
        }
        let mut ids = BTreeSet::new();
        for a in &self.agents {
            if a.id == 0 {
                return fail("agent ids start at 1".into());
            }
            if !ids.insert(a.id) {
                return fail(format!("agent id {} is listed twice", a.id));
            }
            if !a.state.is_finite() {
                return fail(format!("agent {} has a non-finite state", a.id));
            }
        }
        if let Some([lo, hi]) = self.spawn_box {
            if !(lo.x < hi.x && lo.y < hi.y) {
                return fail(format!("spawn box corners {lo} and {hi} are not ordered"));
            }
        }
        validate_goal_spacing(&self.goals, 2.0 * self.radius, self.max_time, self.dt)?;
        for (i, a) in self.agents.iter().enumerate() {
            for b in &self.agents[i + 1..] {
                let d = a.state.position.distance(b.state.position);
                if d <= 2.0 * self.radius {
                    return fail(format!(
                        "agents {} and {} start {d} m apart, need more than {} m",
                        a.id,
                        b.id,
                        2.0 * self.radius
                    ));
                }
            }
        }
        Ok(())
    }

    /// Explicit agents plus randomly drawn ones, sorted by id. Drawn agents
    /// start at rest, at least 4R from everybody, with the lowest free ids.
    pub fn initial_agents(&self) -> Result<Vec<AgentSpec>> {
        let mut out = self.agents.clone();
        let missing = self.agent_count.saturating_sub(out.len());
        if missing > 0 {
            let [lo, hi] = self.spawn_box.unwrap_or([
                Vec2::new(-DEFAULT_SPAWN_HALF_WIDTH, -DEFAULT_SPAWN_HALF_WIDTH),
                Vec2::new(DEFAULT_SPAWN_HALF_WIDTH, DEFAULT_SPAWN_HALF_WIDTH),
            ]);
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            let spacing = 4.0 * self.radius;
            let mut next_id = 1;
            for _ in 0..missing {
                while out.iter().any(|a| a.id == next_id) {
                    next_id += 1;
                }
                let mut placed = None;
                for _ in 0..SPAWN_ATTEMPTS {
                    let p = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
                    if out.iter().all(|a| a.state.position.distance(p) >= spacing) {
                        placed = Some(p);
                        break;
                    }
                }
                let Some(p) = placed else {
                    return Err(Error::Validation(format!(
                        "could not place {missing} agents {spacing} m apart in the spawn box"
                    )));
                };
                out.push(AgentSpec {
                    id: next_id,
                    state: AgentState::at_rest(p),
                });
            }
        }
        out.sort_by_key(|a| a.id);
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Shortest time an agent is given to get clear of a conflict.
    pub dodge_horizon: f64,
    /// Agents this close to their deadline keep their goal when their
    /// neighborhood changes, unless a conflict forces a ban.
    pub resolve_guard: f64,
    /// Largest tolerated distance to the goal at arrival.
    pub arrival_tolerance: f64,
    /// Sub-samples per tick for the separation metric.
    pub separation_substeps: usize,
    /// Times a failed plan is retried, each with the deadline pushed back
    /// by another `dodge_horizon`.
    pub deadline_retries: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            dodge_horizon: 1.0,
            resolve_guard: 0.5,
            arrival_tolerance: 1e-6,
            separation_substeps: 10,
            deadline_retries: 4,
        }
    }
}

/// The plan an agent is flying.
#[derive(Debug, Clone)]
pub struct ActivePlan {
    pub trajectory: Arc<PiecewiseTrajectory>,
    pub goal: GoalId,
    pub arrival: f64,
    /// Bumped on every replan.
    pub version: u64,
}

#[derive(Debug, Clone)]
pub struct AgentRuntime {
    pub id: AgentId,
    pub state: AgentState,
    pub plan: Option<ActivePlan>,
    pub transit_energy: f64,
    pub formation_energy: f64,
    /// Arrival time of the current plan once it has been reached.
    pub arrived_at: Option<f64>,
    /// Leader plan versions the current plan was checked against.
    checked: BTreeMap<AgentId, u64>,
}

impl AgentRuntime {
    fn new(spec: AgentSpec) -> Self {
        AgentRuntime {
            id: spec.id,
            state: spec.state,
            plan: None,
            transit_energy: 0.0,
            formation_energy: 0.0,
            arrived_at: None,
            checked: BTreeMap::new(),
        }
    }

    fn version(&self) -> u64 {
        self.plan.as_ref().map_or(0, |p| p.version)
    }
}

#[derive(Debug, Clone)]
pub struct WorldState {
    pub time: f64,
    pub agents: BTreeMap<AgentId, AgentRuntime>,
    pub assignment: AssignmentState,
}

/// Ids within distance `horizon` of `agent` (inclusive), including itself,
/// sorted.
pub fn sense_neighborhood(world: &WorldState, agent: AgentId, horizon: f64) -> Vec<AgentId> {
    let me = world.agents[&agent].state.position;
    world
        .agents
        .values()
        .filter(|other| other.id == agent || me.distance(other.state.position) <= horizon)
        .map(|other| other.id)
        .collect()
}

fn snapshot(world: &WorldState, horizon: f64) -> NeighborhoodSnapshot {
    let agents = world
        .agents
        .values()
        .map(|a| {
            let rec = AgentRecord {
                state: a.state,
                neighbors: sense_neighborhood(world, a.id, horizon),
            };
            (a.id, rec)
        })
        .collect();
    NeighborhoodSnapshot {
        now: world.time,
        agents,
    }
}

/// Final per-agent record.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentOutcome {
    pub id: AgentId,
    pub initial: AgentState,
    pub goal: Option<GoalId>,
    pub arrival: Option<f64>,
    pub transit_energy: f64,
    pub formation_energy: f64,
    pub bans: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ScenarioConfig,
    pub metrics: Metrics,
    pub trajectory: Vec<TrajectoryRow>,
    pub events: Vec<Event>,
    pub agents: Vec<AgentOutcome>,
}

/// A run halted by an error, with everything logged up to the halt.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub error: Error,
    pub partial: Box<RunOutput>,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "run halted at t = {}: {}", self.partial.metrics.end_time, self.error)
    }
}

impl std::error::Error for RunFailure {}

pub struct Simulation {
    config: ScenarioConfig,
    options: SimOptions,
    planner: PlannerParams,
    protocol: ProtocolParams,
    tick: u64,
    world: WorldState,
    initial: Vec<AgentSpec>,
    neighbors: BTreeMap<AgentId, Vec<AgentId>>,
    metrics: Metrics,
    rows: Vec<TrajectoryRow>,
    events: Vec<Event>,
    done: bool,
}

impl Simulation {
    pub fn new(config: ScenarioConfig, options: SimOptions) -> Result<Self> {
        config.validate()?;
        let initial = config.initial_agents()?;
        let agents: BTreeMap<_, _> = initial.iter().map(|&s| (s.id, AgentRuntime::new(s))).collect();
        let assignment = AssignmentState::new(agents.keys().copied(), config.initial_deadline);
        let planner = PlannerParams::new(config.radius, config.dt);
        let protocol = ProtocolParams {
            ban_extension: config.ban_extension,
            min_cost_horizon: options.dodge_horizon,
        };
        Ok(Simulation {
            options,
            planner,
            protocol,
            tick: 0,
            world: WorldState {
                time: 0.0,
                agents,
                assignment,
            },
            initial,
            neighbors: BTreeMap::new(),
            metrics: Metrics::default(),
            rows: Vec::new(),
            events: Vec::new(),
            done: false,
            config,
        })
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn time(&self) -> f64 {
        self.world.time
    }

    pub fn finished(&self) -> bool {
        self.done
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    fn all_arrived(&self) -> bool {
        self.world.agents.values().all(|a| a.arrived_at.is_some())
    }

    /// Runs one tick. Errors halt the simulation.
    pub fn step(&mut self) -> Result<()> {
        if self.done {
            return Ok(());
        }
        let result = self.tick_inner();
        if let Err(e) = &result {
            self.events.push(Event::Halt {
                time: self.world.time,
                reason: e.to_string(),
            });
            self.done = true;
        }
        result
    }

    fn tick_inner(&mut self) -> Result<()> {
        let now = self.world.time;
        let goals = &self.config.goals.clone();

        // Sense.
        let snap = snapshot(&self.world, self.config.horizon);
        let changed: BTreeSet<AgentId> = snap
            .agents
            .iter()
            .filter(|(id, rec)| self.neighbors.get(id) != Some(&rec.neighbors))
            .map(|(&id, _)| id)
            .collect();
        self.neighbors = snap.agents.iter().map(|(&id, r)| (id, r.neighbors.clone())).collect();

        // Assign.
        let mut reassigned = BTreeSet::new();
        if !changed.is_empty() {
            let state = &self.world.assignment;
            let resolvers: BTreeSet<AgentId> = changed
                .iter()
                .copied()
                .filter(|id| state.prescriptions.get(id).is_none() || state.deadlines[id] - now > self.options.resolve_guard)
                .collect();
            let (next, report) = resolve_round(&snap, goals, state, &resolvers, &self.protocol)?;
            for ban in &report.bans {
                self.events.push(Event::Ban {
                    time: now,
                    agent: ban.agent,
                    goal: ban.goal,
                    winner: ban.winner,
                    round: ban.round,
                    new_deadline: ban.new_deadline,
                });
            }
            for &id in &report.changed {
                self.events.push(Event::Assignment {
                    time: now,
                    agent: id,
                    goal: next.prescriptions[&id],
                    deadline: next.deadlines[&id],
                });
            }
            if !report.changed.is_empty() {
                self.metrics.assignment_events += 1;
            }
            self.metrics.max_rounds = self.metrics.max_rounds.max(report.rounds);
            self.world.assignment = next;
            reassigned = report.changed;
        }

        // Plan in priority order.
        let ranks = agent_summaries(&snap, goals, &self.world.assignment, &self.protocol)?;
        let mut order: Vec<_> = ranks.values().copied().collect();
        sort_by_priority(&mut order);
        for summary in &order {
            let id = summary.agent_id;
            let leaders: Vec<Leader> = snap
                .neighbors(id)
                .iter()
                .filter(|&&j| j != id && compare(&ranks[&j], summary).is_gt())
                .filter_map(|&j| {
                    let plan = self.world.agents[&j].plan.as_ref()?;
                    Some(Leader {
                        id: j,
                        trajectory: plan.trajectory.clone(),
                    })
                })
                .collect();
            let versions: BTreeMap<AgentId, u64> =
                leaders.iter().map(|l| (l.id, self.world.agents[&l.id].version())).collect();
            let agent = &self.world.agents[&id];
            let reason = match &agent.plan {
                None => Some(ReplanReason::Initial),
                Some(_) if reassigned.contains(&id) => Some(ReplanReason::Reassigned),
                Some(plan) if agent.checked != versions => {
                    let settle = leaders
                        .iter()
                        .map(|l| l.trajectory.settle_time())
                        .filter(|t| t.is_finite())
                        .fold(plan.arrival, f64::max);
                    let until = (settle + self.planner.tail_margin).max(now + self.config.dt);
                    find_conflict(&plan.trajectory, &leaders, now, until, &self.planner).map(|_| ReplanReason::Conflict)
                }
                Some(_) => None,
            };
            if let Some(reason) = reason {
                self.replan(id, reason, &leaders)?;
            }
            self.world.agents.get_mut(&id).expect("agent exists").checked = versions;
        }

        // Log.
        for a in self.world.agents.values() {
            let plan = a.plan.as_ref().expect("every agent has a plan after planning");
            let k = plan.trajectory.sample(now);
            self.rows.push(TrajectoryRow {
                t: now,
                agent_id: a.id,
                position: k.position,
                velocity: k.velocity,
                control: k.control,
                goal: plan.goal,
            });
        }

        // Advance.
        let next_time = (self.tick + 1) as f64 * self.config.dt;
        for a in self.world.agents.values_mut() {
            let plan = a.plan.as_ref().expect("planned");
            let traj = &plan.trajectory;
            let arrival = plan.arrival;
            if now < arrival {
                a.transit_energy += traj.energy_between(now, next_time.min(arrival));
            }
            if next_time > arrival {
                a.formation_energy += traj.energy_between(now.max(arrival), next_time);
            }
            a.state = traj.sample(next_time).state();
            if a.arrived_at.is_none() && arrival <= next_time {
                a.arrived_at = Some(arrival);
                let goal = &goals[plan.goal as usize - 1];
                let error = traj.sample(arrival).position.distance(goal.kinematics(arrival).position);
                self.metrics.max_arrival_error = self.metrics.max_arrival_error.max(error);
                self.events.push(Event::Arrival {
                    time: arrival,
                    agent: a.id,
                    goal: plan.goal,
                });
                if error > self.options.arrival_tolerance {
                    return Err(Error::Invariant(format!(
                        "agent {} reached goal {} {error} m off target",
                        a.id, plan.goal
                    )));
                }
            }
        }
        self.track_separation(now, next_time);

        self.tick += 1;
        self.world.time = next_time;
        if next_time >= self.config.max_time - 1e-9 || (next_time >= self.config.min_time - 1e-9 && self.all_arrived()) {
            self.done = true;
        }
        Ok(())
    }

    fn replan(&mut self, id: AgentId, reason: ReplanReason, leaders: &[Leader]) -> Result<()> {
        let now = self.world.time;
        let agent = &self.world.agents[&id];
        let prescribed = self
            .world
            .assignment
            .prescribed(id)
            .ok_or_else(|| Error::Invariant(format!("agent {id} plans without a goal")))?;
        let goal = &self.config.goals[prescribed.goal_index as usize - 1];
        let base = prescribed.deadline.max(now + self.options.dodge_horizon);
        let mut attempt = 0;
        let plan = loop {
            let request = GoalRequest {
                agent: id,
                start: agent.state,
                now,
                goal,
                deadline: base + self.options.dodge_horizon * attempt as f64,
            };
            match plan_to_goal(&request, leaders, &self.planner) {
                Err(Error::NoFeasibleTrajectory { .. }) if attempt < self.options.deadline_retries => attempt += 1,
                other => break other?,
            }
        };
        self.metrics.replans += 1;
        self.events.push(Event::Replan {
            time: now,
            agent: id,
            reason,
            arcs: plan.arcs.len(),
            energy: plan.energy,
            arrival: plan.arrival,
        });
        for arc in &plan.arcs {
            self.events.push(Event::Junction {
                time: now,
                agent: id,
                leader: arc.leader,
                t1: arc.t1,
                t2: arc.t2,
                entry_angle: arc.entry_angle,
                relative_speed: arc.relative_speed,
                rotation_sign: arc.rotation_sign,
            });
        }
        if self.config.bounds != Bounds::UNBOUNDED {
            let mut seen = BTreeSet::new();
            for seg in plan.trajectory.segments() {
                let Segment::Free(poly) = seg else { continue };
                for v in check_bounds(poly, &self.config.bounds, self.config.dt) {
                    if seen.insert(v.kind.as_str()) {
                        self.events.push(Event::BoundViolation {
                            time: now,
                            agent: id,
                            kind: v.kind,
                            at: v.time,
                            magnitude: v.magnitude,
                        });
                    }
                }
            }
        }
        let agent = self.world.agents.get_mut(&id).expect("agent exists");
        let version = agent.version() + 1;
        agent.plan = Some(ActivePlan {
            trajectory: Arc::new(plan.trajectory),
            goal: prescribed.goal_index,
            arrival: plan.arrival,
            version,
        });
        agent.arrived_at = None;
        Ok(())
    }

    fn track_separation(&mut self, from: f64, to: f64) {
        let plans: Vec<&PiecewiseTrajectory> = self
            .world
            .agents
            .values()
            .filter_map(|a| a.plan.as_ref().map(|p| &*p.trajectory))
            .collect();
        if plans.len() < 2 {
            return;
        }
        let steps = self.options.separation_substeps.max(1);
        let mut positions = Vec::with_capacity(plans.len());
        for k in 0..=steps {
            let t = from + (to - from) * k as f64 / steps as f64;
            positions.clear();
            positions.extend(plans.iter().map(|p| p.sample(t).position));
            for i in 0..positions.len() {
                for j in i + 1..positions.len() {
                    let d = positions[i].distance(positions[j]);
                    if d < self.metrics.min_separation {
                        self.metrics.min_separation = d;
                    }
                }
            }
        }
    }

    /// Closes the logs at the current time and returns everything recorded.
    pub fn into_output(mut self) -> RunOutput {
        let end = self.world.time;
        if self.rows.last().is_some_and(|r| r.t < end) {
            for a in self.world.agents.values() {
                let Some(plan) = a.plan.as_ref() else { continue };
                let k = plan.trajectory.sample(end);
                self.rows.push(TrajectoryRow {
                    t: end,
                    agent_id: a.id,
                    position: k.position,
                    velocity: k.velocity,
                    control: k.control,
                    goal: plan.goal,
                });
            }
        }
        let bound = self.config.initial_deadline + self.config.goal_count() as f64 * self.config.ban_extension;
        let m = &mut self.metrics;
        m.end_time = end;
        m.total_bans = self.world.assignment.total_bans();
        m.completed = self.world.agents.values().all(|a| a.arrived_at.is_some());
        m.t_f = self.world.agents.values().filter_map(|a| a.arrived_at).fold(0.0, f64::max);
        m.arrival_bound_holds = self
            .world
            .agents
            .values()
            .all(|a| a.arrived_at.map_or(true, |t| t <= bound + 1e-9));
        m.total_energy = self.world.agents.values().map(|a| a.transit_energy).sum();
        m.formation_energy = self.world.agents.values().map(|a| a.formation_energy).sum();
        let agents = self
            .initial
            .iter()
            .map(|spec| {
                let a = &self.world.agents[&spec.id];
                AgentOutcome {
                    id: spec.id,
                    initial: spec.state,
                    goal: a.plan.as_ref().map(|p| p.goal),
                    arrival: a.arrived_at,
                    transit_energy: a.transit_energy,
                    formation_energy: a.formation_energy,
                    bans: self.world.assignment.banned(spec.id).len(),
                }
            })
            .collect();
        RunOutput {
            config: self.config,
            metrics: self.metrics,
            trajectory: self.rows,
            events: self.events,
            agents,
        }
    }
}

/// Runs a scenario with default options.
pub fn run(config: &ScenarioConfig) -> std::result::Result<RunOutput, RunFailure> {
    run_with(config, SimOptions::default())
}

pub fn run_with(config: &ScenarioConfig, options: SimOptions) -> std::result::Result<RunOutput, RunFailure> {
    let mut sim = match Simulation::new(config.clone(), options) {
        Ok(sim) => sim,
        Err(error) => {
            return Err(RunFailure {
                error,
                partial: Box::new(RunOutput {
                    config: config.clone(),
                    metrics: Metrics::default(),
                    trajectory: Vec::new(),
                    events: Vec::new(),
                    agents: Vec::new(),
                }),
            })
        }
    };
    while !sim.finished() {
        if let Err(error) = sim.step() {
            return Err(RunFailure {
                error,
                partial: Box::new(sim.into_output()),
            });
        }
    }
    Ok(sim.into_output())
}
