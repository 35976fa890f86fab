use std::collections::BTreeSet;
use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use formation_core::assignment::{build_cost_matrix, solve_local_assignment, CostRow};
use formation_core::dynamics::solve_unconstrained_bvp;
use formation_core::simulator::{run, scenarios};
use formation_core::trajectory::{plan_to_goal, GoalRequest, Leader, PiecewiseTrajectory, PlannerParams};
use formation_core::{AgentState, GoalMotion, Vec2};

fn bvp(c: &mut Criterion) {
    let start = AgentState::new(Vec2::new(-1.0, 0.3), Vec2::new(0.2, -0.1));
    let end = AgentState::new(Vec2::new(2.0, 3.0), Vec2::new(0.15, 0.35));
    c.bench_function("bvp", |b| {
        b.iter(|| solve_unconstrained_bvp(black_box(start), 0.0, black_box(end), 10.0).unwrap())
    });
}

fn hungarian(c: &mut Criterion) {
    let goals = scenarios::formation_goals();
    let config = scenarios::formation(f64::INFINITY, 0);
    let agents = config.initial_agents().unwrap();
    let none = BTreeSet::new();
    let rows: Vec<CostRow<'_>> = agents
        .iter()
        .map(|a| CostRow { agent: a.id, state: a.state, deadline: 10.0, banned: &none })
        .collect();
    let costs = build_cost_matrix(1, &rows, &goals, 0.0).unwrap();
    c.bench_function("assignment_10x10", |b| b.iter(|| solve_local_assignment(black_box(&costs)).unwrap()));
}

fn head_on_plan(c: &mut Criterion) {
    let params = PlannerParams::new(0.05, 0.01);
    let lead_goal = AgentState::at_rest(Vec2::new(-1.6, 0.0));
    let lead = solve_unconstrained_bvp(AgentState::at_rest(Vec2::new(1.0, 0.0)), 0.0, lead_goal, 10.0).unwrap();
    let leaders = [Leader { id: 2, trajectory: Arc::new(PiecewiseTrajectory::from(lead)) }];
    let goal = GoalMotion {
        goal_index: 1,
        base_offset: Vec2::new(1.6, 0.0),
        formation_velocity: Vec2::ZERO,
        periodic_amplitude: Vec2::ZERO,
        periodic_frequency: 0.0,
    };
    let request = GoalRequest {
        agent: 1,
        start: AgentState::at_rest(Vec2::new(-1.0, 0.0)),
        now: 0.0,
        goal: &goal,
        deadline: 10.0,
    };
    c.bench_function("plan_head_on", |b| b.iter(|| plan_to_goal(black_box(&request), &leaders, &params).unwrap()));
}

fn simulation(c: &mut Criterion) {
    let config = scenarios::head_on(0.02, 0.3);
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    group.bench_function("head_on", |b| b.iter(|| run(black_box(&config)).unwrap()));
    group.finish();
}

criterion_group!(kernels, bvp, hungarian, head_on_plan, simulation);
criterion_main!(kernels);
