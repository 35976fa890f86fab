use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use formation_core::assignment::{
    build_cost_matrix, resolve_round, solve_local_assignment, AgentRecord, AssignmentState, CostMatrix, CostRow,
    NeighborhoodSnapshot, ProtocolParams,
};
use formation_core::dynamics::{energy_to_go, solve_unconstrained_bvp, PolyTrajectory};
use formation_core::numeric::gauss_legendre;
use formation_core::priority::{compare, has_priority, sort_by_priority, AgentSummary};
use formation_core::trajectory::{
    contact_basis, first_breach, min_separation, tangency, ConstrainedArc, Motion, PiecewiseTrajectory,
};
use formation_core::{AgentId, AgentState, GoalId, GoalMotion, Vec2};
use proptest::prelude::*;

fn vec2(scale: f64) -> impl Strategy<Value = Vec2> {
    (-scale..scale, -scale..scale).prop_map(|(x, y)| Vec2::new(x, y))
}

fn state(p: f64, v: f64) -> impl Strategy<Value = AgentState> {
    (vec2(p), vec2(v)).prop_map(|(p, v)| AgentState::new(p, v))
}

fn goal_set(m: usize) -> impl Strategy<Value = Vec<GoalMotion>> {
    prop::collection::vec((vec2(3.0), vec2(0.3)), m).prop_map(|g| {
        g.into_iter()
            .enumerate()
            .map(|(k, (base, vel))| GoalMotion {
                goal_index: k as GoalId + 1,
                base_offset: base,
                formation_velocity: vel,
                periodic_amplitude: Vec2::ZERO,
                periodic_frequency: 0.0,
            })
            .collect()
    })
}

fn brute_force(costs: &CostMatrix, row: usize, used: &mut [bool]) -> Option<f64> {
    if row == costs.rows().len() {
        return Some(0.0);
    }
    let mut best: Option<f64> = None;
    for g in 1..=costs.goal_count() {
        if used[g] || !costs.is_feasible(row, g as GoalId) {
            continue;
        }
        used[g] = true;
        if let Some(rest) = brute_force(costs, row + 1, used) {
            let total = costs.get(row, g as GoalId) + rest;
            best = Some(best.map_or(total, |b: f64| b.min(total)));
        }
        used[g] = false;
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bvp_hits_both_boundary_states(s in state(5.0, 2.0), e in state(5.0, 2.0), t0 in 0.0..30.0f64, h in 0.1..10.0f64) {
        let traj = solve_unconstrained_bvp(s, t0, e, t0 + h).unwrap();
        let (a, b) = (traj.sample(t0), traj.sample(t0 + h));
        prop_assert!(a.position.distance(s.position) < 1e-9);
        prop_assert!(a.velocity.distance(s.velocity) < 1e-9);
        prop_assert!(b.position.distance(e.position) < 1e-9 * (1.0 + e.position.norm()));
        prop_assert!(b.velocity.distance(e.velocity) < 1e-9 * (1.0 + e.velocity.norm()));
    }

    #[test]
    fn absolute_coefficients_rebuild_the_law(s in state(5.0, 2.0), e in state(5.0, 2.0), t0 in 0.0..10.0f64, h in 0.5..5.0f64) {
        let traj = solve_unconstrained_bvp(s, t0, e, t0 + h).unwrap();
        let [a, b, c, d] = traj.absolute_coefficients();
        let rebuilt = PolyTrajectory::from_absolute(t0, t0 + h, a, b, c, d);
        for k in 0..=8 {
            let t = t0 + h * k as f64 / 8.0;
            prop_assert!(traj.sample(t).position.distance(rebuilt.sample(t).position) < 1e-6);
        }
    }

    #[test]
    fn energy_to_go_never_increases(s in state(3.0, 1.0), e in state(3.0, 1.0), h in 0.2..8.0f64) {
        let traj = solve_unconstrained_bvp(s, 0.0, e, h).unwrap();
        let total = energy_to_go(&traj, 0.0).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..=200 {
            let now = energy_to_go(&traj, (h * k as f64 / 200.0).min(h)).unwrap();
            prop_assert!(now <= prev + 1e-12 * total.max(1.0));
            prop_assert!(now >= 0.0);
            prev = now;
        }
        prop_assert_eq!(energy_to_go(&traj, h).unwrap(), 0.0);
    }

    #[test]
    fn rest_to_rest_energy_scales_as_inverse_cube(d in vec2(4.0), h in 0.2..10.0f64) {
        let traj = solve_unconstrained_bvp(AgentState::default(), 0.0, AgentState::at_rest(d), h).unwrap();
        let want = 12.0 * d.norm_squared() / (h * h * h);
        prop_assert!((traj.energy_between(0.0, h) - want).abs() <= 1e-9 * want.max(1e-12));
    }

    #[test]
    fn admissible_variations_cost_energy(s in state(3.0, 1.0), e in state(3.0, 1.0), h in 0.5..5.0f64, c in vec2(2.0)) {
        // w(τ) = c τ²(h − τ)² keeps both boundary states; u + w'' must not beat u.
        let traj = solve_unconstrained_bvp(s, 0.0, e, h).unwrap();
        let base = traj.energy_between(0.0, h);
        let w2 = |t: f64| c * (2.0 * (h - t) * (h - t) - 8.0 * t * (h - t) + 2.0 * t * t);
        let varied = gauss_legendre(|t| (traj.sample(t).control + w2(t)).norm_squared(), 0.0, h, 8);
        prop_assert!(varied >= base - 1e-9 * base.max(1.0));
    }

    #[test]
    fn priority_is_antisymmetric_and_lexicographic(
        ni in 1usize..6, nj in 1usize..6,
        ei in prop_oneof![Just(0.0), Just(1.0), 0.0..2.0f64],
        ej in prop_oneof![Just(0.0), Just(1.0), 0.0..2.0f64],
        i in 1u32..20, j in 1u32..20,
    ) {
        prop_assume!(i != j);
        let a = AgentSummary::new(i, ni, ei);
        let b = AgentSummary::new(j, nj, ej);
        let ab = has_priority(&a, &b).unwrap();
        prop_assert_ne!(ab, has_priority(&b, &a).unwrap());
        prop_assert_eq!(ab, (ni, ei, i) > (nj, ej, j));
        prop_assert_eq!(ab, compare(&a, &b).is_gt());
        prop_assert!(has_priority(&a, &a).is_err());
    }

    #[test]
    fn priority_sort_puts_winners_first(sizes in prop::collection::vec((1usize..4, 0.0..2.0f64), 2..8)) {
        let mut s: Vec<AgentSummary> = sizes.iter().enumerate().map(|(k, &(n, e))| AgentSummary::new(k as AgentId + 1, n, e)).collect();
        sort_by_priority(&mut s);
        for w in s.windows(2) {
            prop_assert!(has_priority(&w[0], &w[1]).unwrap());
        }
    }

    #[test]
    fn local_assignment_matches_brute_force(
        (n, goals) in (1usize..=5).prop_flat_map(|n| (Just(n), (n..=6).prop_flat_map(goal_set))),
        states in prop::collection::vec(state(3.0, 0.5), 5),
        ban_bits in prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.25), 6), 5),
    ) {
        let m = goals.len();
        let bans: Vec<BTreeSet<GoalId>> = ban_bits.iter().map(|row| (1..=m).filter(|&g| row[g - 1]).map(|g| g as GoalId).collect()).collect();
        let rows: Vec<CostRow<'_>> = (0..n).map(|r| CostRow { agent: r as AgentId + 1, state: states[r], deadline: 8.0, banned: &bans[r] }).collect();
        let costs = build_cost_matrix(1, &rows, &goals, 0.0).unwrap();
        let best = brute_force(&costs, 0, &mut vec![false; m + 1]);
        match (solve_local_assignment(&costs), best) {
            (Ok(a), Some(b)) => {
                a.check(&costs).unwrap();
                prop_assert!((a.total_cost(&costs) - b).abs() <= 1e-9 * b.max(1.0));
            }
            (Err(_), None) => {}
            (got, want) => prop_assert!(false, "solver {:?} vs brute force {:?}", got.map(|a| a.total_cost(&costs)), want),
        }
    }

    #[test]
    fn ban_loop_leaves_distinct_goals(
        (n, goals) in (2usize..=7).prop_flat_map(|n| (Just(n), (n..=n + 2).prop_flat_map(goal_set))),
        positions in prop::collection::vec(vec2(1.5), 7),
        h in 0.5..4.0f64,
        crowd in any::<bool>(),
    ) {
        let ids: Vec<AgentId> = (1..=n as AgentId).collect();
        let agents: BTreeMap<AgentId, AgentRecord> = ids.iter().map(|&id| {
            let p = positions[id as usize - 1];
            let neighbors = ids.iter().copied().filter(|&j| positions[j as usize - 1].distance(p) <= h).collect();
            (id, AgentRecord { state: AgentState::at_rest(p), neighbors })
        }).collect();
        let snapshot = NeighborhoodSnapshot { now: 0.0, agents };
        let mut state = AssignmentState::new(ids.iter().copied(), 10.0);
        let mut resolvers: BTreeSet<AgentId> = ids.iter().copied().collect();
        if crowd {
            for &id in &ids {
                state.prescriptions.insert(id, 1);
            }
            resolvers.clear();
        }
        let params = ProtocolParams { ban_extension: 10.0, min_cost_horizon: 1.0 };
        let (next, report) = resolve_round(&snapshot, &goals, &state, &resolvers, &params).unwrap();
        prop_assert!(report.goal_rounds < n);
        prop_assert!(report.rounds >= 1);
        for (&k, rec) in &snapshot.agents {
            let g = next.prescriptions[&k];
            prop_assert!(!next.banned(k).contains(&g));
            for &j in &rec.neighbors {
                prop_assert!(j == k || next.prescriptions[&j] != g);
            }
        }
        for ban in &report.bans {
            prop_assert_eq!(next.deadlines[&ban.agent], 10.0);
        }
        prop_assert!(next.total_bans() <= n * goals.len());
    }

    #[test]
    fn breach_search_agrees_with_dense_sampling(a in state(1.0, 0.6), b in state(1.0, 0.6), threshold in 0.05..0.5f64) {
        let pa = PolyTrajectory::coast(0.0, 4.0, a);
        let pb = PolyTrajectory::coast(0.0, 4.0, b);
        let (_, closest) = min_separation(&pa, &pb, 0.0, 4.0, 0.001);
        let breach = first_breach(&pa, &[pb], 0.0, 4.0, 0.05, threshold);
        if closest < threshold - 1e-6 {
            prop_assert!(breach.is_some());
        }
        if closest > threshold + 1e-6 {
            prop_assert!(breach.is_none());
        }
        if let Some(br) = breach {
            prop_assert!(br.closest_distance <= threshold + 1e-9);
            prop_assert!(br.start <= br.closest_time && br.closest_time <= br.end);
        }
    }

    #[test]
    fn contact_arcs_keep_geometry(
        leader in state(1.0, 0.5), angle in -3.2..3.2f64, speed in 0.05..1.0f64,
        sign in prop_oneof![Just(1.0), Just(-1.0)], span in 0.1..3.0f64,
    ) {
        let r = 0.05;
        let lead = Arc::new(PiecewiseTrajectory::from(PolyTrajectory::coast(0.0, 10.0, leader)));
        let arc = ConstrainedArc::new(7, lead.clone(), 1.0, 1.0 + span, angle, speed, sign, 2.0 * r).unwrap();
        for k in 0..=20 {
            let t = 1.0 + span * k as f64 / 20.0;
            let (f, l) = (arc.sample(t), lead.sample(t));
            let (s, sd, sdd) = (l.position - f.position, l.velocity - f.velocity, l.control - f.control);
            for res in tangency(s, sd, sdd, r) {
                prop_assert!(res.abs() < 1e-9);
            }
            prop_assert!((sd.norm() - speed).abs() < 1e-9);
            let basis = contact_basis(s, sd, r).unwrap();
            prop_assert!((basis.p_hat.norm() - 1.0).abs() < 1e-9);
            prop_assert!((basis.q_hat.norm() - 1.0).abs() < 1e-9);
            prop_assert!(basis.p_hat.dot(basis.q_hat).abs() < 1e-9);
            prop_assert!((basis.p_hat.cross(basis.q_hat) - sign).abs() < 1e-9);
        }
    }

    #[test]
    fn goal_velocity_is_the_position_rate(base in vec2(3.0), vel in vec2(0.5), amp in vec2(0.3), w in 0.1..2.0f64, t in 0.0..30.0f64) {
        let g = GoalMotion { goal_index: 1, base_offset: base, formation_velocity: vel, periodic_amplitude: amp, periodic_frequency: w };
        let h = 1e-5;
        let fd = (g.kinematics(t + h).position - g.kinematics(t - h).position) / (2.0 * h);
        prop_assert!(fd.distance(g.kinematics(t).velocity) < 1e-7);
        let fa = (g.kinematics(t + h).velocity - g.kinematics(t - h).velocity) / (2.0 * h);
        prop_assert!(fa.distance(g.kinematics(t).control) < 1e-7);
    }
}
