use std::time::Duration;

use xcbs_core::planner::{plan_coupled_oracle, OracleLimits};
use xcbs_core::search::{solve, AgentConstraints, Horizon, LowLevelQuery};
use xcbs_core::{
    default_benchmark_params, detect_conflicts, plan, CollisionChecker, Configuration, GridDomain, PlanError,
    PlanStatus, PlannerConfig, Solution, Variant,
};

fn cell(x: i32, y: i32) -> Configuration {
    Configuration::from([x, y])
}

fn assert_valid(g: &GridDomain, s: &Solution, starts: &[Configuration], goals: &[Configuration]) {
    let ck = CollisionChecker::new(g, false);
    assert!(detect_conflicts(&s.paths, &ck).is_empty(), "conflicts in {s:?}");
    for (a, p) in s.paths.iter().enumerate() {
        assert_eq!(p.first(), Some(&starts[a]));
        assert_eq!(p.last(), Some(&goals[a]));
        for w in p.waypoints().windows(2) {
            assert!(ck.is_motion_valid(a, &w[0], &w[1]));
        }
    }
}

fn fixed(config: PlannerConfig, h: u32) -> PlannerConfig {
    config.with_horizon(Horizon::Fixed(h))
}

#[test]
fn single_agent_root_is_returned() {
    let g = GridDomain::new(4, 4);
    let (s, t) = ([cell(0, 0)], [cell(3, 3)]);
    let out = plan(&g, &s, &t, &PlannerConfig::cbs()).unwrap();
    assert_eq!(out.status, PlanStatus::Solved);
    assert_eq!(out.cost(), Some(6));
    assert_eq!(out.stats.ct_expansions, 1);
    assert_eq!(out.stats.ll_calls, 1);
}

/// Corridor with a one-cell bay below its middle.
fn swap_corridor() -> (GridDomain, Vec<Configuration>, Vec<Configuration>) {
    let g = GridDomain::from_rows(&["...", "#.#"]).unwrap();
    (g, vec![cell(0, 0), cell(2, 0)], vec![cell(2, 0), cell(0, 0)])
}

#[test]
fn swap_through_bay_matches_oracle() {
    let (g, s, t) = swap_corridor();
    let oracle = plan(&g, &s, &t, &fixed(PlannerConfig::coupled_oracle(), 10)).unwrap();
    let cbs = plan(&g, &s, &t, &fixed(PlannerConfig::cbs(), 10)).unwrap();
    assert_eq!(oracle.status, PlanStatus::Solved);
    assert_eq!(cbs.cost(), oracle.cost());
    assert_eq!(cbs.cost(), Some(7));
    assert_valid(&g, cbs.solution.as_ref().unwrap(), &s, &t);
    assert_valid(&g, oracle.solution.as_ref().unwrap(), &s, &t);
}

#[test]
fn walled_off_goal_fails() {
    let g = GridDomain::from_rows(&["..#.", "..#."]).unwrap();
    let (s, t) = ([cell(0, 0), cell(1, 1)], [cell(3, 0), cell(0, 1)]);
    for v in [
        Variant::Cbs,
        Variant::Ecbs,
        Variant::XCbs,
        Variant::XEcbs,
        Variant::Prioritized,
        Variant::CoupledOracle,
    ] {
        let out = plan(&g, &s, &t, &fixed(PlannerConfig::for_variant(v), 8)).unwrap();
        assert_eq!(out.status, PlanStatus::Infeasible, "{v}");
        assert!(out.solution.is_none());
    }
}

#[test]
fn infeasible_child_is_discarded_and_sibling_solves() {
    // agent 0 has no slack within the horizon, so only agent 1 can yield
    let g = GridDomain::from_rows(&["#.###", "....."]).unwrap();
    let (s, t) = ([cell(0, 1), cell(1, 0)], [cell(4, 1), cell(2, 1)]);
    let cfg = fixed(PlannerConfig::cbs(), 4).with_replan_records();
    let out = plan(&g, &s, &t, &cfg).unwrap();
    assert_eq!(out.status, PlanStatus::Solved);
    assert!(out.replans.iter().any(|r| r.agent == 0 && r.cost.is_none()));
    let oracle = plan(&g, &s, &t, &fixed(PlannerConfig::coupled_oracle(), 4)).unwrap();
    assert_eq!(out.cost(), oracle.cost());
    assert_valid(&g, out.solution.as_ref().unwrap(), &s, &t);
}

#[test]
fn first_expansion_creates_one_constraint_per_agent() {
    let (g, s, t) = swap_corridor();
    let out = plan(&g, &s, &t, &fixed(PlannerConfig::cbs(), 10).with_replan_records()).unwrap();
    let first: Vec<_> = out.replans.iter().take(2).collect();
    assert_eq!(first.len(), 2);
    assert_eq!(first[0].constraints.len(), 1);
    assert_eq!(first[1].constraints.len(), 1);
    assert_ne!(first[0].agent, first[1].agent);
    assert_eq!(first[0].constraints[0].time, first[1].constraints[0].time);
}

#[test]
fn prioritized_planning_depends_on_order() {
    let g = GridDomain::from_rows(&["....", "#.##"]).unwrap();
    let (s, t) = ([cell(1, 0), cell(0, 0)], [cell(2, 0), cell(3, 0)]);
    let pp = |order: Vec<usize>| {
        plan(
            &g,
            &s,
            &t,
            &fixed(PlannerConfig::prioritized(1.0), 10).with_order(order),
        )
        .unwrap()
    };
    assert_eq!(pp(vec![0, 1]).status, PlanStatus::Infeasible);
    let ok = pp(vec![1, 0]);
    assert_eq!(ok.status, PlanStatus::Solved);
    assert_valid(&g, ok.solution.as_ref().unwrap(), &s, &t);
    assert!(matches!(
        plan(&g, &s, &t, &PlannerConfig::prioritized(1.0).with_order(vec![0, 0])),
        Err(PlanError::InvalidOrder)
    ));
}

#[test]
fn prioritized_with_disjoint_agents_equals_independent_planning() {
    let g = GridDomain::from_rows(&["....", "####", "...."]).unwrap();
    let (s, t) = ([cell(0, 0), cell(0, 2)], [cell(3, 0), cell(3, 2)]);
    let out = plan(&g, &s, &t, &PlannerConfig::prioritized(1.0)).unwrap();
    assert_eq!(out.cost(), Some(6));
    let ck = CollisionChecker::new(&g, true);
    let single = solve(
        &ck,
        LowLevelQuery::new(0, &s[0], &t[0]),
        &PlannerConfig::prioritized(1.0).low_level_params(None),
    )
    .unwrap();
    assert_eq!(out.solution.unwrap().paths[0], single.path.unwrap());
}

#[test]
fn oracle_single_agent_and_guard() {
    let g = GridDomain::new(3, 3);
    let out = plan(
        &g,
        &[cell(0, 0)],
        &[cell(2, 2)],
        &fixed(PlannerConfig::coupled_oracle(), 10),
    )
    .unwrap();
    assert_eq!(out.cost(), Some(4));

    let mut cfg = fixed(PlannerConfig::coupled_oracle(), 10);
    cfg.oracle_limits = OracleLimits {
        max_branching: 10,
        ..Default::default()
    };
    let err = plan(&g, &[cell(0, 0), cell(2, 0)], &[cell(2, 2), cell(0, 2)], &cfg).unwrap_err();
    assert!(err.to_string().starts_with("oracle guard exceeded"));

    let ck = CollisionChecker::new(&g, true);
    cfg.oracle_limits = OracleLimits {
        max_branching: 1000,
        max_states: 5,
    };
    let err = plan_coupled_oracle(&ck, &[cell(0, 0), cell(2, 0)], &[cell(2, 2), cell(0, 2)], &cfg).unwrap_err();
    assert!(matches!(err, PlanError::OracleGuard(_)));
}

#[test]
fn mismatched_counts_and_bad_endpoints_are_errors() {
    let g = GridDomain::from_rows(&["..#"]).unwrap();
    let err = plan(&g, &[cell(0, 0)], &[], &PlannerConfig::cbs()).unwrap_err();
    assert_eq!(err, PlanError::AgentCountMismatch { starts: 1, goals: 0 });
    let err = plan(&g, &[cell(0, 0)], &[cell(2, 0)], &PlannerConfig::cbs()).unwrap_err();
    assert!(matches!(err, PlanError::InvalidEndpoint { agent: 0, .. }));
}

#[test]
fn variant_weight_rules_are_enforced() {
    assert!(PlannerConfig::cbs().validate().is_ok());
    let mut c = PlannerConfig::cbs();
    c.w1 = 2.0;
    assert!(c.validate().is_err());
    let mut c = PlannerConfig::xcbs(50.0);
    assert!(c.validate().is_ok());
    c.wh = 1.3;
    assert!(c.validate().is_err());
    let mut c = PlannerConfig::ecbs(1.0, 1.0, 1.0);
    c.use_experience = true;
    assert!(c.validate().is_err());
    assert!(PlannerConfig::ecbs(0.5, 1.0, 1.0).validate().is_err());
}

#[test]
fn experiment_defaults() {
    let params = default_benchmark_params();
    let get = |v: Variant| params.iter().find(|c| c.variant == v).unwrap();
    let x = get(Variant::XEcbs);
    assert_eq!((x.w1, x.w2, x.wh), (50.0, 1.3, 1.3));
    let c = get(Variant::Cbs);
    assert_eq!((c.w1, c.w2, c.wh), (1.0, 1.0, 1.0));
    assert_eq!(get(Variant::XCbs).w1, 50.0);
    assert_eq!(get(Variant::Ecbs).w1, 50.0);
    assert_eq!(get(Variant::Prioritized).w1, 50.0);
    assert!(params.iter().all(|c| c.timeout == Some(Duration::from_secs(60))));
    assert!(params.iter().all(|c| c.validate().is_ok()));
}

#[test]
fn every_variant_returns_valid_bounded_solutions() {
    let g = GridDomain::from_rows(&["....", ".#..", "....", "..#."]).unwrap();
    let s = [cell(0, 0), cell(3, 0), cell(0, 3)];
    let t = [cell(3, 2), cell(0, 2), cell(3, 0)];
    let opt = plan(&g, &s, &t, &fixed(PlannerConfig::coupled_oracle(), 10))
        .unwrap()
        .cost()
        .unwrap();
    let configs = [
        PlannerConfig::cbs(),
        PlannerConfig::bcbs(1.3, 1.3),
        PlannerConfig::ecbs(1.3, 1.3, 2.0),
        PlannerConfig::xcbs(2.0),
        PlannerConfig::xecbs(2.0, 1.3, 1.3),
        PlannerConfig::prioritized(1.0),
    ];
    for cfg in configs {
        let cfg = fixed(cfg, 10);
        let out = plan(&g, &s, &t, &cfg).unwrap();
        let sol = out
            .solution
            .as_ref()
            .unwrap_or_else(|| panic!("{} failed", cfg.variant));
        assert_valid(&g, sol, &s, &t);
        if cfg.variant.is_ct() {
            let cost = sol.sum_of_costs as f64;
            assert!(cost <= cfg.suboptimality_bound() * opt as f64 + 1e-9, "{}", cfg.variant);
            let lb = out.lower_bound.unwrap();
            assert!(lb <= opt as f64 + 1e-9);
            assert!(cost <= out.bound * lb + 1e-9);
            assert!(out.lb_trace.windows(2).all(|w| w[0] <= w[1] + 1e-9), "{}", cfg.variant);
        }
    }
}

#[test]
fn experience_reuse_shrinks_child_replans() {
    let (g, s, t) = swap_corridor();
    let cfg = fixed(PlannerConfig::xcbs(1.0), 10).with_replan_records();
    let out = plan(&g, &s, &t, &cfg).unwrap();
    assert!(out.is_solved());
    let ck = CollisionChecker::new(&g, true);
    let params = cfg.low_level_params(None);
    let (mut warm, mut cold) = (0, 0);
    for r in &out.replans {
        let ac = AgentConstraints::for_agent(r.agent, &r.constraints);
        let q = LowLevelQuery::new(r.agent, &r.start, &r.goal).with_constraints(&ac);
        let plain = solve(&ck, q, &params).unwrap();
        assert_eq!(plain.cost(), r.cost);
        warm += r.expansions;
        cold += plain.expansions;
    }
    assert!(warm < cold, "warm {warm} vs cold {cold}");
}

#[test]
fn cache_changes_counts_not_results() {
    let g = GridDomain::from_rows(&["....", ".#..", "....", "..#."]).unwrap();
    let s = [cell(0, 0), cell(3, 0), cell(0, 3)];
    let t = [cell(3, 2), cell(0, 2), cell(3, 0)];
    for v in [Variant::Cbs, Variant::XEcbs] {
        let on = plan(&g, &s, &t, &fixed(PlannerConfig::for_variant(v), 10)).unwrap();
        let off = plan(&g, &s, &t, &fixed(PlannerConfig::for_variant(v).with_cache(false), 10)).unwrap();
        assert_eq!(on.solution, off.solution);
        assert!(on.stats.checks.static_checks < off.stats.checks.static_checks);
        assert_eq!(on.stats.checks.pairwise_checks, off.stats.checks.pairwise_checks);
    }
}

#[test]
fn timeout_reports_failure() {
    let g = GridDomain::new(4, 4);
    let s = [cell(0, 0), cell(3, 3)];
    let t = [cell(3, 3), cell(0, 0)];
    let cfg = PlannerConfig::cbs().with_timeout(Duration::from_nanos(1));
    let out = plan(&g, &s, &t, &cfg).unwrap();
    assert_eq!(out.status, PlanStatus::TimedOut);
}
