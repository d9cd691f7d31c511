use std::collections::{HashSet, VecDeque};
use std::f64::consts::PI;

use xcbs_core::search::{
    solve, suffix, AgentConstraints, FocalMode, Horizon, LowLevelParams, LowLevelQuery, Termination, XwaStar,
};
use xcbs_core::{
    Arm, ArmDomain, CollisionChecker, Configuration, Constraint, Domain, Experience, GridDomain, PairwiseCollision,
    Path, PlanError, Point2, TimedState,
};

fn cell(x: i32, y: i32) -> Configuration {
    Configuration::from([x, y])
}

/// Minimum arrival time at `goal` with no later constraint at the goal, by
/// breadth-first search over timed states.
fn timed_oracle(
    domain: &GridDomain,
    start: &Configuration,
    goal: &Configuration,
    cons: &AgentConstraints,
    horizon: u32,
) -> Option<u32> {
    let mut seen = HashSet::new();
    let mut queue = VecDeque::from([(start.clone(), 0u32)]);
    seen.insert((start.clone(), 0));
    let mut nbrs = Vec::new();
    while let Some((q, t)) = queue.pop_front() {
        if &q == goal && !cons.blocks_parking(&q, t) {
            return Some(t);
        }
        if t == horizon {
            continue;
        }
        nbrs.clear();
        domain.motion_primitives(0, &q, &mut nbrs);
        nbrs.push(q.clone());
        for n in nbrs.drain(..) {
            if !domain.state_free(0, &n) || cons.forbids_vertex(&n, t + 1) || cons.forbids_edge(&q, &n, t) {
                continue;
            }
            if seen.insert((n.clone(), t + 1)) {
                queue.push_back((n, t + 1));
            }
        }
    }
    None
}

fn assert_respects(path: &Path, cons: &[Constraint]) {
    for c in cons {
        assert!(!path.violates(c), "path {path:?} violates {c:?}");
    }
}

#[test]
fn open_grid_corner_to_corner() {
    let g = GridDomain::new(3, 3);
    let ck = CollisionChecker::new(&g, true);
    let (s, t) = (cell(0, 0), cell(2, 2));
    let r = solve(&ck, LowLevelQuery::new(0, &s, &t), &LowLevelParams::default()).unwrap();
    assert_eq!(r.cost(), Some(4));
    assert_eq!(r.lower_bound, 4.0);
    assert!(r.expansions > 0);
}

#[test]
fn goal_vertex_constraint_delays_arrival() {
    let g = GridDomain::new(3, 3);
    let ck = CollisionChecker::new(&g, true);
    let (s, t) = (cell(0, 0), cell(2, 2));
    let cons = [Constraint::vertex(0, t.clone(), 4)];
    let ac = AgentConstraints::for_agent(0, &cons);
    let params = LowLevelParams::default().with_horizon(Horizon::Fixed(12));
    let r = solve(&ck, LowLevelQuery::new(0, &s, &t).with_constraints(&ac), &params).unwrap();
    let path = r.path.expect("solvable");
    let expected = timed_oracle(&g, &s, &t, &ac, 12).unwrap();
    assert_eq!(path.cost(), expected);
    assert!(expected == 5 || expected == 6);
    assert_respects(&path, &cons);
    assert!(r.lower_bound <= expected as f64);
}

#[test]
fn unreachable_goal_fails_without_error() {
    let g = GridDomain::from_rows(&["..#.", "..#.", "..#."]).unwrap();
    let ck = CollisionChecker::new(&g, true);
    let (s, t) = (cell(0, 0), cell(3, 0));
    let params = LowLevelParams::default().with_horizon(Horizon::Fixed(10));
    let r = solve(&ck, LowLevelQuery::new(0, &s, &t), &params).unwrap();
    assert!(r.path.is_none());
    assert!(r.lower_bound.is_infinite());
    assert!(!r.timed_out);
}

#[test]
fn blocked_endpoint_is_an_error() {
    let g = GridDomain::from_rows(&[".#"]).unwrap();
    let ck = CollisionChecker::new(&g, true);
    let (s, t) = (cell(0, 0), cell(1, 0));
    let err = solve(&ck, LowLevelQuery::new(0, &s, &t), &LowLevelParams::default()).unwrap_err();
    assert!(matches!(err, PlanError::InvalidEndpoint { agent: 0, .. }));
    assert!(err.to_string().starts_with("invalid endpoint"));
}

#[test]
fn suffix_uses_earliest_occurrence() {
    let (a, b, c, z) = (cell(0, 0), cell(1, 0), cell(2, 0), cell(9, 9));
    let exp = Experience::new(vec![a.clone(), b.clone(), c.clone()]);
    assert_eq!(suffix(&exp, &a), &[b.clone(), c.clone()]);
    let exp = Experience::new(vec![a.clone(), b.clone(), a.clone(), c.clone()]);
    assert_eq!(suffix(&exp, &a), &[b.clone(), a.clone(), c.clone()]);
    let exp = Experience::new(vec![a.clone(), b.clone()]);
    assert!(suffix(&exp, &z).is_empty());
    assert!(suffix(&exp, &b).is_empty());
}

#[test]
fn successors_of_center_cell() {
    let g = GridDomain::new(3, 3);
    let ck = CollisionChecker::new(&g, true);
    let (s, t) = (cell(1, 1), cell(2, 2));
    let params = LowLevelParams::default();
    let mut search = XwaStar::new(&ck, LowLevelQuery::new(0, &s, &t), &params).unwrap();
    let from = TimedState::new(s.clone(), 0);
    assert_eq!(search.successors(&from).len(), 5);

    let cons = [Constraint::vertex(0, cell(1, 2), 1)];
    let ac = AgentConstraints::for_agent(0, &cons);
    let mut search = XwaStar::new(&ck, LowLevelQuery::new(0, &s, &t).with_constraints(&ac), &params).unwrap();
    let succ = search.successors(&from);
    assert_eq!(succ.len(), 4);
    assert!(succ
        .iter()
        .all(|(n, c)| n.time == 1 && *c == 1 && n.config != cell(1, 2)));
}

#[test]
fn single_joint_at_lower_limit_has_two_successors() {
    let arm = Arm::new(Point2::new(0.0, 0.0), vec![1.0], PI / 16.0);
    let lo = -16;
    let d = ArmDomain::new(vec![arm], vec![], 0.05);
    let ck = CollisionChecker::new(&d, true);
    let (s, t) = (Configuration::from([lo]), Configuration::from([0]));
    let params = LowLevelParams::default();
    let mut search = XwaStar::new(&ck, LowLevelQuery::new(0, &s, &t), &params).unwrap();
    let succ = search.successors(&TimedState::new(s.clone(), 0));
    assert_eq!(succ.len(), 2);
}

#[test]
fn try_insert_or_update_relaxes_strictly() {
    let g = GridDomain::new(5, 1);
    let ck = CollisionChecker::new(&g, true);
    let (s, t) = (cell(0, 0), cell(4, 0));
    let params = LowLevelParams::default();
    let mut search = XwaStar::new(&ck, LowLevelQuery::new(0, &s, &t), &params).unwrap();
    let root = search.node_id(&TimedState::new(s.clone(), 0)).unwrap();

    // unseen state: g = g(root) + 1
    let s2 = TimedState::new(cell(1, 0), 1);
    assert!(search.try_insert_or_update(root, s2.clone(), 1));
    assert_eq!(search.node_of(&s2).unwrap().g, 1);

    // equal candidate g leaves it alone
    assert!(!search.try_insert_or_update(root, s2.clone(), 1));

    // a worse existing entry is improved and requeued
    let far = TimedState::new(cell(2, 0), 6);
    assert!(search.try_insert_or_update(root, far.clone(), 6));
    let id = search.node_id(&far).unwrap();
    assert!(search.try_insert_or_update(root, far.clone(), 4));
    assert_eq!(search.node_of(&far).unwrap().g, 4);
    assert_eq!(search.node_of(&far).unwrap().parent, Some(root));
    assert!(search.in_open(id));
}

fn line_experience() -> (GridDomain, Configuration, Configuration, Configuration, Experience) {
    let g = GridDomain::new(3, 1);
    let (a, b, c) = (cell(0, 0), cell(1, 0), cell(2, 0));
    let exp = Experience::new(vec![a.clone(), b.clone(), c.clone()]);
    (g, a, b, c, exp)
}

#[test]
fn push_walks_the_whole_suffix() {
    let (g, a, b, c, exp) = line_experience();
    let ck = CollisionChecker::new(&g, true);
    let exps = [exp];
    let params = LowLevelParams::default();
    let mut search = XwaStar::new(&ck, LowLevelQuery::new(0, &a, &c).with_experiences(&exps), &params).unwrap();
    let root = search.node_id(&TimedState::new(a.clone(), 0)).unwrap();
    search.push_partial_experience(0, root);
    assert_eq!(search.node_of(&TimedState::new(b, 1)).unwrap().g, 1);
    assert_eq!(search.node_of(&TimedState::new(c.clone(), 2)).unwrap().g, 2);
    assert_eq!(search.open_len(), 3);
}

#[test]
fn push_stops_at_edge_constraint() {
    let (g, a, b, c, exp) = line_experience();
    let ck = CollisionChecker::new(&g, true);
    let exps = [exp];
    let cons = [Constraint::edge(0, b.clone(), c.clone(), 1)];
    let ac = AgentConstraints::for_agent(0, &cons);
    let params = LowLevelParams::default();
    let q = LowLevelQuery::new(0, &a, &c)
        .with_experiences(&exps)
        .with_constraints(&ac);
    let mut search = XwaStar::new(&ck, q, &params).unwrap();
    let root = search.node_id(&TimedState::new(a.clone(), 0)).unwrap();
    search.push_partial_experience(0, root);
    assert!(search.node_of(&TimedState::new(b, 1)).is_some());
    assert!(search.node_of(&TimedState::new(c.clone(), 2)).is_none());
}

#[test]
fn push_ignores_configurations_off_the_experience() {
    let (g, a, _, c, exp) = line_experience();
    let ck = CollisionChecker::new(&g, true);
    let exps = [Experience::new(exp.configs()[1..].to_vec())];
    let params = LowLevelParams::default();
    let mut search = XwaStar::new(&ck, LowLevelQuery::new(0, &a, &c).with_experiences(&exps), &params).unwrap();
    let root = search.node_id(&TimedState::new(a.clone(), 0)).unwrap();
    search.push_partial_experience(0, root);
    assert_eq!(search.open_len(), 1);
}

/// Agent 0 is a one-link arm sweeping counter-clockwise from angle 0; agent 1
/// is parked with its tip in the way of the second experience step only.
fn two_arm_scene() -> ArmDomain<f64> {
    let res = PI / 8.0;
    let a0 = Arm::new(Point2::new(0.0, 0.0), vec![1.0], res);
    let a1 = Arm::new(Point2::new(1.4, 1.4), vec![1.0], res);
    ArmDomain::new(vec![a0, a1], vec![], 0.05)
}

#[test]
fn path_aware_push_stops_before_colliding_step() {
    let d = two_arm_scene();
    let ck = CollisionChecker::new(&d, true);
    let (a, b, c) = (
        Configuration::from([0]),
        Configuration::from([1]),
        Configuration::from([2]),
    );
    // agent 1 points from (1.4, 1.4) towards 225 degrees: tip near (0.69, 0.69)
    let other = Path::new(vec![Configuration::from([-6])]);
    assert!(!ck.vertex_collision(0, &b, 1, other.at(1)));
    assert!(!ck.vertex_collision(0, &a, 1, other.at(0)));
    let step = ck.vertex_collision(0, &c, 1, other.at(2)) || ck.edge_collision(0, &b, &c, 1, other.at(1), other.at(2));
    assert!(step, "scene must make B -> C collide");

    let exps = [Experience::new(vec![a.clone(), b.clone(), c.clone()])];
    let soft = [(1usize, &other)];
    let goal = Configuration::from([4]);
    for (mode, expect_c) in [(Termination::Simple, true), (Termination::PathAware, false)] {
        let params = LowLevelParams::focal(1.0, 1.0).with_termination(mode);
        let q = LowLevelQuery::new(0, &a, &goal)
            .with_experiences(&exps)
            .with_soft_paths(&soft);
        let mut search = XwaStar::new(&ck, q, &params).unwrap();
        let root = search.node_id(&TimedState::new(a.clone(), 0)).unwrap();
        search.push_partial_experience(0, root);
        assert!(search.node_of(&TimedState::new(b.clone(), 1)).is_some());
        assert_eq!(
            search.node_of(&TimedState::new(c.clone(), 2)).is_some(),
            expect_c,
            "{mode:?}"
        );
    }
}

#[test]
fn focal_mode_counts_conflicts_and_avoids_them() {
    // agent 1 parks in the middle of the direct route
    let g = GridDomain::new(3, 2);
    let ck = CollisionChecker::new(&g, true);
    let (s, t) = (cell(0, 0), cell(2, 0));
    let other = Path::new(vec![cell(1, 0)]);
    let soft = [(1usize, &other)];
    let plain = solve(
        &ck,
        LowLevelQuery::new(0, &s, &t).with_soft_paths(&soft),
        &LowLevelParams::default(),
    )
    .unwrap();
    assert_eq!(plain.cost(), Some(2));
    let focal = solve(
        &ck,
        LowLevelQuery::new(0, &s, &t).with_soft_paths(&soft),
        &LowLevelParams::focal(1.0, 2.0),
    )
    .unwrap();
    let path = focal.path.unwrap();
    assert_eq!(focal.conflicts, 0);
    assert!(path.waypoints().iter().all(|q| *q != cell(1, 0)));
    assert!(path.cost() as f64 <= 2.0 * focal.lower_bound);
}

#[test]
fn hard_paths_are_never_touched() {
    let g = GridDomain::new(3, 2);
    let ck = CollisionChecker::new(&g, true);
    let (s, t) = (cell(0, 0), cell(2, 0));
    let other = Path::new(vec![cell(1, 0)]);
    let hard = [(1usize, &other)];
    let r = solve(
        &ck,
        LowLevelQuery::new(0, &s, &t).with_hard_paths(&hard),
        &LowLevelParams::default(),
    )
    .unwrap();
    assert_eq!(r.cost(), Some(4));
}

#[test]
fn hard_path_crossing_the_goal_later_blocks_early_parking() {
    let g = GridDomain::new(3, 1);
    let ck = CollisionChecker::new(&g, true);
    let (s, t) = (cell(0, 0), cell(1, 0));
    // agent 1 passes through (1,0) at time 3 then leaves
    let other = Path::new(vec![cell(2, 0), cell(2, 0), cell(2, 0), cell(1, 0), cell(0, 0)]);
    let hard = [(1usize, &other)];
    let params = LowLevelParams::default().with_horizon(Horizon::Fixed(10));
    let r = solve(&ck, LowLevelQuery::new(0, &s, &t).with_hard_paths(&hard), &params).unwrap();
    // on a line the two cannot pass each other
    assert!(r.path.is_none());
}

/// Optimal path, then a vertex constraint on its middle cell: reusing the
/// old path as experience saves expansions and stays optimal.
#[test]
fn experience_accelerates_constrained_replan() {
    let g = GridDomain::from_rows(&[
        "........", ".######.", ".#....#.", ".#.##.#.", ".#.#..#.", ".#.#.##.", "...#....",
    ])
    .unwrap();
    let ck = CollisionChecker::new(&g, false);
    let (s, t) = (cell(0, 6), cell(7, 6));
    let params = LowLevelParams::default().with_horizon(Horizon::Fixed(40));
    let first = solve(&ck, LowLevelQuery::new(0, &s, &t), &params).unwrap();
    let old = first.path.unwrap();
    let mid = old.len() / 2;
    let cons = [Constraint::vertex(0, old.waypoints()[mid].clone(), mid as u32)];
    let ac = AgentConstraints::for_agent(0, &cons);
    let optimum = timed_oracle(&g, &s, &t, &ac, 40).unwrap();

    let cold = solve(&ck, LowLevelQuery::new(0, &s, &t).with_constraints(&ac), &params).unwrap();
    let exps = [xcbs_core::model::strip_time(&old)];
    let warm = solve(
        &ck,
        LowLevelQuery::new(0, &s, &t)
            .with_constraints(&ac)
            .with_experiences(&exps),
        &params,
    )
    .unwrap();
    let path = warm.path.unwrap();
    assert_respects(&path, &cons);
    assert_eq!(path.cost(), optimum);
    assert_eq!(cold.cost(), Some(optimum));
    assert!(
        warm.expansions < cold.expansions,
        "warm {} vs cold {}",
        warm.expansions,
        cold.expansions
    );
}

#[test]
fn weighted_search_within_bound_and_lower_bound_sound() {
    let g = GridDomain::from_rows(&["....", ".##.", "....", "#..."]).unwrap();
    let ck = CollisionChecker::new(&g, true);
    let free: Vec<_> = (0..4)
        .flat_map(|y| (0..4).map(move |x| cell(x, y)))
        .filter(|q| g.state_free(0, q))
        .collect();
    let cons = [
        Constraint::vertex(0, cell(3, 2), 3),
        Constraint::edge(0, cell(0, 0), cell(1, 0), 0),
    ];
    let ac = AgentConstraints::for_agent(0, &cons);
    for s in &free {
        for t in &free {
            let opt = timed_oracle(&g, s, t, &ac, 12);
            for (w1, w2, focal) in [
                (1.0, 1.0, FocalMode::Off),
                (2.0, 1.0, FocalMode::Off),
                (1.3, 2.0, FocalMode::Conflicts),
            ] {
                let params = LowLevelParams {
                    w1,
                    w2,
                    focal,
                    horizon: Horizon::Fixed(12),
                    ..Default::default()
                };
                let r = solve(&ck, LowLevelQuery::new(0, s, t).with_constraints(&ac), &params).unwrap();
                match (opt, r.path) {
                    (Some(o), Some(p)) => {
                        assert!(p.cost() as f64 <= params.bound() * o as f64 + 1e-9);
                        assert!(r.lower_bound <= o as f64 + 1e-9);
                        assert_respects(&p, &cons);
                    }
                    (None, None) => {}
                    (o, p) => panic!("oracle {o:?} vs solver {p:?} for {s} -> {t}"),
                }
            }
        }
    }
}
