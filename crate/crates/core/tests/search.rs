mod common;

use common::fixtures::counter;

use std::time::Duration;

use hyplan::corpus;
use hyplan::ground::GroundedProblem;
use hyplan::pddl::Direction;
use hyplan::ptree::Applicability;
use hyplan::search::{
    format_plan, metric_value, plan, replay, satisfies_goal, Algorithm, Dynamics, Plan, PlanQueue, Planner,
    SearchConfig, SearchError, SearchLimits, Status,
};
use hyplan::state::{PropSet, State};
use proptest::prelude::*;

fn car(problem: &str) -> GroundedProblem {
    common::ground_entry(&corpus::get(&format!("car/{problem}")).unwrap())
}

fn bfs(horizon: Option<f64>) -> SearchConfig {
    SearchConfig {
        limits: SearchLimits {
            horizon,
            timeout: Some(Duration::from_secs(60)),
            ..SearchLimits::default()
        },
        ..SearchConfig::default()
    }
}

#[test]
fn car_accelerates_once_and_drifts() {
    let gp = car("problem01");
    let r = plan(&gp, &Applicability::linear(), &bfs(Some(10.0))).unwrap();
    assert_eq!(r.status, Status::Solved);
    let best = r.plans.best().unwrap();
    let names: Vec<_> = best.steps.iter().map(|s| (s.time, s.name.as_str())).collect();
    assert_eq!(names, vec![(0.0, "(accelerate)")]);
    assert_eq!(best.makespan, 5.0);
    assert_eq!(best.length, 6);
    assert_eq!(best.actions, 1);
    assert_eq!(best.metric, 5.0);

    let oracle = common::enumerate(&gp, 10.0, 100_000);
    assert_eq!(oracle.min_length, Some(best.length));

    let idx = Applicability::linear();
    let mut d = Dynamics::new(&gp, &idx);
    let end = replay(&mut d, &best.steps, best.makespan).unwrap();
    assert!(satisfies_goal(&gp, &end, &mut Default::default()));
    assert_eq!(end, best.goal_state);
}

#[test]
fn goal_in_initial_state_gives_empty_plan() {
    let e = corpus::get("car/problem01").unwrap();
    let gp = common::ground(&e.domain, &e.problem.replace("(>= (d) 10)", "(>= (d) 0)"));
    let r = plan(&gp, &Applicability::linear(), &bfs(None)).unwrap();
    let best = r.plans.best().unwrap();
    assert!(best.steps.is_empty());
    assert_eq!(best.makespan, 0.0);
    assert_eq!(r.stats.expanded, 1);
}

#[test]
fn unreachable_goal_exhausts_to_no_plan() {
    let e = corpus::get("car/problem01").unwrap();
    let gp = common::ground(&e.domain, &e.problem.replace("(>= (d) 10)", "(>= (d) 1000)"));
    let r = plan(&gp, &Applicability::linear(), &bfs(Some(6.0))).unwrap();
    assert_eq!(r.status, Status::NoPlan);
    assert!(!r.timed_out);
    assert!(r.plans.is_empty());
}

#[test]
fn timeout_is_distinguished_from_exhaustion() {
    let e = corpus::get("car/problem01").unwrap();
    let gp = common::ground(&e.domain, &e.problem.replace("(>= (d) 10)", "(>= (d) 1000000)"));
    let mut cfg = bfs(None);
    cfg.limits.timeout = Some(Duration::from_millis(50));
    let r = plan(&gp, &Applicability::linear(), &cfg).unwrap();
    assert_eq!(r.status, Status::Stopped);
    assert!(r.timed_out);
}

#[test]
fn horizon_is_inclusive() {
    let gp = car("problem01");
    let r = plan(&gp, &Applicability::linear(), &bfs(Some(5.0))).unwrap();
    assert_eq!(r.plans.best().unwrap().makespan, 5.0);
    let r = plan(&gp, &Applicability::linear(), &bfs(Some(4.999))).unwrap();
    assert_eq!(r.status, Status::NoPlan);
}

#[test]
fn depth_limit_bounds_chain_length() {
    let gp = car("problem01");
    let mut cfg = bfs(None);
    cfg.limits.depth = Some(5);
    assert_eq!(
        plan(&gp, &Applicability::linear(), &cfg).unwrap().status,
        Status::NoPlan
    );
    cfg.limits.depth = Some(6);
    assert_eq!(
        plan(&gp, &Applicability::linear(), &cfg).unwrap().status,
        Status::Solved
    );
}

#[test]
fn informed_search_needs_a_registered_heuristic() {
    let gp = car("problem01");
    for algorithm in [Algorithm::Gbfs, Algorithm::Astar] {
        let cfg = SearchConfig {
            algorithm,
            ..SearchConfig::default()
        };
        assert!(matches!(
            plan(&gp, &Applicability::linear(), &cfg),
            Err(SearchError::HeuristicRequired { .. })
        ));
        let cfg = SearchConfig {
            algorithm,
            heuristic: Some(9),
            ..SearchConfig::default()
        };
        let err = plan(&gp, &Applicability::linear(), &cfg).unwrap_err();
        assert!(err.to_string().contains("0: zero, 1: goal-distance"), "{err}");
    }
}

#[test]
fn astar_with_zero_heuristic_finds_shortest_chain() {
    let gp = car("problem01");
    let cfg = SearchConfig {
        algorithm: Algorithm::Astar,
        heuristic: Some(0),
        ..bfs(Some(10.0))
    };
    let r = plan(&gp, &Applicability::linear(), &cfg).unwrap();
    assert_eq!(r.plans.best().unwrap().length, 6);
}

#[test]
fn gbfs_goal_distance_closes_in_on_the_goal() {
    let gp = car("problem01");
    let cfg = SearchConfig {
        algorithm: Algorithm::Gbfs,
        heuristic: Some(1),
        ..bfs(Some(10.0))
    };
    let r = plan(&gp, &Applicability::linear(), &cfg).unwrap();
    let bfs_run = plan(&gp, &Applicability::linear(), &bfs(Some(10.0))).unwrap();
    assert!(r.stats.expanded < bfs_run.stats.expanded);
    let best = r.plans.best().unwrap();
    let idx = Applicability::linear();
    let mut d = Dynamics::new(&gp, &idx);
    let slot = gp.var_slot("d").unwrap() as usize;
    let mut s = replay(&mut d, &best.steps, 0.0).unwrap();
    let mut gap = (10.0 - s.vars[slot]).abs();
    while s.time < best.makespan {
        s = d.time_passing(&s).unwrap();
        let g = (10.0 - s.vars[slot]).abs();
        assert!(g <= gap);
        gap = g;
    }
    assert!(satisfies_goal(&gp, &s, &mut Default::default()));
}

#[test]
fn every_corpus_problem_solves_and_replays() {
    for e in corpus::all() {
        let gp = common::ground_entry(&e);
        let r = plan(&gp, &Applicability::linear(), &bfs(Some(40.0))).unwrap();
        assert_eq!(r.status, Status::Solved, "{}", e.name);
        let best = r.plans.best().unwrap();
        let idx = Applicability::linear();
        let mut d = Dynamics::new(&gp, &idx);
        let end = replay(&mut d, &best.steps, best.makespan).unwrap();
        assert!(satisfies_goal(&gp, &end, &mut Default::default()), "{}", e.name);
        let text = format_plan(best, &gp, r.stats.expanded, r.stats.generated);
        assert_eq!(text.lines().filter(|l| !l.starts_with(';')).count(), best.steps.len());
    }
}

#[test]
fn searches_are_deterministic() {
    let gp = common::ground_entry(&corpus::get("convoys/problem01").unwrap());
    for (algorithm, heuristic) in [
        (Algorithm::Bfs, None),
        (Algorithm::Dfs, None),
        (Algorithm::Gbfs, Some(1)),
        (Algorithm::Astar, Some(1)),
    ] {
        let cfg = SearchConfig {
            algorithm,
            heuristic,
            ..bfs(Some(20.0))
        };
        let a = plan(&gp, &Applicability::linear(), &cfg).unwrap();
        let b = plan(&gp, &Applicability::trees(&gp), &cfg).unwrap();
        assert_eq!(a.stats.expanded, b.stats.expanded, "{algorithm}");
        assert_eq!(a.stats.expansion_hash, b.stats.expansion_hash, "{algorithm}");
        assert_eq!(a.plans.best().map(|p| &p.steps), b.plans.best().map(|p| &p.steps));
    }
}

#[test]
fn anytime_improves_strictly_to_the_optimum() {
    let gp = common::ground_entry(&corpus::get("runner/problem01").unwrap());
    let cfg = SearchConfig {
        algorithm: Algorithm::Dfs,
        anytime: true,
        ..bfs(Some(8.0))
    };
    let mut seen = Vec::new();
    let r = {
        let idx = Applicability::linear();
        let mut p = Planner::new(&gp, &idx);
        p.on_improvement = Some(Box::new(|plan: &Plan| seen.push(plan.metric)));
        p.run(&cfg).unwrap()
    };
    assert_eq!(seen, r.plans.improvements);
    assert!(seen.len() >= 2, "{seen:?}");
    assert!(seen.windows(2).all(|w| w[1] < w[0]), "{seen:?}");
    let oracle = common::enumerate(&gp, 8.0, 100_000);
    assert_eq!(r.plans.best().unwrap().makespan, oracle.min_makespan.unwrap());
    let metrics: Vec<f64> = r.plans.plans().iter().map(|p| p.metric).collect();
    assert!(metrics.windows(2).all(|w| w[0] <= w[1]));
    assert!(r.plans.len() <= cfg.capacity);
}

#[test]
fn metric_values() {
    let gp = counter("(:metric minimize (total-actions))");
    let idx = Applicability::linear();
    let mut d = Dynamics::new(&gp, &idx);
    let mut s = gp.init.clone();
    let bump = &gp.actions[0];
    for i in 0..11 {
        s = if [1, 4, 6, 9].contains(&i) {
            d.apply_action(&s, bump).unwrap()
        } else {
            d.time_passing(&s).unwrap()
        };
    }
    assert_eq!(s.time, 7.0);
    assert_eq!(s.depth, 11);
    assert_eq!(metric_value(&gp, &s), Some(4.0));

    let gp = counter("");
    assert_eq!(gp.metric.objective.to_string(), "(total-time)");
    let mut s3 = gp.init.clone();
    for _ in 0..3 {
        s3 = Dynamics::new(&gp, &idx).time_passing(&s3).unwrap();
    }
    assert_eq!(metric_value(&gp, &s3), Some(3.0));

    let gp = counter("(:metric maximize (* (fuel_remaining) (total_reward)))");
    assert_eq!(gp.metric.direction, Direction::Maximize);
    assert_eq!(metric_value(&gp, &gp.init), Some(10.0));
}

#[test]
fn total_actions_metric_excludes_time_passing() {
    let gp = counter("(:metric minimize (total-actions))");
    let r = plan(&gp, &Applicability::linear(), &bfs(Some(5.0))).unwrap();
    let best = r.plans.best().unwrap();
    assert_eq!(best.actions, 4);
    assert_eq!(best.metric, 4.0);
    assert_eq!(best.steps.len(), 4);
}

fn dummy_plan(metric: f64, tag: u32) -> Plan {
    let mut props = PropSet::with_capacity(64);
    props.insert(tag);
    Plan {
        steps: Vec::new(),
        makespan: 0.0,
        actions: 0,
        length: 0,
        metric,
        goal_state: State::new(props, vec![]),
    }
}

proptest! {
    #[test]
    fn plan_queue_stays_bounded_and_ordered(
        metrics in prop::collection::vec(0u8..20, 1..60),
        cap in 1usize..6,
        maximize in any::<bool>(),
    ) {
        let dir = if maximize { Direction::Maximize } else { Direction::Minimize };
        let mut q = PlanQueue::new(cap, dir);
        let mut head: Option<f64> = None;
        for (i, m) in metrics.iter().enumerate() {
            let m = *m as f64;
            let full_and_dominated = q.len() == cap && !dir.better(m, q.plans().last().unwrap().metric);
            let before: Vec<f64> = q.plans().iter().map(|p| p.metric).collect();
            let improved = q.insert(dummy_plan(m, i as u32));
            if full_and_dominated {
                let after: Vec<f64> = q.plans().iter().map(|p| p.metric).collect();
                prop_assert_eq!(before, after);
            }
            prop_assert_eq!(improved, head.is_none_or(|h| dir.better(m, h)));
            if improved {
                head = Some(m);
            }
            prop_assert!(q.len() <= cap);
            let ms: Vec<f64> = q.plans().iter().map(|p| p.metric).collect();
            prop_assert!(ms.windows(2).all(|w| !dir.better(w[1], w[0])));
        }
        let imp = &q.improvements;
        prop_assert!(imp.windows(2).all(|w| dir.better(w[1], w[0])));
    }
}
