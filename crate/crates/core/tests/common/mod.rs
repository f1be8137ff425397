#![allow(dead_code)]

pub mod fixtures;

use std::collections::HashSet;
use std::sync::Arc;

use hyplan::corpus::CorpusEntry;
use hyplan::expr::{EvalStats, OperatorRegistry};
use hyplan::ground::{GroundOptions, GroundedProblem};
use hyplan::pddl::HappeningKind;
use hyplan::ptree::Applicability;
use hyplan::search::{satisfies_goal, Dynamics};
use hyplan::state::{Precision, State};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn options(dt: f64, precision: Precision, horizon: Option<f64>) -> GroundOptions {
    GroundOptions {
        dt,
        horizon,
        precision,
        prune: true,
        registry: Arc::new(OperatorRegistry::new()),
    }
}

pub fn ground(domain: &str, problem: &str) -> GroundedProblem {
    hyplan::load(domain, problem, &GroundOptions::default()).unwrap_or_else(|e| panic!("{e}"))
}

pub fn ground_opts(domain: &str, problem: &str, opts: &GroundOptions) -> GroundedProblem {
    hyplan::load(domain, problem, opts).unwrap_or_else(|e| panic!("{e}"))
}

pub fn ground_entry(e: &CorpusEntry) -> GroundedProblem {
    hyplan::load(&e.domain, &e.problem, &GroundOptions::default()).unwrap_or_else(|err| panic!("{}: {err}", e.name))
}

/// States met on random walks from the initial state, `n` in total.
pub fn random_states(gp: &GroundedProblem, n: usize, seed: u64) -> Vec<State> {
    let linear = Applicability::linear();
    let mut dyn_ = Dynamics::new(gp, &linear);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut s = gp.init.clone();
    let mut len = 0;
    while out.len() < n {
        out.push(s.clone());
        let acts = dyn_.applicable(HappeningKind::Action, &s);
        let restart = len > rng.gen_range(5..40) || acts.is_empty();
        let next = if restart {
            None
        } else {
            let a = *acts.choose(&mut rng).unwrap();
            dyn_.apply_action(&s, &gp.actions[a as usize]).ok()
        };
        match next {
            Some(n) => {
                s = n;
                len += 1;
            }
            None => {
                s = gp.init.clone();
                len = 0;
            }
        }
    }
    out
}

#[derive(Debug, Default)]
pub struct Enumeration {
    /// Fewest search edges from the initial state to a goal state.
    pub min_length: Option<u32>,
    /// Smallest goal time over every reachable goal state.
    pub min_makespan: Option<f64>,
    pub states: usize,
}

/// Enumerates every state reachable within `horizon`, layer by layer.
pub fn enumerate(gp: &GroundedProblem, horizon: f64, max_states: usize) -> Enumeration {
    let linear = Applicability::linear();
    let mut dyn_ = Dynamics::new(gp, &linear);
    let mut stats = EvalStats::default();
    let mut seen: HashSet<State> = HashSet::new();
    let mut layer = vec![gp.init.clone()];
    seen.insert(gp.init.clone());
    let mut result = Enumeration::default();
    let mut depth = 0u32;
    while !layer.is_empty() {
        let mut next_layer = Vec::new();
        for s in &layer {
            if satisfies_goal(gp, s, &mut stats) {
                result.min_length.get_or_insert(depth);
                result.min_makespan = Some(result.min_makespan.map_or(s.time, |m: f64| m.min(s.time)));
            }
            for a in dyn_.applicable(HappeningKind::Action, s) {
                let Ok(n) = dyn_.apply_action(s, &gp.actions[a as usize]) else {
                    continue;
                };
                if n.time > horizon + 1e-9 || !n.all_finite() {
                    continue;
                }
                if seen.insert(n.clone()) {
                    next_layer.push(n);
                }
            }
        }
        assert!(seen.len() <= max_states, "more than {max_states} states");
        layer = next_layer;
        depth += 1;
    }
    result.states = seen.len();
    result
}
