//! Heuristic plugins, selected by index.

use crate::expr::{compile, CompiledExpr, EvalEnv, EvalStats};
use crate::ground::GroundedProblem;
use crate::pddl::Expr;
use crate::state::State;

pub trait Heuristic {
    fn name(&self) -> &str;
    /// Estimate for `s`; lower is better. Non-finite values rank last.
    fn estimate(&self, gp: &GroundedProblem, s: &State) -> f64;
}

pub struct Zero;

impl Heuristic for Zero {
    fn name(&self) -> &str {
        "zero"
    }

    fn estimate(&self, _: &GroundedProblem, _: &State) -> f64 {
        0.0
    }
}

enum GoalTerm {
    Distance {
        cond: u32,
        lhs: CompiledExpr,
        rhs: CompiledExpr,
    },
    Unit {
        cond: u32,
    },
}

/// Sum over unsatisfied goal conjuncts: `|lhs - rhs|` for comparisons, 1 otherwise.
pub struct GoalDistance {
    terms: Vec<GoalTerm>,
}

impl GoalDistance {
    pub fn new(gp: &GroundedProblem) -> Self {
        let terms = gp
            .goal
            .iter()
            .map(|&cond| match &gp.conditions[cond as usize].expr {
                Expr::Cmp { lhs, rhs, .. } => {
                    match (
                        compile(lhs, &gp.tables, &gp.registry),
                        compile(rhs, &gp.tables, &gp.registry),
                    ) {
                        (Ok(lhs), Ok(rhs)) => GoalTerm::Distance { cond, lhs, rhs },
                        _ => GoalTerm::Unit { cond },
                    }
                }
                _ => GoalTerm::Unit { cond },
            })
            .collect();
        GoalDistance { terms }
    }
}

impl Heuristic for GoalDistance {
    fn name(&self) -> &str {
        "goal-distance"
    }

    fn estimate(&self, gp: &GroundedProblem, s: &State) -> f64 {
        let env = EvalEnv::new(s, gp.dt, &gp.registry);
        let mut stats = EvalStats::default();
        let mut h = 0.0;
        for t in &self.terms {
            match t {
                GoalTerm::Unit { cond } => {
                    if !gp.condition(*cond).holds(&env, &mut stats) {
                        h += 1.0;
                    }
                }
                GoalTerm::Distance { cond, lhs, rhs } => {
                    if !gp.condition(*cond).holds(&env, &mut stats) {
                        h += match (lhs.eval(&env), rhs.eval(&env)) {
                            (Ok(a), Ok(b)) => (a - b).abs(),
                            _ => f64::INFINITY,
                        };
                    }
                }
            }
        }
        h
    }
}

/// Heuristics available to a run, numbered from 0.
pub struct HeuristicRegistry {
    entries: Vec<Box<dyn Heuristic>>,
}

impl HeuristicRegistry {
    /// 0: zero, 1: goal distance.
    pub fn builtin(gp: &GroundedProblem) -> Self {
        HeuristicRegistry {
            entries: vec![Box::new(Zero), Box::new(GoalDistance::new(gp))],
        }
    }

    pub fn register(&mut self, h: Box<dyn Heuristic>) -> usize {
        self.entries.push(h);
        self.entries.len() - 1
    }

    pub fn get(&self, index: usize) -> Option<&dyn Heuristic> {
        self.entries.get(index).map(|b| b.as_ref())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `index: name` lines for error messages.
    pub fn listing(&self) -> String {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, h)| format!("{i}: {}", h.name()))
            .collect::<Vec<_>>()
            .join(", ")
    }
}
