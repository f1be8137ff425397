use std::fmt::Write;

use crate::expr::{EvalEnv, EvalStats};
use crate::ground::GroundedProblem;
use crate::pddl::{Direction, HappeningKind};
use crate::state::State;

use super::tick::{Dynamics, StepError};

#[derive(Debug, Clone, PartialEq)]
pub struct PlanStep {
    pub time: f64,
    /// Grounded action id.
    pub action: u32,
    /// Printed form, e.g. `(accelerate car1)`.
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
    pub makespan: f64,
    /// Agent actions, time-passing excluded.
    pub actions: u32,
    /// Search edges from the initial state, time-passing included.
    pub length: u32,
    pub metric: f64,
    pub goal_state: State,
}

/// Value of the problem's metric in goal state `s`.
pub fn metric_value(gp: &GroundedProblem, s: &State) -> Option<f64> {
    let env = EvalEnv::new(s, gp.dt, &gp.registry);
    gp.metric_code().eval(&env).ok().filter(|v| v.is_finite())
}

/// Bounded best-k plan list, best first.
#[derive(Debug, Clone)]
pub struct PlanQueue {
    plans: Vec<Plan>,
    capacity: usize,
    direction: Direction,
    /// Metric values each time a plan became the new best.
    pub improvements: Vec<f64>,
}

impl PlanQueue {
    pub fn new(capacity: usize, direction: Direction) -> Self {
        PlanQueue {
            plans: Vec::new(),
            capacity: capacity.max(1),
            direction,
            improvements: Vec::new(),
        }
    }

    /// Inserts `plan` behind every plan at least as good. Returns whether it
    /// became the new best. Duplicates of a stored goal state and metric are ignored.
    pub fn insert(&mut self, plan: Plan) -> bool {
        if self
            .plans
            .iter()
            .any(|p| p.metric.to_bits() == plan.metric.to_bits() && p.goal_state == plan.goal_state)
        {
            return false;
        }
        let at = self
            .plans
            .iter()
            .position(|p| self.direction.better(plan.metric, p.metric))
            .unwrap_or(self.plans.len());
        if at >= self.capacity {
            return false;
        }
        let metric = plan.metric;
        self.plans.insert(at, plan);
        self.plans.truncate(self.capacity);
        if at == 0 {
            self.improvements.push(metric);
        }
        at == 0
    }

    pub fn best(&self) -> Option<&Plan> {
        self.plans.first()
    }

    pub fn plans(&self) -> &[Plan] {
        &self.plans
    }

    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }
}

/// Decimal places needed to print multiples of `dt` exactly, at least 3.
pub fn time_decimals(dt: f64) -> usize {
    (3..=9)
        .find(|&d| {
            let scaled = dt * 10f64.powi(d as i32);
            (scaled - scaled.round()).abs() < 1e-6
        })
        .unwrap_or(9)
}

/// Plan file contents: one `<time>: <action> [0.000]` line per agent action and a
/// comment block with the plan figures.
pub fn format_plan(plan: &Plan, gp: &GroundedProblem, expanded: u64, generated: u64) -> String {
    let d = time_decimals(gp.dt);
    let mut out = String::new();
    for s in &plan.steps {
        let _ = writeln!(out, "{:.d$}: {} [{:.d$}]", s.time, s.name, 0.0);
    }
    let _ = writeln!(out, "; makespan {:.d$}", plan.makespan);
    let _ = writeln!(out, "; actions {}", plan.actions);
    let _ = writeln!(
        out,
        "; metric {} {} = {}",
        gp.metric.direction.keyword(),
        gp.metric.objective,
        plan.metric
    );
    let _ = writeln!(out, "; expanded {expanded}");
    let _ = writeln!(out, "; generated {generated}");
    out
}

#[derive(Debug)]
pub enum ReplayError {
    NotApplicable { time: f64, name: String },
    Misaligned { time: f64 },
    Step(StepError),
}

/// Re-executes a plan from the initial state: time-passing until each step's time,
/// the step itself, then time-passing until the makespan. Returns the final state.
pub fn replay(dynamics: &mut Dynamics<'_>, steps: &[PlanStep], makespan: f64) -> Result<State, ReplayError> {
    let gp = dynamics.gp;
    let mut s = gp.init.clone();
    let eps = 1e-9 * gp.dt.max(1.0);
    let tick_until = |dynamics: &mut Dynamics<'_>, s: &mut State, t: f64| -> Result<(), ReplayError> {
        while s.time < t - eps {
            if !gp.temporal {
                return Err(ReplayError::Misaligned { time: t });
            }
            *s = dynamics.time_passing(s).map_err(ReplayError::Step)?;
        }
        if (s.time - t).abs() > eps {
            return Err(ReplayError::Misaligned { time: t });
        }
        Ok(())
    };
    for step in steps {
        tick_until(dynamics, &mut s, step.time)?;
        let a = &gp.actions[step.action as usize];
        let ok = dynamics.applicable(HappeningKind::Action, &s).contains(&step.action);
        if !ok {
            return Err(ReplayError::NotApplicable {
                time: step.time,
                name: step.name.clone(),
            });
        }
        s = dynamics.apply_action(&s, a).map_err(ReplayError::Step)?;
    }
    tick_until(dynamics, &mut s, makespan)?;
    Ok(s)
}

/// Whether every goal conjunct holds in `s`.
pub fn satisfies_goal(gp: &GroundedProblem, s: &State, stats: &mut EvalStats) -> bool {
    let env = EvalEnv::new(s, gp.dt, &gp.registry);
    gp.goal.iter().all(|&c| gp.condition(c).holds(&env, stats))
}
