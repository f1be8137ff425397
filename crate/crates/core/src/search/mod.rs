//! Search over the discretized transition system.

mod engine;
mod heuristic;
mod open;
mod plan;
mod tick;

pub use engine::{
    plan, ImprovementHook, Planner, SearchConfig, SearchError, SearchLimits, SearchResult, SearchStats, Status,
};
pub use heuristic::{GoalDistance, Heuristic, HeuristicRegistry, Zero};
pub use open::{Algorithm, OpenList};
pub use plan::{
    format_plan, metric_value, replay, satisfies_goal, time_decimals, Plan, PlanQueue, PlanStep, ReplayError,
};
pub use tick::{Dynamics, Invalid, StepError, TraceStep, CASCADE_LIMIT};
