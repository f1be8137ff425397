//! Forward search over the discretized state space.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::attach::{AttachError, AttachmentRegistry};
use crate::expr::EvalStats;
use crate::ground::GroundedProblem;
use crate::pddl::HappeningKind;
use crate::ptree::Applicability;
use crate::state::State;

use super::heuristic::HeuristicRegistry;
use super::open::{Algorithm, OpenList};
use super::plan::{metric_value, satisfies_goal, Plan, PlanQueue, PlanStep};
use super::tick::{Dynamics, Invalid, StepError};

/// Slack on the horizon comparison so that `t = T` survives float accumulation.
const HORIZON_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Default)]
pub struct SearchLimits {
    /// Temporal horizon in seconds, inclusive. Falls back to the grounded problem's.
    pub horizon: Option<f64>,
    pub depth: Option<u32>,
    pub timeout: Option<Duration>,
    /// Stop after this many expansions.
    pub max_expansions: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    pub heuristic: Option<usize>,
    pub limits: SearchLimits,
    pub anytime: bool,
    pub capacity: usize,
    pub event_cascade: bool,
    /// With `false` goal states are never recognized; used to measure raw expansion.
    pub goal_check: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            algorithm: Algorithm::Bfs,
            heuristic: None,
            limits: SearchLimits {
                timeout: Some(Duration::from_secs(1800)),
                ..SearchLimits::default()
            },
            anytime: false,
            capacity: 10,
            event_cascade: false,
            goal_check: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// At least one plan found.
    Solved,
    /// The reachable space within the limits holds no goal state.
    NoPlan,
    /// Stopped by the timeout, the stop signal or the expansion cap.
    Stopped,
}

#[derive(Debug, Clone, Default)]
pub struct SearchStats {
    pub expanded: u64,
    pub generated: u64,
    pub duplicates: u64,
    pub beyond_limits: u64,
    pub invalid: u64,
    pub eval: EvalStats,
    pub metric_rejected: u64,
    pub attachment_failures: u64,
    pub search_time: Duration,
    /// Hash over the sequence of expanded states.
    pub expansion_hash: u64,
}

impl SearchStats {
    pub fn nodes_per_sec(&self) -> f64 {
        let secs = self.search_time.as_secs_f64();
        if secs > 0.0 {
            self.expanded as f64 / secs
        } else {
            0.0
        }
    }
}

#[derive(Debug)]
pub struct SearchResult {
    pub status: Status,
    /// Set when the timeout (not the expansion cap) stopped the run.
    pub timed_out: bool,
    pub plans: PlanQueue,
    pub stats: SearchStats,
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("{algorithm} requires a heuristic; pass --heuristic with one of: {available}")]
    HeuristicRequired { algorithm: Algorithm, available: String },
    #[error("unknown heuristic index {index}; registered: {available}")]
    UnknownHeuristic { index: usize, available: String },
    #[error(transparent)]
    Attachment(#[from] AttachError),
}

struct Node {
    state: State,
    parent: u32,
    achiever: u32,
}

const NO_PARENT: u32 = u32::MAX;

/// Callback for each plan that becomes the new best.
pub type ImprovementHook<'a> = Box<dyn FnMut(&Plan) + 'a>;

/// Everything a search run needs besides the problem.
pub struct Planner<'a> {
    pub gp: &'a GroundedProblem,
    pub index: &'a Applicability,
    pub heuristics: HeuristicRegistry,
    pub attachments: Option<&'a mut AttachmentRegistry>,
    pub stop: Option<&'a AtomicBool>,
    pub on_improvement: Option<ImprovementHook<'a>>,
}

impl<'a> Planner<'a> {
    pub fn new(gp: &'a GroundedProblem, index: &'a Applicability) -> Self {
        Planner {
            gp,
            index,
            heuristics: HeuristicRegistry::builtin(gp),
            attachments: None,
            stop: None,
            on_improvement: None,
        }
    }

    pub fn run(&mut self, config: &SearchConfig) -> Result<SearchResult, SearchError> {
        let gp = self.gp;
        let heuristic = match (config.algorithm.needs_heuristic(), config.heuristic) {
            (true, None) => {
                return Err(SearchError::HeuristicRequired {
                    algorithm: config.algorithm,
                    available: self.heuristics.listing(),
                })
            }
            (true, Some(i)) => Some(self.heuristics.get(i).ok_or_else(|| SearchError::UnknownHeuristic {
                index: i,
                available: self.heuristics.listing(),
            })?),
            (false, _) => None,
        };

        let mut dynamics = Dynamics::new(gp, self.index);
        dynamics.cascade = config.event_cascade;
        if let Some(reg) = self.attachments.as_deref_mut() {
            dynamics.attachments = Some(reg);
        }

        let horizon = config.limits.horizon.or(gp.horizon);
        let start = Instant::now();
        let deadline = config.limits.timeout.map(|t| start + t);
        let mut stats = SearchStats::default();
        let mut plans = PlanQueue::new(config.capacity, gp.metric.direction);
        let mut hasher = DefaultHasher::new();
        let mut open = OpenList::new(config.algorithm);
        let mut nodes: Vec<Node> = Vec::new();
        let mut visited: HashSet<State> = HashSet::new();
        let mut status = Status::NoPlan;
        let mut timed_out = false;

        let key = |s: &State| -> f64 {
            match (config.algorithm, heuristic) {
                (Algorithm::Gbfs, Some(h)) => h.estimate(gp, s),
                (Algorithm::Astar, Some(h)) => s.depth as f64 + h.estimate(gp, s),
                _ => 0.0,
            }
        };

        let init = gp.init.clone();
        visited.insert(init.clone());
        open.push(0, key(&init));
        nodes.push(Node {
            state: init,
            parent: NO_PARENT,
            achiever: NO_PARENT,
        });
        let n_actions = gp.actions.len();
        let mut goal_stats = EvalStats::default();

        while let Some(id) = open.pop() {
            stats.expanded += 1;
            let s = nodes[id as usize].state.clone();
            s.hash(&mut hasher);

            if config.goal_check && satisfies_goal(gp, &s, &mut goal_stats) {
                match metric_value(gp, &s) {
                    Some(metric) => {
                        let plan = extract(gp, &nodes, id, metric);
                        let improved = plans.insert(plan);
                        if improved {
                            if let (Some(cb), Some(best)) = (self.on_improvement.as_mut(), plans.best()) {
                                cb(best);
                            }
                        }
                        if !config.anytime {
                            status = Status::Solved;
                            break;
                        }
                    }
                    None => stats.metric_rejected += 1,
                }
            }

            for a in dynamics.applicable(HappeningKind::Action, &s) {
                debug_assert!((a as usize) < n_actions);
                let h = &gp.actions[a as usize];
                stats.generated += 1;
                let next = match dynamics.apply_action(&s, h) {
                    Ok(n) => n,
                    Err(StepError::Invalid(why)) => {
                        if why == Invalid::Attachment {
                            stats.attachment_failures += 1;
                        }
                        stats.invalid += 1;
                        continue;
                    }
                    Err(StepError::Protocol(e)) => return Err(e.into()),
                };
                if !next.all_finite() {
                    stats.invalid += 1;
                    continue;
                }
                if horizon.is_some_and(|t| next.time > t + HORIZON_EPS)
                    || config.limits.depth.is_some_and(|d| next.depth > d)
                {
                    stats.beyond_limits += 1;
                    continue;
                }
                if visited.contains(&next) {
                    stats.duplicates += 1;
                    continue;
                }
                visited.insert(next.clone());
                let k = key(&next);
                let child = nodes.len() as u32;
                nodes.push(Node {
                    state: next,
                    parent: id,
                    achiever: a,
                });
                open.push(child, k);
            }

            let out_of_time = deadline.is_some_and(|d| Instant::now() >= d);
            let stopped = self.stop.is_some_and(|f| f.load(Ordering::Relaxed));
            let capped = config.limits.max_expansions.is_some_and(|m| stats.expanded >= m);
            if out_of_time || stopped || capped {
                timed_out = out_of_time;
                status = Status::Stopped;
                break;
            }
        }

        stats.search_time = start.elapsed();
        stats.eval = dynamics.stats;
        stats.eval.evaluations += goal_stats.evaluations;
        stats.eval.faults += goal_stats.faults;
        stats.expansion_hash = hasher.finish();
        if !plans.is_empty() {
            status = Status::Solved;
        }
        Ok(SearchResult {
            status,
            timed_out,
            plans,
            stats,
        })
    }
}

fn extract(gp: &GroundedProblem, nodes: &[Node], goal: u32, metric: f64) -> Plan {
    let mut steps = Vec::new();
    let mut at = goal;
    let mut length = 0;
    while nodes[at as usize].parent != NO_PARENT {
        let node = &nodes[at as usize];
        let parent = &nodes[node.parent as usize];
        let h = &gp.actions[node.achiever as usize];
        if !h.time_passing {
            steps.push(PlanStep {
                time: parent.state.time,
                action: h.id,
                name: h.name.clone(),
            });
        }
        length += 1;
        at = node.parent;
    }
    steps.reverse();
    let goal_state = nodes[goal as usize].state.clone();
    Plan {
        steps,
        makespan: goal_state.time,
        actions: goal_state.actions,
        length,
        metric,
        goal_state,
    }
}

/// Searches with a fresh planner and no attachments.
pub fn plan(gp: &GroundedProblem, index: &Applicability, config: &SearchConfig) -> Result<SearchResult, SearchError> {
    Planner::new(gp, index).run(config)
}
