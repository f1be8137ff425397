//! Exploration-rate measurement with and without the precondition tree.

use std::fmt::Write;

use serde::Serialize;

use crate::ground::{GroundedProblem, KindStats};
use crate::pddl::HappeningKind;
use crate::ptree::Applicability;
use crate::search::{Algorithm, Planner, SearchConfig, SearchError, SearchLimits};

#[derive(Debug, Clone, Copy)]
pub struct BenchConfig {
    /// Expansions per run.
    pub expansions: u64,
    pub repetitions: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            expansions: 10_000,
            repetitions: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateSample {
    /// Median over the repetitions.
    pub nodes_per_sec: f64,
    pub runs: Vec<f64>,
    pub expanded: u64,
    /// The state space ran out before the expansion target.
    pub truncated: bool,
    pub expansion_hash: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub name: String,
    pub actions: KindStats,
    pub events: KindStats,
    pub processes: KindStats,
    pub with_tree: RateSample,
    pub without_tree: RateSample,
    /// Both configurations expanded the same state sequence.
    pub same_expansions: bool,
}

impl BenchReport {
    /// `(with - without) / without * 100`.
    pub fn percent(&self) -> f64 {
        (self.with_tree.nodes_per_sec - self.without_tree.nodes_per_sec) / self.without_tree.nodes_per_sec * 100.0
    }

    pub fn record(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v["percent"] = serde_json::json!(self.percent());
        v.to_string()
    }
}

fn config(expansions: u64) -> SearchConfig {
    SearchConfig {
        algorithm: Algorithm::Bfs,
        limits: SearchLimits {
            max_expansions: Some(expansions),
            ..SearchLimits::default()
        },
        goal_check: false,
        ..SearchConfig::default()
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Breadth-first search to the expansion target with goal checks off, alternating
/// linear and tree runs after one warm-up run of each.
pub fn measure(name: &str, gp: &GroundedProblem, cfg: &BenchConfig) -> Result<BenchReport, SearchError> {
    let linear = Applicability::linear();
    let trees = Applicability::trees(gp);
    let search = config(cfg.expansions);
    Planner::new(gp, &linear).run(&search)?;
    Planner::new(gp, &trees).run(&search)?;

    let mut samples: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut last = [None, None];
    for _ in 0..cfg.repetitions.max(1) {
        for (i, index) in [&linear, &trees].into_iter().enumerate() {
            let r = Planner::new(gp, index).run(&search)?;
            samples[i].push(r.stats.nodes_per_sec());
            last[i] = Some(r.stats);
        }
    }
    let sample = |i: usize| {
        let stats = last[i].clone().expect("at least one repetition");
        RateSample {
            nodes_per_sec: median(&samples[i]),
            runs: samples[i].clone(),
            expanded: stats.expanded,
            truncated: stats.expanded < cfg.expansions,
            expansion_hash: stats.expansion_hash,
        }
    };
    let without_tree = sample(0);
    let with_tree = sample(1);
    Ok(BenchReport {
        name: name.to_string(),
        actions: gp.kind_stats(HappeningKind::Action),
        events: gp.kind_stats(HappeningKind::Event),
        processes: gp.kind_stats(HappeningKind::Process),
        same_expansions: with_tree.expansion_hash == without_tree.expansion_hash
            && with_tree.expanded == without_tree.expanded,
        with_tree,
        without_tree,
    })
}

/// Aligned text table, one row per report.
pub fn table(reports: &[BenchReport]) -> String {
    let header = [
        "Domain".to_string(),
        "Actions".into(),
        "Events".into(),
        "Processes".into(),
        "With tree".into(),
        "Without tree".into(),
        "Diff".into(),
    ];
    let cell = |k: &KindStats| format!("{} ({:.2})", k.count, k.avg_preconditions);
    let rate = |s: &RateSample| format!("{:.0}{}", s.nodes_per_sec, if s.truncated { "*" } else { "" });
    let rows: Vec<[String; 7]> = reports
        .iter()
        .map(|r| {
            [
                r.name.clone(),
                cell(&r.actions),
                cell(&r.events),
                cell(&r.processes),
                rate(&r.with_tree),
                rate(&r.without_tree),
                format!("{:+.1}%", r.percent()),
            ]
        })
        .collect();
    let mut widths = header.clone().map(|h| h.len());
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    for row in std::iter::once(&header).chain(&rows) {
        let line: Vec<String> = row
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    if reports
        .iter()
        .any(|r| r.with_tree.truncated || r.without_tree.truncated)
    {
        out.push_str("* state space exhausted before the expansion target\n");
    }
    out
}
