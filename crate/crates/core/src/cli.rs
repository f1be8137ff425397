//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::attach::{self, AttachmentOrder, AttachmentRegistry, SubprocessAttachment};
use crate::bench::{self, BenchConfig};
use crate::corpus::{self, Synthetic};
use crate::expr::OperatorRegistry;
use crate::ground::{GroundError, GroundOptions, GroundedProblem};
use crate::pddl::HappeningKind;
use crate::ptree::Applicability;
use crate::search::{format_plan, Algorithm, Planner, SearchConfig, SearchError, SearchLimits, Status};
use crate::state::Precision;
use crate::LoadError;

pub const EXIT_PLAN: i32 = 0;
pub const EXIT_NO_PLAN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hyplan", version, about = "Discretized PDDL+ planner")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan for a domain and problem.
    Run(RunArgs),
    /// Measure exploration rate with and without the precondition tree.
    Bench(BenchArgs),
    /// Write the synthetic event-heavy domain and problem.
    GenSynthetic(GenArgs),
    /// Serve the toy flow attachment over stdin/stdout.
    #[command(hide = true)]
    ToyAttachment(ToyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Time step in seconds.
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
    /// Decimal places kept for numeric variables, or `exact`.
    #[arg(long, default_value = "3", value_parser = parse_precision)]
    pub precision: Precision,
    /// Keep instantiations whose static preconditions can never hold.
    #[arg(long)]
    pub no_prune: bool,
}

impl ModelArgs {
    fn ground_options(&self, horizon: Option<f64>) -> GroundOptions {
        GroundOptions {
            dt: self.dt,
            horizon,
            precision: self.precision,
            prune: !self.no_prune,
            registry: Arc::new(OperatorRegistry::new()),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    pub domain: PathBuf,
    pub problem: PathBuf,
    /// Search algorithm: bfs, dfs, gbfs or astar.
    #[arg(long = "search", default_value = "bfs", value_parser = parse_algorithm)]
    pub algorithm: Algorithm,
    /// Heuristic index (0: zero, 1: goal distance). Required by gbfs and astar.
    #[arg(long)]
    pub heuristic: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Temporal horizon in seconds; states past it are discarded.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub depth_limit: Option<u32>,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 1800.0)]
    pub timeout: f64,
    /// Keep searching after the first plan and report the best ones.
    #[arg(long)]
    pub anytime: bool,
    /// Number of best plans kept.
    #[arg(long, default_value_t = 10)]
    pub plan_capacity: usize,
    /// Use precondition trees for applicability checks.
    #[arg(long)]
    pub preconditiontree: bool,
    /// Repeat event passes until no event fires.
    #[arg(long)]
    pub event_cascade: bool,
    /// Command implementing the attachment line protocol.
    #[arg(long)]
    pub attachment_cmd: Option<String>,
    /// When attachments run inside time-passing: before, between or after.
    #[arg(long, default_value = "before", value_parser = parse_order)]
    pub attachment_order: AttachmentOrder,
    /// Plan file; further plans go to `<output>.2`, `<output>.3`, ...
    #[arg(long, short, default_value = "plan.txt")]
    pub output: PathBuf,
    /// Print the grounded model before searching.
    #[arg(long)]
    pub dump_grounded: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Benchmark one domain/problem pair instead of the corpus.
    #[arg(long, requires = "problem")]
    pub domain: Option<PathBuf>,
    #[arg(long, requires = "domain")]
    pub problem: Option<PathBuf>,
    /// Events in the synthetic instance.
    #[arg(long, default_value_t = 1000)]
    pub events: usize,
    /// Share of each synthetic event's preconditions common to its group.
    #[arg(long, default_value_t = 0.7)]
    pub share: f64,
    #[arg(long, default_value_t = 10_000)]
    pub expansions: u64,
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub events: usize,
    #[arg(long)]
    pub share: f64,
    /// Directory receiving domain.pddl and problem.pddl.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ToyArgs {
    #[arg(long, default_value = "flow")]
    pub flow: String,
    #[arg(long, default_value = "pump_speed")]
    pub pump_speed: String,
    #[arg(long, default_value_t = 0.5)]
    pub factor: f64,
}

fn parse_precision(s: &str) -> Result<Precision, String> {
    if s.eq_ignore_ascii_case("exact") {
        return Ok(Precision::EXACT);
    }
    s.parse::<u32>()
        .ok()
        .filter(|d| *d <= 15)
        .map(|d| Precision(Some(d)))
        .ok_or_else(|| format!("expected 0..=15 or `exact`, got `{s}`"))
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    Algorithm::parse(s).ok_or_else(|| format!("expected bfs, dfs, gbfs or astar, got `{s}`"))
}

fn parse_order(s: &str) -> Result<AttachmentOrder, String> {
    AttachmentOrder::parse(s).ok_or_else(|| format!("expected before, between or after, got `{s}`"))
}

/// Failure with its exit code.
struct Fail(i32, String);

impl From<io::Error> for Fail {
    fn from(e: io::Error) -> Self {
        Fail(EXIT_INTERNAL, e.to_string())
    }
}

fn load_err(e: LoadError) -> Fail {
    match e {
        LoadError::Ground(GroundError::Compile { .. }) => Fail(EXIT_INTERNAL, e.to_string()),
        _ => Fail(EXIT_USAGE, e.to_string()),
    }
}

/// Entry point; returns the process exit code.
pub fn main_with(
    args: impl IntoIterator<Item = impl Into<OsString> + Clone>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return if code == 0 { EXIT_PLAN } else { EXIT_USAGE };
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(&a, out, err),
        Command::Bench(a) => run_bench(&a, out),
        Command::GenSynthetic(a) => gen_synthetic(&a, out),
        Command::ToyAttachment(a) => {
            let stdin = io::stdin();
            attach::serve_flow(
                stdin.lock(),
                io::stdout(),
                &a.flow,
                &a.pump_speed,
                a.factor,
                Precision::default(),
            )
            .map(|_| EXIT_PLAN)
            .map_err(Fail::from)
        }
    };
    match result {
        Ok(code) => code,
        Err(Fail(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail(EXIT_USAGE, format!("cannot read {}: {e}", path.display())))
}

/// Output path for the plan of the given rank (1 is the best).
pub fn plan_path(output: &Path, rank: usize) -> PathBuf {
    if rank == 1 {
        output.to_path_buf()
    } else {
        let mut s = output.as_os_str().to_os_string();
        s.push(format!(".{rank}"));
        PathBuf::from(s)
    }
}

fn run(a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Fail> {
    let wall = Instant::now();
    if a.timeout.is_nan() || a.timeout <= 0.0 || !a.timeout.is_finite() {
        return Err(Fail(
            EXIT_USAGE,
            "--timeout must be a positive number of seconds".into(),
        ));
    }
    if a.plan_capacity == 0 {
        return Err(Fail(EXIT_USAGE, "--plan-capacity must be at least 1".into()));
    }
    if a.algorithm.needs_heuristic() && a.heuristic.is_none() {
        return Err(Fail(
            EXIT_USAGE,
            format!(
                "{} requires a heuristic; pass --heuristic <index> (0: zero, 1: goal-distance)",
                a.algorithm
            ),
        ));
    }
    let domain = read(&a.domain)?;
    let problem = read(&a.problem)?;
    let gp = crate::load(&domain, &problem, &a.model.ground_options(a.horizon)).map_err(load_err)?;
    if a.dump_grounded {
        write!(out, "{}", gp.dump())?;
    }

    let mut registry = AttachmentRegistry::new(&gp);
    registry.order = a.attachment_order;
    if let Some(cmd) = &a.attachment_cmd {
        let sub = SubprocessAttachment::spawn(cmd, &gp.tables).map_err(|e| Fail(EXIT_USAGE, e.to_string()))?;
        registry
            .register(&gp, Box::new(sub))
            .map_err(|e| Fail(EXIT_USAGE, e.to_string()))?;
    }
    for w in registry.warnings.iter() {
        writeln!(err, "warning: {w}")?;
    }

    let index = if a.preconditiontree {
        Applicability::trees(&gp)
    } else {
        Applicability::linear()
    };
    let config = SearchConfig {
        algorithm: a.algorithm,
        heuristic: a.heuristic,
        limits: SearchLimits {
            horizon: a.horizon,
            depth: a.depth_limit,
            timeout: Some(Duration::from_secs_f64(a.timeout)),
            max_expansions: None,
        },
        anytime: a.anytime,
        capacity: a.plan_capacity,
        event_cascade: a.event_cascade,
        goal_check: true,
    };
    let mut improvements: Vec<String> = Vec::new();
    let result = {
        let mut planner = Planner::new(&gp, &index);
        planner.attachments = Some(&mut registry);
        if a.anytime {
            planner.on_improvement = Some(Box::new(|p| {
                improvements.push(format!(
                    "improved plan: metric {} makespan {} actions {}",
                    p.metric, p.makespan, p.actions
                ))
            }));
        }
        planner.run(&config)
    };
    for line in &improvements {
        writeln!(out, "{line}")?;
    }
    let result = result.map_err(|e| match e {
        SearchError::Attachment(_) => Fail(EXIT_INTERNAL, e.to_string()),
        _ => Fail(EXIT_USAGE, e.to_string()),
    })?;

    let stats = &result.stats;
    let mut written = Vec::new();
    for (i, p) in result.plans.plans().iter().enumerate() {
        let path = plan_path(&a.output, i + 1);
        fs::write(&path, format_plan(p, &gp, stats.expanded, stats.generated))
            .map_err(|e| Fail(EXIT_INTERNAL, format!("cannot write {}: {e}", path.display())))?;
        written.push(path);
    }

    let status = match (result.status, result.timed_out) {
        (Status::Solved, _) => "solved",
        (Status::NoPlan, _) => "no-plan",
        (Status::Stopped, true) => "timeout",
        (Status::Stopped, false) => "stopped",
    };
    summary(out, &gp, &result, status, &written, wall.elapsed(), registry.failures)?;
    Ok(if result.status == Status::Solved {
        EXIT_PLAN
    } else {
        EXIT_NO_PLAN
    })
}

fn summary(
    out: &mut dyn Write,
    gp: &GroundedProblem,
    result: &crate::search::SearchResult,
    status: &str,
    written: &[PathBuf],
    wall: Duration,
    attachment_failures: u64,
) -> io::Result<()> {
    let s = &result.stats;
    let best = result.plans.best();
    let a = gp.kind_stats(HappeningKind::Action);
    let e = gp.kind_stats(HappeningKind::Event);
    let p = gp.kind_stats(HappeningKind::Process);
    writeln!(out, "domain {} problem {}", gp.domain_name, gp.problem_name)?;
    writeln!(
        out,
        "grounded {} actions, {} events, {} processes ({} pruned)",
        a.count, e.count, p.count, gp.pruned
    )?;
    writeln!(out, "status {status}")?;
    if let Some(b) = best {
        writeln!(out, "plans {}", result.plans.len())?;
        writeln!(out, "makespan {}", b.makespan)?;
        writeln!(out, "actions {}", b.actions)?;
        writeln!(out, "metric {}", b.metric)?;
    }
    writeln!(
        out,
        "expanded {} generated {} invalid {}",
        s.expanded, s.generated, s.invalid
    )?;
    writeln!(
        out,
        "search time {:.4} s, {:.0} nodes/sec, wall time {:.4} s",
        s.search_time.as_secs_f64(),
        s.nodes_per_sec(),
        wall.as_secs_f64()
    )?;
    for w in written {
        writeln!(out, "plan written to {}", w.display())?;
    }
    let record = json!({
        "status": status,
        "domain": gp.domain_name,
        "problem": gp.problem_name,
        "plans": result.plans.len(),
        "makespan": best.map(|b| b.makespan),
        "actions": best.map(|b| b.actions),
        "metric": best.map(|b| b.metric),
        "improvements": result.plans.improvements,
        "expanded": s.expanded,
        "generated": s.generated,
        "invalid": s.invalid,
        "duplicates": s.duplicates,
        "condition_evaluations": s.eval.evaluations,
        "condition_faults": s.eval.faults,
        "metric_rejected": s.metric_rejected,
        "attachment_failures": attachment_failures,
        "search_time": s.search_time.as_secs_f64(),
        "nodes_per_sec": s.nodes_per_sec(),
        "wall_time": wall.as_secs_f64(),
    });
    writeln!(out, "{record}")
}

fn run_bench(a: &BenchArgs, out: &mut dyn Write) -> Result<i32, Fail> {
    let cfg = BenchConfig {
        expansions: a.expansions,
        repetitions: a.repetitions,
    };
    let opts = a.model.ground_options(None);
    let mut cases: Vec<(String, String, String)> = Vec::new();
    match (&a.domain, &a.problem) {
        (Some(d), Some(p)) => cases.push((p.display().to_string(), read(d)?, read(p)?)),
        _ => {
            for e in corpus::all().into_iter().filter(|e| !e.name.starts_with("synthetic")) {
                cases.push((e.name, e.domain.into_owned(), e.problem.into_owned()));
            }
            let s = Synthetic::new(a.events, a.share);
            cases.push((format!("synthetic/n{}-f{}", a.events, a.share), s.domain(), s.problem()));
        }
    }
    let mut reports = Vec::new();
    for (name, d, p) in cases {
        let gp = crate::load(&d, &p, &opts).map_err(load_err)?;
        let r = bench::measure(&name, &gp, &cfg).map_err(|e| Fail(EXIT_INTERNAL, e.to_string()))?;
        reports.push(r);
    }
    write!(out, "{}", bench::table(&reports))?;
    for r in &reports {
        writeln!(out, "{}", r.record())?;
    }
    Ok(EXIT_PLAN)
}

fn gen_synthetic(a: &GenArgs, out: &mut dyn Write) -> Result<i32, Fail> {
    if !(0.0..=1.0).contains(&a.share) {
        return Err(Fail(EXIT_USAGE, "--share must lie in [0, 1]".into()));
    }
    let s = Synthetic::new(a.events, a.share);
    fs::create_dir_all(&a.out_dir)?;
    let d = a.out_dir.join("domain.pddl");
    let p = a.out_dir.join("problem.pddl");
    fs::write(&d, s.domain())?;
    fs::write(&p, s.problem())?;
    writeln!(out, "wrote {} and {}", d.display(), p.display())?;
    Ok(EXIT_PLAN)
}
