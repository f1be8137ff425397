//! Grounding: instantiate happening schemas over the problem objects and build
//! the proposition/variable tables and the initial state.

use std::collections::{HashMap, HashSet};
use std::fmt::Write;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::expr::{compile, compile_effect, CompileError, CompiledEffect, CompiledExpr, OperatorRegistry};
use crate::pddl::{
    DomainModel, Expr, GroundAtom, HappeningKind, HappeningSchema, Metric, ProblemModel, SymbolRef, Term,
};
use crate::state::{Precision, PropSet, State};

/// Dense numbering of ground atoms.
#[derive(Debug, Clone, Default)]
pub struct Interner {
    items: Vec<GroundAtom>,
    index: HashMap<GroundAtom, u32>,
}

impl Interner {
    pub fn intern(&mut self, atom: GroundAtom) -> u32 {
        if let Some(&i) = self.index.get(&atom) {
            return i;
        }
        let i = self.items.len() as u32;
        self.index.insert(atom.clone(), i);
        self.items.push(atom);
        i
    }

    pub fn get(&self, atom: &GroundAtom) -> Option<u32> {
        self.index.get(atom).copied()
    }

    pub fn name(&self, id: u32) -> &GroundAtom {
        &self.items[id as usize]
    }

    /// Looks an atom up by its printed form, e.g. `(flow engine1)` or `flow`.
    pub fn find(&self, printed: &str) -> Option<u32> {
        let trimmed = printed.trim().trim_start_matches('(').trim_end_matches(')');
        let mut parts = trimmed.split_whitespace();
        let name = parts.next()?;
        self.get(&GroundAtom::new(name, parts.map(str::to_string).collect()))
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &GroundAtom)> {
        self.items.iter().enumerate().map(|(i, a)| (i as u32, a))
    }
}

/// Proposition bit and variable slot assignments.
#[derive(Debug, Clone, Default)]
pub struct SymbolTables {
    pub props: Interner,
    pub vars: Interner,
}

pub type CondId = u32;

/// An interned grounded condition, compiled on first use.
#[derive(Debug)]
pub struct Condition {
    pub expr: Expr,
    /// Canonical printed form; the ordering and identity key.
    pub key: String,
    compiled: OnceLock<CompiledExpr>,
}

impl Condition {
    fn new(expr: Expr) -> Self {
        Condition {
            key: expr.to_string(),
            expr,
            compiled: OnceLock::new(),
        }
    }

    pub fn is_compiled(&self) -> bool {
        self.compiled.get().is_some()
    }
}

#[derive(Debug)]
pub struct GroundedHappening {
    /// Dense id within its kind.
    pub id: u32,
    pub kind: HappeningKind,
    /// Display name, e.g. `(move c1 a b)`.
    pub name: String,
    pub schema: String,
    pub args: Vec<String>,
    /// Duplicate-free, sorted by condition key.
    pub preconditions: Vec<CondId>,
    pub effects: Vec<Expr>,
    /// The synthetic time-passing action.
    pub time_passing: bool,
    compiled_effects: OnceLock<Vec<CompiledEffect>>,
}

impl GroundedHappening {
    pub fn effects_compiled(&self) -> bool {
        self.compiled_effects.get().is_some()
    }
}

#[derive(Debug, Clone)]
pub struct GroundOptions {
    pub dt: f64,
    /// Temporal horizon in seconds; `None` leaves time unbounded.
    pub horizon: Option<f64>,
    pub precision: Precision,
    /// Drop instantiations with statically false preconditions.
    pub prune: bool,
    pub registry: Arc<OperatorRegistry>,
}

impl Default for GroundOptions {
    fn default() -> Self {
        GroundOptions {
            dt: 1.0,
            horizon: None,
            precision: Precision::default(),
            prune: true,
            registry: Arc::new(OperatorRegistry::new()),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GroundError {
    #[error("fluent `{fluent}` is referenced in {context} but never initialized")]
    UninitializedFluent { fluent: String, context: String },
    #[error("time step must be a positive finite number in temporal mode, got {0}")]
    InvalidTimeStep(f64),
    #[error("horizon must be a non-negative number, got {0}")]
    InvalidHorizon(f64),
    #[error("initial value of `{0}` is not finite")]
    NonFiniteInit(String),
    #[error("{context}: {source}")]
    Compile { context: String, source: CompileError },
}

/// The discretized planning task: grounded happenings, tables, initial state,
/// goal, metric, time step and horizon.
#[derive(Debug)]
pub struct GroundedProblem {
    pub domain_name: String,
    pub problem_name: String,
    pub registry: Arc<OperatorRegistry>,
    pub tables: SymbolTables,
    pub conditions: Vec<Condition>,
    pub actions: Vec<GroundedHappening>,
    pub events: Vec<GroundedHappening>,
    pub processes: Vec<GroundedHappening>,
    pub init: State,
    /// Goal conjuncts; the goal holds when all hold.
    pub goal: Vec<CondId>,
    pub metric: Metric,
    /// False when the problem had no `:metric` and makespan is used.
    pub metric_explicit: bool,
    metric_code: CompiledExpr,
    /// Zero outside temporal mode.
    pub dt: f64,
    pub horizon: Option<f64>,
    pub precision: Precision,
    pub temporal: bool,
    pub semantic_attachment: bool,
    pub requirements: Vec<String>,
    /// Instantiations removed by static pruning.
    pub pruned: usize,
}

/// Count and mean precondition count of one happening kind.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KindStats {
    pub count: usize,
    pub avg_preconditions: f64,
}

impl GroundedProblem {
    pub fn happenings(&self, kind: HappeningKind) -> &[GroundedHappening] {
        match kind {
            HappeningKind::Action => &self.actions,
            HappeningKind::Event => &self.events,
            HappeningKind::Process => &self.processes,
        }
    }

    /// Compiled form of a condition; compiled once, on first request.
    pub fn condition(&self, id: CondId) -> &CompiledExpr {
        let c = &self.conditions[id as usize];
        c.compiled.get_or_init(|| {
            compile(&c.expr, &self.tables, &self.registry).expect("conditions are resolved during grounding")
        })
    }

    pub fn effects<'a>(&self, h: &'a GroundedHappening) -> &'a [CompiledEffect] {
        h.compiled_effects.get_or_init(|| {
            h.effects
                .iter()
                .map(|e| {
                    compile_effect(e, &self.tables, &self.registry).expect("effects are resolved during grounding")
                })
                .collect()
        })
    }

    pub fn metric_code(&self) -> &CompiledExpr {
        &self.metric_code
    }

    pub fn time_passing_id(&self) -> Option<u32> {
        self.actions.iter().find(|a| a.time_passing).map(|a| a.id)
    }

    /// Grounded count per kind (time-passing included in actions) and mean
    /// precondition count over the domain's own happenings.
    pub fn kind_stats(&self, kind: HappeningKind) -> KindStats {
        let hs = self.happenings(kind);
        let own: Vec<_> = hs.iter().filter(|h| !h.time_passing).collect();
        let total: usize = own.iter().map(|h| h.preconditions.len()).sum();
        KindStats {
            count: hs.len(),
            avg_preconditions: if own.is_empty() {
                0.0
            } else {
                total as f64 / own.len() as f64
            },
        }
    }

    pub fn var_slot(&self, printed: &str) -> Option<u32> {
        self.tables.vars.find(printed)
    }

    pub fn prop_bit(&self, printed: &str) -> Option<u32> {
        self.tables.props.find(printed)
    }

    /// Human-readable listing of the grounded model.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "; domain {} problem {}", self.domain_name, self.problem_name);
        let _ = writeln!(
            s,
            "; temporal {} dt {} horizon {} precision {}",
            self.temporal,
            self.dt,
            self.horizon.map_or("none".to_string(), |h| h.to_string()),
            self.precision
        );
        let _ = writeln!(s, "propositions:");
        for (i, a) in self.tables.props.iter() {
            let mark = if self.init.props.contains(i) { " *" } else { "" };
            let _ = writeln!(s, "  {i:>4} {a}{mark}");
        }
        let _ = writeln!(s, "variables:");
        for (i, a) in self.tables.vars.iter() {
            let _ = writeln!(s, "  {i:>4} {a} = {}", self.init.vars[i as usize]);
        }
        for kind in HappeningKind::ALL {
            let _ = writeln!(s, "{kind}s:");
            for h in self.happenings(kind) {
                let _ = writeln!(s, "  {:>4} {}", h.id, h.name);
                for c in &h.preconditions {
                    let _ = writeln!(s, "         pre {}", self.conditions[*c as usize].key);
                }
                for e in &h.effects {
                    let _ = writeln!(s, "         eff {e}");
                }
            }
        }
        let _ = writeln!(s, "goal:");
        for c in &self.goal {
            let _ = writeln!(s, "  {}", self.conditions[*c as usize].key);
        }
        let _ = writeln!(
            s,
            "metric: {} {}",
            self.metric.direction.keyword(),
            self.metric.objective
        );
        s
    }
}

fn subst_term(t: &Term, binding: &HashMap<&str, &str>) -> Term {
    match t {
        Term::Var(v) => Term::Const(binding.get(v.as_str()).map_or_else(|| v.clone(), |o| o.to_string())),
        c => c.clone(),
    }
}

fn subst_ref(r: &SymbolRef, binding: &HashMap<&str, &str>) -> SymbolRef {
    SymbolRef::new(r.name.clone(), r.args.iter().map(|t| subst_term(t, binding)).collect())
}

fn substitute(e: &Expr, b: &HashMap<&str, &str>) -> Expr {
    match e {
        Expr::Fluent(r) => Expr::Fluent(subst_ref(r, b)),
        Expr::Prop(r) => Expr::Prop(subst_ref(r, b)),
        Expr::Op { op, args } => Expr::op(op.clone(), args.iter().map(|a| substitute(a, b)).collect()),
        Expr::Cmp { op, lhs, rhs } => Expr::cmp(*op, substitute(lhs, b), substitute(rhs, b)),
        Expr::And(items) => Expr::And(items.iter().map(|a| substitute(a, b)).collect()),
        Expr::Or(items) => Expr::Or(items.iter().map(|a| substitute(a, b)).collect()),
        Expr::Not(inner) => Expr::Not(Box::new(substitute(inner, b))),
        Expr::TermEq(x, y) => Expr::TermEq(subst_term(x, b), subst_term(y, b)),
        Expr::Assign { op, target, value } => Expr::Assign {
            op: *op,
            target: subst_ref(target, b),
            value: Box::new(substitute(value, b)),
        },
        other => other.clone(),
    }
}

fn atom_of(r: &SymbolRef) -> GroundAtom {
    GroundAtom::new(r.name.clone(), r.args.iter().map(|t| t.name().to_string()).collect())
}

/// Truth value of a top-level conjunct decidable without a state.
fn static_value(e: &Expr) -> Option<bool> {
    match e {
        Expr::TermEq(a, b) => Some(a == b),
        Expr::Not(inner) => static_value(inner).map(|v| !v),
        _ => None,
    }
}

/// Flattened precondition conjuncts, or `None` when statically false.
fn flatten_conjuncts(e: &Expr) -> Option<Vec<Expr>> {
    let mut out = Vec::new();
    for c in e.conjuncts() {
        match static_value(c) {
            Some(true) => {}
            Some(false) => return None,
            None => out.push(c.clone()),
        }
    }
    Some(out)
}

struct Instance<'a> {
    schema: &'a HappeningSchema,
    args: Vec<String>,
    pre: Vec<Expr>,
    effects: Vec<Expr>,
}

/// Bindings in lexicographic order of the bound objects, first parameter most significant.
fn bindings(schema: &HappeningSchema, domain: &DomainModel, objects: &[(String, String)]) -> Vec<Vec<String>> {
    let candidates: Vec<Vec<&str>> = schema
        .params
        .iter()
        .map(|p| {
            let mut c: Vec<&str> = objects
                .iter()
                .filter(|(_, t)| domain.is_subtype(t, &p.ty))
                .map(|(o, _)| o.as_str())
                .collect();
            c.sort_unstable();
            c.dedup();
            c
        })
        .collect();
    let mut out = vec![Vec::new()];
    for c in &candidates {
        let mut next = Vec::with_capacity(out.len() * c.len());
        for prefix in &out {
            for o in c {
                let mut b = prefix.clone();
                b.push(o.to_string());
                next.push(b);
            }
        }
        out = next;
    }
    out
}

fn check_fluents(exprs: &[&Expr], initialized: &HashSet<GroundAtom>, context: &str) -> Result<(), GroundError> {
    let mut missing = None;
    for e in exprs {
        e.walk(&mut |n| {
            let r = match n {
                Expr::Fluent(r) => r,
                Expr::Assign { target, .. } => target,
                _ => return,
            };
            let a = atom_of(r);
            if missing.is_none() && !initialized.contains(&a) {
                missing = Some(a.to_string());
            }
        });
    }
    match missing {
        Some(fluent) => Err(GroundError::UninitializedFluent {
            fluent,
            context: context.to_string(),
        }),
        None => Ok(()),
    }
}

fn intern_props(e: &Expr, tables: &mut SymbolTables) {
    e.walk(&mut |n| {
        if let Expr::Prop(r) = n {
            tables.props.intern(atom_of(r));
        }
    });
}

/// Grounds `problem` against `domain`.
///
/// Happening ids are contiguous per kind, ordered by schema order then by the
/// lexicographic order of the bound objects. In temporal mode the time-passing
/// action is appended as the last action.
pub fn ground(
    domain: &DomainModel,
    problem: &ProblemModel,
    opts: &GroundOptions,
) -> Result<GroundedProblem, GroundError> {
    let temporal = domain.temporal();
    if temporal && !(opts.dt.is_finite() && opts.dt > 0.0) {
        return Err(GroundError::InvalidTimeStep(opts.dt));
    }
    if let Some(h) = opts.horizon {
        if h.is_nan() || h < 0.0 {
            return Err(GroundError::InvalidHorizon(h));
        }
    }

    let mut objects: Vec<(String, String)> = domain.constants.clone();
    objects.extend(problem.objects.iter().cloned());

    // instantiate every schema
    let mut instances: Vec<Instance> = Vec::new();
    let mut reachable_props: HashSet<GroundAtom> = problem.init_atoms.iter().cloned().collect();
    for schema in &domain.happenings {
        for args in bindings(schema, domain, &objects) {
            let binding: HashMap<&str, &str> = schema
                .params
                .iter()
                .map(|p| p.name.as_str())
                .zip(args.iter().map(String::as_str))
                .collect();
            let Some(pre) = flatten_conjuncts(&substitute(&schema.precondition, &binding)) else {
                continue;
            };
            let effects: Vec<Expr> = schema.effects.iter().map(|e| substitute(e, &binding)).collect();
            for e in &effects {
                if let Expr::Prop(r) = e {
                    reachable_props.insert(atom_of(r));
                }
            }
            instances.push(Instance {
                schema,
                args,
                pre,
                effects,
            });
        }
    }

    let mut pruned = 0;
    if opts.prune {
        let before = instances.len();
        instances.retain(|inst| {
            inst.pre
                .iter()
                .all(|c| !matches!(c, Expr::Prop(r) if !reachable_props.contains(&atom_of(r))))
        });
        pruned = before - instances.len();
    }

    let mut tables = SymbolTables::default();
    let mut init_props = Vec::new();
    for a in &problem.init_atoms {
        init_props.push(tables.props.intern(a.clone()));
    }
    let mut init_vars = Vec::new();
    for (a, v) in &problem.init_values {
        if !v.is_finite() {
            return Err(GroundError::NonFiniteInit(a.to_string()));
        }
        tables.vars.intern(a.clone());
        init_vars.push(*v);
    }
    let initialized: HashSet<GroundAtom> = problem.init_values.iter().map(|(a, _)| a.clone()).collect();

    let mut conditions: Vec<Condition> = Vec::new();
    let mut cond_index: HashMap<String, CondId> = HashMap::new();
    let mut intern_cond = |e: Expr, conditions: &mut Vec<Condition>| -> CondId {
        let c = Condition::new(e);
        if let Some(&id) = cond_index.get(&c.key) {
            return id;
        }
        let id = conditions.len() as CondId;
        cond_index.insert(c.key.clone(), id);
        conditions.push(c);
        id
    };

    let mut actions = Vec::new();
    let mut events = Vec::new();
    let mut processes = Vec::new();
    for inst in instances {
        let name = if inst.args.is_empty() {
            format!("({})", inst.schema.name)
        } else {
            format!("({} {})", inst.schema.name, inst.args.join(" "))
        };
        let refs: Vec<&Expr> = inst.pre.iter().chain(&inst.effects).collect();
        check_fluents(&refs, &initialized, &name)?;
        for e in &refs {
            intern_props(e, &mut tables);
        }
        let mut pre: Vec<CondId> = inst.pre.into_iter().map(|c| intern_cond(c, &mut conditions)).collect();
        pre.sort_by(|a, b| conditions[*a as usize].key.cmp(&conditions[*b as usize].key));
        pre.dedup();
        let list = match inst.schema.kind {
            HappeningKind::Action => &mut actions,
            HappeningKind::Event => &mut events,
            HappeningKind::Process => &mut processes,
        };
        list.push(GroundedHappening {
            id: list.len() as u32,
            kind: inst.schema.kind,
            name,
            schema: inst.schema.name.clone(),
            args: inst.args,
            preconditions: pre,
            effects: inst.effects,
            time_passing: false,
            compiled_effects: OnceLock::new(),
        });
    }
    if temporal {
        actions.push(GroundedHappening {
            id: actions.len() as u32,
            kind: HappeningKind::Action,
            name: "(time-passing)".to_string(),
            schema: "time-passing".to_string(),
            args: Vec::new(),
            preconditions: Vec::new(),
            effects: Vec::new(),
            time_passing: true,
            compiled_effects: OnceLock::new(),
        });
    }

    let goal_conjuncts = flatten_conjuncts(&problem.goal);
    let goal_exprs = match goal_conjuncts {
        Some(g) => g,
        // statically false goal: keep it as an unsatisfiable condition
        None => vec![Expr::Or(Vec::new())],
    };
    check_fluents(&goal_exprs.iter().collect::<Vec<_>>(), &initialized, "the goal")?;
    for g in &goal_exprs {
        intern_props(g, &mut tables);
    }
    let mut goal: Vec<CondId> = goal_exprs
        .into_iter()
        .map(|g| intern_cond(g, &mut conditions))
        .collect();
    goal.sort_by(|a, b| conditions[*a as usize].key.cmp(&conditions[*b as usize].key));
    goal.dedup();

    let (metric, metric_explicit) = match &problem.metric {
        Some(m) => (m.clone(), true),
        None => (Metric::makespan(), false),
    };
    check_fluents(&[&metric.objective], &initialized, "the metric")?;
    let metric_code = compile(&metric.objective, &tables, &opts.registry).map_err(|source| GroundError::Compile {
        context: "metric".into(),
        source,
    })?;

    let mut props = PropSet::with_capacity(tables.props.len());
    for p in init_props {
        props.insert(p);
    }
    let init = State::new(props, init_vars);

    let gp = GroundedProblem {
        domain_name: domain.name.clone(),
        problem_name: problem.name.clone(),
        registry: opts.registry.clone(),
        tables,
        conditions,
        actions,
        events,
        processes,
        init,
        goal,
        metric,
        metric_explicit,
        metric_code,
        dt: if temporal { opts.dt } else { 0.0 },
        horizon: opts.horizon,
        precision: opts.precision,
        temporal,
        semantic_attachment: domain.semantic_attachment(),
        requirements: domain.requirements.clone(),
        pruned,
    };
    verify_resolvable(&gp)?;
    Ok(gp)
}

/// Checks that every grounded expression resolves against the tables and the
/// operator registry. Does not populate the compile caches.
pub fn verify_resolvable(gp: &GroundedProblem) -> Result<(), GroundError> {
    for c in &gp.conditions {
        compile(&c.expr, &gp.tables, &gp.registry).map_err(|source| GroundError::Compile {
            context: c.key.clone(),
            source,
        })?;
    }
    for kind in HappeningKind::ALL {
        for h in gp.happenings(kind) {
            for e in &h.effects {
                compile_effect(e, &gp.tables, &gp.registry).map_err(|source| GroundError::Compile {
                    context: h.name.clone(),
                    source,
                })?;
            }
        }
    }
    Ok(())
}
