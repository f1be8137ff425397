use std::fmt;

/// Argument of a predicate or function reference.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    /// `?x`, bound by a schema parameter.
    Var(String),
    /// Object or constant name.
    Const(String),
}

impl Term {
    pub fn name(&self) -> &str {
        match self {
            Term::Var(s) | Term::Const(s) => s,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `(name arg ...)` reference to a predicate or a function.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolRef {
    pub name: String,
    pub args: Vec<Term>,
}

impl SymbolRef {
    pub fn new(name: impl Into<String>, args: Vec<Term>) -> Self {
        Self {
            name: name.into(),
            args,
        }
    }

    pub fn nullary(name: impl Into<String>) -> Self {
        Self::new(name, Vec::new())
    }
}

impl fmt::Display for SymbolRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            "=" => CmpOp::Eq,
            _ => return None,
        })
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Eq => lhs == rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssignOp {
    Assign,
    Increase,
    Decrease,
}

impl AssignOp {
    pub fn keyword(self) -> &'static str {
        match self {
            AssignOp::Assign => "assign",
            AssignOp::Increase => "increase",
            AssignOp::Decrease => "decrease",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "assign" => Some(AssignOp::Assign),
            "increase" => Some(AssignOp::Increase),
            "decrease" => Some(AssignOp::Decrease),
            _ => None,
        }
    }
}

/// Conditions, numeric expressions and effects share one tree type.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Fluent(SymbolRef),
    Prop(SymbolRef),
    /// Application of a registered operator (`+`, `^`, ...).
    Op {
        op: String,
        args: Vec<Expr>,
    },
    /// `#t`, the elapsed duration of the current transition.
    Dt,
    TotalTime,
    TotalActions,
    Cmp {
        op: CmpOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Not(Box<Expr>),
    /// Syntactic object equality `(= ?a ?b)`, resolved at grounding.
    TermEq(Term, Term),
    Assign {
        op: AssignOp,
        target: SymbolRef,
        value: Box<Expr>,
    },
}

impl Expr {
    pub fn cmp(op: CmpOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Cmp {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn op(op: impl Into<String>, args: Vec<Expr>) -> Self {
        Expr::Op { op: op.into(), args }
    }

    pub fn fluent(name: &str) -> Self {
        Expr::Fluent(SymbolRef::nullary(name))
    }

    pub fn prop(name: &str) -> Self {
        Expr::Prop(SymbolRef::nullary(name))
    }

    /// Boolean-valued node (condition) as opposed to a numeric one.
    pub fn is_condition(&self) -> bool {
        matches!(
            self,
            Expr::Prop(_) | Expr::Cmp { .. } | Expr::And(_) | Expr::Or(_) | Expr::Not(_) | Expr::TermEq(..)
        )
    }

    /// Visits every node, parents before children.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Op { args, .. } | Expr::And(args) | Expr::Or(args) => args.iter().for_each(|a| a.walk(f)),
            Expr::Cmp { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            Expr::Not(e) => e.walk(f),
            Expr::Assign { value, .. } => value.walk(f),
            _ => {}
        }
    }

    pub fn contains_dt(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e, Expr::Dt));
        found
    }

    /// Top-level conjuncts; nested `and`s are flattened.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        fn go<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
            match e {
                Expr::And(items) => items.iter().for_each(|i| go(i, out)),
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, head: &str, items: &[Expr]) -> fmt::Result {
            write!(f, "({head}")?;
            for i in items {
                write!(f, " {i}")?;
            }
            f.write_str(")")
        }
        match self {
            Expr::Number(n) => write!(f, "{n}"),
            Expr::Fluent(r) | Expr::Prop(r) => write!(f, "{r}"),
            Expr::Op { op, args } => list(f, op, args),
            Expr::Dt => f.write_str("#t"),
            Expr::TotalTime => f.write_str("(total-time)"),
            Expr::TotalActions => f.write_str("(total-actions)"),
            Expr::Cmp { op, lhs, rhs } => write!(f, "({} {lhs} {rhs})", op.symbol()),
            Expr::And(items) => list(f, "and", items),
            Expr::Or(items) => list(f, "or", items),
            Expr::Not(e) => write!(f, "(not {e})"),
            Expr::TermEq(a, b) => write!(f, "(= {a} {b})"),
            Expr::Assign { op, target, value } => {
                write!(f, "({} {target} {value})", op.keyword())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HappeningKind {
    Action,
    Event,
    Process,
}

impl HappeningKind {
    pub const ALL: [HappeningKind; 3] = [HappeningKind::Action, HappeningKind::Event, HappeningKind::Process];

    pub fn keyword(self) -> &'static str {
        match self {
            HappeningKind::Action => ":action",
            HappeningKind::Event => ":event",
            HappeningKind::Process => ":process",
        }
    }
}

impl fmt::Display for HappeningKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.keyword()[1..])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedParam {
    pub name: String,
    pub ty: String,
}

/// Predicate or function declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub name: String,
    pub params: Vec<TypedParam>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HappeningSchema {
    pub name: String,
    pub kind: HappeningKind,
    pub params: Vec<TypedParam>,
    pub precondition: Expr,
    pub effects: Vec<Expr>,
}

pub const ROOT_TYPE: &str = "object";

#[derive(Debug, Clone, PartialEq)]
pub struct DomainModel {
    pub name: String,
    /// Lower-cased requirement keys, in file order.
    pub requirements: Vec<String>,
    pub warnings: Vec<String>,
    /// `(type, parent)` pairs in declaration order; `object` is implicit.
    pub types: Vec<(String, String)>,
    pub constants: Vec<(String, String)>,
    pub predicates: Vec<Signature>,
    pub functions: Vec<Signature>,
    pub happenings: Vec<HappeningSchema>,
}

impl DomainModel {
    pub fn has_requirement(&self, req: &str) -> bool {
        self.requirements.iter().any(|r| r == req)
    }

    /// Discretized temporal mode, enabled by `:time`.
    pub fn temporal(&self) -> bool {
        self.has_requirement(":time")
    }

    pub fn semantic_attachment(&self) -> bool {
        self.has_requirement(":semantic-attachment")
    }

    pub fn type_parent(&self, ty: &str) -> Option<&str> {
        self.types.iter().find(|(t, _)| t == ty).map(|(_, p)| p.as_str())
    }

    pub fn has_type(&self, ty: &str) -> bool {
        ty == ROOT_TYPE || self.type_parent(ty).is_some()
    }

    /// `sub` equals `sup` or inherits from it.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        let mut cur = sub;
        // bounded by the number of types; hierarchy is acyclic after parsing
        for _ in 0..=self.types.len() {
            if cur == sup {
                return true;
            }
            match self.type_parent(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
        false
    }

    pub fn predicate(&self, name: &str) -> Option<&Signature> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&Signature> {
        self.functions.iter().find(|p| p.name == name)
    }

    pub fn happenings_of(&self, kind: HappeningKind) -> impl Iterator<Item = &HappeningSchema> {
        self.happenings.iter().filter(move |h| h.kind == kind)
    }
}

/// Grounded `(name obj ...)` as written in `:init`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub name: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new(name: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            name: name.into(),
            args,
        }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Direction {
    pub fn keyword(self) -> &'static str {
        match self {
            Direction::Minimize => "minimize",
            Direction::Maximize => "maximize",
        }
    }

    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Minimize => a < b,
            Direction::Maximize => a > b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub direction: Direction,
    pub objective: Expr,
}

impl Metric {
    /// Default objective when a problem has no `:metric`: minimize makespan.
    pub fn makespan() -> Self {
        Metric {
            direction: Direction::Minimize,
            objective: Expr::TotalTime,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemModel {
    pub name: String,
    pub domain_name: String,
    pub objects: Vec<(String, String)>,
    pub init_atoms: Vec<GroundAtom>,
    pub init_values: Vec<(GroundAtom, f64)>,
    pub goal: Expr,
    pub metric: Option<Metric>,
    pub warnings: Vec<String>,
}
