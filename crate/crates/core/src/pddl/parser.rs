use std::collections::HashSet;

use super::ast::*;
use super::lexer::{read_sexprs, tokenize, Pos, SExpr, Token};
use super::ParseError;
use crate::expr::OperatorRegistry;

const KNOWN_REQUIREMENTS: &[&str] = &[
    ":strips",
    ":typing",
    ":negative-preconditions",
    ":disjunctive-preconditions",
    ":equality",
    ":fluents",
    ":numeric-fluents",
    ":continuous-effects",
    ":processes",
    ":events",
    ":time",
    ":semantic-attachment",
];

type PResult<T> = Result<T, ParseError>;

fn err<T>(msg: impl Into<String>, pos: Pos) -> PResult<T> {
    Err(ParseError::new(msg, pos))
}

fn expect_list<'a>(e: &'a SExpr, what: &str) -> PResult<&'a [SExpr]> {
    e.as_list().ok_or_else(|| {
        ParseError::new(
            format!("expected {what}, found `{}`", e.as_atom().unwrap_or("")),
            e.pos(),
        )
    })
}

fn expect_atom<'a>(e: &'a SExpr, what: &str) -> PResult<&'a str> {
    e.as_atom()
        .ok_or_else(|| ParseError::new(format!("expected {what}, found a list"), e.pos()))
}

/// Parses a decimal number with optional fraction and exponent. Rejects `inf`/`nan`.
pub fn parse_number(s: &str) -> Option<f64> {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    let starts_ok = body.chars().next().is_some_and(|c| c.is_ascii_digit() || c == '.');
    if !starts_ok
        || !body
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '-' | '+'))
    {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Splits `a b - t c` into `(name, type)` pairs; untyped names get `object`.
fn typed_list(items: &[SExpr]) -> PResult<Vec<(String, String, Pos)>> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let it = &items[i];
        if it.as_atom() == Some("-") {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| ParseError::new("type expected after `-`", it.pos()))?;
            let ty = match ty {
                SExpr::Atom(t, _) => t.clone(),
                SExpr::List(l, p) => {
                    if l.first().is_some_and(|h| h.is_keyword("either")) {
                        return err("`either` types are not supported; use a common supertype", *p);
                    }
                    return err("expected a type name", *p);
                }
            };
            if pending.is_empty() {
                return err("`-` without preceding names", it.pos());
            }
            for (n, p) in pending.drain(..) {
                out.push((n, ty.clone(), p));
            }
            i += 2;
            continue;
        }
        let name = expect_atom(it, "a name")?;
        pending.push((name.to_string(), it.pos()));
        i += 1;
    }
    for (n, p) in pending {
        out.push((n, ROOT_TYPE.to_string(), p));
    }
    Ok(out)
}

fn params_of(items: &[SExpr], domain: &DomainModel) -> PResult<Vec<TypedParam>> {
    let mut seen = HashSet::new();
    typed_list(items)?
        .into_iter()
        .map(|(name, ty, pos)| {
            if !name.starts_with('?') {
                return err(format!("parameter `{name}` must start with `?`"), pos);
            }
            if !domain.has_type(&ty) {
                return err(format!("undeclared type `{ty}`"), pos);
            }
            if !seen.insert(name.clone()) {
                return err(format!("duplicate parameter `{name}`"), pos);
            }
            Ok(TypedParam { name, ty })
        })
        .collect()
}

/// Name-resolution context for formulas.
struct Scope<'a> {
    domain: &'a DomainModel,
    registry: &'a OperatorRegistry,
    params: &'a [TypedParam],
    objects: &'a [(String, String)],
    /// `#t` is legal (process effects only).
    allow_dt: bool,
}

impl<'a> Scope<'a> {
    fn term(&self, e: &SExpr) -> PResult<Term> {
        let name = expect_atom(e, "a term")?;
        if name.starts_with('?') {
            if self.params.iter().any(|p| p.name == name) {
                Ok(Term::Var(name.to_string()))
            } else {
                err(format!("unbound variable `{name}`"), e.pos())
            }
        } else if self.is_object(name) {
            Ok(Term::Const(name.to_string()))
        } else {
            err(format!("unknown object `{name}`"), e.pos())
        }
    }

    fn is_object(&self, name: &str) -> bool {
        self.objects.iter().any(|(o, _)| o == name) || self.domain.constants.iter().any(|(o, _)| o == name)
    }

    fn is_term_like(&self, e: &SExpr) -> bool {
        match e.as_atom() {
            Some(a) => a.starts_with('?') || (self.is_object(a) && self.domain.function(a).is_none()),
            None => false,
        }
    }

    fn symbol_ref(&self, name: &str, args: &[SExpr], sig: &Signature, pos: Pos, what: &str) -> PResult<SymbolRef> {
        if args.len() != sig.params.len() {
            return err(
                format!(
                    "{what} `{name}` expects {} argument(s), got {}",
                    sig.params.len(),
                    args.len()
                ),
                pos,
            );
        }
        let args = args.iter().map(|a| self.term(a)).collect::<PResult<_>>()?;
        Ok(SymbolRef::new(name, args))
    }

    fn condition(&self, e: &SExpr) -> PResult<Expr> {
        let items = match e {
            SExpr::Atom(a, p) => return err(format!("expected a condition, found `{a}`"), *p),
            SExpr::List(items, _) => items,
        };
        let pos = e.pos();
        let Some(head) = items.first() else {
            return err("empty condition", pos);
        };
        let head_s = expect_atom(head, "a condition head")?;
        let rest = &items[1..];
        match head_s.to_ascii_lowercase().as_str() {
            "and" => Ok(Expr::And(
                rest.iter().map(|c| self.condition(c)).collect::<PResult<_>>()?,
            )),
            "or" => Ok(Expr::Or(
                rest.iter().map(|c| self.condition(c)).collect::<PResult<_>>()?,
            )),
            "not" => {
                if rest.len() != 1 {
                    return err("`not` takes exactly one argument", pos);
                }
                Ok(Expr::Not(Box::new(self.condition(&rest[0])?)))
            }
            "forall" | "exists" | "imply" | "when" | "preference" => {
                err(format!("`{head_s}` is not supported in conditions"), pos)
            }
            "=" if rest.len() == 2 && self.is_term_like(&rest[0]) && self.is_term_like(&rest[1]) => {
                Ok(Expr::TermEq(self.term(&rest[0])?, self.term(&rest[1])?))
            }
            sym => {
                if let Some(op) = CmpOp::from_symbol(sym) {
                    if rest.len() != 2 {
                        return err(format!("comparison `{sym}` takes two operands"), pos);
                    }
                    return Ok(Expr::cmp(op, self.numeric(&rest[0])?, self.numeric(&rest[1])?));
                }
                if let Some(sig) = self.domain.predicate(head_s) {
                    return Ok(Expr::Prop(self.symbol_ref(head_s, rest, sig, pos, "predicate")?));
                }
                err(format!("undeclared predicate `{head_s}`"), pos)
            }
        }
    }

    fn numeric(&self, e: &SExpr) -> PResult<Expr> {
        let pos = e.pos();
        match e {
            SExpr::Atom(a, _) => {
                if let Some(v) = parse_number(a) {
                    return Ok(Expr::Number(v));
                }
                if a == "#t" {
                    return if self.allow_dt {
                        Ok(Expr::Dt)
                    } else {
                        err("`#t` is only allowed inside process effects", pos)
                    };
                }
                match a.to_ascii_lowercase().as_str() {
                    "total-time" => return Ok(Expr::TotalTime),
                    "total-actions" => return Ok(Expr::TotalActions),
                    _ => {}
                }
                match self.domain.function(a) {
                    Some(sig) if sig.params.is_empty() => Ok(Expr::Fluent(SymbolRef::nullary(a.as_str()))),
                    Some(sig) => err(
                        format!("function `{a}` expects {} argument(s), got 0", sig.params.len()),
                        pos,
                    ),
                    None => err(format!("unknown numeric symbol `{a}`"), pos),
                }
            }
            SExpr::List(items, _) => {
                let Some(head) = items.first() else {
                    return err("empty numeric expression", pos);
                };
                let head_s = expect_atom(head, "an operator or function")?;
                let rest = &items[1..];
                match head_s.to_ascii_lowercase().as_str() {
                    "total-time" if rest.is_empty() => return Ok(Expr::TotalTime),
                    "total-actions" if rest.is_empty() => return Ok(Expr::TotalActions),
                    _ => {}
                }
                if let Some(id) = self.registry.lookup(head_s) {
                    let def = self.registry.get(id);
                    if !def.arity.accepts(rest.len()) {
                        return err(
                            format!(
                                "operator `{head_s}` expects {} operand(s), got {}",
                                def.arity,
                                rest.len()
                            ),
                            pos,
                        );
                    }
                    let args = rest.iter().map(|a| self.numeric(a)).collect::<PResult<_>>()?;
                    return Ok(Expr::op(head_s, args));
                }
                if let Some(sig) = self.domain.function(head_s) {
                    return Ok(Expr::Fluent(self.symbol_ref(head_s, rest, sig, pos, "function")?));
                }
                let known: Vec<&str> = self.registry.symbols().collect();
                err(
                    format!(
                        "unknown operator or function `{head_s}` (registered operators: {})",
                        known.join(" ")
                    ),
                    pos,
                )
            }
        }
    }

    fn fluent_target(&self, e: &SExpr) -> PResult<SymbolRef> {
        match e {
            SExpr::Atom(a, p) => match self.domain.function(a) {
                Some(sig) if sig.params.is_empty() => Ok(SymbolRef::nullary(a.as_str())),
                _ => err(format!("`{a}` is not a nullary function"), *p),
            },
            SExpr::List(items, p) => {
                let head = items
                    .first()
                    .ok_or_else(|| ParseError::new("empty assignment target", *p))?;
                let name = expect_atom(head, "a function name")?;
                let sig = self
                    .domain
                    .function(name)
                    .ok_or_else(|| ParseError::new(format!("undeclared function `{name}`"), *p))?;
                self.symbol_ref(name, &items[1..], sig, *p, "function")
            }
        }
    }

    fn effects(&self, e: &SExpr, out: &mut Vec<Expr>) -> PResult<()> {
        let pos = e.pos();
        let items = match e {
            SExpr::List(items, _) => items,
            SExpr::Atom(a, p) => return err(format!("expected an effect, found `{a}`"), *p),
        };
        let Some(head) = items.first() else {
            // `()` is an empty effect
            return Ok(());
        };
        let head_s = expect_atom(head, "an effect head")?;
        let rest = &items[1..];
        match head_s.to_ascii_lowercase().as_str() {
            "and" => {
                for r in rest {
                    self.effects(r, out)?;
                }
                Ok(())
            }
            "not" => {
                if rest.len() != 1 {
                    return err("`not` takes exactly one argument", pos);
                }
                match self.condition(&rest[0])? {
                    p @ Expr::Prop(_) => {
                        out.push(Expr::Not(Box::new(p)));
                        Ok(())
                    }
                    _ => err("only atoms can be deleted", rest[0].pos()),
                }
            }
            "when" => err("conditional effects are not supported", pos),
            "forall" => err("`forall` effects are not supported", pos),
            "scale-up" | "scale-down" => err(format!("`{head_s}` is not supported"), pos),
            kw => {
                if let Some(op) = AssignOp::from_keyword(kw) {
                    if rest.len() != 2 {
                        return err(format!("`{kw}` takes a target and a value"), pos);
                    }
                    let target = self.fluent_target(&rest[0])?;
                    let value = self.numeric(&rest[1])?;
                    out.push(Expr::Assign {
                        op,
                        target,
                        value: Box::new(value),
                    });
                    return Ok(());
                }
                match self.domain.predicate(head_s) {
                    Some(sig) => {
                        out.push(Expr::Prop(self.symbol_ref(head_s, rest, sig, pos, "predicate")?));
                        Ok(())
                    }
                    None => err(format!("undeclared predicate `{head_s}`"), pos),
                }
            }
        }
    }
}

/// Degree of `#t` in a numeric expression, or `None` when non-linear.
fn dt_degree(e: &Expr) -> Option<u32> {
    match e {
        Expr::Dt => Some(1),
        Expr::Op { op, args } => {
            let degs: Vec<u32> = args.iter().map(dt_degree).collect::<Option<_>>()?;
            match op.as_str() {
                "+" | "-" => degs.into_iter().max().or(Some(0)),
                "*" => Some(degs.iter().sum()),
                "/" => (degs[1] == 0).then_some(degs[0]),
                _ => degs.iter().all(|d| *d == 0).then_some(0),
            }
        }
        _ => Some(0),
    }
}

fn section_key(e: &SExpr) -> Option<String> {
    e.as_list()
        .and_then(|l| l.first())
        .and_then(|h| h.as_atom())
        .map(|s| s.to_ascii_lowercase())
}

/// Unwraps `(define (KIND name) ...)`, returning the name and the sections.
fn define_block<'a>(top: &'a [SExpr], kind: &str) -> PResult<(String, &'a [SExpr])> {
    let first = top
        .first()
        .ok_or_else(|| ParseError::new("empty input", Pos { line: 1, col: 1 }))?;
    if let Some(extra) = top.get(1) {
        return err("unexpected content after the `define` block", extra.pos());
    }
    let items = expect_list(first, "`(define ...)`")?;
    if !items.first().is_some_and(|h| h.is_keyword("define")) {
        return err("expected `define`", first.pos());
    }
    let header = items
        .get(1)
        .ok_or_else(|| ParseError::new(format!("missing `({kind} <name>)`"), first.pos()))?;
    let h = expect_list(header, "a header")?;
    if h.len() != 2 || !h[0].is_keyword(kind) {
        return err(format!("expected `({kind} <name>)`"), header.pos());
    }
    Ok((expect_atom(&h[1], "a name")?.to_string(), &items[2..]))
}

fn signatures(items: &[SExpr], domain: &DomainModel, functions: bool) -> PResult<Vec<Signature>> {
    let mut out: Vec<Signature> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let it = &items[i];
        if functions && it.as_atom() == Some("-") {
            match items.get(i + 1).and_then(|t| t.as_atom()) {
                Some(t) if t.eq_ignore_ascii_case("number") => {
                    i += 2;
                    continue;
                }
                _ => return err("only `number` functions are supported", it.pos()),
            }
        }
        let l = expect_list(it, "a declaration")?;
        let name = expect_atom(
            l.first()
                .ok_or_else(|| ParseError::new("empty declaration", it.pos()))?,
            "a name",
        )?;
        if out.iter().any(|s| s.name == name) {
            return err(format!("`{name}` declared twice"), it.pos());
        }
        let params = params_of(&l[1..], domain)?;
        out.push(Signature {
            name: name.to_string(),
            params,
        });
        i += 1;
    }
    Ok(out)
}

fn parse_types(items: &[SExpr], domain: &mut DomainModel) -> PResult<()> {
    for (name, parent, pos) in typed_list(items)? {
        if name == ROOT_TYPE {
            continue;
        }
        match domain.type_parent(&name) {
            Some(p) if p != parent => return err(format!("type `{name}` has two parents (`{p}` and `{parent}`)"), pos),
            Some(_) => {}
            None => domain.types.push((name.clone(), parent.clone())),
        }
        if parent != ROOT_TYPE && domain.type_parent(&parent).is_none() {
            domain.types.push((parent.clone(), ROOT_TYPE.to_string()));
        }
    }
    for (t, _) in &domain.types {
        let mut cur = t.as_str();
        for _ in 0..=domain.types.len() {
            match domain.type_parent(cur) {
                Some(p) => cur = p,
                None => break,
            }
        }
        if cur != ROOT_TYPE {
            return err(format!("cyclic type hierarchy involving `{t}`"), Pos::default());
        }
    }
    Ok(())
}

fn parse_happening(
    items: &[SExpr],
    kind: HappeningKind,
    pos: Pos,
    domain: &DomainModel,
    registry: &OperatorRegistry,
) -> PResult<HappeningSchema> {
    let name = expect_atom(
        items
            .get(1)
            .ok_or_else(|| ParseError::new(format!("{} without a name", kind.keyword()), pos))?,
        "a name",
    )?
    .to_string();
    let mut params = Vec::new();
    let mut pre_src = None;
    let mut eff_src = None;
    let mut i = 2;
    while i < items.len() {
        let key = expect_atom(&items[i], "a keyword")?.to_ascii_lowercase();
        let val = items
            .get(i + 1)
            .ok_or_else(|| ParseError::new(format!("missing value for `{key}`"), items[i].pos()))?;
        match key.as_str() {
            ":parameters" => params = params_of(expect_list(val, "a parameter list")?, domain)?,
            ":precondition" => pre_src = Some(val),
            ":effect" => eff_src = Some(val),
            _ => return err(format!("unknown key `{key}` in `{name}`"), items[i].pos()),
        }
        i += 2;
    }
    let mut scope = Scope {
        domain,
        registry,
        params: &params,
        objects: &[],
        allow_dt: false,
    };
    let precondition = match pre_src {
        Some(p) if p.as_list().is_some_and(|l| l.is_empty()) => Expr::And(Vec::new()),
        Some(p) => scope.condition(p)?,
        None => Expr::And(Vec::new()),
    };
    scope.allow_dt = kind == HappeningKind::Process;
    let mut effects = Vec::new();
    if let Some(e) = eff_src {
        scope.effects(e, &mut effects)?;
    }
    if kind == HappeningKind::Process {
        for eff in &effects {
            if let Expr::Assign { op, value, .. } = eff {
                if *op != AssignOp::Assign && dt_degree(value).is_none_or(|d| d > 1) {
                    return err(
                        format!("process `{name}`: `#t` must appear at most linearly in `{eff}`"),
                        eff_src.map_or(pos, SExpr::pos),
                    );
                }
            }
        }
    }
    Ok(HappeningSchema {
        name,
        kind,
        params: params.clone(),
        precondition,
        effects,
    })
}

/// Parses a domain using the default operator set.
pub fn parse_domain(tokens: &[Token]) -> PResult<DomainModel> {
    parse_domain_with(tokens, &OperatorRegistry::new())
}

pub fn parse_domain_with(tokens: &[Token], registry: &OperatorRegistry) -> PResult<DomainModel> {
    let top = read_sexprs(tokens)?;
    let (name, sections) = define_block(&top, "domain")?;
    let mut domain = DomainModel {
        name,
        requirements: Vec::new(),
        warnings: Vec::new(),
        types: Vec::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        functions: Vec::new(),
        happenings: Vec::new(),
    };

    // declarations first, so schemas may appear anywhere
    let mut schemas = Vec::new();
    let mut seen = HashSet::new();
    for sec in sections {
        let key = section_key(sec).ok_or_else(|| ParseError::new("expected a section", sec.pos()))?;
        let items = &sec.as_list().unwrap()[1..];
        let once = |seen: &mut HashSet<String>| -> PResult<()> {
            if !seen.insert(key.clone()) {
                return err(format!("duplicate `{key}` section"), sec.pos());
            }
            Ok(())
        };
        match key.as_str() {
            ":requirements" => {
                once(&mut seen)?;
                for r in items {
                    let r = expect_atom(r, "a requirement")?.to_ascii_lowercase();
                    if !KNOWN_REQUIREMENTS.contains(&r.as_str()) {
                        domain.warnings.push(format!("unsupported requirement `{r}` ignored"));
                    }
                    domain.requirements.push(r);
                }
            }
            ":types" => {
                once(&mut seen)?;
                parse_types(items, &mut domain)?;
            }
            ":constants" => {
                once(&mut seen)?;
                for (n, t, p) in typed_list(items)? {
                    if !domain.has_type(&t) {
                        return err(format!("constant `{n}` has undeclared type `{t}`"), p);
                    }
                    domain.constants.push((n, t));
                }
            }
            ":predicates" => {
                once(&mut seen)?;
                domain.predicates = signatures(items, &domain, false)?;
            }
            ":functions" => {
                once(&mut seen)?;
                domain.functions = signatures(items, &domain, true)?;
            }
            ":action" => schemas.push((HappeningKind::Action, sec)),
            ":event" => schemas.push((HappeningKind::Event, sec)),
            ":process" => schemas.push((HappeningKind::Process, sec)),
            ":durative-action" => {
                return err(
                    "durative actions are not supported; compile them into start-process-stop \
                     form (a start action, a process, and a stopping action or event)",
                    sec.pos(),
                )
            }
            other => return err(format!("unsupported domain section `{other}`"), sec.pos()),
        }
    }
    for (kind, sec) in schemas {
        let h = parse_happening(sec.as_list().unwrap(), kind, sec.pos(), &domain, registry)?;
        if domain.happenings.iter().any(|o| o.name == h.name) {
            return err(format!("happening `{}` declared twice", h.name), sec.pos());
        }
        domain.happenings.push(h);
    }
    Ok(domain)
}

pub fn parse_problem(tokens: &[Token], domain: &DomainModel) -> PResult<ProblemModel> {
    parse_problem_with(tokens, domain, &OperatorRegistry::new())
}

pub fn parse_problem_with(
    tokens: &[Token],
    domain: &DomainModel,
    registry: &OperatorRegistry,
) -> PResult<ProblemModel> {
    let top = read_sexprs(tokens)?;
    let (name, sections) = define_block(&top, "problem")?;
    let mut problem = ProblemModel {
        name,
        domain_name: String::new(),
        objects: Vec::new(),
        init_atoms: Vec::new(),
        init_values: Vec::new(),
        goal: Expr::And(Vec::new()),
        metric: None,
        warnings: Vec::new(),
    };
    fn find<'s>(sections: &'s [SExpr], key: &'s str) -> impl Iterator<Item = &'s SExpr> + 's {
        sections.iter().filter(move |s| section_key(s).as_deref() == Some(key))
    }
    let find = |key: &'static str| find(sections, key);

    for sec in sections {
        let key = section_key(sec).ok_or_else(|| ParseError::new("expected a section", sec.pos()))?;
        if ![":domain", ":objects", ":init", ":goal", ":metric"].contains(&key.as_str()) {
            return err(format!("unsupported problem section `{key}`"), sec.pos());
        }
        if key != ":metric"
            && sections
                .iter()
                .filter(|s| section_key(s).as_deref() == Some(key.as_str()))
                .count()
                > 1
        {
            return err(format!("duplicate `{key}` section"), sec.pos());
        }
    }
    if let Some(second) = find(":metric").nth(1) {
        return err("a problem may contain only one `:metric`", second.pos());
    }

    if let Some(d) = find(":domain").next() {
        let l = d.as_list().unwrap();
        let dn = expect_atom(
            l.get(1)
                .ok_or_else(|| ParseError::new("missing domain name", d.pos()))?,
            "a domain name",
        )?;
        problem.domain_name = dn.to_string();
        if dn != domain.name {
            problem
                .warnings
                .push(format!("problem names domain `{dn}` but domain is `{}`", domain.name));
        }
    }

    if let Some(o) = find(":objects").next() {
        for (n, t, p) in typed_list(&o.as_list().unwrap()[1..])? {
            if !domain.has_type(&t) {
                return err(format!("object `{n}` has undeclared type `{t}`"), p);
            }
            if problem.objects.iter().any(|(x, _)| *x == n) {
                return err(format!("object `{n}` declared twice"), p);
            }
            problem.objects.push((n, t));
        }
    }

    let scope = Scope {
        domain,
        registry,
        params: &[],
        objects: &problem.objects,
        allow_dt: false,
    };

    let mut init_atoms = Vec::new();
    let mut init_values = Vec::new();
    if let Some(i) = find(":init").next() {
        for lit in &i.as_list().unwrap()[1..] {
            let l = expect_list(lit, "an initial literal")?;
            let head = l
                .first()
                .ok_or_else(|| ParseError::new("empty initial literal", lit.pos()))?;
            let head = expect_atom(head, "a literal head")?;
            if head == "=" {
                if l.len() != 3 {
                    return err("`(= <fluent> <number>)` expected", lit.pos());
                }
                let target = scope.fluent_target(&l[1])?;
                let value = expect_atom(&l[2], "a number")
                    .ok()
                    .and_then(parse_number)
                    .ok_or_else(|| ParseError::new("initial values must be finite numbers", l[2].pos()))?;
                let atom = GroundAtom::new(
                    target.name,
                    target.args.into_iter().map(|t| t.name().to_string()).collect(),
                );
                if init_values.iter().any(|(a, _)| *a == atom) {
                    return err(format!("`{atom}` initialized twice"), lit.pos());
                }
                init_values.push((atom, value));
            } else {
                match scope.condition(lit)? {
                    Expr::Prop(r) => {
                        let atom = GroundAtom::new(r.name, r.args.into_iter().map(|t| t.name().to_string()).collect());
                        if !init_atoms.contains(&atom) {
                            init_atoms.push(atom);
                        }
                    }
                    _ => return err("only atoms and numeric assignments are allowed in `:init`", lit.pos()),
                }
            }
        }
    }

    let goal = match find(":goal").next() {
        Some(g) => {
            let l = g.as_list().unwrap();
            if l.len() != 2 {
                return err("`:goal` takes exactly one formula", g.pos());
            }
            scope.condition(&l[1])?
        }
        None => return err("problem has no `:goal`", Pos::default()),
    };

    let metric = match find(":metric").next() {
        Some(m) => {
            let l = m.as_list().unwrap();
            if l.len() != 3 {
                return err("`(:metric minimize|maximize <expr>)` expected", m.pos());
            }
            let direction = match expect_atom(&l[1], "minimize or maximize")?
                .to_ascii_lowercase()
                .as_str()
            {
                "minimize" => Direction::Minimize,
                "maximize" => Direction::Maximize,
                other => return err(format!("unknown metric direction `{other}`"), l[1].pos()),
            };
            Some(Metric {
                direction,
                objective: scope.numeric(&l[2])?,
            })
        }
        None => None,
    };

    problem.init_atoms = init_atoms;
    problem.init_values = init_values;
    problem.goal = goal;
    problem.metric = metric;
    Ok(problem)
}

pub fn parse_domain_str(text: &str) -> PResult<DomainModel> {
    parse_domain(&tokenize(text)?)
}

pub fn parse_problem_str(text: &str, domain: &DomainModel) -> PResult<ProblemModel> {
    parse_problem(&tokenize(text)?, domain)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINI: &str = r#"
    (define (domain mini)
      (:requirements :time :fluents :negative-preconditions)
      (:types car - vehicle loc)
      (:predicates (at ?v - vehicle ?l - loc) (running))
      (:functions (x) (v) (dist ?a - loc ?b - loc) - number)
      (:action go :parameters (?c - car ?a - loc)
         :precondition (and (at ?c ?a) (not (running)))
         :effect (and (running) (not (at ?c ?a))))
      (:event stop :parameters ()
         :precondition (and (running) (>= (x) 10))
         :effect (and (not (running))))
      (:process move :parameters ()
         :precondition (running)
         :effect (increase (x) (* #t (v)))))
    "#;

    fn mini() -> DomainModel {
        parse_domain_str(MINI).unwrap()
    }

    #[test]
    fn temporal_flag_from_requirements() {
        let d = mini();
        assert!(d.temporal());
        assert!(!d.semantic_attachment());
        assert!(d.warnings.is_empty());
    }

    #[test]
    fn three_schema_kinds() {
        let d = mini();
        let kinds: Vec<_> = d.happenings.iter().map(|h| h.kind).collect();
        assert_eq!(
            kinds,
            [HappeningKind::Action, HappeningKind::Event, HappeningKind::Process]
        );
    }

    #[test]
    fn process_effect_holds_dt() {
        let d = mini();
        let expected = Expr::Assign {
            op: AssignOp::Increase,
            target: SymbolRef::nullary("x"),
            value: Box::new(Expr::op("*", vec![Expr::Dt, Expr::fluent("v")])),
        };
        assert_eq!(d.happenings[2].effects, vec![expected]);
    }

    #[test]
    fn type_hierarchy() {
        let d = mini();
        assert!(d.is_subtype("car", "vehicle"));
        assert!(d.is_subtype("car", "object"));
        assert!(!d.is_subtype("loc", "vehicle"));
    }

    #[test]
    fn unknown_requirement_is_a_warning() {
        let d = parse_domain_str("(define (domain w) (:requirements :strips :made-up))").unwrap();
        assert_eq!(d.requirements, [":strips", ":made-up"]);
        assert_eq!(d.warnings.len(), 1);
    }

    #[test]
    fn durative_action_rejected() {
        let e = parse_domain_str("(define (domain d)\n (:durative-action a :parameters () :duration (= ?duration 1)))")
            .unwrap_err();
        assert!(e.message.contains("start-process-stop"));
        assert_eq!(e.pos.line, 2);
    }

    #[test]
    fn undeclared_predicate_and_arity() {
        let e = parse_domain_str(
            "(define (domain d) (:predicates (p ?x))\n (:action a :parameters (?y) :precondition (q ?y) :effect ()))",
        )
        .unwrap_err();
        assert!(e.message.contains("undeclared predicate `q`"));
        assert_eq!(e.pos.line, 2);
        let e = parse_domain_str(
            "(define (domain d) (:predicates (p ?x)) (:action a :parameters (?y) :precondition (p ?y ?y) :effect ()))",
        )
        .unwrap_err();
        assert!(e.message.contains("expects 1"));
    }

    #[test]
    fn either_and_conditional_effects_rejected() {
        assert!(parse_domain_str("(define (domain d) (:types a - (either b c)))")
            .unwrap_err()
            .message
            .contains("either"));
        let e = parse_domain_str(
            "(define (domain d) (:predicates (p)) (:action a :parameters () :precondition () :effect (when (p) (not (p)))))",
        )
        .unwrap_err();
        assert!(e.message.contains("conditional"));
    }

    #[test]
    fn operator_arity_checked() {
        let e = parse_domain_str(
            "(define (domain d) (:functions (x)) (:action a :parameters () :precondition (> (^ (x)) 0) :effect ()))",
        )
        .unwrap_err();
        assert!(e.message.contains("`^` expects 2"));
        let d = parse_domain_str(
            "(define (domain d) (:functions (x)) (:action a :parameters () :precondition (> (- (x)) 0) :effect ()))",
        )
        .unwrap();
        assert_eq!(d.happenings.len(), 1);
    }

    #[test]
    fn nonlinear_dt_rejected() {
        let e = parse_domain_str(
            "(define (domain d) (:functions (x)) (:process p :parameters () :precondition () :effect (increase (x) (* #t #t))))",
        )
        .unwrap_err();
        assert!(e.message.contains("linearly"));
        let e = parse_domain_str(
            "(define (domain d) (:functions (x)) (:action a :parameters () :precondition () :effect (increase (x) #t)))",
        )
        .unwrap_err();
        assert!(e.message.contains("#t"));
    }

    #[test]
    fn problem_with_product_metric() {
        let d = parse_domain_str(
            "(define (domain f) (:requirements :fluents) (:predicates (done)) (:functions (fuel_remaining) (total_reward)))",
        )
        .unwrap();
        let p = parse_problem_str(
            "(define (problem p) (:domain f) (:init (= (fuel_remaining) 2) (= (total_reward) 5)) (:goal (done))
               (:metric maximize (* (fuel_remaining) (total_reward))))",
            &d,
        )
        .unwrap();
        let m = p.metric.unwrap();
        assert_eq!(m.direction, Direction::Maximize);
        assert_eq!(
            m.objective,
            Expr::op("*", vec![Expr::fluent("fuel_remaining"), Expr::fluent("total_reward")])
        );
    }

    #[test]
    fn problem_without_metric_and_empty_init() {
        let d = mini();
        let p = parse_problem_str("(define (problem p) (:domain mini) (:init) (:goal (running)))", &d).unwrap();
        assert!(p.metric.is_none());
        assert!(p.init_atoms.is_empty() && p.init_values.is_empty());
    }

    #[test]
    fn problem_errors() {
        let d = mini();
        let e = parse_problem_str(
            "(define (problem p) (:domain mini) (:objects a - boat) (:goal (running)))",
            &d,
        )
        .unwrap_err();
        assert!(e.message.contains("undeclared type"));
        let e = parse_problem_str("(define (problem p) (:domain mini) (:goal (flying)))", &d).unwrap_err();
        assert!(e.message.contains("flying"));
        let e = parse_problem_str(
            "(define (problem p) (:domain mini) (:goal (running)) (:metric minimize (x)) (:metric maximize (x)))",
            &d,
        )
        .unwrap_err();
        assert!(e.message.contains("only one"));
    }

    #[test]
    fn metric_total_time_forms() {
        let d = mini();
        for m in ["(total-time)", "total-time"] {
            let p = parse_problem_str(
                &format!("(define (problem p) (:domain mini) (:goal (running)) (:metric minimize {m}))"),
                &d,
            )
            .unwrap();
            assert_eq!(p.metric.unwrap().objective, Expr::TotalTime);
        }
    }

    #[test]
    fn numbers() {
        assert_eq!(parse_number("0.5"), Some(0.5));
        assert_eq!(parse_number("-5"), Some(-5.0));
        assert_eq!(parse_number("1e3"), Some(1000.0));
        assert_eq!(parse_number("inf"), None);
        assert_eq!(parse_number("NaN"), None);
        assert_eq!(parse_number("x1"), None);
    }
}
