//! PDDL text output for parsed models. Re-parsing the output yields an equal model.

use std::fmt::{self, Display, Formatter, Write};

use super::ast::*;

fn typed(out: &mut String, items: &[(String, String)]) {
    for (n, t) in items {
        let _ = write!(out, " {n} - {t}");
    }
}

fn params(p: &[TypedParam]) -> String {
    let mut s = String::new();
    for (i, tp) in p.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{} - {}", tp.name, tp.ty);
    }
    s
}

fn signature(s: &Signature) -> String {
    if s.params.is_empty() {
        format!("({})", s.name)
    } else {
        format!("({} {})", s.name, params(&s.params))
    }
}

impl Display for DomainModel {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            writeln!(f, "  (:requirements {})", self.requirements.join(" "))?;
        }
        if !self.types.is_empty() {
            let mut s = String::new();
            typed(&mut s, &self.types);
            writeln!(f, "  (:types{s})")?;
        }
        if !self.constants.is_empty() {
            let mut s = String::new();
            typed(&mut s, &self.constants);
            writeln!(f, "  (:constants{s})")?;
        }
        if !self.predicates.is_empty() {
            let p: Vec<String> = self.predicates.iter().map(signature).collect();
            writeln!(f, "  (:predicates {})", p.join(" "))?;
        }
        if !self.functions.is_empty() {
            let p: Vec<String> = self.functions.iter().map(signature).collect();
            writeln!(f, "  (:functions {})", p.join(" "))?;
        }
        for h in &self.happenings {
            writeln!(f, "  ({} {}", h.kind.keyword(), h.name)?;
            writeln!(f, "    :parameters ({})", params(&h.params))?;
            writeln!(f, "    :precondition {}", h.precondition)?;
            write!(f, "    :effect (and")?;
            for e in &h.effects {
                write!(f, " {e}")?;
            }
            writeln!(f, "))")?;
        }
        writeln!(f, ")")
    }
}

impl Display for ProblemModel {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name)?;
        if !self.domain_name.is_empty() {
            writeln!(f, "  (:domain {})", self.domain_name)?;
        }
        if !self.objects.is_empty() {
            let mut s = String::new();
            typed(&mut s, &self.objects);
            writeln!(f, "  (:objects{s})")?;
        }
        write!(f, "  (:init")?;
        for a in &self.init_atoms {
            write!(f, " {a}")?;
        }
        for (a, v) in &self.init_values {
            write!(f, " (= {a} {v})")?;
        }
        writeln!(f, ")")?;
        writeln!(f, "  (:goal {})", self.goal)?;
        if let Some(m) = &self.metric {
            writeln!(f, "  (:metric {} {})", m.direction.keyword(), m.objective)?;
        }
        writeln!(f, ")")
    }
}
