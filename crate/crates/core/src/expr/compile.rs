use smallvec::SmallVec;
use thiserror::Error;

use super::registry::{OpId, OperatorRegistry};
use crate::ground::SymbolTables;
use crate::pddl::{AssignOp, CmpOp, Expr, GroundAtom, SymbolRef, Term};
use crate::state::{Precision, State};

/// One postfix instruction. Booleans travel on the stack as `1.0`/`0.0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Instr {
    Const(f64),
    Var(u32),
    Prop(u32),
    /// `#t`
    Dt,
    /// `total-time`
    Elapsed,
    /// `total-actions`
    ActionCount,
    Add,
    Sub,
    Neg,
    Mul,
    Div,
    Pow,
    Call {
        op: OpId,
        argc: u8,
    },
    Cmp(CmpOp),
    And(u16),
    Or(u16),
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Boolean,
    Numeric,
}

/// Flat postfix form of a grounded expression.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledExpr {
    code: Vec<Instr>,
    kind: ValueKind,
    max_stack: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("unknown operator `{symbol}` (registered: {})", registered.join(" "))]
    UnknownOperator { symbol: String, registered: Vec<String> },
    #[error("unresolved symbol `{0}`")]
    Unresolved(String),
    #[error("ungrounded variable `{0}`")]
    Ungrounded(String),
    #[error("`{0}` is not an expression")]
    NotAnExpression(String),
    #[error("too many operands in `{0}`")]
    TooManyOperands(String),
}

/// Evaluation failed because an intermediate value was not finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("non-finite intermediate value")]
pub struct NonFinite;

/// Values the special symbols read during one evaluation.
#[derive(Debug, Clone, Copy)]
pub struct EvalEnv<'a> {
    pub state: &'a State,
    /// Value of `#t`.
    pub dt: f64,
    pub registry: &'a OperatorRegistry,
}

impl<'a> EvalEnv<'a> {
    pub fn new(state: &'a State, dt: f64, registry: &'a OperatorRegistry) -> Self {
        EvalEnv { state, dt, registry }
    }
}

/// Per-run evaluation counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalStats {
    /// Condition evaluations performed.
    pub evaluations: u64,
    /// Conditions that hit a non-finite intermediate and were treated as false.
    pub faults: u64,
}

fn ground_atom(r: &SymbolRef) -> Result<GroundAtom, CompileError> {
    let args = r
        .args
        .iter()
        .map(|t| match t {
            Term::Const(c) => Ok(c.clone()),
            Term::Var(v) => Err(CompileError::Ungrounded(v.clone())),
        })
        .collect::<Result<_, _>>()?;
    Ok(GroundAtom::new(r.name.clone(), args))
}

fn emit(
    e: &Expr,
    tables: &SymbolTables,
    registry: &OperatorRegistry,
    code: &mut Vec<Instr>,
) -> Result<(), CompileError> {
    match e {
        Expr::Number(n) => code.push(Instr::Const(*n)),
        Expr::Fluent(r) => {
            let atom = ground_atom(r)?;
            let slot = tables
                .vars
                .get(&atom)
                .ok_or_else(|| CompileError::Unresolved(atom.to_string()))?;
            code.push(Instr::Var(slot));
        }
        Expr::Prop(r) => {
            let atom = ground_atom(r)?;
            let bit = tables
                .props
                .get(&atom)
                .ok_or_else(|| CompileError::Unresolved(atom.to_string()))?;
            code.push(Instr::Prop(bit));
        }
        Expr::Op { op, args } => {
            let id = registry.lookup(op).ok_or_else(|| CompileError::UnknownOperator {
                symbol: op.clone(),
                registered: registry.symbols().map(str::to_string).collect(),
            })?;
            for a in args {
                emit(a, tables, registry, code)?;
            }
            let n = args.len();
            code.push(match (id, n) {
                (OpId::ADD, 2) => Instr::Add,
                (OpId::SUB, 1) => Instr::Neg,
                (OpId::SUB, 2) => Instr::Sub,
                (OpId::MUL, 2) => Instr::Mul,
                (OpId::DIV, 2) => Instr::Div,
                (OpId::POW, 2) => Instr::Pow,
                _ => Instr::Call {
                    op: id,
                    argc: u8::try_from(n).map_err(|_| CompileError::TooManyOperands(e.to_string()))?,
                },
            });
        }
        Expr::Dt => code.push(Instr::Dt),
        Expr::TotalTime => code.push(Instr::Elapsed),
        Expr::TotalActions => code.push(Instr::ActionCount),
        Expr::Cmp { op, lhs, rhs } => {
            emit(lhs, tables, registry, code)?;
            emit(rhs, tables, registry, code)?;
            code.push(Instr::Cmp(*op));
        }
        Expr::And(items) | Expr::Or(items) => {
            let is_and = matches!(e, Expr::And(_));
            if items.is_empty() {
                code.push(Instr::Const(if is_and { 1.0 } else { 0.0 }));
            } else {
                for i in items {
                    emit(i, tables, registry, code)?;
                }
                let n = u16::try_from(items.len()).map_err(|_| CompileError::TooManyOperands(e.to_string()))?;
                code.push(if is_and { Instr::And(n) } else { Instr::Or(n) });
            }
        }
        Expr::Not(inner) => {
            emit(inner, tables, registry, code)?;
            code.push(Instr::Not);
        }
        Expr::TermEq(a, b) => match (a, b) {
            (Term::Const(x), Term::Const(y)) => code.push(Instr::Const(if x == y { 1.0 } else { 0.0 })),
            (Term::Var(v), _) | (_, Term::Var(v)) => return Err(CompileError::Ungrounded(v.clone())),
        },
        Expr::Assign { .. } => return Err(CompileError::NotAnExpression(e.to_string())),
    }
    Ok(())
}

fn stack_depth(code: &[Instr]) -> usize {
    let mut depth = 0usize;
    let mut max = 0usize;
    for i in code {
        match i {
            Instr::Const(_) | Instr::Var(_) | Instr::Prop(_) | Instr::Dt | Instr::Elapsed | Instr::ActionCount => {
                depth += 1
            }
            Instr::Neg | Instr::Not => {}
            Instr::Add | Instr::Sub | Instr::Mul | Instr::Div | Instr::Pow | Instr::Cmp(_) => depth -= 1,
            Instr::Call { argc, .. } => depth = depth + 1 - *argc as usize,
            Instr::And(n) | Instr::Or(n) => depth = depth + 1 - *n as usize,
        }
        max = max.max(depth);
    }
    debug_assert_eq!(depth, 1, "unbalanced postfix code");
    max
}

/// Compiles a grounded condition or numeric expression to postfix code.
pub fn compile(expr: &Expr, tables: &SymbolTables, registry: &OperatorRegistry) -> Result<CompiledExpr, CompileError> {
    let mut code = Vec::new();
    emit(expr, tables, registry, &mut code)?;
    let kind = if expr.is_condition() {
        ValueKind::Boolean
    } else {
        ValueKind::Numeric
    };
    let max_stack = stack_depth(&code);
    Ok(CompiledExpr { code, kind, max_stack })
}

#[inline]
fn finite(v: f64) -> Result<f64, NonFinite> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(NonFinite)
    }
}

#[inline]
fn truth(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl CompiledExpr {
    pub fn code(&self) -> &[Instr] {
        &self.code
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    /// Runs the code; any non-finite intermediate aborts with [`NonFinite`].
    pub fn eval(&self, env: &EvalEnv<'_>) -> Result<f64, NonFinite> {
        let mut stack: SmallVec<[f64; 16]> = SmallVec::with_capacity(self.max_stack);
        let s = env.state;
        for instr in &self.code {
            match *instr {
                Instr::Const(c) => stack.push(c),
                Instr::Var(slot) => stack.push(finite(s.vars[slot as usize])?),
                Instr::Prop(bit) => stack.push(truth(s.props.contains(bit))),
                Instr::Dt => stack.push(env.dt),
                Instr::Elapsed => stack.push(s.time),
                Instr::ActionCount => stack.push(s.actions as f64),
                Instr::Neg => {
                    let a = stack.pop().unwrap();
                    stack.push(-a);
                }
                Instr::Not => {
                    let a = stack.pop().unwrap();
                    stack.push(truth(a == 0.0));
                }
                Instr::Add | Instr::Sub | Instr::Mul | Instr::Div | Instr::Pow | Instr::Cmp(_) => {
                    let b = stack.pop().unwrap();
                    let a = stack.pop().unwrap();
                    let r = match *instr {
                        Instr::Add => finite(a + b)?,
                        Instr::Sub => finite(a - b)?,
                        Instr::Mul => finite(a * b)?,
                        Instr::Div => finite(a / b)?,
                        Instr::Pow => finite(a.powf(b))?,
                        Instr::Cmp(op) => truth(op.holds(a, b)),
                        _ => unreachable!(),
                    };
                    stack.push(r);
                }
                Instr::Call { op, argc } => {
                    let at = stack.len() - argc as usize;
                    let r = finite((env.registry.get(op).func)(&stack[at..]))?;
                    stack.truncate(at);
                    stack.push(r);
                }
                Instr::And(n) | Instr::Or(n) => {
                    let at = stack.len() - n as usize;
                    let r = if matches!(instr, Instr::And(_)) {
                        stack[at..].iter().all(|v| *v != 0.0)
                    } else {
                        stack[at..].iter().any(|v| *v != 0.0)
                    };
                    stack.truncate(at);
                    stack.push(truth(r));
                }
            }
        }
        Ok(stack[0])
    }

    /// Boolean evaluation; a non-finite intermediate makes the condition false.
    pub fn holds(&self, env: &EvalEnv<'_>, stats: &mut EvalStats) -> bool {
        stats.evaluations += 1;
        match self.eval(env) {
            Ok(v) => v != 0.0,
            Err(NonFinite) => {
                stats.faults += 1;
                false
            }
        }
    }
}

/// Boolean evaluation of a compiled condition against `env`.
pub fn eval_condition(c: &CompiledExpr, env: &EvalEnv<'_>, stats: &mut EvalStats) -> bool {
    debug_assert_eq!(c.kind(), ValueKind::Boolean);
    c.holds(env, stats)
}

/// One grounded effect in executable form.
#[derive(Debug, Clone, PartialEq)]
pub enum CompiledEffect {
    Add(u32),
    Delete(u32),
    Numeric {
        op: AssignOp,
        slot: u32,
        value: CompiledExpr,
    },
}

pub fn compile_effect(
    effect: &Expr,
    tables: &SymbolTables,
    registry: &OperatorRegistry,
) -> Result<CompiledEffect, CompileError> {
    let prop_bit = |r: &SymbolRef| -> Result<u32, CompileError> {
        let atom = ground_atom(r)?;
        tables
            .props
            .get(&atom)
            .ok_or_else(|| CompileError::Unresolved(atom.to_string()))
    };
    match effect {
        Expr::Prop(r) => Ok(CompiledEffect::Add(prop_bit(r)?)),
        Expr::Not(inner) => match inner.as_ref() {
            Expr::Prop(r) => Ok(CompiledEffect::Delete(prop_bit(r)?)),
            other => Err(CompileError::NotAnExpression(other.to_string())),
        },
        Expr::Assign { op, target, value } => {
            let atom = ground_atom(target)?;
            let slot = tables
                .vars
                .get(&atom)
                .ok_or_else(|| CompileError::Unresolved(atom.to_string()))?;
            Ok(CompiledEffect::Numeric {
                op: *op,
                slot,
                value: compile(value, tables, registry)?,
            })
        }
        other => Err(CompileError::NotAnExpression(other.to_string())),
    }
}

/// Applies a happening's effects to `state` with simultaneous semantics: every
/// right-hand side reads the state as it was before any of these effects, deletes
/// precede adds, and numeric results are rounded at write time.
pub fn apply_effects(
    effects: &[CompiledEffect],
    state: &mut State,
    dt: f64,
    registry: &OperatorRegistry,
    precision: Precision,
) -> Result<(), NonFinite> {
    let mut writes: SmallVec<[(u32, AssignOp, f64); 8]> = SmallVec::new();
    {
        let env = EvalEnv::new(state, dt, registry);
        for e in effects {
            if let CompiledEffect::Numeric { op, slot, value } = e {
                writes.push((*slot, *op, value.eval(&env)?));
            }
        }
    }
    for e in effects {
        if let CompiledEffect::Delete(bit) = e {
            state.props.remove(*bit);
        }
    }
    for e in effects {
        if let CompiledEffect::Add(bit) = e {
            state.props.insert(*bit);
        }
    }
    for (slot, op, v) in writes {
        let cur = &mut state.vars[slot as usize];
        let next = match op {
            AssignOp::Assign => v,
            AssignOp::Increase => *cur + v,
            AssignOp::Decrease => *cur - v,
        };
        let next = precision.apply(next);
        if !next.is_finite() {
            return Err(NonFinite);
        }
        *cur = next;
    }
    Ok(())
}
