//! Expression compilation and evaluation with an extensible operator set.

mod compile;
mod registry;

pub use compile::{
    apply_effects, compile, compile_effect, eval_condition, CompileError, CompiledEffect, CompiledExpr, EvalEnv,
    EvalStats, Instr, NonFinite, ValueKind,
};
pub use registry::{Arity, OpFn, OpId, OperatorDef, OperatorRegistry, RegistryError};
