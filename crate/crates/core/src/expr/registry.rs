use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub type OpFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Index of an operator inside its registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OpId(pub u16);

impl OpId {
    pub const ADD: OpId = OpId(0);
    pub const SUB: OpId = OpId(1);
    pub const MUL: OpId = OpId(2);
    pub const DIV: OpId = OpId(3);
    pub const POW: OpId = OpId(4);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Fixed(usize),
    /// Inclusive bounds.
    Range(usize, usize),
    /// One or more operands.
    Variadic,
}

impl Arity {
    pub fn accepts(self, n: usize) -> bool {
        match self {
            Arity::Fixed(k) => n == k,
            Arity::Range(lo, hi) => (lo..=hi).contains(&n),
            Arity::Variadic => n >= 1,
        }
    }
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arity::Fixed(k) => write!(f, "{k}"),
            Arity::Range(lo, hi) => write!(f, "{lo}..={hi}"),
            Arity::Variadic => f.write_str("variadic"),
        }
    }
}

#[derive(Clone)]
pub struct OperatorDef {
    pub symbol: String,
    pub arity: Arity,
    pub func: OpFn,
}

impl fmt::Debug for OperatorDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.symbol, self.arity)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegistryError {
    #[error("operator `{symbol}` is already registered with arity {existing}")]
    Duplicate { symbol: String, existing: Arity },
}

/// Symbol table of numeric operators usable in expressions.
///
/// The four arithmetic operators and `^` are always present, in that order, so
/// their ids are fixed (see [`OpId`]). Registration is append-only.
#[derive(Clone, Debug)]
pub struct OperatorRegistry {
    ops: Vec<OperatorDef>,
    index: HashMap<String, OpId>,
}

impl Default for OperatorRegistry {
    fn default() -> Self {
        Self::new()
    }
}

impl OperatorRegistry {
    pub fn new() -> Self {
        let mut r = OperatorRegistry {
            ops: Vec::new(),
            index: HashMap::new(),
        };
        r.insert("+", Arity::Fixed(2), Arc::new(|a| a[0] + a[1]));
        r.insert(
            "-",
            Arity::Range(1, 2),
            Arc::new(|a| if a.len() == 1 { -a[0] } else { a[0] - a[1] }),
        );
        r.insert("*", Arity::Fixed(2), Arc::new(|a| a[0] * a[1]));
        r.insert("/", Arity::Fixed(2), Arc::new(|a| a[0] / a[1]));
        r.insert("^", Arity::Fixed(2), Arc::new(|a| a[0].powf(a[1])));
        r
    }

    fn insert(&mut self, symbol: &str, arity: Arity, func: OpFn) -> OpId {
        let id = OpId(self.ops.len() as u16);
        self.ops.push(OperatorDef {
            symbol: symbol.to_string(),
            arity,
            func,
        });
        self.index.insert(symbol.to_string(), id);
        id
    }

    /// Adds a new operator. The symbol must not be registered yet.
    pub fn register<F>(&mut self, symbol: &str, arity: Arity, func: F) -> Result<OpId, RegistryError>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if let Some(id) = self.lookup(symbol) {
            return Err(RegistryError::Duplicate {
                symbol: symbol.to_string(),
                existing: self.get(id).arity,
            });
        }
        Ok(self.insert(symbol, arity, Arc::new(func)))
    }

    pub fn lookup(&self, symbol: &str) -> Option<OpId> {
        self.index.get(symbol).copied()
    }

    pub fn get(&self, id: OpId) -> &OperatorDef {
        &self.ops[id.0 as usize]
    }

    pub fn contains(&self, id: OpId) -> bool {
        (id.0 as usize) < self.ops.len()
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.ops.iter().map(|o| o.symbol.as_str())
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_operators_present() {
        let r = OperatorRegistry::new();
        for (sym, id) in [
            ("+", OpId::ADD),
            ("-", OpId::SUB),
            ("*", OpId::MUL),
            ("/", OpId::DIV),
            ("^", OpId::POW),
        ] {
            assert_eq!(r.lookup(sym), Some(id));
        }
        assert_eq!(r.get(OpId::POW).arity, Arity::Fixed(2));
        assert!(r.get(OpId::SUB).arity.accepts(1));
    }

    #[test]
    fn duplicate_registration_rejected() {
        let mut r = OperatorRegistry::new();
        let err = r.register("^", Arity::Fixed(2), |a| a[0]).unwrap_err();
        assert_eq!(
            err,
            RegistryError::Duplicate {
                symbol: "^".into(),
                existing: Arity::Fixed(2)
            }
        );
        assert!(err.to_string().contains("arity 2"));
    }

    #[test]
    fn registered_functions_callable() {
        let mut r = OperatorRegistry::new();
        let abs = r.register("abs", Arity::Fixed(1), |a| a[0].abs()).unwrap();
        let min = r
            .register("min", Arity::Variadic, |a| {
                a.iter().copied().fold(f64::INFINITY, f64::min)
            })
            .unwrap();
        assert_eq!((r.get(abs).func)(&[-5.0]), 5.0);
        assert_eq!((r.get(min).func)(&[3.0, 1.0, 2.0]), 1.0);
        assert!(r.get(min).arity.accepts(3));
        assert!(!r.get(abs).arity.accepts(2));
    }
}
