use std::fmt;
use std::hash::{Hash, Hasher};

/// Fixed-size proposition bitset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct PropSet {
    words: Vec<u64>,
}

impl PropSet {
    pub fn with_capacity(bits: usize) -> Self {
        PropSet {
            words: vec![0; bits.div_ceil(64)],
        }
    }

    #[inline]
    pub fn contains(&self, bit: u32) -> bool {
        let (w, b) = (bit as usize / 64, bit % 64);
        self.words.get(w).is_some_and(|x| x >> b & 1 == 1)
    }

    #[inline]
    pub fn insert(&mut self, bit: u32) {
        let (w, b) = (bit as usize / 64, bit % 64);
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        self.words[w] |= 1 << b;
    }

    #[inline]
    pub fn remove(&mut self, bit: u32) {
        let (w, b) = (bit as usize / 64, bit % 64);
        if let Some(x) = self.words.get_mut(w) {
            *x &= !(1 << b);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            (0..64u32)
                .filter(move |b| word >> b & 1 == 1)
                .map(move |b| w as u32 * 64 + b)
        })
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }
}

/// A search state: propositions, numeric variables and the time point.
///
/// Identity (equality and hashing) covers propositions, variable bit patterns and
/// the tick count. `depth` and `actions` are path bookkeeping and are ignored.
#[derive(Debug, Clone)]
pub struct State {
    pub props: PropSet,
    pub vars: Vec<f64>,
    /// Number of time steps elapsed since the initial state.
    pub steps: u64,
    /// Elapsed time in seconds, `steps * dt`.
    pub time: f64,
    /// Happenings applied since the initial state, time-passing included.
    pub depth: u32,
    /// Agent actions applied since the initial state, time-passing excluded.
    pub actions: u32,
}

impl State {
    pub fn new(props: PropSet, vars: Vec<f64>) -> Self {
        State {
            props,
            vars,
            steps: 0,
            time: 0.0,
            depth: 0,
            actions: 0,
        }
    }

    pub fn all_finite(&self) -> bool {
        self.vars.iter().all(|v| v.is_finite())
    }
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        self.steps == other.steps
            && self.props == other.props
            && self.vars.len() == other.vars.len()
            && self
                .vars
                .iter()
                .zip(&other.vars)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl Eq for State {}

impl Hash for State {
    fn hash<H: Hasher>(&self, h: &mut H) {
        self.steps.hash(h);
        self.props.hash(h);
        for v in &self.vars {
            v.to_bits().hash(h);
        }
    }
}

/// Decimal places kept for numeric variables; `None` keeps full precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Precision(pub Option<u32>);

impl Default for Precision {
    fn default() -> Self {
        Precision(Some(3))
    }
}

impl Precision {
    pub const EXACT: Precision = Precision(None);

    /// Rounds half-to-even at the configured decimal place. Negative zero becomes zero.
    pub fn apply(self, v: f64) -> f64 {
        let r = match self.0 {
            None => v,
            Some(d) => {
                let scale = 10f64.powi(d as i32);
                let scaled = v * scale;
                if !scaled.is_finite() {
                    v
                } else {
                    scaled.round_ties_even() / scale
                }
            }
        };
        if r == 0.0 {
            0.0
        } else {
            r
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(d) => write!(f, "{d} decimals"),
            None => f.write_str("exact"),
        }
    }
}
