//! Bundled benchmark problems and the synthetic event-heavy domain generator.

use std::borrow::Cow;
use std::fmt::Write;

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    /// `domain/problem`, e.g. `car/problem01`.
    pub name: String,
    pub domain: Cow<'static, str>,
    pub problem: Cow<'static, str>,
}

macro_rules! bundled {
    ($dir:literal, $prob:literal) => {
        (
            concat!($dir, "/", $prob),
            include_str!(concat!("../corpus/", $dir, "/domain.pddl")),
            include_str!(concat!("../corpus/", $dir, "/", $prob, ".pddl")),
        )
    };
}

const BUNDLED: &[(&str, &str, &str)] = &[
    bundled!("car", "problem01"),
    bundled!("car", "problem02"),
    bundled!("vending", "problem01"),
    bundled!("sleeping-beauty", "problem01"),
    bundled!("convoys", "problem01"),
    bundled!("switches", "problem01"),
    bundled!("runner", "problem01"),
];

/// Event count and prefix share of the synthetic instance listed in [`all`].
pub const SYNTHETIC_DEFAULT: (usize, f64) = (200, 0.7);

/// The bundled problems followed by a small synthetic instance.
pub fn all() -> Vec<CorpusEntry> {
    let mut v: Vec<CorpusEntry> = BUNDLED
        .iter()
        .map(|(name, d, p)| CorpusEntry {
            name: name.to_string(),
            domain: Cow::Borrowed(d),
            problem: Cow::Borrowed(p),
        })
        .collect();
    let (n, f) = SYNTHETIC_DEFAULT;
    v.push(synthetic_entry(n, f));
    v
}

pub fn get(name: &str) -> Option<CorpusEntry> {
    all().into_iter().find(|e| e.name == name)
}

pub fn synthetic_entry(events: usize, share: f64) -> CorpusEntry {
    let s = Synthetic::new(events, share);
    CorpusEntry {
        name: format!("synthetic/n{events}-f{share}"),
        domain: Cow::Owned(s.domain()),
        problem: Cow::Owned(s.problem()),
    }
}

/// Generator for a domain with many events whose preconditions share prefixes.
///
/// Every event has [`Synthetic::CONDITIONS`] preconditions. Events are split
/// into groups of [`Synthetic::GROUP`]; the first `round(share * CONDITIONS)`
/// conditions of each event are common to its group and sort before the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Synthetic {
    pub events: usize,
    pub share: f64,
}

impl Synthetic {
    pub const CONDITIONS: usize = 10;
    pub const GROUP: usize = 50;

    pub fn new(events: usize, share: f64) -> Self {
        Synthetic {
            events,
            share: share.clamp(0.0, 1.0),
        }
    }

    pub fn shared(&self) -> usize {
        (self.share * Self::CONDITIONS as f64).round() as usize
    }

    pub fn domain(&self) -> String {
        let shared = self.shared();
        let mut s = String::new();
        s.push_str(
            "(define (domain synthetic)\n  (:requirements :fluents :time :negative-preconditions :events :processes)\n  (:predicates (moving))\n  (:functions (x) (v) (y) (hits))\n\n",
        );
        s.push_str(
            "  (:action push\n    :parameters ()\n    :precondition (< (v) 3)\n    :effect (increase (v) 1))\n\n",
        );
        s.push_str(
            "  (:action brake\n    :parameters ()\n    :precondition (> (v) -3)\n    :effect (decrease (v) 1))\n\n",
        );
        s.push_str("  (:process move\n    :parameters ()\n    :precondition (moving)\n    :effect (increase (x) (* #t (v))))\n");
        for e in 0..self.events {
            let g = e / Self::GROUP;
            let _ = write!(s, "\n  (:event ev{e}\n    :parameters ()\n    :precondition (and");
            for j in 0..shared {
                let _ = write!(s, "\n      (< (x) {})", -10 * (g as i64 + 1) - j as i64);
            }
            for k in shared..Self::CONDITIONS {
                let _ = write!(s, "\n      (> (y) {})", e * Self::CONDITIONS + k + 1);
            }
            s.push_str(")\n    :effect (increase (hits) 1))\n");
        }
        s.push_str(")\n");
        s
    }

    pub fn problem(&self) -> String {
        "(define (problem drift)\n  (:domain synthetic)\n  (:init (moving) (= (x) 0) (= (v) 0) (= (y) 0) (= (hits) 0))\n  (:goal (>= (x) 20))\n  (:metric minimize (total-time)))\n"
            .to_string()
    }
}
