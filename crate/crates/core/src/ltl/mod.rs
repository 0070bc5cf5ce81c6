//! Linear temporal logic over finite traces (LTLf, strong next): parsing,
//! direct evaluation, formula progression and automaton compilation.

mod automaton;
mod eval;
mod parse;
mod progress;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use automaton::{compile_automaton, compile_automaton_bounded, AutomatonError, LtlAutomaton, DEFAULT_STATE_BOUND};
pub use eval::{evaluate_at_all, evaluate_trace};
pub use parse::{parse_ltl, LtlSyntaxError};
pub use progress::{accepts_empty, canonical, progress};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LtlFormula {
    True,
    False,
    Atom(String),
    Not(Box<LtlFormula>),
    And(Box<LtlFormula>, Box<LtlFormula>),
    Or(Box<LtlFormula>, Box<LtlFormula>),
    Implies(Box<LtlFormula>, Box<LtlFormula>),
    Next(Box<LtlFormula>),
    Globally(Box<LtlFormula>),
    Finally(Box<LtlFormula>),
    Until(Box<LtlFormula>, Box<LtlFormula>),
}

impl LtlFormula {
    pub fn atom(p: impl Into<String>) -> Self {
        LtlFormula::Atom(p.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: LtlFormula) -> Self {
        LtlFormula::Not(Box::new(f))
    }

    pub fn and(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn next(f: LtlFormula) -> Self {
        LtlFormula::Next(Box::new(f))
    }

    pub fn globally(f: LtlFormula) -> Self {
        LtlFormula::Globally(Box::new(f))
    }

    pub fn finally(f: LtlFormula) -> Self {
        LtlFormula::Finally(Box::new(f))
    }

    pub fn until(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Until(Box::new(a), Box::new(b))
    }

    /// The proposition universe of the formula, sorted.
    pub fn props(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut BTreeSet<String>) {
        match self {
            LtlFormula::True | LtlFormula::False => {}
            LtlFormula::Atom(p) => {
                out.insert(p.clone());
            }
            LtlFormula::Not(a) | LtlFormula::Next(a) | LtlFormula::Globally(a) | LtlFormula::Finally(a) => {
                a.collect_props(out)
            }
            LtlFormula::And(a, b) | LtlFormula::Or(a, b) | LtlFormula::Implies(a, b) | LtlFormula::Until(a, b) => {
                a.collect_props(out);
                b.collect_props(out);
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            LtlFormula::True | LtlFormula::False | LtlFormula::Atom(_) => 1,
            LtlFormula::Not(a) | LtlFormula::Next(a) | LtlFormula::Globally(a) | LtlFormula::Finally(a) => {
                1 + a.size()
            }
            LtlFormula::And(a, b) | LtlFormula::Or(a, b) | LtlFormula::Implies(a, b) | LtlFormula::Until(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    // Binding strength used by the printer; mirrors the parser's precedence.
    fn level(&self) -> u8 {
        match self {
            LtlFormula::Implies(..) => 1,
            LtlFormula::Or(..) => 2,
            LtlFormula::And(..) => 3,
            LtlFormula::Until(..) => 4,
            _ => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.level() < min {
            f.write_str("(")?;
            self.write_at(f, 0)?;
            return f.write_str(")");
        }
        let unary = |f: &mut fmt::Formatter<'_>, op: &str, a: &LtlFormula| {
            f.write_str(op)?;
            if a.level() == 5 {
                if op != "!" {
                    f.write_str(" ")?;
                }
                a.write_at(f, 5)
            } else {
                f.write_str("(")?;
                a.write_at(f, 0)?;
                f.write_str(")")
            }
        };
        match self {
            LtlFormula::True => f.write_str("true"),
            LtlFormula::False => f.write_str("false"),
            LtlFormula::Atom(p) => f.write_str(p),
            LtlFormula::Not(a) => unary(f, "!", a),
            LtlFormula::Next(a) => unary(f, "X", a),
            LtlFormula::Globally(a) => unary(f, "G", a),
            LtlFormula::Finally(a) => unary(f, "F", a),
            LtlFormula::And(a, b) => {
                a.write_at(f, 3)?;
                f.write_str(" & ")?;
                b.write_at(f, 4)
            }
            LtlFormula::Or(a, b) => {
                a.write_at(f, 2)?;
                f.write_str(" | ")?;
                b.write_at(f, 3)
            }
            LtlFormula::Implies(a, b) => {
                a.write_at(f, 2)?;
                f.write_str(" -> ")?;
                b.write_at(f, 1)
            }
            LtlFormula::Until(a, b) => {
                a.write_at(f, 5)?;
                f.write_str(" U ")?;
                b.write_at(f, 4)
            }
        }
    }
}

impl fmt::Display for LtlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

impl Serialize for LtlFormula {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for LtlFormula {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_ltl(&text).map_err(serde::de::Error::custom)
    }
}

/// The set of propositions true at one trace position.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Valuation(pub BTreeSet<String>);

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, prop: &str) -> bool {
        self.0.contains(prop)
    }

    pub fn insert(&mut self, prop: impl Into<String>) {
        self.0.insert(prop.into());
    }

    /// Valuation over `universe` whose i-th proposition is true iff bit i of `mask` is set.
    pub fn from_mask(universe: &[String], mask: usize) -> Self {
        Valuation(
            universe
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, p)| p.clone())
                .collect(),
        )
    }
}

impl<S: Into<String>> FromIterator<S> for Valuation {
    fn from_iter<T: IntoIterator<Item = S>>(iter: T) -> Self {
        Valuation(iter.into_iter().map(Into::into).collect())
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<&str> = self.0.iter().map(String::as_str).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

/// A non-empty sequence of valuations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trace(Vec<Valuation>);

impl Trace {
    /// Returns `None` for an empty step list.
    pub fn new(steps: Vec<Valuation>) -> Option<Self> {
        (!steps.is_empty()).then_some(Trace(steps))
    }

    pub fn steps(&self) -> &[Valuation] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `v · self`
    pub fn prepend(&self, v: Valuation) -> Trace {
        let mut steps = Vec::with_capacity(self.0.len() + 1);
        steps.push(v);
        steps.extend(self.0.iter().cloned());
        Trace(steps)
    }
}
