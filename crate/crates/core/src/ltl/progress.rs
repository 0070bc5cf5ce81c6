//! Formula progression and syntactic canonicalization.
//!
//! Residual formulas are interpreted over the *remaining* trace, which may be
//! empty once every valuation has been consumed. On the empty remainder atoms,
//! `X`, `F` and `U` are false while `G` is true ([`accepts_empty`]). Strong
//! next progresses to `f & F true`: `F true` holds exactly on non-empty
//! remainders. Every rewrite in [`canonical`] preserves the meaning on empty and
//! non-empty remainders alike.

use super::{LtlFormula, Valuation};
use LtlFormula as L;

/// Truth value of a residual on the empty remainder.
pub fn accepts_empty(f: &LtlFormula) -> bool {
    match f {
        L::True | L::Globally(_) => true,
        L::False | L::Atom(_) | L::Next(_) | L::Finally(_) | L::Until(..) => false,
        L::Not(a) => !accepts_empty(a),
        L::And(a, b) => accepts_empty(a) && accepts_empty(b),
        L::Or(a, b) => accepts_empty(a) || accepts_empty(b),
        L::Implies(a, b) => !accepts_empty(a) || accepts_empty(b),
    }
}

fn non_empty() -> LtlFormula {
    L::finally(L::True)
}

fn empty() -> LtlFormula {
    L::globally(L::False)
}

/// Residual obligation after reading `v`: for every non-empty continuation `t`,
/// `evaluate(f, v·t) == evaluate(progress(f, v), t)`.
pub fn progress(f: &LtlFormula, v: &Valuation) -> LtlFormula {
    canonical(&step(f, v))
}

fn step(f: &LtlFormula, v: &Valuation) -> LtlFormula {
    match f {
        L::True => L::True,
        L::False => L::False,
        L::Atom(p) => {
            if v.contains(p) {
                L::True
            } else {
                L::False
            }
        }
        L::Not(a) => L::not(step(a, v)),
        L::And(a, b) => L::and(step(a, v), step(b, v)),
        L::Or(a, b) => L::or(step(a, v), step(b, v)),
        L::Implies(a, b) => L::or(L::not(step(a, v)), step(b, v)),
        L::Next(a) => L::and((**a).clone(), non_empty()),
        L::Globally(a) => L::and(step(a, v), f.clone()),
        L::Finally(a) => L::or(step(a, v), f.clone()),
        L::Until(a, b) => L::or(step(b, v), L::and(step(a, v), f.clone())),
    }
}

/// Boolean simplification: constant folding, flattening, idempotence,
/// commutative sorting, complement detection, absorption and `->` elimination.
/// Negation is pushed through `&`/`|` only.
pub fn canonical(f: &LtlFormula) -> LtlFormula {
    match f {
        L::True | L::False | L::Atom(_) => f.clone(),
        L::Not(a) => negate(canonical(a)),
        L::And(a, b) => conj(vec![canonical(a), canonical(b)]),
        L::Or(a, b) => disj(vec![canonical(a), canonical(b)]),
        L::Implies(a, b) => disj(vec![negate(canonical(a)), canonical(b)]),
        L::Next(a) => match canonical(a) {
            L::False => L::False,
            c => L::next(c),
        },
        L::Globally(a) => globally(canonical(a)),
        L::Finally(a) => finally(canonical(a)),
        L::Until(a, b) => {
            let (ca, cb) = (canonical(a), canonical(b));
            match (&ca, &cb) {
                (_, L::True) => L::True,
                (_, L::False) => L::False,
                (L::True, _) => finally(cb),
                (L::False, _) if !accepts_empty(&cb) => cb,
                _ => L::until(ca, cb),
            }
        }
    }
}

fn globally(c: LtlFormula) -> LtlFormula {
    match c {
        L::True => L::True,
        g @ L::Globally(_) => g,
        c => L::globally(c),
    }
}

fn finally(c: LtlFormula) -> LtlFormula {
    match c {
        L::False => L::False,
        f @ L::Finally(_) => f,
        c => L::finally(c),
    }
}

fn negate(c: LtlFormula) -> LtlFormula {
    match c {
        L::True => L::False,
        L::False => L::True,
        L::Not(x) => *x,
        L::And(..) => disj(flatten_and(c).into_iter().map(negate).collect()),
        L::Or(..) => conj(flatten_or(c).into_iter().map(negate).collect()),
        c if c == non_empty() => empty(),
        c if c == empty() => non_empty(),
        c => L::not(c),
    }
}

fn flatten_and(f: LtlFormula) -> Vec<LtlFormula> {
    match f {
        L::And(a, b) => {
            let mut v = flatten_and(*a);
            v.extend(flatten_and(*b));
            v
        }
        other => vec![other],
    }
}

fn flatten_or(f: LtlFormula) -> Vec<LtlFormula> {
    match f {
        L::Or(a, b) => {
            let mut v = flatten_or(*a);
            v.extend(flatten_or(*b));
            v
        }
        other => vec![other],
    }
}

fn rebuild(mut items: Vec<LtlFormula>, join: fn(LtlFormula, LtlFormula) -> LtlFormula) -> LtlFormula {
    let mut acc = items.pop().expect("non-empty");
    while let Some(x) = items.pop() {
        acc = join(x, acc);
    }
    acc
}

fn is_complement(x: &LtlFormula, items: &[LtlFormula]) -> bool {
    match negate(x.clone()) {
        L::And(..) | L::Or(..) => false,
        nx => items.binary_search(&nx).is_ok(),
    }
}

fn conj(items: Vec<LtlFormula>) -> LtlFormula {
    let mut list = Vec::new();
    for item in items.into_iter().flat_map(flatten_and) {
        match item {
            L::True => {}
            L::False => return L::False,
            x => list.push(x),
        }
    }
    list.sort();
    list.dedup();
    if list.iter().any(|x| is_complement(x, &list)) {
        return L::False;
    }
    let plain = list.clone();
    list.retain(|x| !matches!(x, L::Or(..)) || !flatten_or(x.clone()).iter().any(|d| plain.binary_search(d).is_ok()));
    let guard = non_empty();
    if list.len() > 1 && list.contains(&guard) {
        let rest_accepts = list.iter().filter(|x| **x != guard).all(accepts_empty);
        if !rest_accepts {
            list.retain(|x| *x != guard);
        }
    }
    match list.len() {
        0 => L::True,
        _ => rebuild(list, L::and),
    }
}

fn disj(items: Vec<LtlFormula>) -> LtlFormula {
    let mut list = Vec::new();
    for item in items.into_iter().flat_map(flatten_or) {
        match item {
            L::False => {}
            L::True => return L::True,
            x => list.push(x),
        }
    }
    list.sort();
    list.dedup();
    if list.iter().any(|x| is_complement(x, &list)) {
        return L::True;
    }
    let plain = list.clone();
    list.retain(|x| !matches!(x, L::And(..)) || !flatten_and(x.clone()).iter().any(|c| plain.binary_search(c).is_ok()));
    let guard = empty();
    if list.len() > 1 && list.contains(&guard) {
        let rest_accepts = list.iter().filter(|x| **x != guard).any(accepts_empty);
        if rest_accepts {
            list.retain(|x| *x != guard);
        }
    }
    match list.len() {
        0 => L::False,
        _ => rebuild(list, L::or),
    }
}
