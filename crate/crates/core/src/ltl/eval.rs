use super::{LtlFormula, Trace};

/// Truth value of `f` at every position of `trace` (finite-trace semantics, strong next).
pub fn evaluate_at_all(f: &LtlFormula, trace: &Trace) -> Vec<bool> {
    let steps = trace.steps();
    let n = steps.len();
    match f {
        LtlFormula::True => vec![true; n],
        LtlFormula::False => vec![false; n],
        LtlFormula::Atom(p) => steps.iter().map(|v| v.contains(p)).collect(),
        LtlFormula::Not(a) => evaluate_at_all(a, trace).into_iter().map(|x| !x).collect(),
        LtlFormula::And(a, b) | LtlFormula::Or(a, b) | LtlFormula::Implies(a, b) => {
            let (x, y) = (evaluate_at_all(a, trace), evaluate_at_all(b, trace));
            x.into_iter()
                .zip(y)
                .map(|(x, y)| match f {
                    LtlFormula::And(..) => x && y,
                    LtlFormula::Or(..) => x || y,
                    _ => !x || y,
                })
                .collect()
        }
        LtlFormula::Next(a) => {
            let x = evaluate_at_all(a, trace);
            (0..n).map(|i| i + 1 < n && x[i + 1]).collect()
        }
        LtlFormula::Globally(a) | LtlFormula::Finally(a) => {
            let x = evaluate_at_all(a, trace);
            let globally = matches!(f, LtlFormula::Globally(_));
            let mut out = vec![false; n];
            let mut acc = globally;
            for i in (0..n).rev() {
                acc = if globally { x[i] && acc } else { x[i] || acc };
                out[i] = acc;
            }
            out
        }
        LtlFormula::Until(a, b) => {
            let (x, y) = (evaluate_at_all(a, trace), evaluate_at_all(b, trace));
            let mut out = vec![false; n];
            let mut acc = false;
            for i in (0..n).rev() {
                acc = y[i] || (x[i] && acc);
                out[i] = acc;
            }
            out
        }
    }
}

/// Whether `trace` satisfies `f` at its first position.
pub fn evaluate_trace(f: &LtlFormula, trace: &Trace) -> bool {
    evaluate_at_all(f, trace)[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{parse_ltl, Valuation};

    // Direct quantifier reading of the semantics, used to cross-check the backward pass.
    fn holds_at(f: &LtlFormula, t: &[Valuation], i: usize) -> bool {
        let n = t.len();
        match f {
            LtlFormula::True => true,
            LtlFormula::False => false,
            LtlFormula::Atom(p) => t[i].contains(p),
            LtlFormula::Not(a) => !holds_at(a, t, i),
            LtlFormula::And(a, b) => holds_at(a, t, i) && holds_at(b, t, i),
            LtlFormula::Or(a, b) => holds_at(a, t, i) || holds_at(b, t, i),
            LtlFormula::Implies(a, b) => !holds_at(a, t, i) || holds_at(b, t, i),
            LtlFormula::Next(a) => i + 1 < n && holds_at(a, t, i + 1),
            LtlFormula::Globally(a) => (i..n).all(|j| holds_at(a, t, j)),
            LtlFormula::Finally(a) => (i..n).any(|j| holds_at(a, t, j)),
            LtlFormula::Until(a, b) => {
                (i..n).any(|j| holds_at(b, t, j) && (i..j).all(|k| holds_at(a, t, k)))
            }
        }
    }

    fn all_traces(props: &[String], len: usize) -> Vec<Vec<Valuation>> {
        let k = 1usize << props.len();
        let mut out = vec![vec![]];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..k).map(move |m| {
                        let mut p = prefix.clone();
                        p.push(m);
                        p
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(|ms| ms.into_iter().map(|m| Valuation::from_mask(props, m)).collect())
            .collect()
    }

    #[test]
    fn backward_pass_matches_quantifier_semantics() {
        let props = vec!["a".to_string(), "b".to_string()];
        for text in ["a U b", "G(a -> X b)", "F(a & !b)", "X X a", "!(a U !b)", "G F a", "F G b", "(a U b) U a"] {
            let f = parse_ltl(text).unwrap();
            for len in 1..=4 {
                for t in all_traces(&props, len) {
                    let trace = Trace::new(t.clone()).unwrap();
                    let fast = evaluate_at_all(&f, &trace);
                    for (i, &v) in fast.iter().enumerate() {
                        assert_eq!(v, holds_at(&f, &t, i), "{text} on {t:?} at {i}");
                    }
                }
            }
        }
    }

    #[test]
    fn end_of_trace_cases() {
        let single = Trace::new(vec![Valuation::from_iter(["a"])]).unwrap();
        assert!(!evaluate_trace(&parse_ltl("X a").unwrap(), &single));
        assert!(evaluate_trace(&parse_ltl("!X a").unwrap(), &single));
        assert!(evaluate_trace(&parse_ltl("G true").unwrap(), &single));
        assert!(evaluate_trace(&parse_ltl("G a").unwrap(), &single));
        assert!(!evaluate_trace(&parse_ltl("a U b").unwrap(), &single));
    }

    #[test]
    fn extra_propositions_are_ignored() {
        let t = Trace::new(vec![Valuation::from_iter(["a", "zzz"])]).unwrap();
        assert!(evaluate_trace(&parse_ltl("a").unwrap(), &t));
    }
}
