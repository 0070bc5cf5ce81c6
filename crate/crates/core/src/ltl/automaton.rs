use std::collections::{HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use super::progress::{accepts_empty, canonical, progress};
use super::{LtlFormula, Trace, Valuation};

pub const DEFAULT_STATE_BOUND: usize = 10_000;

/// Alphabets beyond this many propositions are refused outright.
const MAX_PROPS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomatonError {
    #[error("automaton exceeds {bound} states")]
    StateExplosion { bound: usize },
    #[error("formula has {count} propositions; at most {MAX_PROPS} are supported")]
    TooManyProps { count: usize },
}

/// Deterministic, total acceptor over the valuation alphabet `2^props`.
/// State 0 is initial; each state is labelled by its residual formula.
#[derive(Debug, Clone)]
pub struct LtlAutomaton {
    props: Vec<String>,
    labels: Vec<LtlFormula>,
    transitions: Vec<Vec<usize>>,
    accepting: Vec<bool>,
    live: Vec<bool>,
}

pub fn compile_automaton(f: &LtlFormula) -> Result<LtlAutomaton, AutomatonError> {
    compile_automaton_bounded(f, DEFAULT_STATE_BOUND)
}

pub fn compile_automaton_bounded(f: &LtlFormula, bound: usize) -> Result<LtlAutomaton, AutomatonError> {
    let props: Vec<String> = f.props().into_iter().collect();
    if props.len() > MAX_PROPS {
        return Err(AutomatonError::TooManyProps { count: props.len() });
    }
    let alphabet: Vec<Valuation> = (0..1usize << props.len()).map(|m| Valuation::from_mask(&props, m)).collect();

    let mut index: HashMap<LtlFormula, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut transitions: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();

    let start = canonical(f);
    index.insert(start.clone(), 0);
    labels.push(start);
    queue.push_back(0);

    while let Some(q) = queue.pop_front() {
        let mut row = Vec::with_capacity(alphabet.len());
        for v in &alphabet {
            let next = progress(&labels[q], v);
            let id = match index.get(&next) {
                Some(&id) => id,
                None => {
                    if labels.len() >= bound {
                        return Err(AutomatonError::StateExplosion { bound });
                    }
                    let id = labels.len();
                    index.insert(next.clone(), id);
                    labels.push(next);
                    queue.push_back(id);
                    id
                }
            };
            row.push(id);
        }
        if transitions.len() <= q {
            transitions.resize(q + 1, Vec::new());
        }
        transitions[q] = row;
    }

    let accepting: Vec<bool> = labels.iter().map(accepts_empty).collect();
    let live = backward_reach(&transitions, &accepting);
    Ok(LtlAutomaton { props, labels, transitions, accepting, live })
}

fn backward_reach(transitions: &[Vec<usize>], accepting: &[bool]) -> Vec<bool> {
    let n = transitions.len();
    let mut preds = vec![Vec::new(); n];
    for (q, row) in transitions.iter().enumerate() {
        for &r in row {
            preds[r].push(q);
        }
    }
    let mut live = accepting.to_vec();
    let mut stack: Vec<usize> = (0..n).filter(|&q| live[q]).collect();
    while let Some(r) = stack.pop() {
        for &q in &preds[r] {
            if !live[q] {
                live[q] = true;
                stack.push(q);
            }
        }
    }
    live
}

impl LtlAutomaton {
    pub fn props(&self) -> &[String] {
        &self.props
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn num_states(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, q: usize) -> &LtlFormula {
        &self.labels[q]
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting[q]
    }

    /// Whether some continuation (possibly empty) from `q` is accepted.
    pub fn is_live(&self, q: usize) -> bool {
        self.live[q]
    }

    pub fn mask_of(&self, v: &Valuation) -> usize {
        self.props.iter().enumerate().filter(|(_, p)| v.contains(p)).map(|(i, _)| 1 << i).sum()
    }

    pub fn step_mask(&self, q: usize, mask: usize) -> usize {
        self.transitions[q][mask]
    }

    pub fn step(&self, q: usize, v: &Valuation) -> usize {
        self.step_mask(q, self.mask_of(v))
    }

    /// States reached after each prefix; `run(t)[i]` is the state after consuming `t[0..=i]`.
    pub fn run(&self, trace: &Trace) -> Vec<usize> {
        let mut q = self.initial();
        trace
            .steps()
            .iter()
            .map(|v| {
                q = self.step(q, v);
                q
            })
            .collect()
    }

    pub fn accepts(&self, trace: &Trace) -> bool {
        let last = *self.run(trace).last().expect("trace is non-empty");
        self.accepting[last]
    }

    /// Earliest trace position after which no continuation can be accepted.
    pub fn first_dead_position(&self, trace: &Trace) -> Option<usize> {
        self.run(trace).into_iter().position(|q| !self.live[q])
    }
}

impl fmt::Display for LtlAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "props: {}", self.props.join(","))?;
        for (q, label) in self.labels.iter().enumerate() {
            writeln!(f, "state q{q}: {label}")?;
        }
        for (q, row) in self.transitions.iter().enumerate() {
            for (mask, r) in row.iter().enumerate() {
                writeln!(f, "q{q} {} -> q{r}", Valuation::from_mask(&self.props, mask))?;
            }
        }
        let acc: Vec<String> = (0..self.num_states()).filter(|&q| self.accepting[q]).map(|q| format!("q{q}")).collect();
        write!(f, "accepting: {}", acc.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{evaluate_trace, parse_ltl};

    fn traces(props: &[String], len: usize) -> Vec<Trace> {
        let k = 1usize << props.len();
        (0..k.pow(len as u32))
            .map(|mut code| {
                let steps = (0..len)
                    .map(|_| {
                        let m = code % k;
                        code /= k;
                        Valuation::from_mask(props, m)
                    })
                    .collect();
                Trace::new(steps).unwrap()
            })
            .collect()
    }

    #[test]
    fn single_atom_has_three_states() {
        let a = compile_automaton(&parse_ltl("a").unwrap()).unwrap();
        assert_eq!(a.num_states(), 3);
        assert!(!a.is_accepting(0));
        let labels: Vec<String> = (0..3).map(|q| a.label(q).to_string()).collect();
        assert!(labels.contains(&"true".to_string()) && labels.contains(&"false".to_string()));
    }

    #[test]
    fn true_is_one_accepting_sink() {
        let a = compile_automaton(&LtlFormula::True).unwrap();
        assert_eq!(a.num_states(), 1);
        assert!(a.is_accepting(0));
        assert_eq!(a.step_mask(0, 0), 0);
    }

    #[test]
    fn navigation_formula_agrees_with_evaluation() {
        let f = parse_ltl("G(!g U (c & d))").unwrap();
        let a = compile_automaton(&f).unwrap();
        let props = a.props().to_vec();
        for len in 1..=5 {
            for t in traces(&props, len) {
                assert_eq!(a.accepts(&t), evaluate_trace(&f, &t), "{:?}", t);
            }
        }
    }

    #[test]
    fn dead_position_marks_first_irrecoverable_step() {
        let f = parse_ltl("!g U (c & d)").unwrap();
        let a = compile_automaton(&f).unwrap();
        let t = Trace::new(vec![Valuation::new(), Valuation::from_iter(["c"]), Valuation::from_iter(["c", "g"])]).unwrap();
        assert_eq!(a.first_dead_position(&t), Some(2));
        let ok = Trace::new(vec![Valuation::new(), Valuation::from_iter(["c", "d"])]).unwrap();
        assert_eq!(a.first_dead_position(&ok), None);
    }

    #[test]
    fn bound_is_enforced() {
        let f = parse_ltl("X X X X a").unwrap();
        assert_eq!(compile_automaton_bounded(&f, 3).unwrap_err(), AutomatonError::StateExplosion { bound: 3 });
    }

    #[test]
    fn table_export_lists_every_transition() {
        let a = compile_automaton(&parse_ltl("a U b").unwrap()).unwrap();
        let text = a.to_string();
        assert_eq!(text.lines().filter(|l| l.contains(" -> ")).count(), a.num_states() * 4);
        assert!(text.ends_with(&format!("accepting: q{}", (0..a.num_states()).find(|&q| a.is_accepting(q)).unwrap())));
    }
}
