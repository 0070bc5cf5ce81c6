//! Reference implementations written separately from the library: a direct
//! LTLf evaluator, hand-coded transition rules for both domains and
//! exhaustive shortest-plan search.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::path::PathBuf;

use planguard::ltl::LtlFormula;
use planguard::problem::{Formal, GoalNode, GroundAction, PlanningProblem};

pub type State = BTreeSet<String>;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap()
}

/// Formulas over at most three propositions.
pub const CORPUS: &[&str] = &[
    "a",
    "!a",
    "true",
    "false",
    "X a",
    "X X a",
    "X G a",
    "G a",
    "F a",
    "F G a",
    "G F a",
    "a U b",
    "!(a U b)",
    "(a U b) U c",
    "a U (b U c)",
    "G(!g U (c & d))",
    "!g U (c & d)",
    "G(a -> F b)",
    "G(a -> X b)",
    "G(a | b)",
    "F(a & X b)",
    "a & X !a",
    "F a -> G b",
    "G(!a) | F(b & c)",
    "X(a U b) & F c",
    "true U a",
    "G(a -> (b U c))",
    "!F(a & b)",
];

/// Position-wise LTLf semantics with strong next.
pub fn holds_at(f: &LtlFormula, trace: &[State], i: usize) -> bool {
    use LtlFormula::*;
    let n = trace.len();
    match f {
        True => true,
        False => false,
        Atom(p) => trace[i].contains(p),
        Not(a) => !holds_at(a, trace, i),
        And(a, b) => holds_at(a, trace, i) && holds_at(b, trace, i),
        Or(a, b) => holds_at(a, trace, i) || holds_at(b, trace, i),
        Implies(a, b) => !holds_at(a, trace, i) || holds_at(b, trace, i),
        Next(a) => i + 1 < n && holds_at(a, trace, i + 1),
        Globally(a) => (i..n).all(|j| holds_at(a, trace, j)),
        Finally(a) => (i..n).any(|j| holds_at(a, trace, j)),
        Until(a, b) => (i..n).any(|j| holds_at(b, trace, j) && (i..j).all(|k| holds_at(a, trace, k))),
    }
}

pub fn holds(f: &LtlFormula, trace: &[State]) -> bool {
    !trace.is_empty() && holds_at(f, trace, 0)
}

/// Every trace over `props` with length in `1..=max_len`.
pub fn all_traces(props: &[String], max_len: usize) -> Vec<Vec<State>> {
    let vals: Vec<State> = (0..1usize << props.len())
        .map(|m| props.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, p)| p.clone()).collect())
        .collect();
    let mut out = Vec::new();
    let mut layer: Vec<Vec<State>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|t| {
                vals.iter().map(move |v| {
                    let mut t = t.clone();
                    t.push(v.clone());
                    t
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn atom(pred: &str, args: &[&str]) -> String {
    if args.is_empty() {
        format!("({pred})")
    } else {
        format!("({pred} {})", args.join(" "))
    }
}

pub fn initial(problem: &PlanningProblem) -> State {
    problem.init.iter().map(|a| a.to_string()).collect()
}

/// Hand-written transition rules for the two built-in domains.
pub fn step(state: &State, action: &str, args: &[&str]) -> Option<State> {
    let has = |s: &str| state.contains(s);
    let mut next = state.clone();
    let mut set = |add: &[String], del: &[String]| {
        for d in del {
            next.remove(d);
        }
        for a in add {
            next.insert(a.clone());
        }
    };
    match (action, args) {
        ("pick-up", [x]) => {
            let (c, t, e) = (atom("clear", &[x]), atom("on-table", &[x]), atom("arm-empty", &[]));
            if !(has(&c) && has(&t) && has(&e)) {
                return None;
            }
            set(&[atom("holding", &[x])], &[c, t, e]);
        }
        ("put-down", [x]) => {
            let h = atom("holding", &[x]);
            if !has(&h) {
                return None;
            }
            set(&[atom("on-table", &[x]), atom("clear", &[x]), atom("arm-empty", &[])], &[h]);
        }
        ("stack", [x, y]) => {
            let (h, c) = (atom("holding", &[x]), atom("clear", &[y]));
            if x == y || !(has(&h) && has(&c)) {
                return None;
            }
            set(&[atom("on", &[x, y]), atom("clear", &[x]), atom("arm-empty", &[])], &[h, c]);
        }
        ("unstack", [x, y]) => {
            let (o, c, e) = (atom("on", &[x, y]), atom("clear", &[x]), atom("arm-empty", &[]));
            if !(has(&o) && has(&c) && has(&e)) {
                return None;
            }
            set(&[atom("holding", &[x]), atom("clear", &[y])], &[o, c, e]);
        }
        ("drive", [a, b]) => {
            let at = atom("at", &[a]);
            if !has(&at) || !(has(&atom("road", &[a, b])) || has(&atom("road", &[b, a]))) {
                return None;
            }
            set(&[atom("at", &[b]), atom("reached", &[b])], &[at]);
        }
        _ => return None,
    }
    Some(next)
}

pub fn goal_true(goal: &GoalNode, state: &State) -> bool {
    match goal {
        GoalNode::Literal(a, pos) => state.contains(&a.to_string()) == *pos,
        GoalNode::And(cs) => cs.iter().all(|c| goal_true(c, state)),
        GoalNode::Or(cs) => cs.iter().any(|c| goal_true(c, state)),
        GoalNode::Not(c) => !goal_true(c, state),
    }
}

fn temporal_ok(problem: &PlanningProblem, states: &[State]) -> bool {
    problem.constraints.entries.iter().all(|c| match &c.formal {
        Formal::Temporal { formula, bindings } => {
            let trace: Vec<State> = states
                .iter()
                .map(|s| bindings.iter().filter(|(_, a)| s.contains(&a.to_string())).map(|(p, _)| p.clone()).collect())
                .collect();
            holds(formula, &trace)
        }
        Formal::Untranslated => panic!("untranslated constraint"),
        Formal::State(_) => panic!("state constraints are not modelled here"),
    })
}

/// Independent plan check: simulation, temporal constraints over the state
/// trace (initial state included) and the goal in the final state.
pub fn independently_valid(problem: &PlanningProblem, plan: &[GroundAction]) -> bool {
    let mut states = vec![initial(problem)];
    for a in plan {
        let args: Vec<&str> = a.args.iter().map(String::as_str).collect();
        match step(states.last().unwrap(), &a.name, &args) {
            Some(s) => states.push(s),
            None => return false,
        }
    }
    temporal_ok(problem, &states) && goal_true(&problem.goal, states.last().unwrap())
}

fn candidate_actions(problem: &PlanningProblem) -> Vec<(String, Vec<String>)> {
    let objs = &problem.objects;
    let mut out = Vec::new();
    if problem.schema("drive").is_some() {
        for a in objs {
            for b in objs {
                out.push(("drive".to_string(), vec![a.clone(), b.clone()]));
            }
        }
        return out;
    }
    for x in objs {
        out.push(("pick-up".into(), vec![x.clone()]));
        out.push(("put-down".into(), vec![x.clone()]));
        for y in objs {
            out.push(("stack".into(), vec![x.clone(), y.clone()]));
            out.push(("unstack".into(), vec![x.clone(), y.clone()]));
        }
    }
    out
}

/// Shortest plan length by breadth-first search over states; only for
/// problems without constraints.
pub fn shortest_unconstrained(problem: &PlanningProblem, max_len: usize) -> Option<usize> {
    assert!(problem.constraints.entries.is_empty());
    let actions = candidate_actions(problem);
    let start = initial(problem);
    let mut dist: HashMap<State, usize> = HashMap::from([(start.clone(), 0)]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        if goal_true(&problem.goal, &s) {
            return Some(d);
        }
        if d == max_len {
            continue;
        }
        for (name, args) in &actions {
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            if let Some(n) = step(&s, name, &args) {
                if !dist.contains_key(&n) {
                    dist.insert(n.clone(), d + 1);
                    queue.push_back(n);
                }
            }
        }
    }
    None
}

/// Shortest valid plan length by enumerating every action sequence of
/// increasing length (iterative deepening).
pub fn shortest_by_enumeration(problem: &PlanningProblem, max_len: usize) -> Option<usize> {
    let actions = candidate_actions(problem);
    (0..=max_len).find(|&len| {
        let mut states = vec![initial(problem)];
        dfs(problem, &actions, &mut states, len)
    })
}

fn dfs(problem: &PlanningProblem, actions: &[(String, Vec<String>)], states: &mut Vec<State>, left: usize) -> bool {
    if left == 0 {
        return goal_true(&problem.goal, states.last().unwrap()) && temporal_ok(problem, states);
    }
    for (name, args) in actions {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        if let Some(n) = step(states.last().unwrap(), name, &args) {
            states.push(n);
            let found = dfs(problem, actions, states, left - 1);
            states.pop();
            if found {
                return true;
            }
        }
    }
    false
}
