//! Ground-truth planner: grounds the problem into bitset actions and searches
//! the product of world states and temporal-constraint automata.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BackendError, DecodingOptions, GenerationResult, PlannerBackend};
use crate::ltl::{compile_automaton, LtlAutomaton};
use crate::problem::{
    assignments, parse_problem, Bindings, Condition, GoalNode, GroundAction, GroundAtom, Plan, PlanningProblem,
};
use crate::validate::VerifyError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("no plan within {depth} steps")]
    NoSolution { depth: usize },
    #[error("grounding needs {count} candidate actions, bound is {bound}")]
    GroundingExplosion { count: usize, bound: usize },
    #[error("search exceeded {nodes} nodes")]
    BudgetExhausted { nodes: usize },
    #[error(transparent)]
    Constraints(#[from] VerifyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchStrategy {
    /// Breadth-first; plans are shortest.
    Bfs,
    /// Greedy best-first on the additive heuristic; plans are valid but not minimal.
    Greedy,
    /// Breadth-first within `bfs_node_budget`, greedy afterwards.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub max_depth: usize,
    pub strategy: SearchStrategy,
    pub bfs_node_budget: usize,
    pub node_budget: usize,
    pub grounding_bound: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            max_depth: 200,
            strategy: SearchStrategy::Auto,
            bfs_node_budget: 200_000,
            node_budget: 3_000_000,
            grounding_bound: 1_000_000,
        }
    }
}

/// Shortest plan by breadth-first product search, or `NoSolution` when none
/// exists within `max_depth` steps.
pub fn oracle_plan(problem: &PlanningProblem, max_depth: usize) -> Result<Plan, OracleError> {
    oracle_plan_with(
        problem,
        &OracleConfig { max_depth, strategy: SearchStrategy::Bfs, ..OracleConfig::default() },
    )
}

pub fn oracle_plan_with(problem: &PlanningProblem, cfg: &OracleConfig) -> Result<Plan, OracleError> {
    let task = Task::build(problem, cfg.grounding_bound)?;
    match cfg.strategy {
        SearchStrategy::Bfs => task.bfs(cfg.max_depth, cfg.node_budget),
        SearchStrategy::Greedy => task.greedy(cfg.max_depth, cfg.node_budget),
        SearchStrategy::Auto => match task.bfs(cfg.max_depth, cfg.bfs_node_budget) {
            Err(OracleError::BudgetExhausted { .. }) => task.greedy(cfg.max_depth, cfg.node_budget),
            other => other,
        },
    }
}

type Bits = Box<[u64]>;

fn test(bits: &[u64], i: usize) -> bool {
    bits[i / 64] >> (i % 64) & 1 == 1
}

fn set(bits: &mut [u64], i: usize, on: bool) {
    if on {
        bits[i / 64] |= 1 << (i % 64);
    } else {
        bits[i / 64] &= !(1 << (i % 64));
    }
}

/// Ground formula over fluent atom indices.
#[derive(Debug, Clone)]
enum Gf {
    Const(bool),
    Atom(usize),
    Not(Box<Gf>),
    And(Vec<Gf>),
    Or(Vec<Gf>),
}

impl Gf {
    fn eval(&self, bits: &[u64]) -> bool {
        match self {
            Gf::Const(b) => *b,
            Gf::Atom(i) => test(bits, *i),
            Gf::Not(g) => !g.eval(bits),
            Gf::And(gs) => gs.iter().all(|g| g.eval(bits)),
            Gf::Or(gs) => gs.iter().any(|g| g.eval(bits)),
        }
    }

    fn not(g: Gf) -> Gf {
        match g {
            Gf::Const(b) => Gf::Const(!b),
            Gf::Not(inner) => *inner,
            other => Gf::Not(Box::new(other)),
        }
    }

    fn and(parts: Vec<Gf>) -> Gf {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Gf::Const(true) => {}
                Gf::Const(false) => return Gf::Const(false),
                Gf::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Gf::Const(true),
            1 => out.pop().unwrap(),
            _ => Gf::And(out),
        }
    }

    fn or(parts: Vec<Gf>) -> Gf {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Gf::Const(false) => {}
                Gf::Const(true) => return Gf::Const(true),
                Gf::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Gf::Const(false),
            1 => out.pop().unwrap(),
            _ => Gf::Or(out),
        }
    }

    /// Additive relaxed cost: conjunctions sum, disjunctions take the minimum,
    /// negations are free.
    fn cost(&self, c: &[u32]) -> u32 {
        match self {
            Gf::Const(true) | Gf::Not(_) => 0,
            Gf::Const(false) => u32::MAX,
            Gf::Atom(i) => c[*i],
            Gf::And(gs) => gs.iter().fold(0u32, |acc, g| acc.saturating_add(g.cost(c))),
            Gf::Or(gs) => gs.iter().map(|g| g.cost(c)).min().unwrap_or(u32::MAX),
        }
    }
}

struct Grounder<'a> {
    problem: &'a PlanningProblem,
    fluent: HashSet<&'a str>,
    index: HashMap<GroundAtom, usize>,
    atoms: Vec<GroundAtom>,
}

impl<'a> Grounder<'a> {
    fn new(problem: &'a PlanningProblem) -> Self {
        let fluent = problem
            .schemas
            .iter()
            .flat_map(|s| s.add_effects.iter().chain(&s.del_effects))
            .map(|t| t.predicate.as_str())
            .collect();
        Grounder { problem, fluent, index: HashMap::new(), atoms: Vec::new() }
    }

    fn intern(&mut self, atom: GroundAtom) -> usize {
        if let Some(&i) = self.index.get(&atom) {
            return i;
        }
        let i = self.atoms.len();
        self.index.insert(atom.clone(), i);
        self.atoms.push(atom);
        i
    }

    fn atom(&mut self, atom: GroundAtom) -> Gf {
        if self.fluent.contains(atom.predicate.as_str()) {
            Gf::Atom(self.intern(atom))
        } else {
            Gf::Const(self.problem.init.contains(&atom))
        }
    }

    fn condition(&mut self, c: &Condition, env: &Bindings) -> Gf {
        match c {
            Condition::Atom(t) => self.atom(t.ground(env)),
            Condition::Eq(a, b) => Gf::Const(a.resolve(env) == b.resolve(env)),
            Condition::Not(inner) => Gf::not(self.condition(inner, env)),
            Condition::And(cs) => Gf::and(cs.iter().map(|c| self.condition(c, env)).collect()),
            Condition::Or(cs) => Gf::or(cs.iter().map(|c| self.condition(c, env)).collect()),
            Condition::Imply(a, b) => {
                let (a, b) = (self.condition(a, env), self.condition(b, env));
                Gf::or(vec![Gf::not(a), b])
            }
            Condition::Forall(vars, body) | Condition::Exists(vars, body) => {
                let objects = self.problem.objects.clone();
                let parts = assignments(vars, &objects, env).map(|e| self.condition(body, &e)).collect();
                if matches!(c, Condition::Forall(..)) {
                    Gf::and(parts)
                } else {
                    Gf::or(parts)
                }
            }
        }
    }

    fn goal(&mut self, g: &GoalNode) -> Gf {
        match g {
            GoalNode::Literal(a, true) => self.atom(a.clone()),
            GoalNode::Literal(a, false) => Gf::not(self.atom(a.clone())),
            GoalNode::And(cs) => Gf::and(cs.iter().map(|c| self.goal(c)).collect()),
            GoalNode::Or(cs) => Gf::or(cs.iter().map(|c| self.goal(c)).collect()),
            GoalNode::Not(c) => Gf::not(self.goal(c)),
        }
    }
}

struct Action {
    step: GroundAction,
    pos: Vec<usize>,
    neg: Vec<usize>,
    rest: Option<Gf>,
    add: Vec<usize>,
    del: Vec<usize>,
}

impl Action {
    fn applicable(&self, bits: &[u64]) -> bool {
        self.pos.iter().all(|&i| test(bits, i))
            && self.neg.iter().all(|&i| !test(bits, i))
            && self.rest.as_ref().is_none_or(|g| g.eval(bits))
    }

    fn apply(&self, bits: &[u64]) -> Bits {
        let mut next: Bits = bits.into();
        for &i in &self.del {
            set(&mut next, i, false);
        }
        for &i in &self.add {
            set(&mut next, i, true);
        }
        next
    }

    fn pre_cost(&self, c: &[u32]) -> u32 {
        let base = self.pos.iter().fold(0u32, |acc, &i| acc.saturating_add(c[i]));
        base.saturating_add(self.rest.as_ref().map_or(0, |g| g.cost(c)))
    }
}

/// Temporal constraint with its propositions resolved to atom indices.
struct Monitor {
    automaton: LtlAutomaton,
    /// Per proposition bit: `Ok(index)` for fluents, `Err(truth)` for static atoms.
    props: Vec<Result<usize, bool>>,
}

impl Monitor {
    fn step(&self, q: usize, bits: &[u64]) -> usize {
        let mask = self
            .props
            .iter()
            .enumerate()
            .filter(|(_, p)| match p {
                Ok(i) => test(bits, *i),
                Err(b) => *b,
            })
            .map(|(k, _)| 1usize << k)
            .sum();
        self.automaton.step_mask(q, mask)
    }
}

struct Task {
    n_atoms: usize,
    init: Bits,
    actions: Vec<Action>,
    invariants: Vec<Gf>,
    goal: Gf,
    monitors: Vec<Monitor>,
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Key(Bits, Box<[u32]>);

struct Node {
    key: Key,
    parent: usize,
    action: usize,
    depth: usize,
}

impl Task {
    fn build(problem: &PlanningProblem, bound: usize) -> Result<Task, OracleError> {
        if let Some(text) = problem.constraints.untranslated().next() {
            return Err(VerifyError::UntranslatedConstraint(text.to_string()).into());
        }
        let n_obj = problem.objects.len();
        let count: usize = problem
            .schemas
            .iter()
            .map(|s| n_obj.checked_pow(s.arity() as u32).unwrap_or(usize::MAX))
            .fold(0usize, usize::saturating_add);
        if count > bound {
            return Err(OracleError::GroundingExplosion { count, bound });
        }

        let mut g = Grounder::new(problem);
        for a in problem.init.iter() {
            if g.fluent.contains(a.predicate.as_str()) {
                g.intern(a.clone());
            }
        }

        let mut actions = Vec::new();
        for schema in &problem.schemas {
            let mut grounded = Vec::new();
            let vars = schema.params.clone();
            for env in assignments(&vars, &problem.objects, &Bindings::new()) {
                let pre = g.condition(&schema.precondition, &env);
                if matches!(pre, Gf::Const(false)) {
                    continue;
                }
                let args: Vec<String> = schema.params.iter().map(|p| env[p].clone()).collect();
                let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
                let parts = match pre {
                    Gf::And(ps) => ps,
                    Gf::Const(true) => Vec::new(),
                    other => vec![other],
                };
                for p in parts {
                    match p {
                        Gf::Atom(i) => pos.push(i),
                        Gf::Not(inner) if matches!(*inner, Gf::Atom(_)) => {
                            let Gf::Atom(i) = *inner else { unreachable!() };
                            neg.push(i);
                        }
                        other => rest.push(other),
                    }
                }
                let add = schema.add_effects.iter().map(|t| g.intern(t.ground(&env))).collect();
                let del = schema.del_effects.iter().map(|t| g.intern(t.ground(&env))).collect();
                grounded.push(Action {
                    step: GroundAction::new(schema.name.clone(), args),
                    pos,
                    neg,
                    rest: (!rest.is_empty()).then(|| Gf::and(rest)),
                    add,
                    del,
                });
            }
            grounded.sort_by(|a, b| a.step.args.cmp(&b.step.args));
            actions.extend(grounded);
        }

        let invariants = problem
            .constraints
            .state_constraints()
            .map(|(_, c)| g.condition(c, &Bindings::new()))
            .collect();
        let goal = g.goal(&problem.goal);

        let mut monitors = Vec::new();
        for (text, formula, bindings) in problem.constraints.temporal_constraints() {
            let automaton = compile_automaton(formula).map_err(|source| VerifyError::Automaton {
                text: text.to_string(),
                source,
            })?;
            let props = automaton
                .props()
                .iter()
                .map(|p| {
                    let atom = bindings[p].clone();
                    if g.fluent.contains(atom.predicate.as_str()) {
                        Ok(g.intern(atom))
                    } else {
                        Err(problem.init.contains(&atom))
                    }
                })
                .collect();
            monitors.push(Monitor { automaton, props });
        }

        let n_atoms = g.atoms.len();
        let words = n_atoms.div_ceil(64).max(1);
        let mut init: Bits = vec![0u64; words].into();
        for a in problem.init.iter() {
            if let Some(&i) = g.index.get(a) {
                set(&mut init, i, true);
            }
        }
        Ok(Task { n_atoms, init, actions, invariants, goal, monitors })
    }

    fn admissible(&self, bits: &[u64]) -> bool {
        self.invariants.iter().all(|c| c.eval(bits))
    }

    /// Automaton states after reading `bits`; `None` once any monitor is beyond recovery.
    fn advance(&self, qs: &[u32], bits: &[u64]) -> Option<Box<[u32]>> {
        let mut out = Vec::with_capacity(qs.len());
        for (m, &q) in self.monitors.iter().zip(qs) {
            let r = m.step(q as usize, bits);
            if !m.automaton.is_live(r) {
                return None;
            }
            out.push(r as u32);
        }
        Some(out.into())
    }

    fn is_goal(&self, key: &Key) -> bool {
        self.goal.eval(&key.0)
            && self.monitors.iter().zip(key.1.iter()).all(|(m, &q)| m.automaton.is_accepting(q as usize))
    }

    fn root(&self) -> Option<Key> {
        if !self.admissible(&self.init) {
            return None;
        }
        let start: Vec<u32> = self.monitors.iter().map(|m| m.automaton.initial() as u32).collect();
        let qs = self.advance(&start, &self.init)?;
        Some(Key(self.init.clone(), qs))
    }

    fn successors<'s>(&'s self, key: &'s Key) -> impl Iterator<Item = (usize, Key)> + 's {
        self.actions.iter().enumerate().filter_map(move |(ai, a)| {
            if !a.applicable(&key.0) {
                return None;
            }
            let bits = a.apply(&key.0);
            if !self.admissible(&bits) {
                return None;
            }
            let qs = self.advance(&key.1, &bits)?;
            Some((ai, Key(bits, qs)))
        })
    }

    fn extract(&self, nodes: &[Node], mut at: usize) -> Plan {
        let mut steps = Vec::new();
        while at != 0 {
            steps.push(self.actions[nodes[at].action].step.clone());
            at = nodes[at].parent;
        }
        steps.reverse();
        Plan::new(steps)
    }

    fn bfs(&self, max_depth: usize, budget: usize) -> Result<Plan, OracleError> {
        let Some(root) = self.root() else {
            return Err(OracleError::NoSolution { depth: 0 });
        };
        let mut seen: HashSet<Key> = HashSet::new();
        let mut nodes = vec![Node { key: root.clone(), parent: 0, action: usize::MAX, depth: 0 }];
        seen.insert(root);
        let mut queue = VecDeque::from([0usize]);
        while let Some(at) = queue.pop_front() {
            if self.is_goal(&nodes[at].key) {
                return Ok(self.extract(&nodes, at));
            }
            if nodes[at].depth >= max_depth {
                continue;
            }
            let succ: Vec<(usize, Key)> = self.successors(&nodes[at].key).collect();
            for (ai, key) in succ {
                if seen.contains(&key) {
                    continue;
                }
                if nodes.len() >= budget {
                    return Err(OracleError::BudgetExhausted { nodes: budget });
                }
                seen.insert(key.clone());
                let depth = nodes[at].depth + 1;
                nodes.push(Node { key, parent: at, action: ai, depth });
                queue.push_back(nodes.len() - 1);
            }
        }
        Err(OracleError::NoSolution { depth: max_depth })
    }

    /// Additive heuristic from `bits`: relaxed cost of the goal.
    fn h_add(&self, bits: &[u64]) -> u32 {
        let mut cost = vec![u32::MAX; self.n_atoms];
        for (i, c) in cost.iter_mut().enumerate() {
            if test(bits, i) {
                *c = 0;
            }
        }
        loop {
            let mut changed = false;
            for a in &self.actions {
                let pre = a.pre_cost(&cost);
                if pre == u32::MAX {
                    continue;
                }
                let c = pre.saturating_add(1);
                for &i in &a.add {
                    if c < cost[i] {
                        cost[i] = c;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        self.goal.cost(&cost)
    }

    fn greedy(&self, max_depth: usize, budget: usize) -> Result<Plan, OracleError> {
        let Some(root) = self.root() else {
            return Err(OracleError::NoSolution { depth: 0 });
        };
        let mut seen: HashSet<Key> = HashSet::new();
        let h0 = self.h_add(&root.0);
        let mut nodes = vec![Node { key: root.clone(), parent: 0, action: usize::MAX, depth: 0 }];
        seen.insert(root);
        let mut open = BinaryHeap::from([Reverse((h0, 0usize))]);
        while let Some(Reverse((h, at))) = open.pop() {
            if h == u32::MAX {
                break;
            }
            if self.is_goal(&nodes[at].key) {
                return Ok(self.extract(&nodes, at));
            }
            if nodes[at].depth >= max_depth {
                continue;
            }
            let succ: Vec<(usize, Key)> = self.successors(&nodes[at].key).collect();
            for (ai, key) in succ {
                if seen.contains(&key) {
                    continue;
                }
                if nodes.len() >= budget {
                    return Err(OracleError::BudgetExhausted { nodes: budget });
                }
                seen.insert(key.clone());
                let h = self.h_add(&key.0);
                let depth = nodes[at].depth + 1;
                nodes.push(Node { key, parent: at, action: ai, depth });
                open.push(Reverse((h, nodes.len() - 1)));
            }
        }
        Err(OracleError::NoSolution { depth: max_depth })
    }
}

/// Backend that answers a prompt by planning for the last problem it contains.
/// Schemas and formal constraints come from the template problem; prompt
/// constraints are matched to them by sentence. Deterministic.
pub struct OracleBackend {
    template: PlanningProblem,
    cfg: OracleConfig,
}

impl OracleBackend {
    pub fn new(template: PlanningProblem, cfg: OracleConfig) -> Self {
        OracleBackend { template, cfg }
    }

    fn target(&self, prompt: &str) -> Result<PlanningProblem, BackendError> {
        let text = last_problem_block(prompt).ok_or_else(|| BackendError::Prompt("no problem definition".into()))?;
        let mut p = parse_problem(text).map_err(|e| BackendError::Prompt(e.to_string()))?;
        p.schemas = self.template.schemas.clone();
        for (k, v) in &self.template.arities {
            p.arities.entry(k.clone()).or_insert(*v);
        }
        for entry in &mut p.constraints.entries {
            if let Some(known) = self.template.constraints.entries.iter().find(|c| c.text == entry.text) {
                entry.formal = known.formal.clone();
            }
        }
        Ok(p)
    }
}

impl PlannerBackend for OracleBackend {
    fn id(&self) -> &str {
        "oracle"
    }

    fn generate(&self, prompt: &str, _options: &DecodingOptions) -> Result<GenerationResult, BackendError> {
        let problem = self.target(prompt)?;
        let text = match oracle_plan_with(&problem, &self.cfg) {
            Ok(plan) => plan.render(&problem),
            Err(OracleError::Constraints(e)) => return Err(BackendError::Prompt(e.to_string())),
            Err(e) => format!("No plan found: {e}."),
        };
        Ok(GenerationResult { text, token_probs: None, backend_id: self.id().into() })
    }
}

/// The last balanced `(define (problem ...))` block in `text`.
fn last_problem_block(text: &str) -> Option<&str> {
    let start = text.rfind("(define (problem")?;
    let mut depth = 0usize;
    for (i, c) in text[start..].char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    None
}
