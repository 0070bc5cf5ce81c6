//! Confidence-gated decomposition: AND-goals are split into sub-tasks planned
//! one after another, with a rollback stack and per-(state, goal) failure
//! counters, then composed and re-verified.

use std::collections::HashMap;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::backend::{confidence_score_with, Aggregate, Confidence, GenerationResult, PlannerBackend};
use crate::domains::PromptContext;
use crate::problem::{get_subgoals, GoalNode, Plan, PlanningProblem, WorldState};
use crate::task_planner::{build_task_prompt, refine, LoopConfig, LoopOutcome, PlannerError};
use crate::validate::{apply_action, simulate, Verifier};

pub const DEFAULT_FAILURE_LIMIT: usize = 3;
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.6;
/// Levels of decomposition: the task and its AND-children.
pub const MAX_DEPTH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnavailablePolicy {
    /// Treat a missing score as confident.
    #[default]
    Optimistic,
    Pessimistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierConfig {
    pub loop_cfg: LoopConfig,
    /// Failures allowed per (state, sub-goal) before rolling back.
    pub failure_limit: usize,
    pub confidence_threshold: f64,
    pub aggregate: Aggregate,
    pub unavailable: UnavailablePolicy,
    /// Re-run the confidence gate on composite sub-goals, not only at the root.
    pub reassess_subtasks: bool,
}

impl Default for HierConfig {
    fn default() -> Self {
        HierConfig {
            loop_cfg: LoopConfig::default(),
            failure_limit: DEFAULT_FAILURE_LIMIT,
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
            aggregate: Aggregate::Arithmetic,
            unavailable: UnavailablePolicy::Optimistic,
            reassess_subtasks: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Difficulty {
    /// Plan directly; the probe reply becomes the loop's first iteration.
    Direct(GenerationResult),
    Decompose,
}

/// One real generation of the task prompt, scored by token confidence.
pub fn assess_difficulty(
    problem: &PlanningProblem,
    backend: &dyn PlannerBackend,
    ctx: &PromptContext,
    cfg: &HierConfig,
) -> Result<Difficulty, PlannerError> {
    let prompt = build_task_prompt(problem, ctx, &[]);
    let probe = backend.generate(&prompt, &cfg.loop_cfg.decoding)?;
    Ok(judge(probe, cfg))
}

fn judge(probe: GenerationResult, cfg: &HierConfig) -> Difficulty {
    match confidence_score_with(&probe, cfg.aggregate) {
        Confidence::Score(s) if s >= cfg.confidence_threshold => Difficulty::Direct(probe),
        Confidence::Score(s) => {
            info!("confidence {s:.3} below {:.3}; decomposing", cfg.confidence_threshold);
            Difficulty::Decompose
        }
        Confidence::Unavailable => {
            warn!("backend `{}` reported no token probabilities", probe.backend_id);
            match cfg.unavailable {
                UnavailablePolicy::Optimistic => Difficulty::Direct(probe),
                UnavailablePolicy::Pessimistic => Difficulty::Decompose,
            }
        }
    }
}

/// Key of the failure counter: the exact state and the printed sub-goal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FailureKey {
    pub state_fingerprint: String,
    pub goal_fingerprint: String,
}

impl FailureKey {
    pub fn new(state: &WorldState, goal: &GoalNode) -> Self {
        FailureKey { state_fingerprint: state.canonical(), goal_fingerprint: goal.to_string() }
    }
}

/// Start point of a sub-task that succeeded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RollbackEntry {
    pub k: usize,
    pub state: WorldState,
    pub partial_plan: Plan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum HierEvent {
    Assessed { direct: bool },
    SubtaskStarted { k: usize, goal: String },
    SubtaskSucceeded { k: usize, steps: usize },
    SubtaskFailed { k: usize, counter: usize },
    CounterReset { k: usize },
    Push(RollbackEntry),
    Pop(RollbackEntry),
    /// Loop variables right after a pop.
    Restored(RollbackEntry),
    NoMoreRollback { k: usize },
    BudgetExhausted { attempts: usize },
    Dependencies { detected: bool },
    Recomposed { valid: bool },
    Fallback { success: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HierResult {
    Success { plan: Plan, state: WorldState },
    Failure { partial: Plan },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierOutcome {
    pub result: HierResult,
    pub subtasks_attempted: usize,
    pub rollbacks: usize,
    pub fallback_used: bool,
    /// Backend generations consumed by all loops.
    pub iterations: usize,
    pub events: Vec<HierEvent>,
}

impl HierOutcome {
    pub fn plan(&self) -> Option<&Plan> {
        match &self.result {
            HierResult::Success { plan, .. } => Some(plan),
            HierResult::Failure { .. } => None,
        }
    }

    pub fn is_success(&self) -> bool {
        self.plan().is_some()
    }
}

/// Root entry point: the confidence gate, then the direct loop or decomposition.
/// A failed direct loop on a conjunctive goal falls through to decomposition.
pub fn plan_adaptive(
    problem: &PlanningProblem,
    backend: &dyn PlannerBackend,
    ctx: &PromptContext,
    cfg: &HierConfig,
) -> Result<HierOutcome, PlannerError> {
    let verifier = Verifier::new(&problem.constraints)?;
    verifier.check_initial(problem)?;
    let mut run = Run::new(backend, ctx, cfg, &verifier);
    let difficulty = assess_difficulty(problem, backend, ctx, cfg)?;
    run.events.push(HierEvent::Assessed { direct: matches!(difficulty, Difficulty::Direct(_)) });
    if let Difficulty::Direct(probe) = difficulty {
        if let Some(plan) = run.run_loop(problem, Some(probe))? {
            let state = final_state(problem, &plan);
            return Ok(run.finish(HierResult::Success { plan, state }));
        }
        if get_subgoals(&problem.goal).len() < 2 {
            return Ok(run.finish(HierResult::Failure { partial: Plan::default() }));
        }
    }
    let result = run.decompose(problem, &problem.goal, &problem.init, 1)?;
    Ok(run.finish(result))
}

/// Decomposition and composition for `goal` from `state` under the constraints of `problem`.
pub fn hierarchical_plan(
    problem: &PlanningProblem,
    goal: &GoalNode,
    state: &WorldState,
    backend: &dyn PlannerBackend,
    ctx: &PromptContext,
    cfg: &HierConfig,
) -> Result<HierOutcome, PlannerError> {
    assert!(cfg.failure_limit >= 1, "failure limit must be at least 1");
    let verifier = Verifier::new(&problem.constraints)?;
    let mut run = Run::new(backend, ctx, cfg, &verifier);
    let result = run.decompose(problem, goal, state, 1)?;
    Ok(run.finish(result))
}

/// Runs the loop on the original problem with the sub-plans shown as solved examples.
pub fn compose_with_examples(
    problem: &PlanningProblem,
    subresults: &[(GoalNode, Plan)],
    backend: &dyn PlannerBackend,
    ctx: &PromptContext,
    loop_cfg: &LoopConfig,
) -> Result<LoopOutcome, PlannerError> {
    if subresults.is_empty() {
        return Err(PlannerError::Invalid("composition needs at least one sub-plan".into()));
    }
    let verifier = Verifier::new(&problem.constraints)?;
    let prompt = build_task_prompt(problem, ctx, &example_pairs(problem, subresults));
    Ok(refine(problem, backend, &verifier, &prompt, loop_cfg, None)?)
}

/// True when running the sub-plans in sequence leaves an earlier sub-goal
/// unsatisfied at the end (or cannot be executed at all).
pub fn detect_dependencies(problem: &PlanningProblem, subresults: &[(GoalNode, Plan)]) -> bool {
    if subresults.len() < 2 {
        return false;
    }
    let whole = subresults.iter().fold(Plan::default(), |acc, (_, p)| acc.concat(p));
    match simulate(problem, &whole) {
        Err(_) => true,
        Ok(trace) => subresults[..subresults.len() - 1].iter().any(|(g, _)| !g.holds(trace.last())),
    }
}

fn example_pairs(problem: &PlanningProblem, subresults: &[(GoalNode, Plan)]) -> Vec<(String, String)> {
    let mut state = problem.init.clone();
    let mut out = Vec::new();
    for (i, (goal, plan)) in subresults.iter().enumerate() {
        let sub = problem.subproblem(format!("{}-sub{}", problem.name, i + 1), state.clone(), goal.clone());
        out.push((sub.to_string(), plan.render(&sub)));
        for step in &plan.steps {
            match apply_action(problem, &state, step) {
                Ok(next) => state = next,
                Err(_) => break,
            }
        }
    }
    out
}

fn final_state(problem: &PlanningProblem, plan: &Plan) -> WorldState {
    simulate(problem, plan).map(|t| t.last().clone()).unwrap_or_else(|f| f.partial.last().clone())
}

struct Run<'a> {
    backend: &'a dyn PlannerBackend,
    ctx: &'a PromptContext,
    cfg: &'a HierConfig,
    verifier: &'a Verifier,
    subtasks_attempted: usize,
    rollbacks: usize,
    fallback_used: bool,
    iterations: usize,
    events: Vec<HierEvent>,
}

impl<'a> Run<'a> {
    fn new(backend: &'a dyn PlannerBackend, ctx: &'a PromptContext, cfg: &'a HierConfig, verifier: &'a Verifier) -> Self {
        Run { backend, ctx, cfg, verifier, subtasks_attempted: 0, rollbacks: 0, fallback_used: false, iterations: 0, events: Vec::new() }
    }

    fn finish(self, result: HierResult) -> HierOutcome {
        HierOutcome {
            result,
            subtasks_attempted: self.subtasks_attempted,
            rollbacks: self.rollbacks,
            fallback_used: self.fallback_used,
            iterations: self.iterations,
            events: self.events,
        }
    }

    fn run_loop(&mut self, problem: &PlanningProblem, first: Option<GenerationResult>) -> Result<Option<Plan>, PlannerError> {
        let prompt = build_task_prompt(problem, self.ctx, &[]);
        let out = refine(problem, self.backend, self.verifier, &prompt, &self.cfg.loop_cfg, first)?;
        self.iterations += out.iterations();
        Ok(out.plan().cloned())
    }

    /// Plans one sub-goal; OR tries each disjunct in order.
    fn solve(&mut self, sub: &PlanningProblem, depth: usize) -> Result<Option<Plan>, PlannerError> {
        match &sub.goal {
            GoalNode::Or(options) => {
                for (i, option) in options.iter().enumerate() {
                    let alt = sub.subproblem(format!("{}-alt{}", sub.name, i + 1), sub.init.clone(), option.clone());
                    if let Some(plan) = self.solve(&alt, depth)? {
                        return Ok(Some(plan));
                    }
                }
                Ok(None)
            }
            GoalNode::And(_) if depth < MAX_DEPTH && self.cfg.reassess_subtasks => {
                let prompt = build_task_prompt(sub, self.ctx, &[]);
                let probe = self.backend.generate(&prompt, &self.cfg.loop_cfg.decoding)?;
                match judge(probe, self.cfg) {
                    Difficulty::Direct(probe) => self.run_loop(sub, Some(probe)),
                    Difficulty::Decompose => match self.decompose(sub, &sub.goal, &sub.init, depth + 1)? {
                        HierResult::Success { plan, .. } => Ok(Some(plan)),
                        HierResult::Failure { .. } => Ok(None),
                    },
                }
            }
            _ => self.run_loop(sub, None),
        }
    }

    fn decompose(
        &mut self,
        problem: &PlanningProblem,
        goal: &GoalNode,
        state: &WorldState,
        depth: usize,
    ) -> Result<HierResult, PlannerError> {
        let level = problem.subproblem(problem.name.clone(), state.clone(), goal.clone());
        let subgoals = get_subgoals(goal);
        if subgoals.len() == 1 {
            return Ok(match self.solve(&level, depth)? {
                Some(plan) => {
                    let state = final_state(&level, &plan);
                    HierResult::Success { plan, state }
                }
                None => HierResult::Failure { partial: Plan::default() },
            });
        }

        let t = self.cfg.failure_limit.max(1);
        let budget = t * subgoals.len() * self.cfg.loop_cfg.iteration_limit.max(1);
        let mut attempts = 0;
        let mut f: HashMap<FailureKey, usize> = HashMap::new();
        let mut stack: Vec<RollbackEntry> = Vec::new();
        let mut done: Vec<(GoalNode, Plan)> = Vec::new();
        let (mut k, mut s, mut plan) = (0, state.clone(), Plan::default());

        while k < subgoals.len() {
            let key = FailureKey::new(&s, &subgoals[k]);
            if f.get(&key).copied().unwrap_or(0) >= t {
                let Some(entry) = stack.pop() else {
                    self.events.push(HierEvent::NoMoreRollback { k });
                    return Ok(HierResult::Failure { partial: plan });
                };
                self.rollbacks += 1;
                self.events.push(HierEvent::Pop(entry.clone()));
                (k, s, plan) = (entry.k, entry.state, entry.partial_plan);
                done.truncate(k);
                self.events.push(HierEvent::Restored(RollbackEntry { k, state: s.clone(), partial_plan: plan.clone() }));
                continue;
            }
            if attempts == budget {
                self.events.push(HierEvent::BudgetExhausted { attempts });
                return Ok(HierResult::Failure { partial: plan });
            }
            attempts += 1;
            self.subtasks_attempted += 1;
            self.events.push(HierEvent::SubtaskStarted { k, goal: subgoals[k].to_string() });
            let sub = problem.subproblem(format!("{}-sub{}", problem.name, k + 1), s.clone(), subgoals[k].clone());
            match self.solve(&sub, depth)? {
                None => {
                    let counter = f.entry(key).or_insert(0);
                    *counter += 1;
                    self.events.push(HierEvent::SubtaskFailed { k, counter: *counter });
                }
                Some(subplan) => {
                    let entry = RollbackEntry { k, state: s.clone(), partial_plan: plan.clone() };
                    self.events.push(HierEvent::SubtaskSucceeded { k, steps: subplan.len() });
                    self.events.push(HierEvent::Push(entry.clone()));
                    stack.push(entry);
                    plan = plan.concat(&subplan);
                    f.insert(key, 0);
                    self.events.push(HierEvent::CounterReset { k });
                    s = final_state(&sub, &subplan);
                    done.push((subgoals[k].clone(), subplan));
                    k += 1;
                }
            }
        }

        let dependent = detect_dependencies(&level, &done);
        self.events.push(HierEvent::Dependencies { detected: dependent });
        if !dependent {
            let valid = self.verifier.verify(&level, &plan).is_valid();
            self.events.push(HierEvent::Recomposed { valid });
            if valid {
                return Ok(HierResult::Success { plan, state: s });
            }
        }
        self.fallback_used = true;
        let out = compose_with_examples(&level, &done, self.backend, self.ctx, &self.cfg.loop_cfg)?;
        self.iterations += out.iterations();
        self.events.push(HierEvent::Fallback { success: out.plan().is_some() });
        Ok(match out.plan() {
            Some(p) => HierResult::Success { plan: p.clone(), state: final_state(&level, p) },
            None => HierResult::Failure { partial: plan },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{ScriptEntry, ScriptedBackend};
    use crate::domains::DomainKind;
    use crate::problem::{load_problem, GroundAtom};
    use crate::task_planner::plan_with_verification;

    // Roads: A-B, A-C, A-D, D-B.
    fn map(goal: &str) -> PlanningProblem {
        let text = format!(
            "(define (problem map) (:cities A B C D)
              (:init (at A) (reached A) (road A B) (road A C) (road A D) (road D B))
              (:goal {goal}))"
        );
        load_problem(&text, DomainKind::Navigation.domain_text()).unwrap()
    }

    fn cfg(limit: usize) -> HierConfig {
        HierConfig { loop_cfg: LoopConfig { iteration_limit: limit, ..LoopConfig::default() }, ..HierConfig::default() }
    }

    fn nav() -> PromptContext {
        DomainKind::Navigation.prompt_context()
    }

    fn counters(events: &[HierEvent]) -> Vec<(usize, usize)> {
        events
            .iter()
            .filter_map(|e| match e {
                HierEvent::SubtaskFailed { k, counter } => Some((*k, *counter)),
                HierEvent::CounterReset { k } => Some((*k, 0)),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn confidence_gate() {
        let p = map("(reached B)");
        let c = cfg(20);
        let high = ScriptedBackend::new(vec![ScriptEntry::with_probs("x", vec![0.9, 0.9])]);
        assert!(matches!(assess_difficulty(&p, &high, &nav(), &c).unwrap(), Difficulty::Direct(_)));
        let low = ScriptedBackend::new(vec![ScriptEntry::with_probs("x", vec![0.2, 0.4])]);
        assert_eq!(assess_difficulty(&p, &low, &nav(), &c).unwrap(), Difficulty::Decompose);
        let none = ScriptedBackend::from_texts(["x"]);
        assert!(matches!(assess_difficulty(&p, &none, &nav(), &c).unwrap(), Difficulty::Direct(_)));
        let pessimistic = HierConfig { unavailable: UnavailablePolicy::Pessimistic, ..c };
        assert_eq!(assess_difficulty(&p, &none, &nav(), &pessimistic).unwrap(), Difficulty::Decompose);
    }

    #[test]
    fn rollback_after_three_failures_restores_entry() {
        let p = map("(and (reached B) (reached C))");
        let b = ScriptedBackend::from_texts([
            "START-PLAN\n1. A -> B",
            "START-PLAN\n1. B -> C",
            "START-PLAN\n1. B -> C",
            "START-PLAN\n1. B -> C",
            "START-PLAN\n1. A -> D\n2. D -> B",
            "START-PLAN\n1. B -> A\n2. A -> C",
        ]);
        let out = hierarchical_plan(&p, &p.goal, &p.init, &b, &nav(), &cfg(1)).unwrap();
        assert!(out.is_success());
        assert_eq!(out.rollbacks, 1);
        assert_eq!(out.subtasks_attempted, 6);
        assert_eq!(counters(&out.events), vec![(0, 0), (1, 1), (1, 2), (1, 3), (0, 0), (1, 0)]);
        let popped = out.events.iter().find_map(|e| if let HierEvent::Pop(x) = e { Some(x) } else { None }).unwrap();
        let restored = out.events.iter().find_map(|e| if let HierEvent::Restored(x) = e { Some(x) } else { None }).unwrap();
        assert_eq!(popped, restored);
        assert_eq!(popped, &RollbackEntry { k: 0, state: p.init.clone(), partial_plan: Plan::default() });
        assert_eq!(out.plan().unwrap().len(), 4);
        assert!(!out.fallback_used);
    }

    #[test]
    fn empty_stack_fails_after_t_attempts() {
        let p = map("(and (reached B) (reached C))");
        let b = ScriptedBackend::from_texts(["START-PLAN\n1. A -> Z"]);
        let out = hierarchical_plan(&p, &p.goal, &p.init, &b, &nav(), &cfg(2)).unwrap();
        assert_eq!(out.result, HierResult::Failure { partial: Plan::default() });
        assert_eq!(out.subtasks_attempted, 3);
        assert_eq!(out.iterations, 6);
        assert!(matches!(out.events.last(), Some(HierEvent::NoMoreRollback { k: 0 })));
    }

    #[test]
    fn success_resets_counter() {
        let p = map("(and (reached B) (reached C))");
        let b = ScriptedBackend::from_texts([
            "START-PLAN\n1. A -> C",
            "START-PLAN\n1. A -> B",
            "START-PLAN\n1. B -> A\n2. A -> C",
        ]);
        let out = hierarchical_plan(&p, &p.goal, &p.init, &b, &nav(), &cfg(1)).unwrap();
        assert!(out.is_success());
        assert_eq!(counters(&out.events), vec![(0, 1), (0, 0), (1, 0)]);
    }

    #[test]
    fn single_subgoal_matches_plain_loop() {
        let p = map("(reached B)");
        let script = ["START-PLAN\n1. A -> C", "START-PLAN\n1. A -> D\n2. D -> B"];
        let hier = hierarchical_plan(&p, &p.goal, &p.init, &ScriptedBackend::from_texts(script), &nav(), &cfg(20)).unwrap();
        let plain = plan_with_verification(&p, &ScriptedBackend::from_texts(script), &nav(), &LoopConfig::default()).unwrap();
        assert_eq!(hier.plan(), plain.plan());
        assert_eq!(hier.iterations, plain.iterations());
    }

    #[test]
    fn or_goal_tries_disjuncts_in_order() {
        let p = map("(or (reached D) (reached C))");
        let b = ScriptedBackend::from_texts(["START-PLAN\n1. A -> C"]);
        let out = hierarchical_plan(&p, &p.goal, &p.init, &b, &nav(), &cfg(1)).unwrap();
        assert_eq!(out.plan().unwrap().len(), 1);
        assert!(b.prompts()[1].contains("(:goal (reached C))"));
    }

    #[test]
    fn dependency_detection() {
        let p = map("(and (reached B) (reached C))");
        let subs = |a: &str, b: &str| {
            let one = crate::problem::parse_plan_text(a, &p).unwrap();
            let two = crate::problem::parse_plan_text(b, &p).unwrap();
            vec![
                (GoalNode::atom(GroundAtom::new("reached", ["B"])), one),
                (GoalNode::atom(GroundAtom::new("reached", ["C"])), two),
            ]
        };
        assert!(!detect_dependencies(&p, &subs("1. A -> B", "1. B -> A\n2. A -> C")));
        assert!(!detect_dependencies(&p, &subs("1. A -> B", "1. B -> A\n2. A -> C")[..1]));

        let bw = load_problem(
            "(define (problem tower) (:domain blocksworld-4ops) (:objects b1 b2 b3)
               (:init (arm-empty) (on-table b1) (on-table b2) (on-table b3) (clear b1) (clear b2) (clear b3))
               (:goal (and (on b1 b2) (on b3 b1))))",
            DomainKind::Blocksworld.domain_text(),
        )
        .unwrap();
        let a = crate::problem::parse_plan_text("1. pick-up b1\n2. stack b1 b2", &bw).unwrap();
        let b = crate::problem::parse_plan_text("1. unstack b1 b2\n2. put-down b1\n3. pick-up b3\n4. stack b3 b1", &bw).unwrap();
        let subs = vec![
            (GoalNode::atom(GroundAtom::new("on", ["b1", "b2"])), a),
            (GoalNode::atom(GroundAtom::new("on", ["b3", "b1"])), b),
        ];
        assert!(detect_dependencies(&bw, &subs));
    }

    #[test]
    fn composition_with_examples() {
        let p = map("(and (reached B) (reached C))");
        let subs = vec![(GoalNode::atom(GroundAtom::new("reached", ["B"])), Plan::default())];
        let b = ScriptedBackend::from_texts(["START-PLAN\n1. A -> B\n2. B -> A\n3. A -> C"]);
        let out = compose_with_examples(&p, &subs, &b, &nav(), &LoopConfig::default()).unwrap();
        assert_eq!(out.iterations(), 1);
        assert!(b.prompts()[0].contains("# Solved sub-tasks"));
        let never = ScriptedBackend::from_texts(["START-PLAN\n1. A -> B"]);
        let out = compose_with_examples(&p, &subs, &never, &nav(), &LoopConfig { iteration_limit: 5, ..LoopConfig::default() }).unwrap();
        assert!(matches!(out, LoopOutcome::Failure { iterations: 5, .. }));
        assert!(compose_with_examples(&p, &[], &never, &nav(), &LoopConfig::default()).is_err());
    }

    #[test]
    fn clobbered_subgoal_routes_to_fallback() {
        let bw = load_problem(
            "(define (problem tower) (:domain blocksworld-4ops) (:objects b1 b2 b3)
               (:init (arm-empty) (on-table b1) (on-table b2) (on-table b3) (clear b1) (clear b2) (clear b3))
               (:goal (and (on b1 b2) (on b2 b3))))",
            DomainKind::Blocksworld.domain_text(),
        )
        .unwrap();
        let b = ScriptedBackend::from_texts([
            "START-PLAN\n1. pick-up b1\n2. stack b1 b2",
            "START-PLAN\n1. unstack b1 b2\n2. put-down b1\n3. pick-up b2\n4. stack b2 b3",
            "START-PLAN\n1. pick-up b2\n2. stack b2 b3\n3. pick-up b1\n4. stack b1 b2",
        ]);
        let out = hierarchical_plan(&bw, &bw.goal, &bw.init, &b, &DomainKind::Blocksworld.prompt_context(), &cfg(1)).unwrap();
        assert!(out.fallback_used);
        assert!(out.events.contains(&HierEvent::Dependencies { detected: true }));
        assert_eq!(out.plan().unwrap().len(), 4);
    }

    #[test]
    fn adaptive_direct_reuses_probe() {
        let p = map("(and (reached B) (reached C))");
        let b = ScriptedBackend::from_texts(["START-PLAN\n1. A -> B\n2. B -> A\n3. A -> C"]);
        let out = plan_adaptive(&p, &b, &nav(), &cfg(20)).unwrap();
        assert!(out.is_success());
        assert_eq!(b.calls(), 1);
        assert_eq!(out.iterations, 1);
    }
}
