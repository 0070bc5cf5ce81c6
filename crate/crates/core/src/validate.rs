//! Plan simulation and verdicts: preconditions, state constraints, temporal
//! constraints and the goal, checked in that order.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltl::{compile_automaton, AutomatonError, LtlAutomaton, Trace, Valuation};
use crate::problem::{
    Condition, ConstraintSet, GoalNode, GroundAction, GroundAtom, Plan, PlanningProblem, WorldState,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("constraint has no formal counterpart: {0}")]
    UntranslatedConstraint(String),
    #[error("initial state already violates: {0}")]
    InitialStateViolation(String),
    #[error("cannot compile constraint `{text}`: {source}")]
    Automaton { text: String, source: AutomatonError },
}

/// Why a single step could not be applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepFailure {
    /// The precondition of `action` fails; `literal` is its first false conjunct.
    Precondition { action: String, literal: String },
    UnknownAction(String),
    ArityMismatch { action: String, expected: usize, found: usize },
    UndeclaredObject(String),
}

impl fmt::Display for StepFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepFailure::Precondition { action, literal } => {
                write!(f, "precondition {literal} of {action} does not hold")
            }
            StepFailure::UnknownAction(a) => write!(f, "unknown action {a}"),
            StepFailure::ArityMismatch { action, expected, found } => {
                write!(f, "{action} takes {expected} arguments, got {found}")
            }
            StepFailure::UndeclaredObject(o) => write!(f, "unknown object {o}"),
        }
    }
}

/// `T(s, a)`: `(s \ del) ∪ add` when the precondition holds.
pub fn apply_action(
    problem: &PlanningProblem,
    state: &WorldState,
    action: &GroundAction,
) -> Result<WorldState, StepFailure> {
    let schema = problem
        .schema(&action.name)
        .ok_or_else(|| StepFailure::UnknownAction(action.name.clone()))?;
    if schema.arity() != action.args.len() {
        return Err(StepFailure::ArityMismatch {
            action: schema.name.clone(),
            expected: schema.arity(),
            found: action.args.len(),
        });
    }
    if let Some(bad) = action.args.iter().find(|a| !problem.has_object(a)) {
        return Err(StepFailure::UndeclaredObject(bad.clone()));
    }
    let env = schema.bind(&action.args);
    if let Some(literal) = schema.precondition.first_failure(state, &env, &problem.objects) {
        return Err(StepFailure::Precondition {
            action: schema.name.clone(),
            literal,
        });
    }
    let mut next = state.clone();
    for t in &schema.del_effects {
        next.remove(&t.ground(&env));
    }
    for t in &schema.add_effects {
        next.insert(t.ground(&env));
    }
    Ok(next)
}

/// `s0..sn` for a fully executed plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateTrace {
    pub states: Vec<WorldState>,
}

impl StateTrace {
    pub fn last(&self) -> &WorldState {
        self.states.last().expect("trace holds the initial state")
    }
}

/// Simulation stopped at `step` (1-based); `partial` holds the states before it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationFailure {
    pub partial: StateTrace,
    pub step: usize,
    pub failure: StepFailure,
}

pub fn simulate(problem: &PlanningProblem, plan: &Plan) -> Result<StateTrace, SimulationFailure> {
    let mut states = vec![problem.init.clone()];
    for (i, action) in plan.steps.iter().enumerate() {
        match apply_action(problem, states.last().unwrap(), action) {
            Ok(next) => states.push(next),
            Err(failure) => {
                return Err(SimulationFailure {
                    partial: StateTrace { states },
                    step: i + 1,
                    failure,
                })
            }
        }
    }
    Ok(StateTrace { states })
}

/// Projects each state onto the propositions of `bindings`.
pub fn trace_valuations(trace: &StateTrace, bindings: &BTreeMap<String, GroundAtom>) -> Trace {
    let steps = trace
        .states
        .iter()
        .map(|s| {
            bindings
                .iter()
                .filter(|(_, atom)| s.contains(atom))
                .map(|(p, _)| p.clone())
                .collect::<Valuation>()
        })
        .collect();
    Trace::new(steps).expect("trace holds the initial state")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationKind {
    Precondition,
    StateConstraint,
    Temporal,
    GoalNotReached,
    MalformedStep,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// 1-based plan step; 0 refers to the initial state.
    pub step: Option<usize>,
    /// Constraint sentence, or schema name for precondition failures.
    pub constraint_text: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Valid,
    Invalid(Violation),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    pub fn violation(&self) -> Option<&Violation> {
        match self {
            Verdict::Valid => None,
            Verdict::Invalid(v) => Some(v),
        }
    }

    pub fn kind(&self) -> Option<ViolationKind> {
        self.violation().map(|v| v.kind)
    }

    pub fn step(&self) -> Option<usize> {
        self.violation().and_then(|v| v.step)
    }
}

struct TemporalCheck {
    text: String,
    automaton: LtlAutomaton,
    bindings: BTreeMap<String, GroundAtom>,
}

/// Constraint checks compiled once and reused across plans and sub-problems.
pub struct Verifier {
    state: Vec<(String, Condition)>,
    temporal: Vec<TemporalCheck>,
}

impl Verifier {
    pub fn new(constraints: &ConstraintSet) -> Result<Self, VerifyError> {
        if let Some(text) = constraints.untranslated().next() {
            return Err(VerifyError::UntranslatedConstraint(text.to_string()));
        }
        let state = constraints
            .state_constraints()
            .map(|(t, c)| (t.to_string(), c.clone()))
            .collect();
        let temporal = constraints
            .temporal_constraints()
            .map(|(text, formula, bindings)| {
                let automaton = compile_automaton(formula).map_err(|source| VerifyError::Automaton {
                    text: text.to_string(),
                    source,
                })?;
                Ok(TemporalCheck {
                    text: text.to_string(),
                    automaton,
                    bindings: bindings.clone(),
                })
            })
            .collect::<Result<_, VerifyError>>()?;
        Ok(Verifier { state, temporal })
    }

    /// Fails when `problem.init` alone already breaks a constraint beyond repair.
    pub fn check_initial(&self, problem: &PlanningProblem) -> Result<(), VerifyError> {
        for (text, cond) in &self.state {
            if !cond.holds(&problem.init, &Default::default(), &problem.objects) {
                return Err(VerifyError::InitialStateViolation(text.clone()));
            }
        }
        let s0 = StateTrace { states: vec![problem.init.clone()] };
        for check in &self.temporal {
            let t = trace_valuations(&s0, &check.bindings);
            if check.automaton.first_dead_position(&t).is_some() {
                return Err(VerifyError::InitialStateViolation(check.text.clone()));
            }
        }
        Ok(())
    }

    pub fn verify(&self, problem: &PlanningProblem, plan: &Plan) -> Verdict {
        let trace = match simulate(problem, plan) {
            Ok(t) => t,
            Err(f) => {
                let (kind, text) = match &f.failure {
                    StepFailure::Precondition { action, .. } => (ViolationKind::Precondition, action.clone()),
                    _ => (ViolationKind::MalformedStep, plan.steps[f.step - 1].name.clone()),
                };
                let detail = match &f.failure {
                    StepFailure::Precondition { literal, .. } => literal.clone(),
                    other => other.to_string(),
                };
                return Verdict::Invalid(Violation {
                    kind,
                    step: Some(f.step),
                    constraint_text: text,
                    detail,
                });
            }
        };

        for (i, s) in trace.states.iter().enumerate() {
            for (text, cond) in &self.state {
                if !cond.holds(s, &Default::default(), &problem.objects) {
                    return Verdict::Invalid(Violation {
                        kind: ViolationKind::StateConstraint,
                        step: Some(i),
                        constraint_text: text.clone(),
                        detail: cond.to_string(),
                    });
                }
            }
        }

        for check in &self.temporal {
            let t = trace_valuations(&trace, &check.bindings);
            if !check.automaton.accepts(&t) {
                return Verdict::Invalid(Violation {
                    kind: ViolationKind::Temporal,
                    step: check.automaton.first_dead_position(&t),
                    constraint_text: check.text.clone(),
                    detail: check.automaton.label(0).to_string(),
                });
            }
        }

        let last = trace.last();
        if !problem.goal.holds(last) {
            let missing = goal_shortfall(&problem.goal, last);
            return Verdict::Invalid(Violation {
                kind: ViolationKind::GoalNotReached,
                step: None,
                constraint_text: problem.goal.to_string(),
                detail: missing.join(" "),
            });
        }
        Verdict::Valid
    }
}

/// The parts of `goal` that fail in `state`: failing conjuncts of a top-level `and`, else the goal.
pub fn goal_shortfall(goal: &GoalNode, state: &WorldState) -> Vec<String> {
    match goal {
        GoalNode::And(children) => children
            .iter()
            .filter(|c| !c.holds(state))
            .map(|c| c.to_string())
            .collect(),
        other => vec![other.to_string()],
    }
}

pub fn verify_plan(problem: &PlanningProblem, plan: &Plan) -> Result<Verdict, VerifyError> {
    Ok(Verifier::new(&problem.constraints)?.verify(problem, plan))
}

/// Counterexample text fed back to the planner: the offending plan prefix,
/// `is invalid.`, then one explanatory sentence.
pub fn reasoning_text(problem: &PlanningProblem, verdict: &Verdict, plan: &Plan) -> String {
    let Some(v) = verdict.violation() else {
        return String::new();
    };
    let upto = v.step.unwrap_or(plan.len()).min(plan.len());
    let mut lines = plan.render_steps(problem, upto);
    lines.push("is invalid.".into());
    lines.push(match v.kind {
        ViolationKind::Precondition => format!(
            "Step {} violates the precondition of the action {}.",
            v.step.unwrap_or(0),
            v.constraint_text
        ),
        ViolationKind::StateConstraint | ViolationKind::Temporal => {
            format!("It violates the constraint: {}", with_period(&v.constraint_text))
        }
        ViolationKind::GoalNotReached => format!("It does not reach the goal: {}.", v.detail),
        ViolationKind::MalformedStep => format!("Step {} is malformed: {}.", v.step.unwrap_or(0), v.detail),
    });
    lines.join("\n")
}

fn with_period(text: &str) -> String {
    let t = text.trim_end();
    if t.ends_with(['.', '!', '?']) {
        t.to_string()
    } else {
        format!("{t}.")
    }
}
