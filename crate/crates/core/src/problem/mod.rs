//! Planning-problem data model: ground atoms, world states, action schemas,
//! goal trees, constraint sets and plans.

mod condition;
mod parse;
mod plan_text;
mod print;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltl::LtlFormula;
use crate::sexpr::Pos;

pub use condition::{Bindings, Condition, Term};
pub(crate) use condition::assignments;
pub use parse::{load_problem, parse_condition, parse_domain, parse_problem};
pub use plan_text::{parse_plan_text, parse_plan_text_capped, PlanParseError};

/// Default upper bound on the number of steps in a plan.
pub const DEFAULT_PLAN_CAP: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("syntax error at {pos}: expected {expected}, found {found}")]
    Syntax {
        pos: Pos,
        expected: String,
        found: String,
    },
    #[error("undeclared object `{0}`")]
    UndeclaredObject(String),
    #[error("predicate `{predicate}` used with {found} argument(s) but first used with {expected}")]
    ArityClash {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),
    #[error("duplicate action schema `{0}`")]
    DuplicateSchema(String),
    #[error("action `{action}` uses variable `?{var}` which is not a parameter")]
    UnboundVariable { action: String, var: String },
    #[error("action `{action}` both adds and deletes {atom}")]
    ConflictingEffects { action: String, atom: String },
    #[error("temporal proposition `{0}` has no binding")]
    UnboundProposition(String),
    #[error("problem names domain `{problem}` but the domain file defines `{domain}`")]
    DomainMismatch { problem: String, domain: String },
}

impl From<crate::sexpr::SyntaxError> for ProblemError {
    fn from(e: crate::sexpr::SyntaxError) -> Self {
        ProblemError::Syntax {
            pos: e.pos,
            expected: e.expected,
            found: e.found,
        }
    }
}

/// A predicate applied to concrete objects.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new<P, I, S>(predicate: P, args: I) -> Self
    where
        P: Into<String>,
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        GroundAtom {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// A finite set of ground atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorldState {
    atoms: BTreeSet<GroundAtom>,
}

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.atoms.contains(atom)
    }

    pub fn insert(&mut self, atom: GroundAtom) -> bool {
        self.atoms.insert(atom)
    }

    pub fn remove(&mut self, atom: &GroundAtom) -> bool {
        self.atoms.remove(atom)
    }

    pub fn iter(&self) -> impl Iterator<Item = &GroundAtom> {
        self.atoms.iter()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_subset(&self, other: &WorldState) -> bool {
        self.atoms.is_subset(&other.atoms)
    }

    /// Sorted atom strings joined by single spaces. Equal states serialize identically.
    pub fn canonical(&self) -> String {
        let mut parts: Vec<String> = self.atoms.iter().map(ToString::to_string).collect();
        parts.sort();
        parts.join(" ")
    }
}

impl FromIterator<GroundAtom> for WorldState {
    fn from_iter<T: IntoIterator<Item = GroundAtom>>(iter: T) -> Self {
        WorldState {
            atoms: iter.into_iter().collect(),
        }
    }
}

/// An atom whose arguments may be schema variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AtomTemplate {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl AtomTemplate {
    pub fn ground(&self, env: &Bindings) -> GroundAtom {
        GroundAtom {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(|t| t.resolve(env).to_string()).collect(),
        }
    }
}

/// STRIPS-style action schema with a (possibly disjunctive) precondition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSchema {
    pub name: String,
    /// Parameter names without the leading `?`.
    pub params: Vec<String>,
    pub precondition: Condition,
    pub add_effects: Vec<AtomTemplate>,
    pub del_effects: Vec<AtomTemplate>,
}

impl ActionSchema {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn bind(&self, args: &[String]) -> Bindings {
        self.params
            .iter()
            .cloned()
            .zip(args.iter().cloned())
            .collect()
    }
}

/// A schema instantiated with concrete objects.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroundAction {
    pub name: String,
    pub args: Vec<String>,
}

impl GroundAction {
    pub fn new<I, S>(name: impl Into<String>, args: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        GroundAction {
            name: name.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

/// Boolean goal tree over ground atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GoalNode {
    Literal(GroundAtom, bool),
    And(Vec<GoalNode>),
    Or(Vec<GoalNode>),
    Not(Box<GoalNode>),
}

impl GoalNode {
    pub fn atom(atom: GroundAtom) -> Self {
        GoalNode::Literal(atom, true)
    }

    pub fn holds(&self, state: &WorldState) -> bool {
        goal_holds(state, self)
    }

    /// True for literals and `not` of a literal: goals that are never decomposed.
    pub fn is_atomic(&self) -> bool {
        match self {
            GoalNode::Literal(..) => true,
            GoalNode::Not(inner) => matches!(**inner, GoalNode::Literal(..)),
            _ => false,
        }
    }

    /// Every atom mentioned anywhere in the tree.
    pub fn atoms(&self) -> Vec<&GroundAtom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a GroundAtom>) {
        match self {
            GoalNode::Literal(a, _) => out.push(a),
            GoalNode::And(cs) | GoalNode::Or(cs) => cs.iter().for_each(|c| c.collect_atoms(out)),
            GoalNode::Not(c) => c.collect_atoms(out),
        }
    }
}

/// Standard boolean evaluation of a goal tree against a state.
pub fn goal_holds(state: &WorldState, goal: &GoalNode) -> bool {
    match goal {
        GoalNode::Literal(atom, polarity) => state.contains(atom) == *polarity,
        GoalNode::And(cs) => cs.iter().all(|c| goal_holds(state, c)),
        GoalNode::Or(cs) => cs.iter().any(|c| goal_holds(state, c)),
        GoalNode::Not(c) => !goal_holds(state, c),
    }
}

/// AND-decomposition: the children of a conjunctive root, otherwise the goal itself.
pub fn get_subgoals(goal: &GoalNode) -> Vec<GoalNode> {
    match goal {
        GoalNode::And(children) => children.clone(),
        other => vec![other.clone()],
    }
}

/// Formal counterpart attached to a natural-language constraint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Formal {
    Untranslated,
    /// Ground formula checked in every visited state.
    State(Condition),
    /// LTLf formula over propositions bound to ground atoms.
    Temporal {
        formula: LtlFormula,
        bindings: BTreeMap<String, GroundAtom>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub text: String,
    pub formal: Formal,
}

/// Constraints in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub entries: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|c| c.text.as_str())
    }

    pub fn state_constraints(&self) -> impl Iterator<Item = (&str, &Condition)> {
        self.entries.iter().filter_map(|c| match &c.formal {
            Formal::State(cond) => Some((c.text.as_str(), cond)),
            _ => None,
        })
    }

    pub fn temporal_constraints(
        &self,
    ) -> impl Iterator<Item = (&str, &LtlFormula, &BTreeMap<String, GroundAtom>)> {
        self.entries.iter().filter_map(|c| match &c.formal {
            Formal::Temporal { formula, bindings } => Some((c.text.as_str(), formula, bindings)),
            _ => None,
        })
    }

    pub fn untranslated(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().filter_map(|c| match c.formal {
            Formal::Untranslated => Some(c.text.as_str()),
            _ => None,
        })
    }
}

/// Which keyword introduced the object list; kept so printing mirrors the source.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectsKeyword {
    #[default]
    Objects,
    Cities,
}

/// Action schemas and predicate arities from a companion domain file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub name: String,
    pub arities: BTreeMap<String, usize>,
    pub schemas: Vec<ActionSchema>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanningProblem {
    pub name: String,
    pub domain_name: Option<String>,
    pub objects: Vec<String>,
    pub objects_keyword: ObjectsKeyword,
    pub schemas: Vec<ActionSchema>,
    pub init: WorldState,
    pub goal: GoalNode,
    pub constraints: ConstraintSet,
    /// Predicate arities fixed by first use.
    pub arities: BTreeMap<String, usize>,
}

impl PlanningProblem {
    pub fn schema(&self, name: &str) -> Option<&ActionSchema> {
        self.schemas.iter().find(|s| s.name == name)
    }

    pub fn has_object(&self, name: &str) -> bool {
        self.objects.iter().any(|o| o == name)
    }

    /// The unique binary schema targeted by `X -> Y` plan lines, if there is exactly one.
    pub fn arrow_schema(&self) -> Option<&ActionSchema> {
        let mut binary = self.schemas.iter().filter(|s| s.arity() == 2);
        match (binary.next(), binary.next()) {
            (Some(s), None) => Some(s),
            _ => None,
        }
    }

    /// Attaches the schemas of `domain`, checking predicate arities and the domain name.
    pub fn with_domain(mut self, domain: &Domain) -> Result<Self, ProblemError> {
        if let Some(name) = &self.domain_name {
            if name != &domain.name {
                return Err(ProblemError::DomainMismatch {
                    problem: name.clone(),
                    domain: domain.name.clone(),
                });
            }
        }
        for (pred, &arity) in &domain.arities {
            match self.arities.get(pred) {
                Some(&expected) if expected != arity => {
                    return Err(ProblemError::ArityClash {
                        predicate: pred.clone(),
                        expected,
                        found: arity,
                    })
                }
                Some(_) => {}
                None => {
                    self.arities.insert(pred.clone(), arity);
                }
            }
        }
        self.schemas = domain.schemas.clone();
        Ok(self)
    }

    /// Same problem with a different initial state and goal, named `name`.
    pub fn subproblem(&self, name: impl Into<String>, init: WorldState, goal: GoalNode) -> Self {
        PlanningProblem {
            name: name.into(),
            init,
            goal,
            ..self.clone()
        }
    }

    /// Checks that `atom` uses declared objects and a consistent arity.
    pub fn check_atom(&self, atom: &GroundAtom) -> Result<(), ProblemError> {
        if let Some(bad) = atom.args.iter().find(|a| !self.has_object(a)) {
            return Err(ProblemError::UndeclaredObject(bad.clone()));
        }
        if let Some(&expected) = self.arities.get(&atom.predicate) {
            if expected != atom.args.len() {
                return Err(ProblemError::ArityClash {
                    predicate: atom.predicate.clone(),
                    expected,
                    found: atom.args.len(),
                });
            }
        }
        Ok(())
    }

    /// Attaches a temporal formula to constraint `index`, requiring a binding for every proposition.
    pub fn attach_temporal(
        &mut self,
        index: usize,
        formula: LtlFormula,
        bindings: BTreeMap<String, GroundAtom>,
    ) -> Result<(), ProblemError> {
        for prop in formula.props() {
            if !bindings.contains_key(&prop) {
                return Err(ProblemError::UnboundProposition(prop));
            }
        }
        for atom in bindings.values() {
            self.check_atom(atom)?;
        }
        self.constraints.entries[index].formal = Formal::Temporal { formula, bindings };
        Ok(())
    }

    /// Attaches a ground state formula to constraint `index`.
    pub fn attach_state(&mut self, index: usize, condition: Condition) -> Result<(), ProblemError> {
        condition.check_closed(&self.objects)?;
        self.constraints.entries[index].formal = Formal::State(condition);
        Ok(())
    }
}

/// An ordered sequence of ground actions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<GroundAction>,
}

impl Plan {
    pub fn new(steps: Vec<GroundAction>) -> Self {
        Plan { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn concat(&self, other: &Plan) -> Plan {
        let mut steps = self.steps.clone();
        steps.extend(other.steps.iter().cloned());
        Plan { steps }
    }

    /// Numbered step lines (`1. pick-up b5`); the problem's arrow schema renders as `A -> B`.
    pub fn render_steps(&self, problem: &PlanningProblem, upto: usize) -> Vec<String> {
        let arrow = problem.arrow_schema().map(|s| s.name.as_str());
        self.steps
            .iter()
            .take(upto)
            .enumerate()
            .map(|(i, step)| {
                if Some(step.name.as_str()) == arrow && step.args.len() == 2 {
                    format!("{}. {} -> {}", i + 1, step.args[0], step.args[1])
                } else {
                    format!("{}. {}", i + 1, step)
                }
            })
            .collect()
    }

    /// `START-PLAN` followed by the numbered steps.
    pub fn render(&self, problem: &PlanningProblem) -> String {
        let mut out = String::from("START-PLAN");
        for line in self.render_steps(problem, self.len()) {
            out.push('\n');
            out.push_str(&line);
        }
        out
    }
}
