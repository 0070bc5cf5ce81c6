use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::{AtomTemplate, ProblemError, WorldState};

/// Variable assignment: variable name (without `?`) to object.
pub type Bindings = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn resolve<'a>(&'a self, env: &'a Bindings) -> &'a str {
        match self {
            Term::Const(c) => c,
            Term::Var(v) => {
                debug_assert!(env.contains_key(v), "unbound variable ?{v}");
                env.get(v).map(String::as_str).unwrap_or(v)
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

/// First-order formula over a finite object domain. Quantifiers are expanded
/// over the problem's objects at evaluation time.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    Atom(AtomTemplate),
    Eq(Term, Term),
    Not(Box<Condition>),
    And(Vec<Condition>),
    Or(Vec<Condition>),
    Imply(Box<Condition>, Box<Condition>),
    Forall(Vec<String>, Box<Condition>),
    Exists(Vec<String>, Box<Condition>),
}

impl Condition {
    pub fn truth() -> Self {
        Condition::And(Vec::new())
    }

    pub fn holds(&self, state: &WorldState, env: &Bindings, objects: &[String]) -> bool {
        match self {
            Condition::Atom(t) => state.contains(&t.ground(env)),
            Condition::Eq(a, b) => a.resolve(env) == b.resolve(env),
            Condition::Not(c) => !c.holds(state, env, objects),
            Condition::And(cs) => cs.iter().all(|c| c.holds(state, env, objects)),
            Condition::Or(cs) => cs.iter().any(|c| c.holds(state, env, objects)),
            Condition::Imply(a, b) => !a.holds(state, env, objects) || b.holds(state, env, objects),
            Condition::Forall(vars, body) => {
                assignments(vars, objects, env).all(|e| body.holds(state, &e, objects))
            }
            Condition::Exists(vars, body) => {
                assignments(vars, objects, env).any(|e| body.holds(state, &e, objects))
            }
        }
    }

    /// The first top-level conjunct that is false in `state`, printed with variables substituted.
    pub fn first_failure(&self, state: &WorldState, env: &Bindings, objects: &[String]) -> Option<String> {
        match self {
            Condition::And(cs) => cs
                .iter()
                .find(|c| !c.holds(state, env, objects))
                .map(|c| c.render(env)),
            other if !other.holds(state, env, objects) => Some(other.render(env)),
            _ => None,
        }
    }

    /// S-expression text with bound variables replaced by their objects.
    pub fn render(&self, env: &Bindings) -> String {
        let mut out = String::new();
        self.write_to(&mut out, env);
        out
    }

    fn write_to(&self, out: &mut String, env: &Bindings) {
        let term = |t: &Term| match t {
            Term::Var(v) => env.get(v).cloned().unwrap_or_else(|| format!("?{v}")),
            Term::Const(c) => c.clone(),
        };
        match self {
            Condition::Atom(t) => {
                out.push('(');
                out.push_str(&t.predicate);
                for a in &t.args {
                    out.push(' ');
                    out.push_str(&term(a));
                }
                out.push(')');
            }
            Condition::Eq(a, b) => {
                let _ = write!(out, "(= {} {})", term(a), term(b));
            }
            Condition::Not(c) => {
                out.push_str("(not ");
                c.write_to(out, env);
                out.push(')');
            }
            Condition::And(cs) | Condition::Or(cs) => {
                out.push_str(if matches!(self, Condition::And(_)) { "(and" } else { "(or" });
                for c in cs {
                    out.push(' ');
                    c.write_to(out, env);
                }
                out.push(')');
            }
            Condition::Imply(a, b) => {
                out.push_str("(imply ");
                a.write_to(out, env);
                out.push(' ');
                b.write_to(out, env);
                out.push(')');
            }
            Condition::Forall(vars, body) | Condition::Exists(vars, body) => {
                let mut inner = env.clone();
                for v in vars {
                    inner.remove(v);
                }
                out.push_str(if matches!(self, Condition::Forall(..)) { "(forall (" } else { "(exists (" });
                let names: Vec<String> = vars.iter().map(|v| format!("?{v}")).collect();
                out.push_str(&names.join(" "));
                out.push_str(") ");
                body.write_to(out, &inner);
                out.push(')');
            }
        }
    }

    /// Ensures every variable occurrence is bound by `params` or an enclosing quantifier.
    pub(crate) fn check_vars(&self, params: &[String]) -> Result<(), String> {
        let mut scope: Vec<String> = params.to_vec();
        self.check_vars_in(&mut scope)
    }

    fn check_vars_in(&self, scope: &mut Vec<String>) -> Result<(), String> {
        let term_ok = |t: &Term, scope: &Vec<String>| match t {
            Term::Var(v) if !scope.contains(v) => Err(v.clone()),
            _ => Ok(()),
        };
        match self {
            Condition::Atom(t) => t.args.iter().try_for_each(|a| term_ok(a, scope)),
            Condition::Eq(a, b) => term_ok(a, scope).and_then(|_| term_ok(b, scope)),
            Condition::Not(c) => c.check_vars_in(scope),
            Condition::And(cs) | Condition::Or(cs) => cs.iter().try_for_each(|c| c.check_vars_in(scope)),
            Condition::Imply(a, b) => a.check_vars_in(scope).and_then(|_| b.check_vars_in(scope)),
            Condition::Forall(vars, body) | Condition::Exists(vars, body) => {
                let before = scope.len();
                scope.extend(vars.iter().cloned());
                let r = body.check_vars_in(scope);
                scope.truncate(before);
                r
            }
        }
    }

    /// A closed formula: no free variables and every constant is a declared object.
    pub(crate) fn check_closed(&self, objects: &[String]) -> Result<(), ProblemError> {
        self.check_vars(&[]).map_err(|var| ProblemError::UnboundVariable {
            action: "state constraint".into(),
            var,
        })?;
        let mut consts = Vec::new();
        self.constants(&mut consts);
        match consts.into_iter().find(|c| !objects.iter().any(|o| o == c)) {
            Some(bad) => Err(ProblemError::UndeclaredObject(bad)),
            None => Ok(()),
        }
    }

    pub(crate) fn constants(&self, out: &mut Vec<String>) {
        let push = |t: &Term, out: &mut Vec<String>| {
            if let Term::Const(c) = t {
                out.push(c.clone());
            }
        };
        match self {
            Condition::Atom(t) => t.args.iter().for_each(|a| push(a, out)),
            Condition::Eq(a, b) => {
                push(a, out);
                push(b, out);
            }
            Condition::Not(c) => c.constants(out),
            Condition::And(cs) | Condition::Or(cs) => cs.iter().for_each(|c| c.constants(out)),
            Condition::Imply(a, b) => {
                a.constants(out);
                b.constants(out);
            }
            Condition::Forall(_, body) | Condition::Exists(_, body) => body.constants(out),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&Bindings::new()))
    }
}

/// All extensions of `env` assigning each of `vars` an object.
pub(crate) fn assignments<'a>(
    vars: &'a [String],
    objects: &'a [String],
    env: &'a Bindings,
) -> impl Iterator<Item = Bindings> + 'a {
    let total = objects.len().checked_pow(vars.len() as u32).unwrap_or(usize::MAX);
    let total = if objects.is_empty() && !vars.is_empty() { 0 } else { total };
    (0..total).map(move |mut idx| {
        let mut e = env.clone();
        for v in vars {
            e.insert(v.clone(), objects[idx % objects.len()].clone());
            idx /= objects.len().max(1);
        }
        e
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::GroundAtom;

    fn objs() -> Vec<String> {
        vec!["b1".into(), "b2".into(), "b3".into()]
    }

    fn atom(p: &str, args: Vec<Term>) -> Condition {
        Condition::Atom(AtomTemplate {
            predicate: p.into(),
            args,
        })
    }

    #[test]
    fn quantifiers_expand_over_objects() {
        let state: WorldState = [GroundAtom::new("clear", ["b1"]), GroundAtom::new("clear", ["b2"])]
            .into_iter()
            .collect();
        let all_clear = Condition::Forall(vec!["x".into()], Box::new(atom("clear", vec![Term::Var("x".into())])));
        let some_clear = Condition::Exists(vec!["x".into()], Box::new(atom("clear", vec![Term::Var("x".into())])));
        assert!(!all_clear.holds(&state, &Bindings::new(), &objs()));
        assert!(some_clear.holds(&state, &Bindings::new(), &objs()));
        assert!(all_clear.holds(&state, &Bindings::new(), &objs()[..2]));
    }

    #[test]
    fn first_failure_names_grounded_conjunct() {
        let cond = Condition::And(vec![
            atom("holding", vec![Term::Var("x".into())]),
            atom("clear", vec![Term::Var("y".into())]),
        ]);
        let state: WorldState = [GroundAtom::new("holding", ["b5"])].into_iter().collect();
        let env: Bindings = [("x".to_string(), "b5".to_string()), ("y".to_string(), "b3".to_string())]
            .into_iter()
            .collect();
        assert_eq!(cond.first_failure(&state, &env, &objs()).as_deref(), Some("(clear b3)"));
    }

    #[test]
    fn variable_scoping() {
        let body = atom("on", vec![Term::Var("x".into()), Term::Var("y".into())]);
        let c = Condition::Forall(vec!["x".into()], Box::new(body));
        assert_eq!(c.check_vars(&["y".into()]), Ok(()));
        assert_eq!(c.check_vars(&[]), Err("y".to_string()));
    }
}
