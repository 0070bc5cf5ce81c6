use std::collections::BTreeMap;

use super::{
    ActionSchema, AtomTemplate, Condition, Constraint, ConstraintSet, Domain, Formal, GoalNode,
    GroundAtom, ObjectsKeyword, PlanningProblem, ProblemError, Term, WorldState,
};
use crate::sexpr::{self, is_identifier, SExpr};

fn syntax(at: &SExpr, expected: &str) -> ProblemError {
    ProblemError::Syntax {
        pos: at.pos(),
        expected: expected.to_string(),
        found: at.describe(),
    }
}

fn missing(after: &SExpr, expected: &str) -> ProblemError {
    ProblemError::Syntax {
        pos: after.pos(),
        expected: expected.to_string(),
        found: "end of list".to_string(),
    }
}

fn list<'a>(e: &'a SExpr, expected: &str) -> Result<&'a [SExpr], ProblemError> {
    e.as_list().ok_or_else(|| syntax(e, expected))
}

fn ident(e: &SExpr, expected: &str) -> Result<String, ProblemError> {
    match e.as_atom() {
        Some(s) if is_identifier(s) => Ok(s.to_string()),
        Some(s) => Err(ProblemError::InvalidIdentifier(s.to_string())),
        None => Err(syntax(e, expected)),
    }
}

/// Checks `(define (KIND NAME) ...)` and returns NAME plus the remaining sections.
fn define_header<'a>(root: &'a SExpr, kind: &str) -> Result<(String, &'a [SExpr]), ProblemError> {
    let items = list(root, "`(define ...)`")?;
    match items.first() {
        Some(e) if e.as_atom() == Some("define") => {}
        Some(e) => return Err(syntax(e, "`define`")),
        None => return Err(missing(root, "`define`")),
    }
    let header = items.get(1).ok_or_else(|| missing(root, &format!("`({kind} NAME)`")))?;
    let h = list(header, &format!("`({kind} NAME)`"))?;
    match h {
        [k, name] if k.as_atom() == Some(kind) => Ok((ident(name, "a name")?, &items[2..])),
        _ => Err(syntax(header, &format!("`({kind} NAME)`"))),
    }
}

#[derive(Default)]
struct Arities(BTreeMap<String, usize>);

impl Arities {
    fn record(&mut self, predicate: &str, arity: usize) -> Result<(), ProblemError> {
        match self.0.get(predicate) {
            Some(&expected) if expected != arity => Err(ProblemError::ArityClash {
                predicate: predicate.to_string(),
                expected,
                found: arity,
            }),
            Some(_) => Ok(()),
            None => {
                self.0.insert(predicate.to_string(), arity);
                Ok(())
            }
        }
    }
}

const CONNECTIVES: [&str; 8] = ["and", "or", "not", "imply", "forall", "exists", "when", "="];

fn ground_atom(e: &SExpr, objects: &[String], arities: &mut Arities) -> Result<GroundAtom, ProblemError> {
    let items = list(e, "an atom `(PRED ARG*)`")?;
    let (head, rest) = items.split_first().ok_or_else(|| syntax(e, "a predicate name"))?;
    let predicate = ident(head, "a predicate name")?;
    if CONNECTIVES.contains(&predicate.as_str()) {
        return Err(syntax(head, "a predicate name"));
    }
    let args = rest
        .iter()
        .map(|a| {
            let name = ident(a, "an object name")?;
            if objects.contains(&name) {
                Ok(name)
            } else {
                Err(ProblemError::UndeclaredObject(name))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    arities.record(&predicate, args.len())?;
    Ok(GroundAtom { predicate, args })
}

fn goal_expr(e: &SExpr, objects: &[String], arities: &mut Arities) -> Result<GoalNode, ProblemError> {
    let items = list(e, "a goal expression")?;
    let children = |rest: &[SExpr], arities: &mut Arities| {
        if rest.is_empty() {
            return Err(missing(e, "at least one goal expression"));
        }
        rest.iter().map(|c| goal_expr(c, objects, arities)).collect::<Result<Vec<_>, _>>()
    };
    match items.first().and_then(SExpr::as_atom) {
        Some("and") => Ok(GoalNode::And(children(&items[1..], arities)?)),
        Some("or") => Ok(GoalNode::Or(children(&items[1..], arities)?)),
        Some("not") => {
            if items.len() != 2 {
                return Err(syntax(e, "`(not GOAL)` with exactly one operand"));
            }
            match goal_expr(&items[1], objects, arities)? {
                GoalNode::Literal(atom, polarity) => Ok(GoalNode::Literal(atom, !polarity)),
                inner => Ok(GoalNode::Not(Box::new(inner))),
            }
        }
        _ => Ok(GoalNode::Literal(ground_atom(e, objects, arities)?, true)),
    }
}

fn constraint_text(e: &SExpr) -> Result<String, ProblemError> {
    let words = list(e, "a parenthesized constraint sentence")?;
    if words.is_empty() {
        return Err(syntax(e, "a non-empty constraint sentence"));
    }
    words
        .iter()
        .map(|w| w.as_atom().map(str::to_string).ok_or_else(|| syntax(w, "a word")))
        .collect::<Result<Vec<_>, _>>()
        .map(|ws| ws.join(" "))
}

/// Parses a problem file. The result carries no schemas until [`PlanningProblem::with_domain`].
pub fn parse_problem(text: &str) -> Result<PlanningProblem, ProblemError> {
    let root = sexpr::parse_one(text)?;
    let (name, sections) = define_header(&root, "problem")?;

    let mut domain_name = None;
    let mut objects: Option<(Vec<String>, ObjectsKeyword)> = None;
    let mut constraint_texts = Vec::new();
    let mut init_section = None;
    let mut goal_section = None;

    for section in sections {
        let items = list(section, "a `(:keyword ...)` section")?;
        let key = items.first().and_then(SExpr::as_atom).ok_or_else(|| syntax(section, "a section keyword"))?;
        let body = &items[1..];
        match key {
            ":domain" => match body {
                [n] => domain_name = Some(ident(n, "a domain name")?),
                _ => return Err(syntax(section, "`(:domain NAME)`")),
            },
            ":objects" | ":cities" => {
                let mut objs = Vec::new();
                let mut skip_type = false;
                for o in body {
                    if skip_type {
                        skip_type = false;
                        continue;
                    }
                    if o.as_atom() == Some("-") {
                        skip_type = true;
                        continue;
                    }
                    let id = ident(o, "an object name")?;
                    if !objs.contains(&id) {
                        objs.push(id);
                    }
                }
                if objs.is_empty() {
                    return Err(missing(section, "at least one object"));
                }
                let kw = if key == ":cities" { ObjectsKeyword::Cities } else { ObjectsKeyword::Objects };
                objects = Some((objs, kw));
            }
            ":constraints" => {
                for c in body {
                    constraint_texts.push(constraint_text(c)?);
                }
            }
            ":init" => init_section = Some(body),
            ":goal" => match body {
                [g] => goal_section = Some(g),
                _ => return Err(syntax(section, "`(:goal GOAL)` with one goal expression")),
            },
            _ => return Err(syntax(&items[0], "one of :domain, :objects, :cities, :constraints, :init, :goal")),
        }
    }

    let (objects, objects_keyword) = objects.ok_or_else(|| missing(&root, "an `(:objects ...)` section"))?;
    let mut arities = Arities::default();
    let init: WorldState = init_section
        .ok_or_else(|| missing(&root, "an `(:init ...)` section"))?
        .iter()
        .map(|a| ground_atom(a, &objects, &mut arities))
        .collect::<Result<_, _>>()?;
    let goal = goal_expr(
        goal_section.ok_or_else(|| missing(&root, "a `(:goal ...)` section"))?,
        &objects,
        &mut arities,
    )?;

    Ok(PlanningProblem {
        name,
        domain_name,
        objects,
        objects_keyword,
        schemas: Vec::new(),
        init,
        goal,
        constraints: ConstraintSet {
            entries: constraint_texts
                .into_iter()
                .map(|text| Constraint {
                    text,
                    formal: Formal::Untranslated,
                })
                .collect(),
        },
        arities: arities.0,
    })
}

fn term(e: &SExpr) -> Result<Term, ProblemError> {
    match e.as_atom() {
        Some(s) if s.starts_with('?') && is_identifier(&s[1..]) => Ok(Term::Var(s[1..].to_string())),
        Some(_) => Ok(Term::Const(ident(e, "a variable or object")?)),
        None => Err(syntax(e, "a variable or object")),
    }
}

fn template(e: &SExpr, arities: &mut Arities) -> Result<AtomTemplate, ProblemError> {
    let items = list(e, "an atom")?;
    let (head, rest) = items.split_first().ok_or_else(|| syntax(e, "a predicate name"))?;
    let predicate = ident(head, "a predicate name")?;
    if CONNECTIVES.contains(&predicate.as_str()) {
        return Err(syntax(head, "a predicate name"));
    }
    let args = rest.iter().map(term).collect::<Result<Vec<_>, _>>()?;
    arities.record(&predicate, args.len())?;
    Ok(AtomTemplate { predicate, args })
}

fn var_list(e: &SExpr) -> Result<Vec<String>, ProblemError> {
    let mut vars = Vec::new();
    let mut skip_type = false;
    for v in list(e, "a variable list")? {
        if skip_type {
            skip_type = false;
            continue;
        }
        match v.as_atom() {
            Some("-") => skip_type = true,
            Some(s) if s.starts_with('?') && is_identifier(&s[1..]) => vars.push(s[1..].to_string()),
            _ => return Err(syntax(v, "a `?variable`")),
        }
    }
    Ok(vars)
}

fn condition(e: &SExpr, arities: &mut Arities) -> Result<Condition, ProblemError> {
    let items = list(e, "a condition")?;
    let rest = items.get(1..).unwrap_or(&[]);
    match items.first().and_then(SExpr::as_atom) {
        Some("and") => Ok(Condition::And(rest.iter().map(|c| condition(c, arities)).collect::<Result<_, _>>()?)),
        Some("or") => Ok(Condition::Or(rest.iter().map(|c| condition(c, arities)).collect::<Result<_, _>>()?)),
        Some("not") => match rest {
            [c] => Ok(Condition::Not(Box::new(condition(c, arities)?))),
            _ => Err(syntax(e, "`(not COND)`")),
        },
        Some("imply") => match rest {
            [a, b] => Ok(Condition::Imply(Box::new(condition(a, arities)?), Box::new(condition(b, arities)?))),
            _ => Err(syntax(e, "`(imply COND COND)`")),
        },
        Some(q @ ("forall" | "exists")) => match rest {
            [vars, body] => {
                let vars = var_list(vars)?;
                let body = Box::new(condition(body, arities)?);
                Ok(if q == "forall" { Condition::Forall(vars, body) } else { Condition::Exists(vars, body) })
            }
            _ => Err(syntax(e, "`(forall (?v*) COND)`")),
        },
        Some("=") => match rest {
            [a, b] => Ok(Condition::Eq(term(a)?, term(b)?)),
            _ => Err(syntax(e, "`(= TERM TERM)`")),
        },
        _ if items.is_empty() => Ok(Condition::truth()),
        _ => Ok(Condition::Atom(template(e, arities)?)),
    }
}

fn effects(
    e: &SExpr,
    arities: &mut Arities,
) -> Result<(Vec<AtomTemplate>, Vec<AtomTemplate>), ProblemError> {
    let items = list(e, "an effect")?;
    let literals: &[SExpr] = match items.first().and_then(SExpr::as_atom) {
        Some("and") => &items[1..],
        None if items.is_empty() => &[],
        _ => std::slice::from_ref(e),
    };
    let mut add = Vec::new();
    let mut del = Vec::new();
    for lit in literals {
        let li = list(lit, "an effect literal")?;
        if li.first().and_then(SExpr::as_atom) == Some("not") {
            match &li[1..] {
                [inner] => del.push(template(inner, arities)?),
                _ => return Err(syntax(lit, "`(not ATOM)`")),
            }
        } else {
            add.push(template(lit, arities)?);
        }
    }
    Ok((add, del))
}

fn action(items: &[SExpr], at: &SExpr, arities: &mut Arities) -> Result<ActionSchema, ProblemError> {
    let name = ident(items.get(1).ok_or_else(|| missing(at, "an action name"))?, "an action name")?;
    let mut params = Vec::new();
    let mut precondition = Condition::truth();
    let mut add_effects = Vec::new();
    let mut del_effects = Vec::new();
    let mut rest = items[2..].iter();
    while let Some(key) = rest.next() {
        let value = rest.next().ok_or_else(|| missing(at, "a value after the keyword"))?;
        match key.as_atom() {
            Some(":parameters") => params = var_list(value)?,
            Some(":precondition") => precondition = condition(value, arities)?,
            Some(":effect") => (add_effects, del_effects) = effects(value, arities)?,
            _ => return Err(syntax(key, "one of :parameters, :precondition, :effect")),
        }
    }
    let unbound = |var: String| ProblemError::UnboundVariable {
        action: name.clone(),
        var,
    };
    precondition.check_vars(&params).map_err(unbound)?;
    for t in add_effects.iter().chain(&del_effects) {
        Condition::Atom(t.clone()).check_vars(&params).map_err(unbound)?;
    }
    if let Some(t) = add_effects.iter().find(|t| del_effects.contains(t)) {
        return Err(ProblemError::ConflictingEffects {
            action: name,
            atom: Condition::Atom(t.clone()).to_string(),
        });
    }
    Ok(ActionSchema {
        name,
        params,
        precondition,
        add_effects,
        del_effects,
    })
}

/// Parses a companion domain file of `(:action ...)` blocks.
pub fn parse_domain(text: &str) -> Result<Domain, ProblemError> {
    let root = sexpr::parse_one(text)?;
    let (name, sections) = define_header(&root, "domain")?;
    let mut arities = Arities::default();
    let mut schemas: Vec<ActionSchema> = Vec::new();
    for section in sections {
        let items = list(section, "a `(:keyword ...)` section")?;
        match items.first().and_then(SExpr::as_atom) {
            Some(":requirements" | ":types" | ":constants") => {}
            Some(":predicates") => {
                for p in &items[1..] {
                    let pi = list(p, "a predicate declaration")?;
                    let (head, rest) = pi.split_first().ok_or_else(|| syntax(p, "a predicate name"))?;
                    let vars = var_list(&SExpr::List(rest.to_vec(), p.pos()))?;
                    arities.record(&ident(head, "a predicate name")?, vars.len())?;
                }
            }
            Some(":action") => {
                let schema = action(items, section, &mut arities)?;
                if schemas.iter().any(|s| s.name == schema.name) {
                    return Err(ProblemError::DuplicateSchema(schema.name));
                }
                schemas.push(schema);
            }
            _ => return Err(syntax(section, "one of :requirements, :types, :predicates, :action")),
        }
    }
    Ok(Domain {
        name,
        arities: arities.0,
        schemas,
    })
}

/// Parses a closed state formula such as `(forall (?x) (not (holding ?x)))`.
pub fn parse_condition(text: &str, problem: &PlanningProblem) -> Result<Condition, ProblemError> {
    let e = sexpr::parse_one(text)?;
    let mut arities = Arities(problem.arities.clone());
    let c = condition(&e, &mut arities)?;
    c.check_closed(&problem.objects)?;
    Ok(c)
}

/// Parses a problem file and attaches the schemas from its domain file.
pub fn load_problem(problem_text: &str, domain_text: &str) -> Result<PlanningProblem, ProblemError> {
    let domain = parse_domain(domain_text)?;
    parse_problem(problem_text)?.with_domain(&domain)
}
