use thiserror::Error;

use super::{GroundAction, Plan, PlanningProblem, DEFAULT_PLAN_CAP};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanParseError {
    #[error("no numbered plan steps found")]
    NoPlanFound,
    #[error("step {step}: unknown action `{token}`")]
    UnknownAction { step: usize, token: String },
    #[error("step {step}: action `{action}` takes {expected} argument(s), got {found}")]
    ArityMismatch {
        step: usize,
        action: String,
        expected: usize,
        found: usize,
    },
    #[error("plan has more than {cap} steps")]
    PlanTooLong { cap: usize },
}

/// Splits `12. foo bar` / `12) foo bar` / `12: foo bar` into the step body.
fn numbered_body(line: &str) -> Option<&str> {
    let line = line.trim().trim_start_matches(['*', '-', ' ']);
    let digits = line.len() - line.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits == 0 {
        return None;
    }
    let rest = &line[digits..];
    let rest = rest.strip_prefix(['.', ')', ':'])?;
    if !rest.is_empty() && !rest.starts_with(char::is_whitespace) {
        return None;
    }
    let body = rest.trim().trim_end_matches(['.', ',', ';']).trim();
    let body = body
        .strip_prefix('(')
        .and_then(|b| b.strip_suffix(')'))
        .unwrap_or(body)
        .trim();
    (!body.is_empty()).then_some(body)
}

/// Extracts the first contiguous numbered step list from planner output.
///
/// Lines after a `START-PLAN` marker are preferred when the marker is present.
/// `X -> Y` (or `X → Y`) desugars to the problem's single binary schema.
pub fn parse_plan_text(text: &str, problem: &PlanningProblem) -> Result<Plan, PlanParseError> {
    parse_plan_text_capped(text, problem, DEFAULT_PLAN_CAP)
}

pub fn parse_plan_text_capped(
    text: &str,
    problem: &PlanningProblem,
    cap: usize,
) -> Result<Plan, PlanParseError> {
    let lines: Vec<&str> = text.lines().collect();
    let start = lines
        .iter()
        .position(|l| l.trim().eq_ignore_ascii_case("START-PLAN"))
        .map_or(0, |i| i + 1);

    let mut bodies = Vec::new();
    for line in &lines[start..] {
        match numbered_body(line) {
            Some(body) => bodies.push(body),
            None if line.trim().is_empty() => continue,
            None if bodies.is_empty() => continue,
            None => break,
        }
    }
    if bodies.is_empty() {
        return Err(PlanParseError::NoPlanFound);
    }
    if bodies.len() > cap {
        return Err(PlanParseError::PlanTooLong { cap });
    }

    let mut steps = Vec::with_capacity(bodies.len());
    for (i, body) in bodies.into_iter().enumerate() {
        let step = i + 1;
        let arrow = body.split_once("->").or_else(|| body.split_once('→'));
        if let Some((from, to)) = arrow {
            let schema = problem.arrow_schema().ok_or_else(|| PlanParseError::UnknownAction {
                step,
                token: "->".to_string(),
            })?;
            steps.push(GroundAction::new(schema.name.clone(), [from.trim(), to.trim()]));
            continue;
        }
        let mut tokens = body.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty());
        let name = tokens.next().unwrap_or_default();
        let args: Vec<&str> = tokens.collect();
        let schema = problem
            .schemas
            .iter()
            .find(|s| s.name == name)
            .or_else(|| problem.schemas.iter().find(|s| s.name.eq_ignore_ascii_case(name)))
            .ok_or_else(|| PlanParseError::UnknownAction {
                step,
                token: name.to_string(),
            })?;
        if schema.arity() != args.len() {
            return Err(PlanParseError::ArityMismatch {
                step,
                action: schema.name.clone(),
                expected: schema.arity(),
                found: args.len(),
            });
        }
        steps.push(GroundAction::new(schema.name.clone(), args));
    }
    Ok(Plan::new(steps))
}
