//! Prompt construction, constraint translation with approval, and the
//! generate/verify/refine loop.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, DecodingOptions, GenerationResult, PlannerBackend};
use crate::domains::{PromptContext, TASK_TEMPLATE, TRANSLATION_TEMPLATE};
use crate::ltl::parse_ltl;
use crate::problem::{parse_condition, parse_plan_text, Formal, GroundAtom, Plan, PlanningProblem};
use crate::sexpr::{is_identifier, parse_one, SExpr};
use crate::validate::{reasoning_text, Verdict, Verifier, VerifyError};

pub const DEFAULT_ITERATION_LIMIT: usize = 20;
pub const DEFAULT_TRANSLATION_RETRIES: usize = 3;
/// Correction sent in place of reasoning when feedback is withheld.
pub const BARE_INVALID: &str = "the generated plan is invalid";
const NO_PLAN_FOUND: &str =
    "No plan was found in the reply. Reply in the required format: the line START-PLAN followed by numbered steps.";

/// Replaces every `{{key}}` in `template`.
pub fn render_template(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in values {
        out = out.replace(&format!("{{{{{k}}}}}"), v);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("no constraints to translate")]
    EmptyConstraints,
    #[error("translation not accepted after {attempts} attempts: {last_problem}")]
    TranslationRetryExhausted { attempts: usize, last_problem: String },
    #[error("proposition `{0}` has no binding")]
    UnboundProposition(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Prompt asking for one delimited formula per sentence.
pub fn build_translation_prompt(background: &str, constraints: &[&str]) -> Result<String, TranslateError> {
    if constraints.is_empty() {
        return Err(TranslateError::EmptyConstraints);
    }
    let list: Vec<String> = constraints.iter().enumerate().map(|(i, c)| format!("{}. {c}", i + 1)).collect();
    let count = constraints.len().to_string();
    Ok(render_template(
        TRANSLATION_TEMPLATE,
        &[("background", background), ("count", &count), ("constraints", &list.join("\n"))],
    )
    .trim_end()
    .to_string())
}

/// One translated requirement as it appears in a reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormalText {
    Temporal { formula: String, bindings: BTreeMap<String, GroundAtom> },
    State(String),
}

impl FormalText {
    pub fn formula_text(&self) -> String {
        match self {
            FormalText::Temporal { formula, .. } => formula.clone(),
            FormalText::State(s) => format!("state: {s}"),
        }
    }
}

/// Extracts the `BEGIN-FORMULA`/`BEGIN-BINDINGS` blocks of a reply.
pub fn parse_translation_reply(reply: &str) -> Result<Vec<FormalText>, String> {
    let mut out = Vec::new();
    let mut lines = reply.lines().map(str::trim);
    while let Some(line) = lines.next() {
        if line != "BEGIN-FORMULA" {
            continue;
        }
        let body: Vec<&str> = lines.by_ref().take_while(|l| *l != "END-FORMULA").filter(|l| !l.is_empty()).collect();
        let formula = body.join(" ");
        if formula.is_empty() {
            return Err(format!("formula {} is empty", out.len() + 1));
        }
        if let Some(state) = formula.strip_prefix("state:") {
            out.push(FormalText::State(state.trim().to_string()));
            continue;
        }
        let mut bindings = BTreeMap::new();
        let rest: Vec<&str> = lines.clone().take_while(|l| l.is_empty()).collect();
        let mut peek = lines.clone().skip(rest.len());
        if peek.next() == Some("BEGIN-BINDINGS") {
            lines.by_ref().nth(rest.len());
            for b in lines.by_ref().take_while(|l| *l != "END-BINDINGS").filter(|l| !l.is_empty()) {
                let (prop, atom) = parse_binding(b)?;
                if bindings.insert(prop.clone(), atom).is_some() {
                    return Err(format!("proposition `{prop}` bound twice"));
                }
            }
        }
        out.push(FormalText::Temporal { formula, bindings });
    }
    Ok(out)
}

/// `c = (reached C)` or `c = reached(C)`.
fn parse_binding(line: &str) -> Result<(String, GroundAtom), String> {
    let (prop, atom) = line
        .split_once('=')
        .or_else(|| line.split_once(':'))
        .ok_or_else(|| format!("binding `{line}` lacks `=`"))?;
    let prop = prop.trim();
    if !is_identifier(prop) {
        return Err(format!("`{prop}` is not a proposition name"));
    }
    let atom = atom.trim();
    let sexpr = if atom.starts_with('(') {
        atom.to_string()
    } else {
        let (pred, args) = atom.split_once('(').ok_or_else(|| format!("cannot read atom `{atom}`"))?;
        format!("({} {})", pred.trim(), args.trim_end_matches(')').replace(',', " "))
    };
    let parsed = parse_one(&sexpr).map_err(|e| format!("{}: expected {}, found {}", e.pos, e.expected, e.found))?;
    let words: Option<Vec<&str>> = parsed.as_list().map(|items| items.iter().filter_map(SExpr::as_atom).collect());
    match words {
        Some(w) if !w.is_empty() && w.len() == parsed.as_list().unwrap().len() => {
            Ok((prop.to_string(), GroundAtom::new(w[0], w[1..].iter().copied())))
        }
        _ => Err(format!("cannot read atom `{atom}`")),
    }
}

/// Decides whether a proposed formula is accepted.
pub trait Approver {
    fn approve(&mut self, constraint: &str, formula: &str) -> bool;
}

pub struct AutoApprove;

impl Approver for AutoApprove {
    fn approve(&mut self, _: &str, _: &str) -> bool {
        true
    }
}

pub struct RejectAll;

impl Approver for RejectAll {
    fn approve(&mut self, _: &str, _: &str) -> bool {
        false
    }
}

/// Shows each formula on `output` and reads a y/n answer from `input`.
pub struct IoApprover<R, W> {
    pub input: R,
    pub output: W,
}

impl<R: BufRead, W: Write> Approver for IoApprover<R, W> {
    fn approve(&mut self, constraint: &str, formula: &str) -> bool {
        let _ = write!(self.output, "Constraint: {constraint}\nFormula:    {formula}\nAccept? [y/N] ");
        let _ = self.output.flush();
        let mut answer = String::new();
        if self.input.read_line(&mut answer).is_err() {
            return false;
        }
        matches!(answer.trim().to_ascii_lowercase().as_str(), "y" | "yes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApprovalMode {
    Interactive,
    Auto,
    RejectAll,
}

/// Translates every untranslated constraint; `Interactive` prompts on stdin/stderr.
pub fn translate_constraints(
    problem: &PlanningProblem,
    backend: &dyn PlannerBackend,
    ctx: &PromptContext,
    mode: ApprovalMode,
) -> Result<PlanningProblem, TranslateError> {
    match mode {
        ApprovalMode::Auto => translate_constraints_with(problem, backend, ctx, &mut AutoApprove, DEFAULT_TRANSLATION_RETRIES),
        ApprovalMode::RejectAll => translate_constraints_with(problem, backend, ctx, &mut RejectAll, DEFAULT_TRANSLATION_RETRIES),
        ApprovalMode::Interactive => {
            let mut approver = IoApprover { input: std::io::stdin().lock(), output: std::io::stderr() };
            translate_constraints_with(problem, backend, ctx, &mut approver, DEFAULT_TRANSLATION_RETRIES)
        }
    }
}

enum Rejection {
    Invalid(String),
    Unbound(String),
}

pub fn translate_constraints_with(
    problem: &PlanningProblem,
    backend: &dyn PlannerBackend,
    ctx: &PromptContext,
    approver: &mut dyn Approver,
    retry_limit: usize,
) -> Result<PlanningProblem, TranslateError> {
    let pending: Vec<usize> = problem
        .constraints
        .entries
        .iter()
        .enumerate()
        .filter(|(_, c)| c.formal == Formal::Untranslated)
        .map(|(i, _)| i)
        .collect();
    if pending.is_empty() {
        return Ok(problem.clone());
    }
    let texts: Vec<&str> = pending.iter().map(|&i| problem.constraints.entries[i].text.as_str()).collect();
    let base = build_translation_prompt(&ctx.background, &texts)?;

    let mut last = Rejection::Invalid("no attempt made".into());
    for attempt in 1..=retry_limit.max(1) {
        let prompt = match (&last, attempt) {
            (_, 1) => base.clone(),
            (Rejection::Invalid(why) | Rejection::Unbound(why), _) => {
                format!("{base}\n\n# Correction\nThe previous translation was not accepted: {why}")
            }
        };
        let reply = backend.generate(&prompt, &DecodingOptions::default())?;
        match attach_all(problem, &pending, &reply.text, approver) {
            Ok(p) => {
                info!("constraints translated on attempt {attempt}");
                return Ok(p);
            }
            Err(r) => {
                let why = match &r {
                    Rejection::Invalid(w) | Rejection::Unbound(w) => w.clone(),
                };
                warn!("translation attempt {attempt} rejected: {why}");
                last = r;
            }
        }
    }
    match last {
        Rejection::Unbound(prop) => Err(TranslateError::UnboundProposition(prop)),
        Rejection::Invalid(why) => Err(TranslateError::TranslationRetryExhausted {
            attempts: retry_limit.max(1),
            last_problem: why,
        }),
    }
}

fn attach_all(
    problem: &PlanningProblem,
    pending: &[usize],
    reply: &str,
    approver: &mut dyn Approver,
) -> Result<PlanningProblem, Rejection> {
    let formals = parse_translation_reply(reply).map_err(Rejection::Invalid)?;
    if formals.len() != pending.len() {
        return Err(Rejection::Invalid(format!("expected {} formulas, got {}", pending.len(), formals.len())));
    }
    let mut out = problem.clone();
    for (&index, formal) in pending.iter().zip(formals) {
        attach_one(&mut out, index, &formal)?;
        let text = out.constraints.entries[index].text.clone();
        if !approver.approve(&text, &formal.formula_text()) {
            return Err(Rejection::Invalid(format!("formula for `{text}` was rejected by the reviewer")));
        }
    }
    Ok(out)
}

fn attach_one(problem: &mut PlanningProblem, index: usize, formal: &FormalText) -> Result<(), Rejection> {
    match formal {
        FormalText::State(text) => {
            let cond = parse_condition(text, problem).map_err(|e| Rejection::Invalid(e.to_string()))?;
            problem.attach_state(index, cond).map_err(|e| Rejection::Invalid(e.to_string()))
        }
        FormalText::Temporal { formula, bindings } => {
            let f = parse_ltl(formula).map_err(|e| Rejection::Invalid(e.to_string()))?;
            if let Some(p) = f.props().into_iter().find(|p| !bindings.contains_key(p)) {
                return Err(Rejection::Unbound(p));
            }
            let used: BTreeMap<String, GroundAtom> =
                bindings.iter().filter(|(k, _)| f.props().contains(*k)).map(|(k, v)| (k.clone(), v.clone())).collect();
            problem.attach_temporal(index, f, used).map_err(|e| Rejection::Invalid(e.to_string()))
        }
    }
}

/// Translation file text for every constraint of `problem`, in order.
pub fn render_translation(problem: &PlanningProblem) -> String {
    let mut out = String::new();
    for c in &problem.constraints.entries {
        out.push_str(&format!("# {}\nBEGIN-FORMULA\n", c.text));
        match &c.formal {
            Formal::Untranslated => out.push_str("true\n"),
            Formal::State(cond) => out.push_str(&format!("state: {cond}\n")),
            Formal::Temporal { formula, .. } => out.push_str(&format!("{formula}\n")),
        }
        out.push_str("END-FORMULA\n");
        if let Formal::Temporal { bindings, .. } = &c.formal {
            out.push_str("BEGIN-BINDINGS\n");
            for (p, a) in bindings {
                out.push_str(&format!("{p} = {a}\n"));
            }
            out.push_str("END-BINDINGS\n");
        }
    }
    out
}

/// Attaches the formulas of a translation file (one block per constraint, in order).
pub fn apply_translation(problem: &PlanningProblem, text: &str) -> Result<PlanningProblem, String> {
    let all: Vec<usize> = (0..problem.constraints.entries.len()).collect();
    attach_all(problem, &all, text, &mut AutoApprove).map_err(|r| match r {
        Rejection::Invalid(w) => w,
        Rejection::Unbound(p) => format!("proposition `{p}` has no binding"),
    })
}

/// Task prompt: background, permitted actions, worked example, optional
/// sub-task examples, the target problem, then the format instruction.
pub fn build_task_prompt(problem: &PlanningProblem, ctx: &PromptContext, in_context: &[(String, String)]) -> String {
    let (example_problem, example_solution) = match &ctx.example {
        Some(ex) => (ex.problem.as_str(), ex.solution.as_str()),
        None => ("(none)", "(none)"),
    };
    let mut sub = String::new();
    if !in_context.is_empty() {
        sub.push_str("\n# Solved sub-tasks\n");
        for (i, (p, s)) in in_context.iter().enumerate() {
            sub.push_str(&format!("Sub-task {}:\n{p}\nSolution:\n{s}\n\n", i + 1));
        }
    }
    let target = problem.to_string();
    render_template(
        TASK_TEMPLATE,
        &[
            ("background", &ctx.background),
            ("actions", &ctx.actions),
            ("example_problem", example_problem),
            ("example_solution", example_solution),
            ("subtask_examples", &sub),
            ("problem", &target),
            ("name", &problem.name),
        ],
    )
    .trim_end()
    .to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Feedback {
    /// Counterexample reasoning text.
    #[default]
    Reasoning,
    /// Only the fixed "invalid" sentence.
    BareInvalid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub iteration_limit: usize,
    pub feedback: Feedback,
    pub decoding: DecodingOptions,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig { iteration_limit: DEFAULT_ITERATION_LIMIT, feedback: Feedback::Reasoning, decoding: DecodingOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AttemptOutcome {
    Checked(Verdict),
    Unparseable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub prompt: String,
    pub reply: String,
    pub outcome: AttemptOutcome,
}

impl Attempt {
    pub fn is_valid(&self) -> bool {
        matches!(&self.outcome, AttemptOutcome::Checked(v) if v.is_valid())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LoopOutcome {
    Success { plan: Plan, iterations: usize, history: Vec<Attempt> },
    Failure { iterations: usize, history: Vec<Attempt> },
}

impl LoopOutcome {
    pub fn iterations(&self) -> usize {
        match self {
            LoopOutcome::Success { iterations, .. } | LoopOutcome::Failure { iterations, .. } => *iterations,
        }
    }

    pub fn history(&self) -> &[Attempt] {
        match self {
            LoopOutcome::Success { history, .. } | LoopOutcome::Failure { history, .. } => history,
        }
    }

    pub fn plan(&self) -> Option<&Plan> {
        match self {
            LoopOutcome::Success { plan, .. } => Some(plan),
            LoopOutcome::Failure { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlannerError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("{0}")]
    Invalid(String),
}

/// Generate, verify and refine until a plan is valid or the limit is reached.
pub fn plan_with_verification(
    problem: &PlanningProblem,
    backend: &dyn PlannerBackend,
    ctx: &PromptContext,
    cfg: &LoopConfig,
) -> Result<LoopOutcome, PlannerError> {
    let verifier = Verifier::new(&problem.constraints)?;
    verifier.check_initial(problem)?;
    let prompt = build_task_prompt(problem, ctx, &[]);
    Ok(refine(problem, backend, &verifier, &prompt, cfg, None)?)
}

/// The loop proper. `first` is used as the reply to iteration 1 when given.
pub fn refine(
    problem: &PlanningProblem,
    backend: &dyn PlannerBackend,
    verifier: &Verifier,
    prompt: &str,
    cfg: &LoopConfig,
    mut first: Option<GenerationResult>,
) -> Result<LoopOutcome, BackendError> {
    let mut history = Vec::new();
    let mut correction: Option<String> = None;
    for iteration in 1..=cfg.iteration_limit {
        let sent = match &correction {
            None => prompt.to_string(),
            Some(c) => format!("{prompt}\n\n# Correction\n{c}\nGive a corrected solution in the same format."),
        };
        let reply = match first.take() {
            Some(r) => r,
            None => backend.generate(&sent, &cfg.decoding)?,
        };
        match parse_plan_text(&reply.text, problem) {
            Err(e) => {
                info!("{}: iteration {iteration}: unparseable reply ({e})", problem.name);
                history.push(Attempt { prompt: sent, reply: reply.text, outcome: AttemptOutcome::Unparseable(e.to_string()) });
                correction = Some(match cfg.feedback {
                    Feedback::Reasoning => NO_PLAN_FOUND.to_string(),
                    Feedback::BareInvalid => BARE_INVALID.to_string(),
                });
            }
            Ok(plan) => {
                let verdict = verifier.verify(problem, &plan);
                info!("{}: iteration {iteration}: {:?}", problem.name, verdict.kind());
                let valid = verdict.is_valid();
                correction = Some(match cfg.feedback {
                    Feedback::Reasoning => reasoning_text(problem, &verdict, &plan),
                    Feedback::BareInvalid => BARE_INVALID.to_string(),
                });
                history.push(Attempt { prompt: sent, reply: reply.text, outcome: AttemptOutcome::Checked(verdict) });
                if valid {
                    return Ok(LoopOutcome::Success { plan, iterations: iteration, history });
                }
            }
        }
    }
    Ok(LoopOutcome::Failure { iterations: cfg.iteration_limit, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::ScriptedBackend;
    use crate::domains::DomainKind;
    use crate::problem::load_problem;
    use crate::validate::ViolationKind;

    const DRIVER: &str = "(define (problem trip) (:cities A B C)
        (:constraints (Go to C before B))
        (:init (at A) (reached A) (road A B) (road A C))
        (:goal (and (reached B))))";

    fn trip() -> PlanningProblem {
        load_problem(DRIVER, DomainKind::Navigation.domain_text()).unwrap()
    }

    const REPLY: &str = "Here you go.\nBEGIN-FORMULA\n!b U c\nEND-FORMULA\nBEGIN-BINDINGS\nb = (reached B)\nc = reached(C)\nEND-BINDINGS\n";

    #[test]
    fn translation_prompt_lists_sentences() {
        let p = build_translation_prompt("bg", &["first", "second"]).unwrap();
        assert!(p.contains("1. first\n2. second"));
        assert!(p.contains("exactly 2 blocks"));
        assert!(p.contains("BEGIN-FORMULA") && p.contains("END-BINDINGS"));
        assert_eq!(build_translation_prompt("bg", &[]), Err(TranslateError::EmptyConstraints));
    }

    #[test]
    fn reply_blocks_are_extracted() {
        let f = parse_translation_reply(REPLY).unwrap();
        assert_eq!(f.len(), 1);
        let FormalText::Temporal { formula, bindings } = &f[0] else { panic!() };
        assert_eq!(formula, "!b U c");
        assert_eq!(bindings["c"], GroundAtom::new("reached", ["C"]));
        let s = parse_translation_reply("BEGIN-FORMULA\nstate: (not (at C))\nEND-FORMULA").unwrap();
        assert_eq!(s, vec![FormalText::State("(not (at C))".into())]);
    }

    #[test]
    fn auto_mode_attaches_formula() {
        let b = ScriptedBackend::from_texts([REPLY]);
        let p = translate_constraints(&trip(), &b, &DomainKind::Navigation.prompt_context(), ApprovalMode::Auto).unwrap();
        assert_eq!(p.constraints.temporal_constraints().count(), 1);
        assert_eq!(b.calls(), 1);
    }

    #[test]
    fn retry_after_unparseable_formula() {
        let bad = REPLY.replace("!b U c", "!b U");
        let b = ScriptedBackend::from_texts([bad.as_str(), REPLY]);
        let p = translate_constraints(&trip(), &b, &DomainKind::Navigation.prompt_context(), ApprovalMode::Auto).unwrap();
        assert_eq!(b.calls(), 2);
        assert!(b.prompts()[1].contains("# Correction"));
        assert!(p.constraints.untranslated().next().is_none());
    }

    #[test]
    fn reject_all_exhausts_retries() {
        let b = ScriptedBackend::from_texts([REPLY]);
        let err = translate_constraints(&trip(), &b, &DomainKind::Navigation.prompt_context(), ApprovalMode::RejectAll).unwrap_err();
        assert!(matches!(err, TranslateError::TranslationRetryExhausted { attempts: 3, .. }));
        assert_eq!(b.calls(), 3);
    }

    #[test]
    fn missing_binding_is_unbound_proposition() {
        let b = ScriptedBackend::from_texts([REPLY.replace("c = reached(C)\n", "")]);
        let err = translate_constraints(&trip(), &b, &DomainKind::Navigation.prompt_context(), ApprovalMode::Auto).unwrap_err();
        assert_eq!(err, TranslateError::UnboundProposition("c".into()));
    }

    #[test]
    fn interactive_approver_reads_answers() {
        let mut out = Vec::new();
        let mut a = IoApprover { input: "n\ny\n".as_bytes(), output: &mut out };
        assert!(!a.approve("c", "f"));
        assert!(a.approve("c", "f"));
        assert!(String::from_utf8(out).unwrap().contains("Formula:    f"));
    }

    #[test]
    fn translation_file_round_trips() {
        let b = ScriptedBackend::from_texts([REPLY]);
        let p = translate_constraints(&trip(), &b, &DomainKind::Navigation.prompt_context(), ApprovalMode::Auto).unwrap();
        let text = render_translation(&p);
        assert_eq!(apply_translation(&trip(), &text).unwrap(), p);
    }

    #[test]
    fn task_prompt_section_order() {
        let ctx = DomainKind::Navigation.prompt_context();
        let examples = vec![("(define (problem sub-1))".to_string(), "START-PLAN\n1. A -> C".to_string())];
        let text = build_task_prompt(&trip(), &ctx, &examples);
        let at = |s: &str| text.find(s).unwrap_or_else(|| panic!("missing {s}"));
        assert!(at("# Background") < at("# Permitted actions"));
        assert!(at("# Permitted actions") < at("# Example problem"));
        assert!(at("# Example solution") < at("# Solved sub-tasks"));
        assert!(at("# Solved sub-tasks") < at("(define (problem trip)"));
        assert!(text.ends_with("numbering every step."));
        assert_eq!(text, build_task_prompt(&trip(), &ctx, &examples));
    }

    #[test]
    fn loop_refines_with_reasoning_and_gives_up_at_limit() {
        let b = ScriptedBackend::from_texts([REPLY]);
        let p = translate_constraints(&trip(), &b, &DomainKind::Navigation.prompt_context(), ApprovalMode::Auto).unwrap();
        let ctx = DomainKind::Navigation.prompt_context();
        let backend = ScriptedBackend::from_texts(["1. A -> B", "START-PLAN\n1. A -> C\n2. C -> A\n3. A -> B"]);
        let out = plan_with_verification(&p, &backend, &ctx, &LoopConfig::default()).unwrap();
        assert_eq!(out.iterations(), 2);
        let AttemptOutcome::Checked(first) = &out.history()[0].outcome else { panic!() };
        assert_eq!(first.kind(), Some(ViolationKind::Temporal));
        assert!(backend.prompts()[1].ends_with("1. A -> B\nis invalid.\nIt violates the constraint: Go to C before B.\nGive a corrected solution in the same format."));

        let stuck = ScriptedBackend::from_texts(["I cannot solve this."]);
        let cfg = LoopConfig { iteration_limit: 4, ..LoopConfig::default() };
        let out = plan_with_verification(&p, &stuck, &ctx, &cfg).unwrap();
        assert!(matches!(out, LoopOutcome::Failure { iterations: 4, .. }));
        assert!(stuck.prompts()[1].contains("No plan was found"));
    }
}
