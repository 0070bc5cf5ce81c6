//! Benchmark runner: generated or file-based instances, one planning mode,
//! independent re-verification and a JSON report.

mod generate;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{gen_blocksworld, gen_navigation, GenError, CERTIFY_LIMIT};

use crate::backend::{
    BackendError, DecodingOptions, GenerationResult, LlmBackend, OracleBackend, OracleConfig, PlannerBackend,
    ScriptedBackend,
};
use crate::domains::{DomainKind, PromptContext};
use crate::hierarchy::{plan_adaptive, HierConfig, DEFAULT_CONFIDENCE_THRESHOLD, DEFAULT_FAILURE_LIMIT};
use crate::problem::{load_problem, Plan, PlanningProblem};
use crate::task_planner::{plan_with_verification, Feedback, LoopConfig, DEFAULT_ITERATION_LIMIT};
use crate::validate::verify_plan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Confidence gate, decomposition with rollback, composition.
    Hierarchical,
    /// Verification loop with reasoning feedback.
    TaskPlanner,
    /// Verification loop whose correction only says the plan is invalid.
    NoReason,
    /// A single generation, verified once.
    OneShot,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Hierarchical, Mode::TaskPlanner, Mode::NoReason, Mode::OneShot];

    fn as_str(self) -> &'static str {
        match self {
            Mode::Hierarchical => "hierarchical",
            Mode::TaskPlanner => "task-planner",
            Mode::NoReason => "no-reason",
            Mode::OneShot => "one-shot",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Mode::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

/// `llm`, `oracle` or `scripted:PATH`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BackendSpec {
    Llm,
    Oracle,
    Scripted(PathBuf),
}

impl FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "llm" => Ok(BackendSpec::Llm),
            "oracle" => Ok(BackendSpec::Oracle),
            _ => match s.strip_prefix("scripted:") {
                Some(path) if !path.is_empty() => Ok(BackendSpec::Scripted(PathBuf::from(path))),
                _ => Err(format!("unknown backend `{s}` (expected llm, oracle or scripted:PATH)")),
            },
        }
    }
}

impl TryFrom<String> for BackendSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<BackendSpec> for String {
    fn from(b: BackendSpec) -> String {
        b.to_string()
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Llm => f.write_str("llm"),
            BackendSpec::Oracle => f.write_str("oracle"),
            BackendSpec::Scripted(p) => write!(f, "scripted:{}", p.display()),
        }
    }
}

fn default_iteration_limit() -> usize {
    DEFAULT_ITERATION_LIMIT
}

fn default_failure_limit() -> usize {
    DEFAULT_FAILURE_LIMIT
}

fn default_threshold() -> f64 {
    DEFAULT_CONFIDENCE_THRESHOLD
}

fn default_instances() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub domain: DomainKind,
    /// Instance sizes (blocks or cities); ignored when `problems` is given.
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default = "default_instances")]
    pub instances_per_size: usize,
    #[serde(default)]
    pub seed: u64,
    pub backend: BackendSpec,
    pub mode: Mode,
    #[serde(default = "default_iteration_limit")]
    pub iteration_limit: usize,
    #[serde(default = "default_failure_limit")]
    pub subtask_failure_limit: usize,
    #[serde(default = "default_threshold")]
    pub confidence_threshold: f64,
    /// Problem files to run instead of generated instances.
    #[serde(default)]
    pub problems: Vec<PathBuf>,
    /// Worker threads; defaults to the number of CPUs.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Where per-instance prompt/reply logs are written.
    #[serde(default)]
    pub run_dir: Option<PathBuf>,
    #[serde(default)]
    pub oracle: Option<OracleConfig>,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark config: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

impl BenchConfig {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let cfg: BenchConfig = serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io { path: path.into(), source })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.problems.is_empty() && self.sizes.is_empty() {
            return Err(BenchError::Config("sizes must not be empty".into()));
        }
        if self.instances_per_size == 0 || self.iteration_limit == 0 || self.subtask_failure_limit == 0 {
            return Err(BenchError::Config("counts and limits must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(BenchError::Config("workers must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(BenchError::Config("confidence_threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }

    fn hier_config(&self) -> HierConfig {
        HierConfig {
            loop_cfg: self.loop_config(Feedback::Reasoning),
            failure_limit: self.subtask_failure_limit,
            confidence_threshold: self.confidence_threshold,
            ..HierConfig::default()
        }
    }

    fn loop_config(&self, feedback: Feedback) -> LoopConfig {
        LoopConfig { iteration_limit: self.iteration_limit, feedback, decoding: DecodingOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Success,
    Failure,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub problem_id: String,
    pub size: usize,
    pub mode: Mode,
    pub outcome: RunStatus,
    pub iterations: usize,
    pub rollbacks: usize,
    pub plan_length: Option<usize>,
    /// Rendered plan of a success.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<String>,
    pub wall_ms: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub size: usize,
    pub instances: usize,
    pub successes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: BenchConfig,
    pub records: Vec<InstanceRecord>,
    pub summary: Vec<SizeSummary>,
    pub successes: usize,
    pub instances: usize,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable per-size table.
    pub fn summary_text(&self) -> String {
        let mut out = format!("domain {} | mode {} | backend {}\n", self.config.domain, self.config.mode, self.config.backend);
        for s in &self.summary {
            out.push_str(&format!("size {:>3}: {}/{} successful\n", s.size, s.successes, s.instances));
        }
        out.push_str(&format!("total: {}/{} successful\n", self.successes, self.instances));
        out
    }
}

/// What happened on one instance, before re-verification.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeResult {
    pub plan: Option<Plan>,
    pub iterations: usize,
    pub rollbacks: usize,
}

/// Runs one instance in `mode`. Successes are reported as returned by the
/// planner; callers re-verify.
pub fn run_mode(
    problem: &PlanningProblem,
    backend: &dyn PlannerBackend,
    ctx: &PromptContext,
    mode: Mode,
    cfg: &BenchConfig,
) -> Result<ModeResult, String> {
    let looped = |feedback, limit| {
        let loop_cfg = LoopConfig { iteration_limit: limit, ..cfg.loop_config(feedback) };
        plan_with_verification(problem, backend, ctx, &loop_cfg)
            .map(|o| ModeResult { plan: o.plan().cloned(), iterations: o.iterations(), rollbacks: 0 })
            .map_err(|e| e.to_string())
    };
    match mode {
        Mode::TaskPlanner => looped(Feedback::Reasoning, cfg.iteration_limit),
        Mode::NoReason => looped(Feedback::BareInvalid, cfg.iteration_limit),
        Mode::OneShot => looped(Feedback::Reasoning, 1),
        Mode::Hierarchical => plan_adaptive(problem, backend, ctx, &cfg.hier_config())
            .map(|o| ModeResult { plan: o.plan().cloned(), iterations: o.iterations, rollbacks: o.rollbacks })
            .map_err(|e| e.to_string()),
    }
}

/// Records every exchange so it can be written to the run directory.
struct Transcript<'a> {
    inner: &'a dyn PlannerBackend,
    log: Mutex<Vec<(String, String)>>,
}

impl PlannerBackend for Transcript<'_> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn generate(&self, prompt: &str, options: &DecodingOptions) -> Result<GenerationResult, BackendError> {
        let r = self.inner.generate(prompt, options);
        let reply = match &r {
            Ok(g) => g.text.clone(),
            Err(e) => format!("<error: {e}>"),
        };
        self.log.lock().unwrap().push((prompt.to_string(), reply));
        r
    }
}

struct Instance {
    size: usize,
    problem: Result<PlanningProblem, String>,
}

/// The instances `run_benchmark` would run, in record order, with their sizes.
pub fn bench_problems(cfg: &BenchConfig) -> Vec<(usize, Result<PlanningProblem, String>)> {
    instances(cfg).into_iter().map(|i| (i.size, i.problem)).collect()
}

fn instances(cfg: &BenchConfig) -> Vec<Instance> {
    if !cfg.problems.is_empty() {
        return cfg
            .problems
            .iter()
            .map(|path| {
                let problem = std::fs::read_to_string(path)
                    .map_err(|e| format!("{}: {e}", path.display()))
                    .and_then(|text| load_problem(&text, cfg.domain.domain_text()).map_err(|e| e.to_string()));
                let size = problem.as_ref().map(|p| p.objects.len()).unwrap_or(0);
                Instance { size, problem }
            })
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for &size in &cfg.sizes {
        for _ in 0..cfg.instances_per_size {
            let seed: u64 = rng.random();
            let problem = match cfg.domain {
                DomainKind::Blocksworld => gen_blocksworld(size, seed),
                DomainKind::Navigation => gen_navigation(size, seed),
            };
            out.push(Instance { size, problem: problem.map_err(|e| e.to_string()) });
        }
    }
    out
}

enum Shared {
    Llm(LlmBackend),
    None,
}

/// Generates (or loads) the instances, runs them on a worker pool and
/// re-verifies each success with a freshly built verifier.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<RunReport, BenchError> {
    cfg.validate()?;
    let shared = match &cfg.backend {
        BackendSpec::Llm => Shared::Llm(LlmBackend::from_env()?),
        _ => Shared::None,
    };
    let script = match &cfg.backend {
        BackendSpec::Scripted(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io { path: path.clone(), source })?;
            ScriptedBackend::from_json(&text).map_err(BenchError::Config)?;
            Some(text)
        }
        _ => None,
    };
    if let Some(dir) = &cfg.run_dir {
        std::fs::create_dir_all(dir).map_err(|source| BenchError::Io { path: dir.clone(), source })?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    let ctx = Arc::new(cfg.domain.prompt_context());
    let work = instances(cfg);
    info!("running {} instances in mode {}", work.len(), cfg.mode);

    let records: Vec<InstanceRecord> = pool.install(|| {
        work.par_iter()
            .enumerate()
            .map(|(i, inst)| run_one(cfg, &shared, script.as_deref(), &ctx, i, inst))
            .collect()
    });

    let mut summary: Vec<SizeSummary> = Vec::new();
    for (inst, rec) in work.iter().zip(&records) {
        let entry = match summary.iter_mut().find(|s| s.size == inst.size) {
            Some(e) => e,
            None => {
                summary.push(SizeSummary { size: inst.size, instances: 0, successes: 0 });
                summary.last_mut().unwrap()
            }
        };
        entry.instances += 1;
        entry.successes += usize::from(rec.outcome == RunStatus::Success);
    }
    let successes = summary.iter().map(|s| s.successes).sum();
    Ok(RunReport { config: cfg.clone(), instances: records.len(), records, summary, successes })
}

fn run_one(
    cfg: &BenchConfig,
    shared: &Shared,
    script: Option<&str>,
    ctx: &PromptContext,
    index: usize,
    inst: &Instance,
) -> InstanceRecord {
    let started = Instant::now();
    let mut record = InstanceRecord {
        problem_id: format!("instance-{index}"),
        size: inst.size,
        mode: cfg.mode,
        outcome: RunStatus::Error,
        iterations: 0,
        rollbacks: 0,
        plan_length: None,
        plan: None,
        wall_ms: 0,
        error: None,
    };
    let problem = match &inst.problem {
        Ok(p) => p,
        Err(e) => {
            record.error = Some(e.clone());
            return record;
        }
    };
    record.problem_id = problem.name.clone();

    let owned: Box<dyn PlannerBackend> = match (&cfg.backend, shared) {
        (BackendSpec::Llm, Shared::Llm(b)) => Box::new(BorrowedBackend(b)),
        (BackendSpec::Oracle, _) => Box::new(OracleBackend::new(problem.clone(), cfg.oracle.clone().unwrap_or_default())),
        (BackendSpec::Scripted(_), _) => {
            Box::new(ScriptedBackend::from_json(script.expect("script loaded")).expect("script validated"))
        }
        (BackendSpec::Llm, Shared::None) => unreachable!("llm backend built up front"),
    };
    let backend = Transcript { inner: owned.as_ref(), log: Mutex::new(Vec::new()) };

    match run_mode(problem, &backend, ctx, cfg.mode, cfg) {
        Err(e) => {
            warn!("{}: {e}", problem.name);
            record.error = Some(e);
        }
        Ok(r) => {
            record.iterations = r.iterations;
            record.rollbacks = r.rollbacks;
            record.outcome = RunStatus::Failure;
            if let Some(plan) = r.plan {
                // independent check: fresh verifier built from the problem alone
                match verify_plan(problem, &plan) {
                    Ok(v) if v.is_valid() => {
                        record.outcome = RunStatus::Success;
                        record.plan_length = Some(plan.len());
                        record.plan = Some(plan.render(problem));
                    }
                    other => record.error = Some(format!("reported plan failed re-verification: {other:?}")),
                }
            }
        }
    }
    record.wall_ms = started.elapsed().as_millis();
    if let Some(dir) = &cfg.run_dir {
        let mut text = String::new();
        for (n, (prompt, reply)) in backend.log.lock().unwrap().iter().enumerate() {
            text.push_str(&format!("=== prompt {} ===\n{prompt}\n=== reply {} ===\n{reply}\n\n", n + 1, n + 1));
        }
        let path = dir.join(format!("{:04}-{}.log", index, problem.name));
        if let Err(e) = std::fs::write(&path, text) {
            warn!("cannot write {}: {e}", path.display());
        }
    }
    record
}

struct BorrowedBackend<'a>(&'a LlmBackend);

impl PlannerBackend for BorrowedBackend<'_> {
    fn id(&self) -> &str {
        self.0.id()
    }

    fn generate(&self, prompt: &str, options: &DecodingOptions) -> Result<GenerationResult, BackendError> {
        self.0.generate(prompt, options)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(json: &str) -> BenchConfig {
        BenchConfig::from_json(json).unwrap()
    }

    #[test]
    fn config_parsing_and_validation() {
        let c = config(r#"{"domain": "navigation", "sizes": [5], "backend": "scripted:x.json", "mode": "no-reason"}"#);
        assert_eq!(c.backend, BackendSpec::Scripted("x.json".into()));
        assert_eq!((c.iteration_limit, c.subtask_failure_limit, c.instances_per_size), (20, 3, 10));
        assert!(BenchConfig::from_json(r#"{"domain": "navigation", "sizes": [], "backend": "oracle", "mode": "one-shot"}"#).is_err());
        assert!(BenchConfig::from_json(r#"{"domain": "navigation", "sizes": [3], "backend": "gpt", "mode": "one-shot"}"#).is_err());
        assert_eq!("hierarchical".parse::<Mode>(), Ok(Mode::Hierarchical));
    }

    #[test]
    fn oracle_task_planner_solves_everything() {
        let c = config(r#"{"domain": "blocksworld", "sizes": [5], "instances_per_size": 10, "seed": 1, "backend": "oracle", "mode": "task-planner"}"#);
        let r = run_benchmark(&c).unwrap();
        assert_eq!(r.successes, 10);
        assert!(r.records.iter().all(|x| x.iterations == 1));
        assert_eq!(r.summary, vec![SizeSummary { size: 5, instances: 10, successes: 10 }]);
    }

    #[test]
    fn always_invalid_one_shot_and_logs() {
        let dir = tempfile::tempdir().unwrap();
        let script = dir.path().join("s.json");
        std::fs::write(&script, r#"["START-PLAN\n1. A -> A"]"#).unwrap();
        let json = format!(
            r#"{{"domain": "navigation", "sizes": [5], "instances_per_size": 3, "backend": "scripted:{}", "mode": "one-shot", "run_dir": "{}"}}"#,
            script.display(),
            dir.path().join("runs").display()
        );
        let r = run_benchmark(&config(&json)).unwrap();
        assert_eq!(r.successes, 0);
        assert!(r.records.iter().all(|x| x.iterations == 1 && x.outcome == RunStatus::Failure));
        assert_eq!(std::fs::read_dir(dir.path().join("runs")).unwrap().count(), 3);
    }

    #[test]
    fn reports_are_deterministic() {
        let c = config(r#"{"domain": "navigation", "sizes": [5, 6], "instances_per_size": 3, "seed": 9, "backend": "oracle", "mode": "hierarchical"}"#);
        let strip = |r: RunReport| r.records.into_iter().map(|x| InstanceRecord { wall_ms: 0, ..x }).collect::<Vec<_>>();
        assert_eq!(strip(run_benchmark(&c).unwrap()), strip(run_benchmark(&c).unwrap()));
    }
}
