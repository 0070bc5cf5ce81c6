use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use planguard::backend::{LlmBackend, OracleBackend, OracleConfig, PlannerBackend, ScriptedBackend};
use planguard::bench::{run_benchmark, run_mode, BackendSpec, BenchConfig, Mode};
use planguard::domains::DomainKind;
use planguard::hierarchy::{DEFAULT_CONFIDENCE_THRESHOLD, DEFAULT_FAILURE_LIMIT};
use planguard::ltl::{compile_automaton, parse_ltl};
use planguard::problem::{load_problem, parse_plan_text, parse_problem, ObjectsKeyword, PlanningProblem};
use planguard::task_planner::{
    apply_translation, render_translation, translate_constraints_with, Approver, AutoApprove, IoApprover,
    DEFAULT_ITERATION_LIMIT, DEFAULT_TRANSLATION_RETRIES,
};
use planguard::validate::{reasoning_text, Verdict, Verifier};

#[derive(Parser)]
#[command(name = "planguard", version, about = "Generate, verify and repair plans under temporal and state constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a plan against a problem and its constraints.
    Verify {
        problem: PathBuf,
        domain: PathBuf,
        plan: PathBuf,
        /// Formulas for the problem's constraints (as written by `translate`).
        #[arg(long)]
        formulas: Option<PathBuf>,
    },
    /// Produce a verified plan.
    Plan {
        problem: PathBuf,
        domain: PathBuf,
        #[arg(long, default_value = "oracle")]
        backend: BackendSpec,
        #[arg(long, default_value = "hierarchical")]
        mode: Mode,
        #[arg(long, default_value_t = DEFAULT_ITERATION_LIMIT)]
        iteration_limit: usize,
        #[arg(long, default_value_t = DEFAULT_FAILURE_LIMIT)]
        subtask_failure_limit: usize,
        #[arg(long, default_value_t = DEFAULT_CONFIDENCE_THRESHOLD)]
        confidence_threshold: f64,
        /// Accept translated formulas without review.
        #[arg(long)]
        auto_approve: bool,
        #[arg(long)]
        formulas: Option<PathBuf>,
    },
    /// Translate natural-language constraints into formulas.
    Translate {
        problem: PathBuf,
        /// Domain file; the built-in domain is used when omitted.
        #[arg(long)]
        domain: Option<PathBuf>,
        #[arg(long, default_value = "llm")]
        backend: BackendSpec,
        /// Review each formula before accepting it.
        #[arg(long)]
        interactive: bool,
        /// Write the formulas here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a benchmark described by a JSON config file.
    Bench {
        config: PathBuf,
        #[arg(long, default_value = "results.json")]
        output: PathBuf,
    },
    /// Print the automaton compiled from an LTLf formula.
    Automaton { formula: String },
}

/// Exit 2: bad input; exit 1: a plan was rejected or not found.
enum Failure {
    Usage(String),
    Plan(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Plan(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load(problem: &Path, domain: &Path, formulas: Option<&Path>) -> Result<PlanningProblem, Failure> {
    let p = load_problem(&read(problem)?, &read(domain)?).map_err(|e| Failure::Usage(format!("{}: {e}", problem.display())))?;
    match formulas {
        Some(f) => apply_translation(&p, &read(f)?).map_err(|e| Failure::Usage(format!("{}: {e}", f.display()))),
        None => Ok(p),
    }
}

fn backend_for(spec: &BackendSpec, problem: &PlanningProblem) -> Result<Box<dyn PlannerBackend>, Failure> {
    Ok(match spec {
        BackendSpec::Llm => Box::new(LlmBackend::from_env()?),
        BackendSpec::Oracle => Box::new(OracleBackend::new(problem.clone(), OracleConfig::default())),
        BackendSpec::Scripted(path) => Box::new(ScriptedBackend::from_json(&read(path)?)?),
    })
}

fn context_for(problem: &PlanningProblem) -> Result<DomainKind, Failure> {
    DomainKind::detect(problem).ok_or_else(|| Failure::Usage("cannot tell which domain the problem belongs to".into()))
}

fn translate(problem: &PlanningProblem, backend: &dyn PlannerBackend, interactive: bool) -> Result<PlanningProblem, Failure> {
    let ctx = context_for(problem)?.prompt_context();
    let mut review;
    let mut auto = AutoApprove;
    let approver: &mut dyn Approver = if interactive {
        review = IoApprover { input: BufReader::new(std::io::stdin()), output: std::io::stderr() };
        &mut review
    } else {
        &mut auto
    };
    Ok(translate_constraints_with(problem, backend, &ctx, approver, DEFAULT_TRANSLATION_RETRIES)?)
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Verify { problem, domain, plan, formulas } => {
            let p = load(&problem, &domain, formulas.as_deref())?;
            let plan = parse_plan_text(&read(&plan)?, &p)?;
            let verifier = Verifier::new(&p.constraints)?;
            let verdict = verifier.verify(&p, &plan);
            match &verdict {
                Verdict::Valid => {
                    println!("Valid");
                    Ok(())
                }
                Verdict::Invalid(v) => {
                    println!("Invalid: {:?} at step {}", v.kind, v.step.map_or("-".into(), |s| s.to_string()));
                    println!("{}", reasoning_text(&p, &verdict, &plan));
                    Err(Failure::Plan(format!("plan rejected: {}", v.detail)))
                }
            }
        }
        Command::Plan {
            problem,
            domain,
            backend,
            mode,
            iteration_limit,
            subtask_failure_limit,
            confidence_threshold,
            auto_approve,
            formulas,
        } => {
            let mut p = load(&problem, &domain, formulas.as_deref())?;
            let kind = context_for(&p)?;
            let b = backend_for(&backend, &p)?;
            if p.constraints.untranslated().next().is_some() {
                if backend == BackendSpec::Oracle {
                    return Err(Failure::Usage("constraints have no formulas; pass --formulas or use a language-model backend".into()));
                }
                p = translate(&p, b.as_ref(), !auto_approve)?;
            }
            let cfg = BenchConfig {
                domain: kind,
                sizes: Vec::new(),
                instances_per_size: 1,
                seed: 0,
                backend,
                mode,
                iteration_limit,
                subtask_failure_limit,
                confidence_threshold,
                problems: Vec::new(),
                workers: None,
                run_dir: None,
                oracle: None,
            };
            let result = run_mode(&p, b.as_ref(), &kind.prompt_context(), mode, &cfg).map_err(Failure::Plan)?;
            match result.plan {
                Some(plan) => {
                    println!("{}", plan.render(&p));
                    eprintln!("valid plan after {} iteration(s)", result.iterations);
                    Ok(())
                }
                None => Err(Failure::Plan(format!("no valid plan after {} iteration(s)", result.iterations))),
            }
        }
        Command::Translate { problem, domain, backend, interactive, output } => {
            let text = read(&problem)?;
            let domain_text = match domain {
                Some(d) => read(&d)?,
                None => {
                    let bare = parse_problem(&text)?;
                    let kind = if bare.objects_keyword == ObjectsKeyword::Cities {
                        DomainKind::Navigation
                    } else {
                        DomainKind::Blocksworld
                    };
                    kind.domain_text().to_string()
                }
            };
            let p = load_problem(&text, &domain_text)?;
            if p.constraints.is_empty() {
                return Err(Failure::Usage("the problem has no constraints".into()));
            }
            let b = backend_for(&backend, &p)?;
            let translated = translate(&p, b.as_ref(), interactive)?;
            let rendered = render_translation(&translated);
            match output {
                Some(path) => std::fs::write(&path, rendered)?,
                None => print!("{rendered}"),
            }
            Ok(())
        }
        Command::Bench { config, output } => {
            let cfg = BenchConfig::load(&config)?;
            let report = run_benchmark(&cfg)?;
            std::fs::write(&output, report.to_json())?;
            print!("{}", report.summary_text());
            std::io::stdout().flush()?;
            Ok(())
        }
        Command::Automaton { formula } => {
            let f = parse_ltl(&formula)?;
            println!("{}", compile_automaton(&f)?);
            Ok(())
        }
    }
}
