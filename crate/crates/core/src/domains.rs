//! Built-in case-study domains and their prompt fixtures.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::problem::{parse_domain, Domain, PlanningProblem};

const BLOCKSWORLD_DOMAIN: &str = include_str!("../fixtures/blocksworld.domain.pddl");
const NAVIGATION_DOMAIN: &str = include_str!("../fixtures/navigation.domain.pddl");

pub(crate) const TASK_TEMPLATE: &str = include_str!("../fixtures/prompts/task.txt");
pub(crate) const TRANSLATION_TEMPLATE: &str = include_str!("../fixtures/prompts/translation.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Blocksworld,
    Navigation,
}

/// Worked problem and its solution, shown to the planner before the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExampleBlock {
    pub problem: String,
    pub solution: String,
}

/// Domain-specific prose used to build prompts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptContext {
    pub background: String,
    pub actions: String,
    pub example: Option<ExampleBlock>,
}

impl DomainKind {
    pub fn domain_text(self) -> &'static str {
        match self {
            DomainKind::Blocksworld => BLOCKSWORLD_DOMAIN,
            DomainKind::Navigation => NAVIGATION_DOMAIN,
        }
    }

    pub fn domain(self) -> Domain {
        parse_domain(self.domain_text()).expect("built-in domain parses")
    }

    pub fn prompt_context(self) -> PromptContext {
        let (background, actions, problem, solution) = match self {
            DomainKind::Blocksworld => (
                include_str!("../fixtures/prompts/blocksworld.background.txt"),
                include_str!("../fixtures/prompts/blocksworld.actions.txt"),
                include_str!("../fixtures/prompts/blocksworld.example.problem.txt"),
                include_str!("../fixtures/prompts/blocksworld.example.solution.txt"),
            ),
            DomainKind::Navigation => (
                include_str!("../fixtures/prompts/navigation.background.txt"),
                include_str!("../fixtures/prompts/navigation.actions.txt"),
                include_str!("../fixtures/prompts/navigation.example.problem.txt"),
                include_str!("../fixtures/prompts/navigation.example.solution.txt"),
            ),
        };
        PromptContext {
            background: background.trim_end().to_string(),
            actions: actions.trim_end().to_string(),
            example: Some(ExampleBlock {
                problem: problem.trim_end().to_string(),
                solution: solution.trim_end().to_string(),
            }),
        }
    }

    /// Guesses the domain from the problem's schema names.
    pub fn detect(problem: &PlanningProblem) -> Option<DomainKind> {
        if problem.schema("drive").is_some() {
            Some(DomainKind::Navigation)
        } else if problem.schema("stack").is_some() && problem.schema("unstack").is_some() {
            Some(DomainKind::Blocksworld)
        } else {
            None
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::Blocksworld => "blocksworld",
            DomainKind::Navigation => "navigation",
        })
    }
}

impl FromStr for DomainKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "blocksworld" => Ok(DomainKind::Blocksworld),
            "navigation" => Ok(DomainKind::Navigation),
            other => Err(format!("unknown domain `{other}`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{load_problem, parse_plan_text};
    use crate::validate::verify_plan;

    #[test]
    fn built_in_domains_parse() {
        assert_eq!(DomainKind::Blocksworld.domain().schemas.len(), 4);
        assert_eq!(DomainKind::Navigation.domain().schemas.len(), 1);
    }

    #[test]
    fn blocksworld_example_solution_is_valid() {
        let ctx = DomainKind::Blocksworld.prompt_context();
        let ex = ctx.example.unwrap();
        let p = load_problem(&ex.problem, DomainKind::Blocksworld.domain_text()).unwrap();
        let plan = parse_plan_text(&ex.solution, &p).unwrap();
        assert!(verify_plan(&p, &plan).unwrap().is_valid());
        assert_eq!(DomainKind::detect(&p), Some(DomainKind::Blocksworld));
    }

    #[test]
    fn navigation_example_solution_reaches_goal() {
        let ex = DomainKind::Navigation.prompt_context().example.unwrap();
        let p = load_problem(&ex.problem, DomainKind::Navigation.domain_text()).unwrap();
        let plan = parse_plan_text(&ex.solution, &p).unwrap();
        assert_eq!(plan.len(), 2);
        assert_eq!(DomainKind::detect(&p), Some(DomainKind::Navigation));
    }

    #[test]
    fn names_round_trip() {
        for k in [DomainKind::Blocksworld, DomainKind::Navigation] {
            assert_eq!(k.to_string().parse::<DomainKind>().unwrap(), k);
        }
    }
}
