use std::fmt;

use super::{GoalNode, ObjectsKeyword, PlanningProblem};

impl fmt::Display for GoalNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GoalNode::Literal(atom, true) => write!(f, "{atom}"),
            GoalNode::Literal(atom, false) => write!(f, "(not {atom})"),
            GoalNode::And(cs) | GoalNode::Or(cs) => {
                f.write_str(if matches!(self, GoalNode::And(_)) { "(and" } else { "(or" })?;
                for c in cs {
                    write!(f, " {c}")?;
                }
                f.write_str(")")
            }
            GoalNode::Not(c) => write!(f, "(not {c})"),
        }
    }
}

/// Prints the problem in the same s-expression grammar accepted by `parse_problem`.
impl fmt::Display for PlanningProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name)?;
        if let Some(d) = &self.domain_name {
            writeln!(f, "  (:domain {d})")?;
        }
        let kw = match self.objects_keyword {
            ObjectsKeyword::Objects => ":objects",
            ObjectsKeyword::Cities => ":cities",
        };
        writeln!(f, "  ({kw} {})", self.objects.join(" "))?;
        if !self.constraints.is_empty() {
            write!(f, "  (:constraints")?;
            for text in self.constraints.texts() {
                write!(f, "\n    ({text})")?;
            }
            writeln!(f, ")")?;
        }
        write!(f, "  (:init")?;
        let mut atoms: Vec<String> = self.init.iter().map(ToString::to_string).collect();
        atoms.sort();
        for a in atoms {
            write!(f, "\n    {a}")?;
        }
        writeln!(f, ")")?;
        write!(f, "  (:goal {}))", self.goal)
    }
}

#[cfg(test)]
mod tests {
    use crate::problem::parse_problem;

    #[test]
    fn printed_problem_parses_back_to_the_same_value() {
        let text = "(define (problem p) (:domain d) (:cities A B)
            (:constraints (You shouldn't go to B until you go to A before))
            (:init (road A B) (at A))
            (:goal (and (reached B) (or (at A) (not (at B))))))";
        let p = parse_problem(text).unwrap();
        let printed = p.to_string();
        assert_eq!(parse_problem(&printed).unwrap(), p);
        assert!(printed.contains("(:cities A B)"));
    }
}
