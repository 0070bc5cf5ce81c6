//! Seeded random instances for both domains.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::backend::{oracle_plan_with, OracleConfig};
use crate::domains::DomainKind;
use crate::ltl::parse_ltl;
use crate::problem::{load_problem, GroundAction, GroundAtom, PlanningProblem, WorldState};
use crate::validate::apply_action;

/// Largest blocksworld size certified by search rather than by construction.
pub const CERTIFY_LIMIT: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("invalid size {size}: need at least {min}")]
    InvalidSize { size: usize, min: usize },
    #[error("generated instance failed certification: {0}")]
    Uncertified(String),
}

/// Towers as bottom-to-top block lists.
type Towers = Vec<Vec<String>>;

fn random_towers(blocks: &[String], rng: &mut ChaCha8Rng) -> Towers {
    let mut order = blocks.to_vec();
    order.shuffle(rng);
    let mut towers: Towers = Vec::new();
    for b in order {
        let k = rng.random_range(0..=towers.len());
        match towers.get_mut(k) {
            Some(t) => t.push(b),
            None => towers.push(vec![b]),
        }
    }
    towers
}

fn tower_atoms(towers: &Towers) -> Vec<String> {
    let mut out = vec!["(arm-empty)".to_string()];
    for t in towers {
        out.push(format!("(on-table {})", t[0]));
        for w in t.windows(2) {
            out.push(format!("(on {} {})", w[1], w[0]));
        }
        out.push(format!("(clear {})", t[t.len() - 1]));
    }
    out.sort();
    out
}

fn on_atoms(state: &WorldState) -> Vec<String> {
    state.iter().filter(|a| a.predicate == "on").map(|a| a.to_string()).collect()
}

/// A random legal start configuration and a goal made of `on` atoms that
/// does not already hold. For `n` above [`CERTIFY_LIMIT`] the goal is the
/// end of a random walk of legal moves; otherwise it is an independent
/// configuration and the oracle confirms a plan exists.
pub fn gen_blocksworld(n_blocks: usize, seed: u64) -> Result<PlanningProblem, GenError> {
    if n_blocks < 2 {
        return Err(GenError::InvalidSize { size: n_blocks, min: 2 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks: Vec<String> = (1..=n_blocks).map(|i| format!("b{i}")).collect();
    let init = tower_atoms(&random_towers(&blocks, &mut rng));
    let name = format!("bw-{n_blocks}-{seed}");
    let build = |goal: &[String]| {
        // placeholder goal while only the initial state is needed
        let goal = if goal.is_empty() { vec!["(arm-empty)".to_string()] } else { goal.to_vec() };
        let text = format!(
            "(define (problem {name}) (:domain blocksworld-4ops) (:objects {})\n  (:init {})\n  (:goal (and {})))",
            blocks.join(" "),
            init.join(" "),
            goal.join(" ")
        );
        load_problem(&text, DomainKind::Blocksworld.domain_text()).expect("generated blocksworld problem parses")
    };
    let start = build(&[]).init;

    for _ in 0..1000 {
        let goal = if n_blocks <= CERTIFY_LIMIT {
            let g = tower_atoms(&random_towers(&blocks, &mut rng));
            g.into_iter().filter(|a| a.starts_with("(on ")).collect::<Vec<_>>()
        } else {
            on_atoms(&random_walk(&build(&[]), &start, 6 * n_blocks, &mut rng))
        };
        if goal.is_empty() || goal.iter().all(|g| init.contains(g)) {
            continue;
        }
        let problem = build(&goal);
        if n_blocks <= CERTIFY_LIMIT {
            oracle_plan_with(&problem, &OracleConfig::default()).map_err(|e| GenError::Uncertified(e.to_string()))?;
        }
        return Ok(problem);
    }
    Err(GenError::Uncertified("no non-trivial goal found".into()))
}

/// Random legal moves from `start`, finishing with the arm empty.
fn random_walk(problem: &PlanningProblem, start: &WorldState, steps: usize, rng: &mut ChaCha8Rng) -> WorldState {
    let blocks = &problem.objects;
    let mut state = start.clone();
    for i in 0.. {
        let holding = state.iter().any(|a| a.predicate == "holding");
        if i >= steps && !holding {
            break;
        }
        let mut moves = Vec::new();
        for x in blocks {
            moves.push(GroundAction::new("pick-up", [x]));
            moves.push(GroundAction::new("put-down", [x]));
            for y in blocks {
                moves.push(GroundAction::new("stack", [x, y]));
                moves.push(GroundAction::new("unstack", [x, y]));
            }
        }
        let legal: Vec<WorldState> = moves.iter().filter_map(|m| apply_action(problem, &state, m).ok()).collect();
        state = legal.choose(rng).expect("blocksworld always has a legal move").clone();
    }
    state
}

fn city_name(i: usize) -> String {
    let letter = char::from(b'A' + (i % 26) as u8);
    match i / 26 {
        0 => letter.to_string(),
        k => format!("{letter}{k}"),
    }
}

fn reachable(n: usize, edges: &BTreeSet<(usize, usize)>, banned: Option<usize>) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &(a, b) in edges {
            let v = if a == u { b } else if b == u { a } else { continue };
            if Some(v) != banned && !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

/// Connected road graph (random spanning tree plus extra roads), start at
/// the first city, two goal cities and one ordering constraint with its
/// formula attached.
pub fn gen_navigation(n_cities: usize, seed: u64) -> Result<PlanningProblem, GenError> {
    if n_cities < 3 {
        return Err(GenError::InvalidSize { size: n_cities, min: 3 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..n_cities).map(city_name).collect();
    let mut edges = BTreeSet::new();
    for i in 1..n_cities {
        let j = rng.random_range(0..i);
        edges.insert((j, i));
    }
    for _ in 0..n_cities / 2 {
        let a = rng.random_range(0..n_cities);
        let b = rng.random_range(0..n_cities);
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let mut others: Vec<usize> = (1..n_cities).collect();
    others.shuffle(&mut rng);
    let goals = [others[0], others[1]];

    // Every template instance must be satisfiable: the cities required
    // first stay reachable when the forbidden one is removed.
    let clear_of = |banned: usize, targets: &[usize]| {
        let seen = reachable(n_cities, &edges, Some(banned));
        targets.iter().all(|&t| seen[t])
    };
    let avoid: Vec<usize> = (1..n_cities).filter(|c| !goals.contains(c) && clear_of(*c, &goals)).collect();
    let pick = |rng: &mut ChaCha8Rng, k: usize| {
        let mut pool: Vec<usize> = (1..n_cities).collect();
        pool.shuffle(rng);
        pool.truncate(k);
        pool
    };
    let first = rng.random_range(0..3);
    let mut chosen = None;
    for attempt in 0..96 {
        chosen = match (first + attempt / 32) % 3 {
            0 if n_cities >= 4 => Some(pick(&mut rng, 3)).filter(|c| clear_of(c[2], &c[..2])).map(|c| {
                (
                    format!("You should have been to {} and {} before you go to {}", names[c[0]], names[c[1]], names[c[2]]),
                    "!z U (x & y)",
                    vec![("x", c[0]), ("y", c[1]), ("z", c[2])],
                )
            }),
            2 if !avoid.is_empty() => {
                let x = *avoid.choose(&mut rng).expect("checked non-empty");
                Some((format!("You should not visit city {} in your travel", names[x]), "G(!x)", vec![("x", x)]))
            }
            _ => Some(pick(&mut rng, 2)).filter(|c| clear_of(c[0], &c[1..])).map(|c| {
                (
                    format!("You shouldn't go to {} until you go to {} before", names[c[0]], names[c[1]]),
                    "!x U y",
                    vec![("x", c[0]), ("y", c[1])],
                )
            }),
        };
        if chosen.is_some() {
            break;
        }
    }
    let (text, formula, props): (String, &str, Vec<(&str, usize)>) = chosen.unwrap_or_else(|| {
        // a neighbour of the start can always come first
        let y = edges.iter().find(|e| e.0 == 0).map(|e| e.1).expect("start has a road");
        let x = (1..n_cities).find(|&c| c != y).expect("at least three cities");
        (
            format!("You shouldn't go to {} until you go to {} before", names[x], names[y]),
            "!x U y",
            vec![("x", x), ("y", y)],
        )
    });

    let mut init = vec![format!("(at {})", names[0]), format!("(reached {})", names[0])];
    init.extend(edges.iter().map(|&(a, b)| format!("(road {} {})", names[a], names[b])));
    let source = format!(
        "(define (problem nav-{n_cities}-{seed}) (:cities {})\n  (:constraints ({text}))\n  (:init {})\n  (:goal (and (reached {}) (reached {}))))",
        names.join(" "),
        init.join(" "),
        names[goals[0]],
        names[goals[1]]
    );
    let mut problem = load_problem(&source, DomainKind::Navigation.domain_text()).expect("generated navigation problem parses");
    let bindings: BTreeMap<String, GroundAtom> =
        props.iter().map(|&(p, c)| (p.to_string(), GroundAtom::new("reached", [&names[c]]))).collect();
    problem
        .attach_temporal(0, parse_ltl(formula).expect("template formula parses"), bindings)
        .expect("template bindings are declared cities");
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::oracle_plan;
    use crate::problem::Formal;
    use crate::validate::verify_plan;

    #[test]
    fn sizes_are_checked() {
        assert_eq!(gen_blocksworld(1, 0), Err(GenError::InvalidSize { size: 1, min: 2 }));
        assert_eq!(gen_navigation(2, 0), Err(GenError::InvalidSize { size: 2, min: 3 }));
    }

    #[test]
    fn generation_is_seed_deterministic() {
        assert_eq!(gen_blocksworld(5, 7).unwrap(), gen_blocksworld(5, 7).unwrap());
        assert_eq!(gen_navigation(7, 3).unwrap(), gen_navigation(7, 3).unwrap());
        assert_ne!(gen_navigation(7, 3).unwrap(), gen_navigation(7, 4).unwrap());
    }

    #[test]
    fn blocksworld_states_are_legal() {
        for n in [3, 5, 9] {
            let p = gen_blocksworld(n, 11).unwrap();
            let count = |pred: &str| p.init.iter().filter(|a| a.predicate == pred).count();
            // every block rests on exactly one thing
            assert_eq!(count("on-table") + count("on"), n);
            assert_eq!(count("arm-empty"), 1);
            assert_eq!(count("holding"), 0);
            for b in &p.objects {
                let covered = p.init.iter().any(|a| a.predicate == "on" && a.args[1] == *b);
                assert_eq!(p.init.contains(&GroundAtom::new("clear", [b])), !covered);
            }
            assert!(!p.goal.holds(&p.init));
        }
    }

    #[test]
    fn small_instances_are_solvable() {
        for seed in 0..3 {
            let p = gen_blocksworld(4, seed).unwrap();
            let plan = oracle_plan(&p, 40).unwrap();
            assert!(verify_plan(&p, &plan).unwrap().is_valid());
            let p = gen_navigation(6, seed).unwrap();
            let plan = oracle_plan(&p, 40).unwrap();
            assert!(verify_plan(&p, &plan).unwrap().is_valid());
        }
    }

    #[test]
    fn navigation_constraints_are_satisfiable() {
        for n in [4, 5, 6, 7] {
            for seed in 0..40 {
                let p = gen_navigation(n, seed).unwrap();
                assert!(oracle_plan(&p, 60).is_ok(), "{}", p.name);
            }
        }
    }

    #[test]
    fn navigation_graph_is_connected_and_constrained() {
        for seed in 0..20 {
            let p = gen_navigation(9, seed).unwrap();
            assert_eq!(p.constraints.entries.len(), 1);
            assert!(matches!(p.constraints.entries[0].formal, Formal::Temporal { .. }));
            let mut edges = BTreeSet::new();
            let index = |c: &str| p.objects.iter().position(|o| o == c).unwrap();
            for a in p.init.iter().filter(|a| a.predicate == "road") {
                edges.insert((index(&a.args[0]), index(&a.args[1])));
            }
            assert!(reachable(9, &edges, None).into_iter().all(|s| s));
        }
    }

    #[test]
    fn avoidance_template_binds_reached() {
        let p = (0..200)
            .map(|s| gen_navigation(7, s).unwrap())
            .find(|p| p.constraints.entries[0].text.starts_with("You should not visit"))
            .expect("some seed picks the avoidance template");
        let Formal::Temporal { formula, bindings } = &p.constraints.entries[0].formal else { panic!() };
        assert_eq!(formula.to_string(), "G !x");
        let city = p.constraints.entries[0].text.rsplit("city ").next().unwrap().split(' ').next().unwrap();
        assert_eq!(bindings["x"], GroundAtom::new("reached", [city]));
    }
}
