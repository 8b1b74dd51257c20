//! Best-first search over production-system states.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use super::problem::{expand, state_key, Heuristic, ProblemSpec};
use crate::error::{Error, Result};
use crate::rules::RecognitionLog;
use crate::structure::Structure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Solved,
    Unsolvable,
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub status: Status,
    /// Production names from the start state.
    pub plan: Vec<String>,
    /// States taken off the frontier and expanded.
    pub expanded: usize,
    /// Distinct states generated, the start included.
    pub visited: usize,
    pub cost: usize,
    /// Successors dropped because their effect failed.
    #[serde(default)]
    pub effect_errors: usize,
    /// Plan came from the solution cache.
    #[serde(default)]
    pub replayed: bool,
    /// When the budget runs out: plan to the expanded state scoring highest
    /// on the goal.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub partial: Vec<String>,
}

struct Node {
    state: Structure,
    log: RecognitionLog,
    parent: Option<usize>,
    via: Option<usize>,
    g: usize,
    key: String,
}

fn heuristic(p: &ProblemSpec, log: &RecognitionLog) -> usize {
    match p.heuristic {
        Heuristic::Zero => 0,
        Heuristic::UnmetMembers => p.goal.unmet(log),
    }
}

fn plan_to(nodes: &[Node], mut i: usize, p: &ProblemSpec) -> Vec<String> {
    let mut out = Vec::new();
    while let (Some(parent), Some(via)) = (nodes[i].parent, nodes[i].via) {
        out.push(p.productions[via].name.clone());
        i = parent;
    }
    out.reverse();
    out
}

/// Best-first search on plan length plus heuristic, ties broken by
/// insertion order. `budget` caps the number of expansions. The goal is
/// tested when a state is taken off the frontier, so with the zero
/// heuristic the plan is a shortest one.
pub fn solve(p: &ProblemSpec, budget: usize) -> Result<SearchResult> {
    if budget == 0 {
        return Err(Error::Precondition("search budget must be positive".into()));
    }
    let anchors = p.anchors();
    let log = p.recognitions(&p.start)?;
    let start_key = state_key(&p.start, &anchors);
    let mut best_g: HashMap<String, usize> = HashMap::from([(start_key.clone(), 0)]);
    let mut open = BinaryHeap::from([Reverse((heuristic(p, &log), 0u64, 0usize))]);
    let mut nodes = vec![Node {
        state: p.start.clone(),
        log,
        parent: None,
        via: None,
        g: 0,
        key: start_key,
    }];
    let mut seq = 1u64;
    let mut expanded = 0;
    let mut effect_errors = 0;
    let mut best: Option<(f64, usize)> = None;
    let result = |status, plan: Vec<String>, expanded, visited, effect_errors, partial| SearchResult {
        status,
        cost: plan.len(),
        plan,
        expanded,
        visited,
        effect_errors,
        replayed: false,
        partial,
    };

    while let Some(Reverse((_, _, i))) = open.pop() {
        if nodes[i].g > best_g[&nodes[i].key] {
            continue;
        }
        if p.goal.holds(&nodes[i].log) {
            let plan = plan_to(&nodes, i, p);
            return Ok(result(Status::Solved, plan, expanded, best_g.len(), effect_errors, Vec::new()));
        }
        if expanded == budget {
            let partial = best.map(|(_, j)| plan_to(&nodes, j, p)).unwrap_or_default();
            return Ok(result(Status::BudgetExhausted, Vec::new(), expanded, best_g.len(), effect_errors, partial));
        }
        expanded += 1;
        let score = p.goal.situation.score(&nodes[i].log, 0);
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, i));
        }
        let g = nodes[i].g + 1;
        for succ in expand(&nodes[i].state, p)? {
            let state = match succ.state {
                Ok(s) => s,
                Err(_) => {
                    effect_errors += 1;
                    continue;
                }
            };
            let key = state_key(&state, &anchors);
            if best_g.get(&key).is_some_and(|&old| old <= g) {
                continue;
            }
            let log = p.recognitions(&state)?;
            if p.undesired.iter().any(|u| u.holds(&log)) {
                continue;
            }
            best_g.insert(key.clone(), g);
            open.push(Reverse((g + heuristic(p, &log), seq, nodes.len())));
            seq += 1;
            nodes.push(Node {
                state,
                log,
                parent: Some(i),
                via: Some(succ.production),
                g,
                key,
            });
        }
    }
    Ok(result(Status::Unsolvable, Vec::new(), expanded, best_g.len(), effect_errors, Vec::new()))
}

/// States along `plan` from the start, the start included. Fails when a
/// step names an unknown production, its guard does not hold, or its effect
/// fails.
pub fn replay(p: &ProblemSpec, plan: &[String]) -> Result<Vec<Structure>> {
    let mut states = vec![p.start.clone()];
    for (k, name) in plan.iter().enumerate() {
        let pr = p.production(name)?;
        let cur = states.last().expect("non-empty");
        if !p.guard_holds(pr, cur, None)? {
            return Err(Error::Precondition(format!("guard of `{name}` fails at step {k}")));
        }
        states.push(p.apply(pr, cur)?);
    }
    Ok(states)
}

/// The plan replays, ends in a goal state, and enters no undesired state.
pub fn plan_is_valid(p: &ProblemSpec, plan: &[String]) -> Result<bool> {
    let states = match replay(p, plan) {
        Ok(s) => s,
        Err(Error::Precondition(_)) => return Ok(false),
        Err(e) => return Err(e),
    };
    for s in &states[1..] {
        let log = p.recognitions(s)?;
        if p.undesired.iter().any(|u| u.holds(&log)) {
            return Ok(false);
        }
    }
    Ok(p.goal.holds(&p.recognitions(states.last().expect("non-empty"))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::blocks::{block_problem, Block};

    #[test]
    fn replay_rejects_illegal_steps() {
        let blocks = [Block::new("a", "a", 1), Block::new("b", "b", 1)];
        let p = block_problem(&blocks, &[vec!["a", "b"]], &[vec!["b", "a"]]).unwrap();
        let res = solve(&p, 100).unwrap();
        assert_eq!(res.plan, ["move(b,a,table)", "move(a,table,b)"]);
        assert_eq!(replay(&p, &res.plan).unwrap().len(), 3);
        assert!(plan_is_valid(&p, &res.plan).unwrap());
        assert!(!plan_is_valid(&p, &["move(a,table,b)".to_string()]).unwrap());
        assert!(!plan_is_valid(&p, &["fly".to_string()]).unwrap());
        assert!(!plan_is_valid(&p, &res.plan[..1]).unwrap());
    }
}
