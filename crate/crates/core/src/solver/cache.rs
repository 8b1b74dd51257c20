//! Ready-made solutions keyed by abstracted (start, goal) pairs.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::problem::{Production, ProblemSpec};
use super::search::{plan_is_valid, solve, SearchResult, Status};
use crate::canon::canonical_hash;
use crate::derivation::{apply_unchecked, MorphismMask};
use crate::error::Result;
use crate::iso::find_isomorphism;
use crate::rules::laplace;
use crate::structure::Structure;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    /// Masked start of the problem the plan was found for.
    pub start: Structure,
    /// The plan's productions, grounded on that start's part ids.
    pub skeleton: Vec<Production>,
    pub uses: u64,
    pub successes: u64,
    /// Smoothed replay success rate.
    pub p: f64,
}

impl CacheEntry {
    fn record(&mut self, ok: bool) {
        self.uses += 1;
        self.successes += ok as u64;
        self.p = laplace(self.successes, self.uses);
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolutionCache {
    /// Abstraction applied to start states before keying.
    pub mask: MorphismMask,
    pub entries: BTreeMap<String, CacheEntry>,
}

impl SolutionCache {
    pub fn new(mask: MorphismMask) -> Self {
        SolutionCache {
            mask,
            entries: BTreeMap::new(),
        }
    }

    pub fn key(&self, p: &ProblemSpec) -> String {
        format!("{}|{}", canonical_hash(&apply_unchecked(&p.start, &self.mask)), p.goal.key())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Grounds the cached skeleton on `p` through an isomorphism of the masked
/// starts and checks the result. `None` when some step has no matching
/// production or the grounded plan is not valid.
fn reground(entry: &CacheEntry, mask: &MorphismMask, p: &ProblemSpec) -> Result<Option<Vec<String>>> {
    let masked = apply_unchecked(&p.start, mask);
    let Some(w) = find_isomorphism(&entry.start, &masked) else {
        return Ok(None);
    };
    let ids: HashMap<&str, &str> = entry
        .start
        .parts()
        .iter()
        .zip(&w)
        .map(|(a, &j)| (a.id.as_str(), masked.part(j).id.as_str()))
        .collect();
    let mut plan = Vec::with_capacity(entry.skeleton.len());
    for step in &entry.skeleton {
        let grounded = step.mapped(|id| ids.get(id).map_or_else(|| id.to_string(), |s| s.to_string()));
        match p.productions.iter().find(|q| q.same_move(&grounded)) {
            Some(q) => plan.push(q.name.clone()),
            None => return Ok(None),
        }
    }
    Ok(plan_is_valid(p, &plan)?.then_some(plan))
}

/// Replays a cached plan when the abstracted key matches, else (or when the
/// replay fails) searches and stores the solution.
pub fn solve_with_cache(p: &ProblemSpec, cache: &mut SolutionCache, budget: usize) -> Result<SearchResult> {
    let key = cache.key(p);
    if let Some(entry) = cache.entries.get(&key) {
        let grounded = reground(entry, &cache.mask, p)?;
        let entry = cache.entries.get_mut(&key).expect("present");
        entry.record(grounded.is_some());
        if let Some(plan) = grounded {
            return Ok(SearchResult {
                status: Status::Solved,
                cost: plan.len(),
                visited: plan.len() + 1,
                plan,
                expanded: 0,
                effect_errors: 0,
                replayed: true,
                partial: Vec::new(),
            });
        }
    }
    let res = solve(p, budget)?;
    if res.status == Status::Solved {
        let skeleton = res
            .plan
            .iter()
            .map(|n| p.production(n).cloned())
            .collect::<Result<Vec<_>>>()?;
        let start = apply_unchecked(&p.start, &cache.mask);
        let entry = cache.entries.entry(key).or_insert_with(|| CacheEntry {
            start: start.clone(),
            skeleton: Vec::new(),
            uses: 0,
            successes: 0,
            p: laplace(0, 0),
        });
        if entry.uses == 0 {
            entry.record(true);
        }
        entry.start = start;
        entry.skeleton = skeleton;
    }
    Ok(res)
}
