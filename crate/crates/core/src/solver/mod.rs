//! Production-system problem solving: legal moves, goal predicates over
//! recognitions, best-first search and a cache of reusable plans.

pub mod blocks;
pub mod cache;
pub mod problem;
pub mod search;

pub use cache::{solve_with_cache, CacheEntry, SolutionCache};
pub use problem::{
    apply_edits, expand, goal_satisfied, state_key, Condition, Edit, Effect, Fact, Guard, Heuristic, Production,
    ProblemSpec, StartSpec, Successor, WILDCARD,
};
pub use search::{plan_is_valid, replay, solve, SearchResult, Status};
