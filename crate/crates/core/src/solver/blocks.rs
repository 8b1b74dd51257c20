//! Block worlds: stacks of sized blocks on a table, one block moved at a time.

use serde::{Deserialize, Serialize};

use super::problem::{Condition, Edit, Effect, Fact, Guard, Production, ProblemSpec, WILDCARD};
use crate::derivation::MorphismMask;
use crate::error::{Error, Result};
use crate::rules::{Member, MicroSituation, Recognizer, Subject, SubjectRegistry, Window};
use crate::structure::{Attrs, Structure};

pub const TABLE: &str = "table";
pub const ON: &str = "on";
pub const SIZE: &str = "size";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub id: String,
    /// Part type; goals name blocks by kind, so a renamed twin shares them.
    pub kind: String,
    pub size: i64,
}

impl Block {
    pub fn new(id: impl Into<String>, kind: impl Into<String>, size: i64) -> Self {
        Block {
            id: id.into(),
            kind: kind.into(),
            size,
        }
    }
}

/// Stacks list block ids bottom to top.
pub fn block_state(blocks: &[Block], stacks: &[Vec<&str>]) -> Result<Structure> {
    let mut s = Structure::new(true);
    s.add_part(TABLE, TABLE)?;
    for b in blocks {
        s.add_part_with(b.id.clone(), b.kind.clone(), Attrs::from([(SIZE.to_string(), b.size)]))?;
    }
    let mut placed = 0;
    for stack in stacks {
        let mut below = TABLE;
        for &id in stack {
            s.relate_ids(id, below, ON)?;
            below = id;
            placed += 1;
        }
    }
    if placed != blocks.len() {
        return Err(Error::Precondition("every block must sit in exactly one stack".into()));
    }
    Ok(s)
}

/// Moves of a clear block from what it stands on to the table or another
/// clear block: `move(x,from,to)`.
pub fn block_moves(blocks: &[Block]) -> Vec<Production> {
    let mut places: Vec<&str> = vec![TABLE];
    places.extend(blocks.iter().map(|b| b.id.as_str()));
    let mut out = Vec::new();
    for x in blocks.iter().map(|b| b.id.as_str()) {
        for &from in &places {
            for &to in &places {
                if from == x || to == x || from == to {
                    continue;
                }
                let mut forbids = vec![Fact::new(WILDCARD, ON, x)];
                if to != TABLE {
                    forbids.push(Fact::new(WILDCARD, ON, to));
                }
                out.push(Production {
                    name: format!("move({x},{from},{to})"),
                    guard: Guard {
                        situation: None,
                        requires: vec![Fact::new(x, ON, from)],
                        forbids,
                    },
                    effect: Effect::Edits(vec![Edit::Unrelate(Fact::new(x, ON, from)), Edit::Relate(Fact::new(x, ON, to))]),
                });
            }
        }
    }
    out
}

/// Subject `<upper>_on_<lower>` (kinds, or `table`) ignoring block sizes.
pub fn on_subject(upper: &str, lower: &str) -> Result<Subject> {
    let mut pat = Structure::new(true);
    pat.add_part("u", upper)?;
    pat.add_part("l", lower)?;
    pat.relate(0, 1, ON)?;
    Ok(Subject::new(
        format!("{upper}_on_{lower}"),
        Recognizer::Template {
            pattern: pat,
            mask: MorphismMask::new().drop_part_attr(SIZE),
            induced: false,
        },
    ))
}

/// Problem of rearranging `start` into `goal`; goal stacks list block kinds
/// bottom to top.
pub fn block_problem(blocks: &[Block], start: &[Vec<&str>], goal: &[Vec<&str>]) -> Result<ProblemSpec> {
    let mut subjects = SubjectRegistry::new();
    let mut members = Vec::new();
    for stack in goal {
        let mut below = TABLE;
        for &kind in stack {
            let s = on_subject(kind, below)?;
            members.push(Member::positive(s.id.clone(), Window::at(0)));
            subjects.insert(s)?;
            below = kind;
        }
    }
    ProblemSpec::new(
        block_state(blocks, start)?,
        subjects,
        block_moves(blocks),
        Condition::new(MicroSituation::new(members)?),
    )
}
