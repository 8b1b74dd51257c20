//! Production systems over structures: guards, effects, goals.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::canon::canonical_hash;
use crate::error::{Error, Result};
use crate::rules::{Member, MicroSituation, Observation, RecognitionLog, SubjectRegistry};
use crate::schema::{execute, SchemaLibrary, DEFAULT_FUEL};
use crate::structure::{Attrs, Part, Relation, Structure};

/// Matches any part in a [`Fact`] endpoint.
pub const WILDCARD: &str = "*";

/// A relation `from -label-> to` between parts named by id or [`WILDCARD`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Fact {
    pub from: String,
    pub label: String,
    pub to: String,
}

impl Fact {
    pub fn new(from: impl Into<String>, label: impl Into<String>, to: impl Into<String>) -> Self {
        Fact {
            from: from.into(),
            label: label.into(),
            to: to.into(),
        }
    }

    pub fn holds(&self, s: &Structure) -> bool {
        let is = |want: &str, i: usize| want == WILDCARD || s.part(i).id == want;
        s.relations().iter().any(|r| {
            r.label == self.label
                && ((is(&self.from, r.a) && is(&self.to, r.b))
                    || (!s.oriented() && is(&self.from, r.b) && is(&self.to, r.a)))
        })
    }

    fn mapped(&self, f: &impl Fn(&str) -> String) -> Fact {
        Fact::new(f(&self.from), self.label.clone(), f(&self.to))
    }
}

/// A micro-situation over a state's recognitions and the score it must reach.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub situation: MicroSituation,
    #[serde(default = "one")]
    pub threshold: f64,
}

fn one() -> f64 {
    1.0
}

impl Condition {
    pub fn new(situation: MicroSituation) -> Self {
        Condition {
            situation,
            threshold: 1.0,
        }
    }

    pub fn holds(&self, log: &RecognitionLog) -> bool {
        self.situation.score(log, 0) >= self.threshold
    }

    /// Members scoring below the threshold.
    pub fn unmet(&self, log: &RecognitionLog) -> usize {
        self.situation
            .members()
            .iter()
            .filter(|m: &&Member| m.score(log, 0) < self.threshold)
            .count()
    }

    pub fn key(&self) -> String {
        format!("{} >= {}", self.situation, self.threshold)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Guard {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub situation: Option<Condition>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub requires: Vec<Fact>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forbids: Vec<Fact>,
}

/// Structural edit. Relating is idempotent; unrelating removes every
/// matching relation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Edit {
    AddPart {
        id: String,
        ty: String,
        #[serde(default, skip_serializing_if = "Attrs::is_empty")]
        attrs: Attrs,
    },
    RemovePart { id: String },
    SetType { part: String, ty: String },
    SetAttr { part: String, name: String, value: i64 },
    DropAttr { part: String, name: String },
    Relate(Fact),
    Unrelate(Fact),
}

impl Edit {
    fn ids(&self) -> Vec<&str> {
        match self {
            Edit::AddPart { id, .. } | Edit::RemovePart { id } => vec![id],
            Edit::SetType { part, .. } | Edit::SetAttr { part, .. } | Edit::DropAttr { part, .. } => vec![part],
            Edit::Relate(f) | Edit::Unrelate(f) => vec![&f.from, &f.to],
        }
    }

    fn mapped(&self, f: &impl Fn(&str) -> String) -> Edit {
        match self {
            Edit::AddPart { id, ty, attrs } => Edit::AddPart {
                id: f(id),
                ty: ty.clone(),
                attrs: attrs.clone(),
            },
            Edit::RemovePart { id } => Edit::RemovePart { id: f(id) },
            Edit::SetType { part, ty } => Edit::SetType {
                part: f(part),
                ty: ty.clone(),
            },
            Edit::SetAttr { part, name, value } => Edit::SetAttr {
                part: f(part),
                name: name.clone(),
                value: *value,
            },
            Edit::DropAttr { part, name } => Edit::DropAttr {
                part: f(part),
                name: name.clone(),
            },
            Edit::Relate(x) => Edit::Relate(x.mapped(f)),
            Edit::Unrelate(x) => Edit::Unrelate(x.mapped(f)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    Edits(Vec<Edit>),
    /// Runs the named schema of the problem's library on the state.
    Schema(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Production {
    pub name: String,
    #[serde(default)]
    pub guard: Guard,
    pub effect: Effect,
}

impl Production {
    /// Same production with every non-wildcard part id passed through `f`.
    pub fn mapped(&self, f: impl Fn(&str) -> String) -> Production {
        let g = |id: &str| if id == WILDCARD { id.to_string() } else { f(id) };
        Production {
            name: self.name.clone(),
            guard: Guard {
                situation: self.guard.situation.clone(),
                requires: self.guard.requires.iter().map(|x| x.mapped(&g)).collect(),
                forbids: self.guard.forbids.iter().map(|x| x.mapped(&g)).collect(),
            },
            effect: match &self.effect {
                Effect::Edits(es) => Effect::Edits(es.iter().map(|e| e.mapped(&g)).collect()),
                Effect::Schema(s) => Effect::Schema(s.clone()),
            },
        }
    }

    /// Equal up to the name.
    pub fn same_move(&self, other: &Production) -> bool {
        self.guard == other.guard && self.effect == other.effect
    }
}

pub fn apply_edits(s: &Structure, edits: &[Edit]) -> Result<Structure> {
    let mut parts: Vec<Part> = s.parts().to_vec();
    // relations by endpoint id
    let mut rels: Vec<(String, String, String, Attrs)> = s
        .relations()
        .iter()
        .map(|r| (s.part(r.a).id.clone(), s.part(r.b).id.clone(), r.label.clone(), r.attrs.clone()))
        .collect();
    let find = |parts: &[Part], id: &str| {
        parts
            .iter()
            .position(|p| p.id == id)
            .ok_or_else(|| Error::UnknownPart(id.to_string()))
    };
    let same = |r: &(String, String, String, Attrs), f: &Fact| {
        r.2 == f.label && ((r.0 == f.from && r.1 == f.to) || (!s.oriented() && r.0 == f.to && r.1 == f.from))
    };
    for e in edits {
        match e {
            Edit::AddPart { id, ty, attrs } => {
                if parts.iter().any(|p| p.id == *id) {
                    return Err(Error::DuplicatePart(id.clone()));
                }
                parts.push(Part {
                    id: id.clone(),
                    ty: ty.clone(),
                    attrs: attrs.clone(),
                });
            }
            Edit::RemovePart { id } => {
                let i = find(&parts, id)?;
                parts.remove(i);
                rels.retain(|r| r.0 != *id && r.1 != *id);
            }
            Edit::SetType { part, ty } => {
                let i = find(&parts, part)?;
                parts[i].ty = ty.clone();
            }
            Edit::SetAttr { part, name, value } => {
                let i = find(&parts, part)?;
                parts[i].attrs.insert(name.clone(), *value);
            }
            Edit::DropAttr { part, name } => {
                let i = find(&parts, part)?;
                parts[i].attrs.remove(name);
            }
            Edit::Relate(f) => {
                if f.from == WILDCARD || f.to == WILDCARD {
                    return Err(Error::Precondition("cannot relate a wildcard".into()));
                }
                find(&parts, &f.from)?;
                find(&parts, &f.to)?;
                if !rels.iter().any(|r| same(r, f)) {
                    rels.push((f.from.clone(), f.to.clone(), f.label.clone(), Attrs::new()));
                }
            }
            Edit::Unrelate(f) => {
                let matches = |r: &(String, String, String, Attrs)| {
                    let fr = Fact::new(
                        if f.from == WILDCARD { r.0.clone() } else { f.from.clone() },
                        f.label.clone(),
                        if f.to == WILDCARD { r.1.clone() } else { f.to.clone() },
                    );
                    same(r, &fr)
                };
                rels.retain(|r| !matches(r));
            }
        }
    }
    let relations = rels
        .into_iter()
        .map(|(a, b, label, attrs)| {
            Ok(Relation {
                a: find(&parts, &a)?,
                b: find(&parts, &b)?,
                label,
                attrs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Structure::from_parts(s.oriented(), parts, relations)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heuristic {
    #[default]
    Zero,
    /// Goal members not yet met. Not admissible in general.
    UnmetMembers,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProblem", into = "RawProblem")]
pub struct ProblemSpec {
    pub start: Structure,
    pub subjects: SubjectRegistry,
    pub schemas: SchemaLibrary,
    pub productions: Vec<Production>,
    pub goal: Condition,
    /// States to avoid; successors matching any are never entered.
    pub undesired: Vec<Condition>,
    pub heuristic: Heuristic,
    /// Step budget of each schema effect.
    pub fuel: u64,
}

/// Start state of a problem file: `.struct` text or a set of recognized
/// subject ids (one part per subject, typed by the id).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartSpec {
    Structure(String),
    Recognitions(Vec<String>),
}

#[derive(Clone, Serialize, Deserialize)]
struct RawProblem {
    start: StartSpec,
    #[serde(default)]
    subjects: SubjectRegistry,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    schemas: String,
    productions: Vec<Production>,
    goal: Condition,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    undesired: Vec<Condition>,
    #[serde(default)]
    heuristic: Heuristic,
    #[serde(default = "default_fuel")]
    fuel: u64,
}

fn default_fuel() -> u64 {
    DEFAULT_FUEL
}

pub fn recognition_state(ids: &[String]) -> Result<Structure> {
    let mut s = Structure::new(false);
    for id in ids {
        s.add_part(id.clone(), id.clone())?;
    }
    Ok(s)
}

impl TryFrom<RawProblem> for ProblemSpec {
    type Error = Error;

    fn try_from(r: RawProblem) -> Result<Self> {
        let start = match r.start {
            StartSpec::Structure(text) => Structure::from_text(&text)?,
            StartSpec::Recognitions(ids) => recognition_state(&ids)?,
        };
        let p = ProblemSpec {
            start,
            subjects: r.subjects,
            schemas: SchemaLibrary::from_text(&r.schemas)?,
            productions: r.productions,
            goal: r.goal,
            undesired: r.undesired,
            heuristic: r.heuristic,
            fuel: r.fuel,
        };
        p.check()?;
        Ok(p)
    }
}

impl From<ProblemSpec> for RawProblem {
    fn from(p: ProblemSpec) -> Self {
        RawProblem {
            start: StartSpec::Structure(p.start.to_text()),
            subjects: p.subjects,
            schemas: p.schemas.to_text(),
            productions: p.productions,
            goal: p.goal,
            undesired: p.undesired,
            heuristic: p.heuristic,
            fuel: p.fuel,
        }
    }
}

impl ProblemSpec {
    pub fn new(start: Structure, subjects: SubjectRegistry, productions: Vec<Production>, goal: Condition) -> Result<Self> {
        let p = ProblemSpec {
            start,
            subjects,
            schemas: SchemaLibrary::new(),
            productions,
            goal,
            undesired: Vec::new(),
            heuristic: Heuristic::Zero,
            fuel: DEFAULT_FUEL,
        };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if self.fuel == 0 {
            return Err(Error::Precondition("schema fuel must be positive".into()));
        }
        if self.productions.is_empty() {
            return Err(Error::Precondition("a problem needs at least one production".into()));
        }
        let mut names = BTreeSet::new();
        for pr in &self.productions {
            if !names.insert(pr.name.as_str()) {
                return Err(Error::Precondition(format!("production `{}` defined twice", pr.name)));
            }
            if let Effect::Schema(s) = &pr.effect {
                self.schemas.check_nesting(self.schemas.get(s)?)?;
            }
        }
        let conds = std::iter::once(&self.goal)
            .chain(&self.undesired)
            .chain(self.productions.iter().filter_map(|p| p.guard.situation.as_ref()));
        for c in conds {
            if !(c.threshold > 0.0 && c.threshold <= 1.0) {
                return Err(Error::Precondition(format!("threshold {} outside (0,1]", c.threshold)));
            }
            for s in c.situation.subjects() {
                self.subjects.get(s)?;
            }
        }
        Ok(())
    }

    pub fn production(&self, name: &str) -> Result<&Production> {
        self.productions
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::Precondition(format!("unknown production `{name}`")))
    }

    /// Recognitions of every registered subject on `state`, at tick 0.
    pub fn recognitions(&self, state: &Structure) -> Result<RecognitionLog> {
        RecognitionLog::try_from(self.subjects.recognize(Observation::of(state), 0)?)
    }

    pub fn guard_holds(&self, pr: &Production, state: &Structure, log: Option<&RecognitionLog>) -> Result<bool> {
        let g = &pr.guard;
        if !g.requires.iter().all(|f| f.holds(state)) || g.forbids.iter().any(|f| f.holds(state)) {
            return Ok(false);
        }
        Ok(match &g.situation {
            None => true,
            Some(c) => match log {
                Some(l) => c.holds(l),
                None => c.holds(&self.recognitions(state)?),
            },
        })
    }

    pub fn apply(&self, pr: &Production, state: &Structure) -> Result<Structure> {
        match &pr.effect {
            Effect::Edits(es) => apply_edits(state, es),
            Effect::Schema(name) => execute(self.schemas.get(name)?, &self.schemas, state, self.fuel),
        }
    }

    /// Part ids named by productions; states differing only in the roles of
    /// these parts are different states.
    pub fn anchors(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for pr in &self.productions {
            for f in pr.guard.requires.iter().chain(&pr.guard.forbids) {
                out.insert(f.from.clone());
                out.insert(f.to.clone());
            }
            if let Effect::Edits(es) = &pr.effect {
                for e in es {
                    out.extend(e.ids().into_iter().map(str::to_string));
                }
            }
        }
        out.remove(WILDCARD);
        out
    }
}

/// Canonical hash with anchored part ids folded into their types.
pub fn state_key(s: &Structure, anchors: &BTreeSet<String>) -> String {
    if anchors.is_empty() {
        return canonical_hash(s);
    }
    let parts = s
        .parts()
        .iter()
        .map(|p| Part {
            id: p.id.clone(),
            ty: if anchors.contains(&p.id) {
                format!("{}@{}", p.ty, p.id)
            } else {
                p.ty.clone()
            },
            attrs: p.attrs.clone(),
        })
        .collect();
    let anchored = Structure::from_parts(s.oriented(), parts, s.relations().to_vec()).expect("same ids as a valid structure");
    canonical_hash(&anchored)
}

/// One legal move out of a state.
#[derive(Debug)]
pub struct Successor {
    pub production: usize,
    pub state: Result<Structure>,
}

/// Every production whose guard holds on `state`, in declaration order,
/// with the state its effect produces (or the effect's error).
pub fn expand(state: &Structure, p: &ProblemSpec) -> Result<Vec<Successor>> {
    let needs_log = p.productions.iter().any(|pr| pr.guard.situation.is_some());
    let log = if needs_log { Some(p.recognitions(state)?) } else { None };
    let mut out = Vec::new();
    for (i, pr) in p.productions.iter().enumerate() {
        if p.guard_holds(pr, state, log.as_ref())? {
            out.push(Successor {
                production: i,
                state: p.apply(pr, state),
            });
        }
    }
    Ok(out)
}

/// Evaluates `goal` on the recognitions `subjects` make of `state`.
pub fn goal_satisfied(state: &Structure, goal: &Condition, subjects: &SubjectRegistry) -> Result<bool> {
    for s in goal.situation.subjects() {
        subjects.get(s)?;
    }
    let log = RecognitionLog::try_from(subjects.recognize(Observation::of(state), 0)?)?;
    Ok(goal.holds(&log))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(oriented: bool) -> Structure {
        let mut s = Structure::new(oriented);
        s.add_part("x", "t").unwrap();
        s.add_part("y", "t").unwrap();
        s.relate(0, 1, "on").unwrap();
        s
    }

    #[test]
    fn facts_respect_orientation_and_wildcards() {
        let o = pair(true);
        assert!(Fact::new("x", "on", "y").holds(&o));
        assert!(!Fact::new("y", "on", "x").holds(&o));
        assert!(Fact::new(WILDCARD, "on", "y").holds(&o));
        assert!(!Fact::new(WILDCARD, "on", "x").holds(&o));
        assert!(Fact::new("y", "on", "x").holds(&pair(false)));
    }

    #[test]
    fn edits_apply_in_order() {
        let s = pair(true);
        let out = apply_edits(
            &s,
            &[
                Edit::Relate(Fact::new("x", "on", "y")),
                Edit::AddPart { id: "z".into(), ty: "u".into(), attrs: Attrs::new() },
                Edit::Relate(Fact::new("z", "on", "x")),
                Edit::Unrelate(Fact::new(WILDCARD, "on", "y")),
                Edit::SetAttr { part: "z".into(), name: "size".into(), value: 3 },
            ],
        )
        .unwrap();
        assert_eq!(out.relations().len(), 1);
        assert!(Fact::new("z", "on", "x").holds(&out));
        assert_eq!(out.part(2).attrs["size"], 3);
        let gone = apply_edits(&out, &[Edit::RemovePart { id: "x".into() }]).unwrap();
        assert_eq!((gone.len(), gone.relations().len()), (2, 0));
        assert!(apply_edits(&s, &[Edit::SetType { part: "w".into(), ty: "t".into() }]).is_err());
        assert!(apply_edits(&s, &[Edit::AddPart { id: "x".into(), ty: "t".into(), attrs: Attrs::new() }]).is_err());
    }

    #[test]
    fn anchors_separate_symmetric_states() {
        let s = pair(true);
        let mut flipped = Structure::new(true);
        flipped.add_part("x", "t").unwrap();
        flipped.add_part("y", "t").unwrap();
        flipped.relate(1, 0, "on").unwrap();
        let none = BTreeSet::new();
        assert_eq!(state_key(&s, &none), state_key(&flipped, &none));
        let both: BTreeSet<String> = ["x".to_string(), "y".to_string()].into();
        assert_ne!(state_key(&s, &both), state_key(&flipped, &both));
    }
}
