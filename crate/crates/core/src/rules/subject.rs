//! Cognitive subjects: named recognizers whose legitimacy is the number of
//! validated rules that reference them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::log::Recognition;
use super::rule::{laplace, AssociativeRule, Validation};
use crate::derivation::{apply_unchecked, MorphismMask};
use crate::error::{Error, Result};
use crate::matching::{embeds, induced_occurrences};
use crate::pixel::signature::{evaluate_signature, PropertyAssertion, Signature};
use crate::schema::{execute_traced, SchemaLibrary, DEFAULT_FUEL};
use crate::structure::Structure;

/// What a recognizer looks at.
#[derive(Clone, Copy, Debug)]
pub struct Observation<'a> {
    pub structure: &'a Structure,
    pub assertions: &'a [PropertyAssertion],
}

impl<'a> Observation<'a> {
    pub fn of(structure: &'a Structure) -> Self {
        Observation {
            structure,
            assertions: &[],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recognizer {
    /// Fuzzy score of a property signature over the observation's assertions.
    Signature(Signature),
    /// 1 when the masked pattern occurs in the masked observation: as an
    /// induced sub-structure, or with extra host relations allowed when
    /// `induced` is false.
    Template {
        pattern: Structure,
        #[serde(default)]
        mask: MorphismMask,
        #[serde(default = "yes")]
        induced: bool,
    },
    /// 1 when the named schema ends with its flag set.
    Schema { schema: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub id: String,
    pub recognizer: Recognizer,
    /// Derivation record ids in a lineage store.
    #[serde(default)]
    pub lineage: Vec<usize>,
    #[serde(default)]
    pub legitimacy: u64,
    /// No validated rule references the subject yet.
    #[serde(default = "yes")]
    pub candidate_only: bool,
}

fn yes() -> bool {
    true
}

impl Subject {
    pub fn new(id: impl Into<String>, recognizer: Recognizer) -> Self {
        Subject {
            id: id.into(),
            recognizer,
            lineage: Vec::new(),
            legitimacy: 0,
            candidate_only: true,
        }
    }

    /// One score in `[0, 1]`.
    pub fn score(&self, obs: Observation<'_>, lib: &SchemaLibrary) -> Result<f64> {
        Ok(match &self.recognizer {
            Recognizer::Signature(sig) => evaluate_signature(sig, obs.assertions).score.clamp(0.0, 1.0),
            Recognizer::Template { pattern, mask, induced } => {
                let host = apply_unchecked(obs.structure, mask);
                let pat = apply_unchecked(pattern, mask);
                let found = if pat.is_empty() {
                    true
                } else if *induced {
                    !induced_occurrences(&pat, &host).is_empty()
                } else {
                    embeds(&pat, &host)
                };
                found as u8 as f64
            }
            Recognizer::Schema { schema } => {
                let out = execute_traced(lib.get(schema)?, lib, obs.structure, DEFAULT_FUEL)?;
                out.flag as u8 as f64
            }
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SubjectRegistry {
    subjects: BTreeMap<String, Subject>,
    #[serde(default, skip_serializing_if = "SchemaLibrary::is_empty")]
    pub schemas: SchemaLibrary,
}

impl SubjectRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, s: Subject) -> Result<()> {
        if self.subjects.contains_key(&s.id) {
            return Err(Error::Precondition(format!("subject `{}` registered twice", s.id)));
        }
        self.subjects.insert(s.id.clone(), s);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<&Subject> {
        self.subjects.get(id).ok_or_else(|| Error::UnknownSubject(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.subjects.contains_key(id)
    }

    pub fn subjects(&self) -> impl Iterator<Item = &Subject> {
        self.subjects.values()
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    /// Recognitions at tick `t` of every subject scoring above zero, in id order.
    pub fn recognize(&self, obs: Observation<'_>, t: u64) -> Result<Vec<Recognition>> {
        let mut out = Vec::new();
        for s in self.subjects.values() {
            let score = s.score(obs, &self.schemas)?;
            if score > 0.0 {
                out.push(Recognition::new(t, s.id.clone(), score)?);
            }
        }
        Ok(out)
    }
}

/// Recomputes legitimacy: the number of rules referencing a subject whose
/// smoothed hit rate over its validations reaches `threshold`. Validations
/// name rules by index into `rules`.
pub fn update_legitimacy(
    subjects: &[Subject],
    rules: &[AssociativeRule],
    validations: &[(usize, Validation)],
    threshold: f64,
) -> Result<Vec<Subject>> {
    let mut counts = vec![(0u64, 0u64); rules.len()];
    for (i, v) in validations {
        let c = counts
            .get_mut(*i)
            .ok_or_else(|| Error::Precondition(format!("validation names rule {i} of {}", rules.len())))?;
        c.1 += 1;
        c.0 += v.hit as u64;
    }
    let validated: Vec<&AssociativeRule> = rules
        .iter()
        .zip(&counts)
        .filter(|(_, &(h, n))| n > 0 && laplace(h, n) >= threshold)
        .map(|(r, _)| r)
        .collect();
    Ok(subjects
        .iter()
        .map(|s| {
            let legitimacy = validated
                .iter()
                .filter(|r| r.subjects().contains(&s.id.as_str()))
                .count() as u64;
            Subject {
                legitimacy,
                candidate_only: legitimacy == 0,
                ..s.clone()
            }
        })
        .collect())
}
