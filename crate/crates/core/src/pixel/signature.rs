//! Property assertions and signatures: many explicit checks converging on a
//! single recognition score.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "ref")]
pub enum Target {
    Whole,
    Part(String),
    Pair(String, String),
    Block(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Value {
    Bool(bool),
    Score(f64),
    Bin(i64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyAssertion {
    pub target: Target,
    pub feature: String,
    pub value: Value,
}

impl PropertyAssertion {
    pub fn new(target: Target, feature: impl Into<String>, value: Value) -> Self {
        PropertyAssertion {
            target,
            feature: feature.into(),
            value,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetPattern {
    Whole,
    AnyPart,
    AnyPair,
    AnyBlock,
}

impl TargetPattern {
    pub fn of(t: &Target) -> Self {
        match t {
            Target::Whole => TargetPattern::Whole,
            Target::Part(_) => TargetPattern::AnyPart,
            Target::Pair(..) => TargetPattern::AnyPair,
            Target::Block(_) => TargetPattern::AnyBlock,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Requirement {
    pub feature: String,
    pub pattern: TargetPattern,
    /// Value to match; `None` takes the assertion's own score.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Value>,
    #[serde(default)]
    pub min_score: f64,
}

impl Requirement {
    pub fn whole(feature: &str, expected: Value) -> Self {
        Requirement {
            feature: feature.into(),
            pattern: TargetPattern::Whole,
            expected: Some(expected),
            min_score: 0.5,
        }
    }

    fn key(&self) -> String {
        let exp = match self.expected {
            None => "*".to_string(),
            Some(Value::Bool(b)) => format!("b{b}"),
            Some(Value::Bin(b)) => format!("n{b}"),
            Some(Value::Score(s)) => format!("s{s}"),
        };
        format!("{}|{:?}|{exp}", self.feature, self.pattern)
    }

    /// Best score of a matching assertion, zero when below `min_score`.
    pub fn matched(&self, assertions: &[PropertyAssertion]) -> f64 {
        let best = assertions
            .iter()
            .filter(|a| a.feature == self.feature && TargetPattern::of(&a.target) == self.pattern)
            .map(|a| score_against(a.value, self.expected))
            .fold(0.0, f64::max);
        if best < self.min_score {
            0.0
        } else {
            best
        }
    }
}

fn score_against(v: Value, expected: Option<Value>) -> f64 {
    let own = match v {
        Value::Bool(b) => b as u8 as f64,
        Value::Score(s) => s.clamp(0.0, 1.0),
        Value::Bin(_) => 1.0,
    };
    match (v, expected) {
        (_, None) => own,
        (Value::Bool(a), Some(Value::Bool(b))) => (a == b) as u8 as f64,
        (Value::Bin(a), Some(Value::Bin(b))) => (a == b) as u8 as f64,
        (Value::Score(s), Some(Value::Score(t))) => (s >= t) as u8 as f64,
        _ => 0.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Signature {
    pub subject: String,
    pub required: Vec<Requirement>,
    #[serde(default)]
    pub forbidden: Vec<Requirement>,
    pub threshold: f64,
}

impl Signature {
    pub fn new(
        subject: impl Into<String>,
        required: Vec<Requirement>,
        forbidden: Vec<Requirement>,
        threshold: f64,
    ) -> Result<Self> {
        if required.is_empty() {
            return Err(Error::Precondition("signature needs a required feature".into()));
        }
        Ok(Signature {
            subject: subject.into(),
            required,
            forbidden,
            threshold,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignatureResult {
    pub subject: String,
    pub score: f64,
    pub fired: bool,
}

/// Minimum over required matches times minimum over forbidden complements.
pub fn evaluate_signature(sig: &Signature, assertions: &[PropertyAssertion]) -> SignatureResult {
    let req = sig
        .required
        .iter()
        .map(|r| r.matched(assertions))
        .fold(1.0, f64::min);
    let forb = sig
        .forbidden
        .iter()
        .map(|r| 1.0 - r.matched(assertions))
        .fold(1.0, f64::min);
    let score = if sig.required.is_empty() { 0.0 } else { req * forb };
    SignatureResult {
        subject: sig.subject.clone(),
        score,
        fired: score >= sig.threshold,
    }
}

/// The polygon class signatures used by the demo corpus.
pub fn standard_signatures() -> Vec<Signature> {
    let closed = || Requirement::whole("closed", Value::Bool(true));
    let sides = |n| Requirement::whole("side_count", Value::Bin(n));
    let regular = || Requirement::whole("regular", Value::Bool(true));
    vec![
        Signature::new("triangle", vec![closed(), sides(3)], vec![], 0.5),
        Signature::new("quadrilateral", vec![closed(), sides(4)], vec![], 0.5),
        Signature::new("hexagon", vec![closed(), sides(6)], vec![], 0.5),
        Signature::new(
            "regular-polygon",
            vec![
                closed(),
                Requirement::whole("all_lengths_equal", Value::Bool(true)),
                Requirement::whole("all_angles_equal", Value::Bool(true)),
            ],
            vec![],
            0.5,
        ),
        Signature::new("irregular-polygon", vec![closed()], vec![regular()], 0.5),
    ]
    .into_iter()
    .map(|s| s.expect("non-empty required sets"))
    .collect()
}

/// Requirements satisfied by one assertion set: booleans that hold, scores
/// at or above `min_score`, and exact bins.
fn present(assertions: &[PropertyAssertion], min_score: f64) -> BTreeMap<String, Requirement> {
    let mut out = BTreeMap::new();
    for a in assertions {
        let (expected, ok) = match a.value {
            Value::Bool(b) => (Some(Value::Bool(true)), b),
            Value::Score(s) => (None, s >= min_score),
            Value::Bin(b) => (Some(Value::Bin(b)), true),
        };
        if !ok {
            continue;
        }
        let r = Requirement {
            feature: a.feature.clone(),
            pattern: TargetPattern::of(&a.target),
            expected,
            min_score,
        };
        out.insert(r.key(), r);
    }
    out
}

/// Candidate signatures for the class the examples share: the requirements
/// present in every example, then the whole-structure subset of it when
/// that differs. Ranked by requirement count, largest first.
pub fn build_signature_candidates(
    examples: &[Vec<PropertyAssertion>],
    min_score: f64,
) -> Vec<Signature> {
    let Some(first) = examples.first() else {
        return Vec::new();
    };
    let mut common = present(first, min_score);
    for ex in &examples[1..] {
        let here = present(ex, min_score);
        common.retain(|k, _| here.contains_key(k));
    }
    if common.is_empty() {
        return Vec::new();
    }
    let full: Vec<Requirement> = common.values().cloned().collect();
    let whole: Vec<Requirement> = full
        .iter()
        .filter(|r| r.pattern == TargetPattern::Whole)
        .cloned()
        .collect();
    let mut out = vec![Signature {
        subject: "candidate-0".into(),
        required: full.clone(),
        forbidden: vec![],
        threshold: min_score,
    }];
    if !whole.is_empty() && whole.len() < full.len() {
        out.push(Signature {
            subject: "candidate-1".into(),
            required: whole,
            forbidden: vec![],
            threshold: min_score,
        });
    }
    out.sort_by(|a, b| b.required.len().cmp(&a.required.len()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn whole(feature: &str, v: Value) -> PropertyAssertion {
        PropertyAssertion::new(Target::Whole, feature, v)
    }

    #[test]
    fn forbidden_feature_blocks() {
        let sig = &standard_signatures()[4];
        let mut a = vec![whole("closed", Value::Bool(true))];
        assert!(evaluate_signature(sig, &a).fired);
        a.push(whole("regular", Value::Bool(true)));
        assert!(!evaluate_signature(sig, &a).fired);
    }

    #[test]
    fn empty_required_is_rejected() {
        assert!(Signature::new("x", vec![], vec![], 0.5).is_err());
    }

    #[test]
    fn min_score_gate() {
        let r = Requirement {
            feature: "is_straight".into(),
            pattern: TargetPattern::AnyPart,
            expected: None,
            min_score: 0.6,
        };
        let a = vec![PropertyAssertion::new(Target::Part("s0".into()), "is_straight", Value::Score(0.5))];
        assert_eq!(r.matched(&a), 0.0);
        let b = vec![PropertyAssertion::new(Target::Part("s0".into()), "is_straight", Value::Score(0.7))];
        assert_eq!(r.matched(&b), 0.7);
    }

    #[test]
    fn single_example_gives_its_full_set() {
        let ex = vec![
            whole("closed", Value::Bool(true)),
            whole("side_count", Value::Bin(3)),
            PropertyAssertion::new(Target::Part("s0".into()), "len_bin", Value::Bin(4)),
        ];
        let c = build_signature_candidates(&[ex], 0.5);
        assert_eq!(c[0].required.len(), 3);
    }
}
