//! Associative rules: a micro-situation implying later recognitions with a
//! frequentist probability.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::log::RecognitionLog;
use super::situation::{MicroSituation, Window};
use crate::error::{Error, Result};

/// Laplace-smoothed hit rate `(hits + 1) / (n + 2)`.
pub fn laplace(hits: u64, n: u64) -> f64 {
    (hits as f64 + 1.0) / (n as f64 + 2.0)
}

/// Predicted recognition, the window counted forward from the evaluation tick.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Consequent {
    pub subject: String,
    pub window: Window,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRule")]
pub struct AssociativeRule {
    pub condition: MicroSituation,
    pub consequent: Vec<Consequent>,
    /// The condition must score at least this much for the rule to fire.
    pub threshold: f64,
    pub hits: u64,
    pub support: u64,
    pub smoothed: bool,
    pub p: f64,
}

#[derive(Deserialize)]
struct RawRule {
    condition: MicroSituation,
    consequent: Vec<Consequent>,
    threshold: f64,
    hits: u64,
    support: u64,
    smoothed: bool,
    p: f64,
}

impl TryFrom<RawRule> for AssociativeRule {
    type Error = Error;

    fn try_from(r: RawRule) -> Result<Self> {
        let rule = AssociativeRule::new(r.condition, r.consequent, r.threshold)?
            .with_counts(r.hits, r.support, r.smoothed)?;
        if (rule.p - r.p).abs() > 1e-9 {
            return Err(Error::Precondition(format!(
                "p = {} does not match counters {}/{} (expected {})",
                r.p, r.hits, r.support, rule.p
            )));
        }
        Ok(rule)
    }
}

impl AssociativeRule {
    /// A rule with no evidence yet (p = 1/2 smoothed).
    pub fn new(condition: MicroSituation, consequent: Vec<Consequent>, threshold: f64) -> Result<Self> {
        if consequent.is_empty() {
            return Err(Error::Precondition("rule needs a consequent".into()));
        }
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(Error::Precondition(format!("threshold {threshold} outside (0,1]")));
        }
        Ok(AssociativeRule {
            condition,
            consequent,
            threshold,
            hits: 0,
            support: 0,
            smoothed: true,
            p: laplace(0, 0),
        })
    }

    pub fn with_counts(mut self, hits: u64, support: u64, smoothed: bool) -> Result<Self> {
        if hits > support {
            return Err(Error::Precondition(format!("{hits} hits exceed support {support}")));
        }
        if !smoothed && support == 0 {
            return Err(Error::Precondition("unsmoothed rate of zero trials".into()));
        }
        self.hits = hits;
        self.support = support;
        self.smoothed = smoothed;
        self.p = if smoothed {
            laplace(hits, support)
        } else {
            hits as f64 / support as f64
        };
        Ok(self)
    }

    /// All consequents lie strictly after the evaluation tick.
    pub fn is_predictive(&self) -> bool {
        self.consequent.iter().all(|c| c.window.lo() >= 1)
    }

    /// Every subject the rule mentions.
    pub fn subjects(&self) -> Vec<&str> {
        let mut v = self.condition.subjects();
        v.extend(self.consequent.iter().map(|c| c.subject.as_str()));
        v
    }

    /// Condition and consequent, without the counters.
    pub fn key(&self) -> String {
        let cons: Vec<String> = self
            .consequent
            .iter()
            .map(|c| format!("{}{}", c.subject, c.window))
            .collect();
        format!("{} => {}", self.condition, cons.join(" & "))
    }
}

impl fmt::Display for AssociativeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (p={:.4}, n={})", self.key(), self.p, self.support)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub subject: String,
    pub from: u64,
    pub to: u64,
    pub confidence: f64,
}

/// Predictions of a firing rule, ordered by window start; `None` if the
/// condition scores below the threshold.
pub fn eval_rule(rule: &AssociativeRule, log: &RecognitionLog, now: u64) -> Option<Vec<Prediction>> {
    let score = rule.condition.score(log, now);
    if score < rule.threshold {
        return None;
    }
    let mut out: Vec<Prediction> = rule
        .consequent
        .iter()
        .map(|c| {
            let (from, to) = c.window.after(now);
            Prediction {
                subject: c.subject.clone(),
                from,
                to,
                confidence: score * rule.p,
            }
        })
        .collect();
    out.sort_by(|a, b| (a.from, a.to, &a.subject).cmp(&(b.from, b.to, &b.subject)));
    Some(out)
}

/// Outcome of one firing checked against what happened next.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validation {
    pub t: u64,
    pub hit: bool,
}

/// Fires `rule` at every tick of `log` whose windows fit inside the log's
/// span; a firing is a hit when every predicted subject is recognized
/// (score at least the rule threshold) inside its window.
pub fn validate_rule(rule: &AssociativeRule, log: &RecognitionLog) -> Vec<Validation> {
    let Some((first, last)) = log.span() else {
        return Vec::new();
    };
    let back = rule.condition.members().iter().map(|m| m.window.hi()).max().unwrap_or(0);
    let ahead = rule.consequent.iter().map(|c| c.window.hi()).max().unwrap_or(0);
    let (Some(start), Some(end)) = (first.checked_add(back), last.checked_sub(ahead)) else {
        return Vec::new();
    };
    (start..=end)
        .filter_map(|t| {
            let preds = eval_rule(rule, log, t)?;
            let hit = preds
                .iter()
                .all(|p| log.best(&p.subject, p.from, p.to, rule.threshold).is_some());
            Some(Validation { t, hit })
        })
        .collect()
}
