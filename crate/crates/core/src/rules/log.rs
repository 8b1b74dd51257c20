//! Recognition logs: timestamped subject recognitions with a score.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::strip_comment;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recognition {
    pub t: u64,
    pub subject: String,
    pub score: f64,
}

impl Recognition {
    pub fn new(t: u64, subject: impl Into<String>, score: f64) -> Result<Self> {
        let subject = subject.into();
        if subject.is_empty() || subject.chars().any(|c| c.is_whitespace() || c == '=') {
            return Err(Error::Precondition(format!("invalid subject id `{subject}`")));
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::Precondition(format!("score {score} outside [0,1]")));
        }
        Ok(Recognition { t, subject, score })
    }
}

impl fmt::Display for Recognition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={} subj={} score={}", self.t, self.subject, self.score)
    }
}

/// Tick-sorted recognitions with a per-subject index.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Recognition>", into = "Vec<Recognition>")]
pub struct RecognitionLog {
    events: Vec<Recognition>,
    by_subject: BTreeMap<String, Vec<(u64, f64)>>,
}

impl TryFrom<Vec<Recognition>> for RecognitionLog {
    type Error = Error;

    fn try_from(v: Vec<Recognition>) -> Result<Self> {
        let mut log = RecognitionLog::new();
        for r in v {
            log.push(r)?;
        }
        Ok(log)
    }
}

impl From<RecognitionLog> for Vec<Recognition> {
    fn from(log: RecognitionLog) -> Self {
        log.events
    }
}

impl RecognitionLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends; ticks may repeat but never decrease.
    pub fn push(&mut self, r: Recognition) -> Result<()> {
        Recognition::new(r.t, r.subject.clone(), r.score)?;
        if let Some(last) = self.events.last() {
            if r.t < last.t {
                return Err(Error::Precondition(format!(
                    "tick {} after tick {}: log must be tick-sorted",
                    r.t, last.t
                )));
            }
        }
        self.by_subject
            .entry(r.subject.clone())
            .or_default()
            .push((r.t, r.score));
        self.events.push(r);
        Ok(())
    }

    /// Sorts by tick (stable) before building the log.
    pub fn from_unsorted(mut events: Vec<Recognition>) -> Result<Self> {
        events.sort_by_key(|r| r.t);
        Self::try_from(events)
    }

    /// One `t=<tick> subj=<id> score=<x>` line per event; `#` comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut log = RecognitionLog::new();
        for (n, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: n + 1, msg };
            let (mut t, mut subj, mut score) = (None, None, None);
            for tok in line.split_whitespace() {
                let (k, v) = tok
                    .split_once('=')
                    .ok_or_else(|| perr(format!("expected key=value, got `{tok}`")))?;
                match k {
                    "t" => t = Some(v.parse::<u64>().map_err(|e| perr(format!("tick: {e}")))?),
                    "subj" => subj = Some(v.to_string()),
                    "score" => score = Some(v.parse::<f64>().map_err(|e| perr(format!("score: {e}")))?),
                    _ => return Err(perr(format!("unknown key `{k}`"))),
                }
            }
            let (Some(t), Some(subj), Some(score)) = (t, subj, score) else {
                return Err(perr("need t=, subj= and score=".into()));
            };
            let r = Recognition::new(t, subj, score).map_err(|e| perr(e.to_string()))?;
            log.push(r).map_err(|e| perr(e.to_string()))?;
        }
        Ok(log)
    }

    pub fn to_text(&self) -> String {
        self.events.iter().map(|r| format!("{r}\n")).collect()
    }

    pub fn events(&self) -> &[Recognition] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// First and last tick.
    pub fn span(&self) -> Option<(u64, u64)> {
        Some((self.events.first()?.t, self.events.last()?.t))
    }

    pub fn subjects(&self) -> BTreeSet<&str> {
        self.by_subject.keys().map(String::as_str).collect()
    }

    /// Recognitions of `subject` with tick in `[from, to]`, in tick order.
    pub fn between(&self, subject: &str, from: u64, to: u64) -> &[(u64, f64)] {
        let Some(v) = self.by_subject.get(subject) else {
            return &[];
        };
        if from > to {
            return &[];
        }
        let lo = v.partition_point(|&(t, _)| t < from);
        let hi = v.partition_point(|&(t, _)| t <= to);
        &v[lo..hi]
    }

    /// Highest score of `subject` in `[from, to]` among scores `>= floor`.
    pub fn best(&self, subject: &str, from: u64, to: u64, floor: f64) -> Option<f64> {
        self.between(subject, from, to)
            .iter()
            .map(|&(_, s)| s)
            .filter(|&s| s >= floor)
            .fold(None, |m, s| Some(m.map_or(s, |m: f64| m.max(s))))
    }

    /// Every tick moved by `delta`.
    pub fn shifted(&self, delta: i64) -> Result<Self> {
        let events = self
            .events
            .iter()
            .map(|r| {
                let t = r.t.checked_add_signed(delta).ok_or_else(|| {
                    Error::Precondition(format!("tick {} shifted by {delta} leaves range", r.t))
                })?;
                Ok(Recognition { t, ..r.clone() })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::try_from(events)
    }
}
