//! Micro-situations: a few subject recognitions in relative time windows,
//! evaluated with min / max / 1-x fuzzy semantics.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::log::RecognitionLog;
use crate::error::{Error, Result};

pub const MAX_MEMBERS: usize = 8;

/// Inclusive tick interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "(u64, u64)", into = "(u64, u64)")]
pub struct Window {
    lo: u64,
    hi: u64,
}

impl Window {
    pub fn new(lo: u64, hi: u64) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidSituation(format!("window [{lo},{hi}] has lo > hi")));
        }
        Ok(Window { lo, hi })
    }

    pub fn at(t: u64) -> Self {
        Window { lo: t, hi: t }
    }

    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    /// Absolute ticks `[now - hi, now - lo]`; `None` when entirely before 0.
    pub fn before(&self, now: u64) -> Option<(u64, u64)> {
        (now >= self.lo).then(|| (now.saturating_sub(self.hi), now - self.lo))
    }

    /// Absolute ticks `[now + lo, now + hi]`.
    pub fn after(&self, now: u64) -> (u64, u64) {
        (now.saturating_add(self.lo), now.saturating_add(self.hi))
    }

    pub fn hull(&self, other: &Window) -> Window {
        Window {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

impl TryFrom<(u64, u64)> for Window {
    type Error = Error;

    fn try_from((lo, hi): (u64, u64)) -> Result<Self> {
        Window::new(lo, hi)
    }
}

impl From<Window> for (u64, u64) {
    fn from(w: Window) -> Self {
        (w.lo, w.hi)
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

/// One recognition requirement. The window counts ticks back from the
/// evaluation time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub subject: String,
    pub polarity: Polarity,
    /// Recognitions scoring below this are ignored.
    #[serde(default)]
    pub min_score: f64,
    pub window: Window,
}

impl Member {
    pub fn positive(subject: impl Into<String>, window: Window) -> Self {
        Member {
            subject: subject.into(),
            polarity: Polarity::Positive,
            min_score: 0.0,
            window,
        }
    }

    pub fn negative(subject: impl Into<String>, window: Window) -> Self {
        Member {
            polarity: Polarity::Negative,
            ..Self::positive(subject, window)
        }
    }

    pub fn with_min_score(mut self, m: f64) -> Self {
        self.min_score = m;
        self
    }

    /// Best matching score for a positive member (0 if absent); one minus it
    /// for a negative one.
    pub fn score(&self, log: &RecognitionLog, now: u64) -> f64 {
        let best = self
            .window
            .before(now)
            .and_then(|(from, to)| log.best(&self.subject, from, to, self.min_score))
            .unwrap_or(0.0);
        match self.polarity {
            Polarity::Positive => best,
            Polarity::Negative => 1.0 - best,
        }
    }
}

impl fmt::Display for Member {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.polarity == Polarity::Negative {
            f.write_str("!")?;
        }
        write!(f, "{}{}", self.subject, self.window)?;
        if self.min_score > 0.0 {
            write!(f, ">={}", self.min_score)?;
        }
        Ok(())
    }
}

/// A relation subject that must be recognized while two positive members
/// are in view (the hull of their windows).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationReq {
    pub subject: String,
    pub between: (usize, usize),
    #[serde(default)]
    pub min_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSituation")]
pub struct MicroSituation {
    members: Vec<Member>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    relations: Vec<RelationReq>,
}

#[derive(Deserialize)]
struct RawSituation {
    members: Vec<Member>,
    #[serde(default)]
    relations: Vec<RelationReq>,
}

impl TryFrom<RawSituation> for MicroSituation {
    type Error = Error;

    fn try_from(raw: RawSituation) -> Result<Self> {
        MicroSituation::with_relations(raw.members, raw.relations)
    }
}

impl MicroSituation {
    pub fn new(members: Vec<Member>) -> Result<Self> {
        Self::with_relations(members, Vec::new())
    }

    pub fn with_relations(members: Vec<Member>, relations: Vec<RelationReq>) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidSituation(m));
        if members.is_empty() || members.len() > MAX_MEMBERS {
            return bad(format!("{} members, need 1..={MAX_MEMBERS}", members.len()));
        }
        for m in &members {
            if !(0.0..=1.0).contains(&m.min_score) {
                return bad(format!("min score {} of `{}` outside [0,1]", m.min_score, m.subject));
            }
            if m.subject.is_empty() {
                return bad("empty subject id".into());
            }
        }
        for r in &relations {
            let (a, b) = r.between;
            for i in [a, b] {
                match members.get(i) {
                    None => return bad(format!("relation `{}` names member {i}", r.subject)),
                    Some(m) if m.polarity == Polarity::Negative => {
                        return bad(format!("relation `{}` on negated member {i}", r.subject))
                    }
                    _ => {}
                }
            }
            if !(0.0..=1.0).contains(&r.min_score) {
                return bad(format!("min score {} outside [0,1]", r.min_score));
            }
        }
        Ok(MicroSituation { members, relations })
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn relations(&self) -> &[RelationReq] {
        &self.relations
    }

    /// Every subject id the situation mentions, members first.
    pub fn subjects(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.members.iter().map(|m| m.subject.as_str()).collect();
        v.extend(self.relations.iter().map(|r| r.subject.as_str()));
        v
    }

    /// Fuzzy truth at tick `now`: minimum over member and relation scores.
    pub fn score(&self, log: &RecognitionLog, now: u64) -> f64 {
        let members = self.members.iter().map(|m| m.score(log, now));
        let relations = self.relations.iter().map(|r| {
            let w = self.members[r.between.0]
                .window
                .hull(&self.members[r.between.1].window);
            w.before(now)
                .and_then(|(from, to)| log.best(&r.subject, from, to, r.min_score))
                .unwrap_or(0.0)
        });
        members.chain(relations).fold(1.0, f64::min)
    }
}

impl fmt::Display for MicroSituation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, m) in self.members.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{m}")?;
        }
        for r in &self.relations {
            write!(f, " & {}({},{})", r.subject, r.between.0, r.between.1)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(text: &str) -> RecognitionLog {
        RecognitionLog::parse(text).unwrap()
    }

    #[test]
    fn window_bounds() {
        assert!(Window::new(3, 2).is_err());
        assert_eq!(Window::new(1, 4).unwrap().before(10), Some((6, 9)));
        assert_eq!(Window::new(1, 4).unwrap().before(2), Some((0, 1)));
        assert_eq!(Window::new(3, 4).unwrap().before(2), None);
    }

    #[test]
    fn conjunction_is_min_and_negation_is_complement() {
        let l = log("t=3 subj=A score=0.9\nt=4 subj=B score=0.85\nt=4 subj=C score=0.3");
        let s = MicroSituation::new(vec![
            Member::positive("A", Window::new(0, 2).unwrap()),
            Member::positive("B", Window::at(0)),
            Member::negative("C", Window::new(0, 3).unwrap()),
        ])
        .unwrap();
        assert!((s.score(&l, 4) - 0.7).abs() < 1e-12);
        let l2 = log("t=3 subj=A score=0.9\nt=4 subj=B score=0.85\nt=4 subj=C score=1");
        assert_eq!(s.score(&l2, 4), 0.0);
    }

    #[test]
    fn absent_positive_member_scores_zero() {
        let s = MicroSituation::new(vec![Member::positive("Z", Window::new(0, 9).unwrap())]).unwrap();
        assert_eq!(s.score(&log("t=1 subj=A score=1"), 5), 0.0);
    }

    #[test]
    fn min_score_filters_weak_recognitions() {
        let l = log("t=1 subj=A score=0.6");
        let strict = Member::positive("A", Window::new(0, 5).unwrap()).with_min_score(0.7);
        assert_eq!(strict.score(&l, 3), 0.0);
        let neg = Member::negative("A", Window::new(0, 5).unwrap()).with_min_score(0.7);
        assert_eq!(neg.score(&l, 3), 1.0);
    }

    #[test]
    fn member_count_is_bounded() {
        assert!(MicroSituation::new(vec![]).is_err());
        let nine = (0..9).map(|i| Member::positive(format!("s{i}"), Window::at(0))).collect();
        assert!(MicroSituation::new(nine).is_err());
    }

    #[test]
    fn relation_needs_the_relation_subject_in_view() {
        let members = vec![
            Member::positive("pot", Window::new(0, 2).unwrap()),
            Member::positive("fire", Window::new(0, 2).unwrap()),
        ];
        let rel = RelationReq {
            subject: "above".into(),
            between: (0, 1),
            min_score: 0.0,
        };
        let s = MicroSituation::with_relations(members.clone(), vec![rel.clone()]).unwrap();
        let l = log("t=5 subj=pot score=1\nt=5 subj=fire score=0.9\nt=6 subj=above score=0.8");
        assert!((s.score(&l, 6) - 0.8).abs() < 1e-12);
        assert_eq!(s.score(&l, 9), 0.0);
        let bad = RelationReq { between: (0, 2), ..rel };
        assert!(MicroSituation::with_relations(members, vec![bad]).is_err());
    }

    #[test]
    fn deserialization_validates() {
        let ok = r#"{"members":[{"subject":"A","polarity":"positive","window":[0,2]}]}"#;
        assert!(serde_json::from_str::<MicroSituation>(ok).is_ok());
        let bad = r#"{"members":[{"subject":"A","polarity":"positive","window":[3,2]}]}"#;
        assert!(serde_json::from_str::<MicroSituation>(bad).is_err());
        assert!(serde_json::from_str::<MicroSituation>(r#"{"members":[]}"#).is_err());
    }
}
