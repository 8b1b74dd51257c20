//! Frequency-based rule mining over a recognition log.
//!
//! Every tick of the log (far enough from both ends for all windows to fit)
//! is an anchor. A candidate condition is a set of at most three members,
//! one per subject; it holds at an anchor when the mined rule would fire
//! there. A consequent is a hit when its subject is recognized within the
//! horizon after the anchor.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::log::RecognitionLog;
use super::rule::{laplace, AssociativeRule, Consequent};
use super::situation::{Member, MicroSituation, Polarity, Window};
use crate::error::{Error, Result};

pub const MAX_CONDITION: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MineParams {
    /// Consequent window `[1, horizon]` after the anchor.
    pub horizon: u64,
    /// Positive members: recognized within `[0, lookback]` ticks back.
    pub lookback: u64,
    /// Negative members: absent over `[0, absence]` ticks back.
    pub absence: u64,
    pub negatives: bool,
    /// Score counted as a recognition; also the mined rules' threshold.
    pub present: f64,
    pub min_support: u64,
    pub min_p: f64,
    pub max_condition: usize,
}

impl Default for MineParams {
    fn default() -> Self {
        MineParams {
            horizon: 5,
            lookback: 0,
            absence: 5,
            negatives: true,
            present: 0.5,
            min_support: 10,
            min_p: 0.5,
            max_condition: MAX_CONDITION,
        }
    }
}

impl MineParams {
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Precondition(m.into()));
        if self.horizon == 0 {
            return bad("horizon must be at least 1");
        }
        if !(1..=MAX_CONDITION).contains(&self.max_condition) {
            return bad("condition size must be 1..=3");
        }
        if !(self.present > 0.0 && self.present <= 1.0) {
            return bad("presence threshold outside (0,1]");
        }
        if !(0.0..=1.0).contains(&self.min_p) {
            return bad("min p outside [0,1]");
        }
        Ok(())
    }

    fn back(&self) -> u64 {
        if self.negatives {
            self.lookback.max(self.absence)
        } else {
            self.lookback
        }
    }
}

#[derive(Clone, PartialEq)]
struct Bits(Vec<u64>);

impl Bits {
    fn zeros(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn ones(n: usize) -> Self {
        let mut b = Bits(vec![u64::MAX; n.div_ceil(64)]);
        if n % 64 != 0 {
            *b.0.last_mut().expect("n > 0") = (1u64 << (n % 64)) - 1;
        }
        b
    }

    fn set_range(&mut self, lo: usize, hi: usize, on: bool) {
        for i in lo..=hi {
            if on {
                self.0[i / 64] |= 1 << (i % 64);
            } else {
                self.0[i / 64] &= !(1 << (i % 64));
            }
        }
    }

    fn and(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & b).collect())
    }

    fn count(&self) -> u64 {
        self.0.iter().map(|w| w.count_ones() as u64).sum()
    }
}

struct Anchors {
    start: u64,
    end: u64,
}

impl Anchors {
    fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    /// Anchor indices of the absolute interval `[lo, hi]`, clipped.
    fn clip(&self, lo: u64, hi: u64) -> Option<(usize, usize)> {
        let (lo, hi) = (lo.max(self.start), hi.min(self.end));
        (lo <= hi).then(|| ((lo - self.start) as usize, (hi - self.start) as usize))
    }
}

fn member_bits(log: &RecognitionLog, subject: &str, pol: Polarity, p: &MineParams, a: &Anchors) -> Bits {
    let n = a.len();
    let all = log.between(subject, 0, u64::MAX);
    match pol {
        Polarity::Positive => {
            let mut b = Bits::zeros(n);
            for &(t, s) in all {
                if s >= p.present {
                    if let Some((lo, hi)) = a.clip(t, t.saturating_add(p.lookback)) {
                        b.set_range(lo, hi, true);
                    }
                }
            }
            b
        }
        Polarity::Negative => {
            let mut b = Bits::ones(n);
            for &(t, s) in all {
                if 1.0 - s < p.present {
                    if let Some((lo, hi)) = a.clip(t, t.saturating_add(p.absence)) {
                        b.set_range(lo, hi, false);
                    }
                }
            }
            b
        }
    }
}

fn hit_bits(log: &RecognitionLog, subject: &str, p: &MineParams, a: &Anchors) -> Bits {
    let mut b = Bits::zeros(a.len());
    for &(t, s) in log.between(subject, 0, u64::MAX) {
        if s >= p.present && t >= 1 {
            if let Some((lo, hi)) = a.clip(t.saturating_sub(p.horizon), t - 1) {
                b.set_range(lo, hi, true);
            }
        }
    }
    b
}

/// Rules with support at least `min_support` and smoothed p at least
/// `min_p`, ranked by p, then support (both descending), then rule text.
pub fn mine_rules(log: &RecognitionLog, params: &MineParams) -> Result<Vec<AssociativeRule>> {
    params.check()?;
    let Some((first, last)) = log.span() else {
        return Err(Error::Precondition("empty recognition log".into()));
    };
    let (Some(start), Some(end)) = (first.checked_add(params.back()), last.checked_sub(params.horizon)) else {
        return Ok(Vec::new());
    };
    if start > end {
        return Ok(Vec::new());
    }
    let anchors = Anchors { start, end };
    let subjects: Vec<&str> = log.subjects().into_iter().collect();
    let mut templates: Vec<(usize, Polarity, Bits)> = Vec::new();
    for (si, s) in subjects.iter().enumerate() {
        templates.push((si, Polarity::Positive, member_bits(log, s, Polarity::Positive, params, &anchors)));
        if params.negatives {
            templates.push((si, Polarity::Negative, member_bits(log, s, Polarity::Negative, params, &anchors)));
        }
    }
    let hits: Vec<Bits> = subjects.iter().map(|s| hit_bits(log, s, params, &anchors)).collect();

    let mut frequent: Vec<(Vec<usize>, Bits)> = templates
        .iter()
        .enumerate()
        .filter(|(_, t)| t.2.count() >= params.min_support)
        .map(|(i, t)| (vec![i], t.2.clone()))
        .collect();
    let mut rules = Vec::new();
    for size in 1..=params.max_condition {
        for (cond, bits) in &frequent {
            let n = bits.count();
            for (x, hb) in hits.iter().enumerate() {
                if cond.iter().any(|&i| templates[i].0 == x) {
                    continue;
                }
                let h = bits.and(hb).count();
                if laplace(h, n) < params.min_p {
                    continue;
                }
                rules.push(make_rule(cond, &templates, &subjects, x, h, n, params)?);
            }
        }
        if size == params.max_condition {
            break;
        }
        let mut next = Vec::new();
        for (cond, bits) in &frequent {
            let last = *cond.last().expect("non-empty");
            for j in last + 1..templates.len() {
                if cond.iter().any(|&i| templates[i].0 == templates[j].0) {
                    continue;
                }
                let b = bits.and(&templates[j].2);
                if b.count() >= params.min_support {
                    let mut c = cond.clone();
                    c.push(j);
                    next.push((c, b));
                }
            }
        }
        frequent = next;
    }
    let mut keyed: Vec<(String, AssociativeRule)> = rules.into_iter().map(|r| (r.key(), r)).collect();
    keyed.sort_by(|(ka, a), (kb, b)| {
        b.p.partial_cmp(&a.p)
            .unwrap_or(Ordering::Equal)
            .then(b.support.cmp(&a.support))
            .then(ka.cmp(kb))
    });
    Ok(keyed.into_iter().map(|(_, r)| r).collect())
}

fn make_rule(
    cond: &[usize],
    templates: &[(usize, Polarity, Bits)],
    subjects: &[&str],
    x: usize,
    hits: u64,
    n: u64,
    p: &MineParams,
) -> Result<AssociativeRule> {
    let members = cond
        .iter()
        .map(|&i| {
            let (s, pol, _) = &templates[i];
            match pol {
                Polarity::Positive => Member::positive(subjects[*s], Window::new(0, p.lookback).expect("0 <= lookback")),
                Polarity::Negative => Member::negative(subjects[*s], Window::new(0, p.absence).expect("0 <= absence")),
            }
        })
        .collect();
    let consequent = Consequent {
        subject: subjects[x].to_string(),
        window: Window::new(1, p.horizon)?,
    };
    AssociativeRule::new(MicroSituation::new(members)?, vec![consequent], p.present)?.with_counts(hits, n, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::log::Recognition;

    #[test]
    fn bitset_edges() {
        let b = Bits::ones(70);
        assert_eq!(b.count(), 70);
        let mut z = Bits::zeros(70);
        z.set_range(60, 69, true);
        assert_eq!(z.count(), 10);
        assert_eq!(b.and(&z).count(), 10);
    }

    #[test]
    fn planted_always_rule() {
        let mut ev = Vec::new();
        for k in 0..100u64 {
            ev.push(Recognition::new(10 * k, "A", 1.0).unwrap());
            ev.push(Recognition::new(10 * k + 2, "X", 1.0).unwrap());
        }
        ev.push(Recognition::new(1000, "Z", 1.0).unwrap());
        let log = RecognitionLog::try_from(ev).unwrap();
        let params = MineParams { negatives: false, min_p: 0.9, ..Default::default() };
        let rules = mine_rules(&log, &params).unwrap();
        let top = &rules[0];
        assert_eq!(top.key(), "A[0,0] => X[1,5]");
        assert_eq!((top.hits, top.support), (100, 100));
        assert_eq!(top.p, 101.0 / 102.0);
    }

    #[test]
    fn empty_log_and_bad_params_are_errors() {
        assert!(mine_rules(&RecognitionLog::new(), &MineParams::default()).is_err());
        let log = RecognitionLog::parse("t=0 subj=A score=1").unwrap();
        let bad = MineParams { max_condition: 4, ..Default::default() };
        assert!(mine_rules(&log, &bad).is_err());
        assert!(mine_rules(&log, &MineParams::default()).unwrap().is_empty());
    }
}
