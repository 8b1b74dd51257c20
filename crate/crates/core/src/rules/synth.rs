//! Seeded synthetic recognition logs with known generating rules.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::log::{Recognition, RecognitionLog};

fn score(rng: &mut ChaCha8Rng) -> f64 {
    // two decimals so logs print and parse back exactly
    (rng.gen_range(60..=100) as f64) / 100.0
}

/// `cause` at every trial tick; `effect` follows after a lag in `lag` with
/// probability `p`. Noise events of other subjects bring the total to
/// `events`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub cause: String,
    pub effect: String,
    pub p: f64,
    pub trials: usize,
    pub lag: (u64, u64),
    /// Ticks between trials.
    pub gap: u64,
    pub noise: Vec<String>,
    pub events: usize,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            cause: "A".into(),
            effect: "X".into(),
            p: 0.8,
            trials: 300,
            lag: (1, 3),
            gap: 12,
            noise: vec!["B".into(), "C".into(), "D".into()],
            events: 1000,
        }
    }
}

pub fn planted_log(spec: &PlantedSpec, seed: u64) -> RecognitionLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ev = Vec::new();
    for k in 0..spec.trials as u64 {
        let t = k * spec.gap;
        ev.push(Recognition::new(t, spec.cause.clone(), score(&mut rng)).expect("valid"));
        if rng.gen_bool(spec.p) {
            let lag = rng.gen_range(spec.lag.0..=spec.lag.1);
            ev.push(Recognition::new(t + lag, spec.effect.clone(), score(&mut rng)).expect("valid"));
        }
    }
    let span = (spec.trials as u64 * spec.gap).max(1);
    while ev.len() < spec.events && !spec.noise.is_empty() {
        let s = &spec.noise[rng.gen_range(0..spec.noise.len())];
        ev.push(Recognition::new(rng.gen_range(0..span), s.clone(), score(&mut rng)).expect("valid"));
    }
    RecognitionLog::from_unsorted(ev).expect("generated events are valid")
}

/// `events` recognitions of uniformly drawn subjects at uniform ticks in
/// `[0, span)`.
pub fn independent_log(subjects: &[&str], events: usize, span: u64, seed: u64) -> RecognitionLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ev = (0..events)
        .map(|_| {
            let s = subjects[rng.gen_range(0..subjects.len())];
            Recognition::new(rng.gen_range(0..span), s, score(&mut rng)).expect("valid")
        })
        .collect();
    RecognitionLog::from_unsorted(ev).expect("generated events are valid")
}

/// Absence-driven log: `present` is recognized at each tick with
/// probability `p_present`; whenever it has been missing over the last
/// `absence + 1` ticks, `effect` follows on the next tick with probability
/// `p_effect`. `noise` subjects fire independently with probability
/// `p_present`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsenceSpec {
    pub present: String,
    pub effect: String,
    pub noise: Vec<String>,
    pub ticks: u64,
    pub p_present: f64,
    pub absence: u64,
    pub p_effect: f64,
}

impl Default for AbsenceSpec {
    fn default() -> Self {
        AbsenceSpec {
            present: "water".into(),
            effect: "plants_dry".into(),
            noise: vec!["sun".into(), "wind".into()],
            ticks: 3000,
            p_present: 0.3,
            absence: 4,
            p_effect: 0.9,
        }
    }
}

pub fn absence_log(spec: &AbsenceSpec, seed: u64) -> RecognitionLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ev = Vec::new();
    let mut last_present: Option<u64> = None;
    let mut pending_effect = false;
    for t in 0..spec.ticks {
        if pending_effect {
            ev.push(Recognition::new(t, spec.effect.clone(), score(&mut rng)).expect("valid"));
        }
        if rng.gen_bool(spec.p_present) {
            ev.push(Recognition::new(t, spec.present.clone(), score(&mut rng)).expect("valid"));
            last_present = Some(t);
        }
        for n in &spec.noise {
            if rng.gen_bool(spec.p_present) {
                ev.push(Recognition::new(t, n.clone(), score(&mut rng)).expect("valid"));
            }
        }
        let dry = t >= spec.absence && last_present.is_none_or(|lp| t - lp > spec.absence);
        pending_effect = dry && rng.gen_bool(spec.p_effect);
    }
    RecognitionLog::from_unsorted(ev).expect("generated events are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_log_has_requested_size() {
        let log = planted_log(&PlantedSpec::default(), 1);
        assert_eq!(log.len(), 1000);
        assert_eq!(planted_log(&PlantedSpec::default(), 1), log);
    }

    #[test]
    fn logs_survive_text_round_trip() {
        let log = absence_log(&AbsenceSpec { ticks: 200, ..Default::default() }, 3);
        assert_eq!(RecognitionLog::parse(&log.to_text()).unwrap(), log);
    }
}
