//! Random ground production systems with a breadth-first oracle.

use std::collections::{HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use structcalc::derivation::MorphismMask;
use structcalc::rules::{Member, MicroSituation, Recognizer, Subject, SubjectRegistry, Window};
use structcalc::solver::*;
use structcalc::Structure;

/// Facts are bits of a u16; a production needs `req`, rules out `forb`,
/// then clears `del` and sets `add`.
#[derive(Clone, Debug)]
pub struct Ground {
    pub facts: Vec<(usize, &'static str, usize)>,
    pub prods: Vec<(u16, u16, u16, u16)>,
    pub start: u16,
    pub want: u16,
    pub avoid_goal: u16,
    pub undesired: u16,
}

pub const PARTS: usize = 4;

pub fn random_ground(seed: u64) -> Ground {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all = Vec::new();
    for i in 0..PARTS {
        for j in 0..PARTS {
            if i != j {
                all.push((i, "r", j));
                all.push((i, "s", j));
            }
        }
    }
    all.shuffle(&mut rng);
    let nf = rng.gen_range(6..=13);
    all.truncate(nf);
    let bits = |k: usize, rng: &mut ChaCha8Rng| -> u16 {
        let mut b = 0;
        for _ in 0..k {
            b |= 1 << rng.gen_range(0..nf);
        }
        b
    };
    let np = rng.gen_range(4..=12);
    let prods = (0..np)
        .map(|_| {
            let (r, f, a, d) = (rng.gen_range(0..=2), rng.gen_range(0..=1), rng.gen_range(1..=2), rng.gen_range(0..=2));
            let req = bits(r, &mut rng);
            let forb = bits(f, &mut rng) & !req;
            (req, forb, bits(a, &mut rng), bits(d, &mut rng))
        })
        .collect();
    let start = bits(rng.gen_range(0..=3), &mut rng);
    let mut g = Ground {
        facts: all,
        prods,
        start,
        want: 0,
        avoid_goal: 0,
        undesired: 0,
    };
    // mostly goals taken from a reachable state, some drawn blind
    let target = if rng.gen_bool(0.8) {
        let reach = g.reachable();
        reach[rng.gen_range(0..reach.len())]
    } else {
        bits(3, &mut rng)
    };
    let on: Vec<usize> = (0..nf).filter(|b| target & (1 << b) != 0).collect();
    let off: Vec<usize> = (0..nf).filter(|b| target & (1 << b) == 0).collect();
    for _ in 0..rng.gen_range(1..=3) {
        if let Some(&b) = on.choose(&mut rng) {
            g.want |= 1 << b;
        }
    }
    if rng.gen_bool(0.5) {
        if let Some(&b) = off.choose(&mut rng) {
            g.avoid_goal |= 1 << b;
        }
    }
    if g.want == 0 {
        g.want = bits(1, &mut rng);
        g.avoid_goal &= !g.want;
    }
    g.undesired = bits(1, &mut rng) & !g.want;
    g
}

impl Ground {
    pub fn step(&self, s: u16, k: usize) -> Option<u16> {
        let (req, forb, add, del) = self.prods[k];
        (s & req == req && s & forb == 0).then_some((s & !del) | add)
    }

    pub fn reachable(&self) -> Vec<u16> {
        let mut seen = vec![self.start];
        let mut i = 0;
        while i < seen.len() {
            for k in 0..self.prods.len() {
                if let Some(t) = self.step(seen[i], k) {
                    if !seen.contains(&t) {
                        seen.push(t);
                    }
                }
            }
            i += 1;
        }
        seen
    }

    pub fn goal(&self, s: u16) -> bool {
        s & self.want == self.want && s & self.avoid_goal == 0
    }

    /// Shortest plan length; with `avoid`, no state after the start may
    /// hold an undesired fact.
    pub fn bfs(&self, avoid: bool) -> (Option<usize>, usize) {
        let mut dist: HashMap<u16, usize> = HashMap::from([(self.start, 0)]);
        let mut q = VecDeque::from([self.start]);
        while let Some(s) = q.pop_front() {
            if self.goal(s) {
                return (Some(dist[&s]), dist.len());
            }
            for k in 0..self.prods.len() {
                if let Some(t) = self.step(s, k) {
                    if avoid && t & self.undesired != 0 {
                        continue;
                    }
                    if !dist.contains_key(&t) {
                        dist.insert(t, dist[&s] + 1);
                        q.push_back(t);
                    }
                }
            }
        }
        (None, dist.len())
    }

    pub fn fact(&self, b: usize) -> Fact {
        let (i, l, j) = self.facts[b];
        Fact::new(format!("p{i}"), l, format!("p{j}"))
    }

    pub fn facts_of(&self, mask: u16) -> Vec<Fact> {
        (0..self.facts.len()).filter(|b| mask & (1 << b) != 0).map(|b| self.fact(b)).collect()
    }

    pub fn subject(&self, b: usize) -> Subject {
        let (i, l, j) = self.facts[b];
        let mut pat = Structure::new(true);
        pat.add_part("x", format!("t{i}")).unwrap();
        pat.add_part("y", format!("t{j}")).unwrap();
        pat.relate(0, 1, l).unwrap();
        Subject::new(
            format!("f{b}"),
            Recognizer::Template {
                pattern: pat,
                mask: MorphismMask::new(),
                induced: false,
            },
        )
    }

    pub fn condition(&self, pos: u16, neg: u16) -> Condition {
        let mut members = Vec::new();
        for b in 0..self.facts.len() {
            if pos & (1 << b) != 0 {
                members.push(Member::positive(format!("f{b}"), Window::at(0)));
            }
            if neg & (1 << b) != 0 {
                members.push(Member::negative(format!("f{b}"), Window::at(0)));
            }
        }
        Condition::new(MicroSituation::new(members).unwrap())
    }

    pub fn spec(&self, avoid: bool, heuristic: Heuristic) -> ProblemSpec {
        let mut start = Structure::new(true);
        for i in 0..PARTS {
            start.add_part(format!("p{i}"), format!("t{i}")).unwrap();
        }
        start = apply_edits(&start, &self.facts_of(self.start).into_iter().map(Edit::Relate).collect::<Vec<_>>()).unwrap();
        let mut subjects = SubjectRegistry::new();
        for b in 0..self.facts.len() {
            subjects.insert(self.subject(b)).unwrap();
        }
        let prods = self
            .prods
            .iter()
            .enumerate()
            .map(|(k, &(req, forb, add, del))| {
                let mut edits: Vec<Edit> = self.facts_of(del).into_iter().map(Edit::Unrelate).collect();
                edits.extend(self.facts_of(add).into_iter().map(Edit::Relate));
                Production {
                    name: format!("p{k}"),
                    guard: Guard {
                        situation: None,
                        requires: self.facts_of(req),
                        forbids: self.facts_of(forb),
                    },
                    effect: Effect::Edits(edits),
                }
            })
            .collect();
        let mut p = ProblemSpec::new(start, subjects, prods, self.condition(self.want, self.avoid_goal)).unwrap();
        if avoid && self.undesired != 0 {
            p.undesired = vec![self.condition(self.undesired, 0)];
        }
        p.heuristic = heuristic;
        p
    }

    pub fn replays(&self, plan: &[String], avoid: bool) -> bool {
        let mut s = self.start;
        for name in plan {
            let k: usize = name[1..].parse().unwrap();
            match self.step(s, k) {
                Some(t) if !(avoid && t & self.undesired != 0) => s = t,
                _ => return false,
            }
        }
        self.goal(s)
    }
}
