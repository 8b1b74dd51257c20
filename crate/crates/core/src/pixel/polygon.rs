//! Segment quotient of a stroke set and the assertions read off it.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::signature::{PropertyAssertion, Target, Value};
use super::strokes::{classify_segment, Px, SegmentFeatures, StrokeSet};
use super::PixelConfig;
use crate::structure::{Attrs, Structure};

pub const SEGMENT_TYPE: &str = "seg";
pub const JOINT_LABEL: &str = "joint";
pub const ATTR_LEN_BIN: &str = "len_bin";
pub const ATTR_LEN_PX: &str = "len_px";
pub const ATTR_ORIENT: &str = "orient";
pub const ATTR_ANGLE: &str = "angle";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonAnalysis {
    /// One `seg` part per chain of two or more pixels, joined at shared ends.
    pub quotient: Structure,
    /// Chain id behind each quotient part.
    pub chain_of_part: Vec<usize>,
    pub segments: Vec<SegmentFeatures>,
    /// Chains below the straightness threshold.
    pub non_straight: Vec<usize>,
    pub closed: bool,
    pub assertions: Vec<PropertyAssertion>,
}

fn part_id(i: usize) -> String {
    format!("s{i}")
}

fn angle_between(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Builds the segment quotient and its assertions from traced strokes.
pub fn polygon_from_strokes(strokes: &StrokeSet, cfg: &PixelConfig) -> PolygonAnalysis {
    let mut q = Structure::new(false);
    let mut chain_of_part = Vec::new();
    let mut segments = Vec::new();
    for c in &strokes.chains {
        let Ok(f) = classify_segment(&c.path, cfg) else {
            continue;
        };
        let attrs: Attrs = [
            (ATTR_LEN_BIN.to_string(), f.length_bin),
            (ATTR_LEN_PX.to_string(), f.length.round() as i64),
            (ATTR_ORIENT.to_string(), f.orientation_bin),
        ]
        .into();
        q.add_part_with(part_id(segments.len()), SEGMENT_TYPE, attrs)
            .expect("fresh ids");
        chain_of_part.push(c.id);
        segments.push(f);
    }

    // Consecutive chains of a closed stroke meet with a signed interior
    // angle; other shared ends get the unsigned angle between the strokes.
    let mut loop_next: std::collections::HashMap<usize, usize> = Default::default();
    for l in &strokes.loops {
        for (k, &c) in l.iter().enumerate() {
            loop_next.insert(c, l[(k + 1) % l.len()]);
        }
    }
    let n = segments.len();
    let chain = |i: usize| &strokes.chains[chain_of_part[i]];
    let mut joints: Vec<(usize, usize, i64)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (ci, cj) = (chain(i), chain(j));
            let ends_i = [ci.start(), ci.end()];
            let ends_j = [cj.start(), cj.end()];
            let shared: Vec<Px> = ends_i.iter().filter(|p| ends_j.contains(p)).copied().collect();
            let Some(&v) = shared.first() else {
                continue;
            };
            let angle = if loop_next.get(&ci.id) == Some(&cj.id) && n > 2 {
                interior(segments[i].direction_deg, segments[j].direction_deg)
            } else if loop_next.get(&cj.id) == Some(&ci.id) && n > 2 {
                interior(segments[j].direction_deg, segments[i].direction_deg)
            } else {
                let away = |c: &super::strokes::Chain, f: &SegmentFeatures| {
                    if c.start() == v {
                        f.direction_deg
                    } else {
                        f.direction_deg + 180.0
                    }
                };
                angle_between(away(ci, &segments[i]), away(cj, &segments[j]))
            };
            let bins = (360.0 / cfg.angle_bin_deg).round() as i64;
            let bin = ((angle / cfg.angle_bin_deg).round() as i64).rem_euclid(bins);
            joints.push((i, j, bin));
        }
    }
    for &(i, j, bin) in &joints {
        q.relate_with(i, j, JOINT_LABEL, [(ATTR_ANGLE.to_string(), bin)].into())
            .expect("distinct segments");
    }

    let non_straight: Vec<usize> = segments
        .iter()
        .zip(&chain_of_part)
        .filter(|(f, _)| f.straightness < cfg.straight_min)
        .map(|(_, &c)| c)
        .collect();
    let closed = n >= 3 && is_single_cycle(&q);

    let mut assertions = Vec::new();
    for (i, f) in segments.iter().enumerate() {
        let t = Target::Part(part_id(i));
        assertions.push(PropertyAssertion::new(t.clone(), "is_straight", Value::Score(round3(f.straightness))));
        assertions.push(PropertyAssertion::new(t.clone(), ATTR_LEN_BIN, Value::Bin(f.length_bin)));
        assertions.push(PropertyAssertion::new(t.clone(), ATTR_ORIENT, Value::Bin(f.orientation_bin)));
        assertions.push(PropertyAssertion::new(t, "curvature", Value::Bin(f.curvature_bin)));
    }
    for &(i, j, bin) in &joints {
        assertions.push(PropertyAssertion::new(
            Target::Pair(part_id(i), part_id(j)),
            "joint_angle",
            Value::Bin(bin),
        ));
    }
    let half = cfg.orientation_bins as i64 / 2;
    for i in 0..n {
        for j in i + 1..n {
            if (segments[i].orientation_bin - segments[j].orientation_bin).rem_euclid(half) == 0 {
                assertions.push(PropertyAssertion::new(
                    Target::Pair(part_id(i), part_id(j)),
                    "parallel_to",
                    Value::Bool(true),
                ));
            }
        }
    }
    if non_straight.is_empty() && n > 0 {
        assertions.push(PropertyAssertion::new(Target::Whole, "closed", Value::Bool(closed)));
        assertions.push(PropertyAssertion::new(Target::Whole, "side_count", Value::Bin(n as i64)));
        if closed {
            let lens: Vec<i64> = segments.iter().map(|f| f.length.round() as i64).collect();
            let eq_len = lengths_equal(&lens, cfg);
            let angles: BTreeSet<i64> = joints.iter().map(|j| j.2).collect();
            let eq_ang = angles.len() == 1;
            assertions.push(PropertyAssertion::new(Target::Whole, "all_lengths_equal", Value::Bool(eq_len)));
            assertions.push(PropertyAssertion::new(Target::Whole, "all_angles_equal", Value::Bool(eq_ang)));
            assertions.push(PropertyAssertion::new(Target::Whole, "regular", Value::Bool(eq_len && eq_ang)));
        }
    }
    PolygonAnalysis {
        quotient: q,
        chain_of_part,
        segments,
        non_straight,
        closed,
        assertions,
    }
}

fn lengths_equal(lens: &[i64], cfg: &PixelConfig) -> bool {
    let (min, max) = (lens.iter().min().copied(), lens.iter().max().copied());
    match (min, max) {
        (Some(min), Some(max)) if min > 0 => max as f64 / min as f64 <= cfg.equal_length_ratio,
        _ => false,
    }
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Interior angle at the vertex where a counter-clockwise boundary turns
/// from direction `a_in` to `a_out`.
fn interior(a_in: f64, a_out: f64) -> f64 {
    let turn = (a_out - a_in + 180.0).rem_euclid(360.0) - 180.0;
    180.0 - turn
}

/// True iff every part has exactly two neighbours and the structure is
/// connected.
pub fn is_single_cycle(s: &Structure) -> bool {
    s.neighbors().iter().all(|n| n.len() == 2) && s.is_connected()
}

/// Assertions derivable from the quotient structure alone.
pub fn structural_assertions(q: &Structure, cfg: &PixelConfig) -> Vec<PropertyAssertion> {
    let mut out = Vec::new();
    for p in q.parts() {
        let t = Target::Part(p.id.clone());
        for key in [ATTR_LEN_BIN, ATTR_ORIENT] {
            if let Some(&v) = p.attrs.get(key) {
                out.push(PropertyAssertion::new(t.clone(), key, Value::Bin(v)));
            }
        }
    }
    for r in q.relations() {
        if let Some(&v) = r.attrs.get(ATTR_ANGLE) {
            out.push(PropertyAssertion::new(
                Target::Pair(q.part(r.a).id.clone(), q.part(r.b).id.clone()),
                "joint_angle",
                Value::Bin(v),
            ));
        }
    }
    let n = q.len();
    if n == 0 {
        return out;
    }
    let closed = n >= 3 && is_single_cycle(q);
    out.push(PropertyAssertion::new(Target::Whole, "closed", Value::Bool(closed)));
    out.push(PropertyAssertion::new(Target::Whole, "side_count", Value::Bin(n as i64)));
    if closed {
        let lens: Vec<i64> = q.parts().iter().filter_map(|p| p.attrs.get(ATTR_LEN_PX).copied()).collect();
        let eq_len = lengths_equal(&lens, cfg);
        let angles: BTreeSet<i64> = q.relations().iter().filter_map(|r| r.attrs.get(ATTR_ANGLE).copied()).collect();
        out.push(PropertyAssertion::new(Target::Whole, "all_lengths_equal", Value::Bool(eq_len)));
        out.push(PropertyAssertion::new(Target::Whole, "all_angles_equal", Value::Bool(angles.len() == 1)));
    }
    out
}
