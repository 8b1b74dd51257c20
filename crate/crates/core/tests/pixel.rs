use std::collections::BTreeSet;

use proptest::prelude::*;
use structcalc::derivation::apply_morphism;
use structcalc::pixel::corpus::{outline, place, render, Figure};
use structcalc::pixel::polygon::structural_assertions;
use structcalc::pixel::signature::{Requirement, TargetPattern};
use structcalc::pixel::*;
use structcalc::iso::are_isomorphic;
use structcalc::Structure;

type Px = (i64, i64);

fn cfg() -> PixelConfig {
    PixelConfig::default()
}

fn raster_of(w: usize, h: usize, pts: &[Px]) -> Raster {
    let mut ink = vec![false; w * h];
    for &(x, y) in pts {
        ink[y as usize * w + x as usize] = true;
    }
    Raster::from_ink(w, h, &ink)
}

fn whole(assertions: &[PropertyAssertion], feature: &str) -> Option<Value> {
    assertions
        .iter()
        .find(|a| a.target == Target::Whole && a.feature == feature)
        .map(|a| a.value)
}

fn fired(sig: &str, assertions: &[PropertyAssertion]) -> bool {
    let s = standard_signatures().into_iter().find(|s| s.subject == sig).unwrap();
    evaluate_signature(&s, assertions).fired
}

/// Independent union-find labelling over 4-neighbours of equal bin.
fn union_find_blocks(r: &Raster) -> BTreeSet<Vec<usize>> {
    let n = r.width * r.height;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for y in 0..r.height {
        for x in 0..r.width {
            let i = y * r.width + x;
            for (nx, ny) in [(x + 1, y), (x, y + 1)] {
                if nx < r.width && ny < r.height && r.bin(x, y) == r.bin(nx, ny) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, ny * r.width + nx));
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

fn region_blocks(r: &Raster) -> BTreeSet<Vec<usize>> {
    segment_regions(r)
        .blocks()
        .iter()
        .map(|b| {
            let mut b = b.clone();
            b.sort_unstable();
            b
        })
        .collect()
}

#[test]
fn uniform_image_is_one_region() {
    let r = raster_of(5, 4, &[]);
    assert_eq!(segment_regions(&r).len(), 1);
}

#[test]
fn checkerboard_has_four_regions() {
    let r = raster_of(2, 2, &[(0, 0), (1, 1)]);
    assert_eq!(segment_regions(&r).len(), 4);
    assert_eq!(region_blocks(&r), union_find_blocks(&r));
}

#[test]
fn triangle_outline_separates_inside_and_outside() {
    let r = render(&place(Figure::RegularTriangle, 16.0, 0.0), 3);
    // stroke, background, enclosed interior
    assert_eq!(segment_regions(&r).len(), 3);
}

#[test]
fn open_stroke_leaves_two_regions() {
    let pts: Vec<Px> = (2..12).map(|x| (x, 3)).collect();
    assert_eq!(segment_regions(&raster_of(14, 7, &pts)).len(), 2);
}

#[test]
fn single_line_is_one_chain() {
    let pts: Vec<Px> = (1..11).map(|x| (x, 2)).collect();
    let s = strokes_of(&raster_of(12, 5, &pts), &cfg());
    assert_eq!(s.chains.len(), 1);
    assert_eq!(s.endpoints.len(), 2);
    assert!(s.junctions.is_empty());
}

#[test]
fn crossing_lines_meet_at_one_junction() {
    let mut pts: Vec<Px> = (0..11).map(|x| (x, 5)).collect();
    pts.extend((0..11).filter(|&y| y != 5).map(|y| (5, y)));
    let s = strokes_of(&raster_of(11, 11, &pts), &cfg());
    assert_eq!(s.junctions, vec![(5, 5)]);
    assert_eq!(s.chains.len(), 4);
    // skeleton-degree oracle: degree-1 pixels are the four arm tips
    assert_eq!(s.endpoints.len(), 4);
}

#[test]
fn every_stroke_pixel_has_one_owner() {
    let r = render(&place(Figure::RegularHexagon, 16.0, 22.5), 3);
    let s = strokes_of(&r, &cfg());
    let mut owned: Vec<Px> = s.chains.iter().flat_map(|c| c.owned.clone()).collect();
    let total = owned.len();
    owned.sort();
    owned.dedup();
    assert_eq!(owned.len(), total);
    let ink = r.ink().iter().filter(|&&b| b).count();
    assert_eq!(total, ink);
}

#[test]
fn triangle_outline_gives_three_chains_and_corners() {
    let r = render(&place(Figure::RegularTriangle, 16.0, 0.0), 3);
    let s = strokes_of(&r, &cfg());
    assert_eq!(s.chains.len(), 3);
    assert_eq!(s.corners.len(), 3);
    assert_eq!(s.loops.len(), 1);
}

#[test]
fn axis_run_is_perfectly_straight() {
    let path: Vec<Px> = (0..10).map(|x| (x, 0)).collect();
    let f = classify_segment(&path, &cfg()).unwrap();
    assert_eq!(f.straightness, 1.0);
    assert_eq!(f.orientation_bin, 0);
}

#[test]
fn diagonal_run_is_orientation_bin_two() {
    let path: Vec<Px> = (0..10).flat_map(|k| [(k, -k), (k + 1, -k)]).collect();
    assert_eq!(classify_segment(&path, &cfg()).unwrap().orientation_bin, 2);
}

#[test]
fn quarter_arc_is_not_straight() {
    // The ideal quarter arc of radius 20 bows 20(1 - cos 45°) ≈ 5.86 px
    // off its end chord; the narrowest strip holding it is that wide too.
    let r = 20.0f64;
    let sagitta = r * (1.0 - std::f64::consts::FRAC_PI_4.cos());
    let ideal = 1.0 - (sagitta / 2.0) / cfg().straight_tol_px;
    assert!(ideal < 0.5);
    let mut arc: Vec<Px> = Vec::new();
    for k in 0..=400 {
        let t = k as f64 / 400.0 * std::f64::consts::FRAC_PI_2;
        let p = ((r * t.cos()).round() as i64, -((r * t.sin()).round() as i64));
        if arc.last() != Some(&p) {
            arc.push(p);
        }
    }
    let f = classify_segment(&arc, &cfg()).unwrap();
    assert!(f.straightness < 0.5, "{}", f.straightness);
    assert!((f.max_deviation - sagitta / 2.0).abs() < 1.0);
}

#[test]
fn single_pixel_chain_is_rejected() {
    assert!(classify_segment(&[(3, 3)], &cfg()).is_err());
}

#[test]
fn clean_triangle_quotient() {
    let r = render(&place(Figure::RegularTriangle, 16.0, 45.0), 3);
    let p = polygon_quotient(&r, &cfg());
    assert_eq!(p.quotient.len(), 3);
    assert_eq!(p.quotient.relations().len(), 3);
    assert!(p.closed);
    assert_eq!(whole(&p.assertions, "closed"), Some(Value::Bool(true)));
    assert_eq!(whole(&p.assertions, "side_count"), Some(Value::Bin(3)));
    assert!(fired("triangle", &p.assertions));
}

#[test]
fn open_v_shape() {
    let mut pts = corpus::line4((2, 2), (12, 22));
    pts.extend(corpus::line4((12, 22), (22, 2)));
    pts.dedup();
    let p = polygon_quotient(&raster_of(25, 25, &pts), &cfg());
    assert_eq!(p.quotient.len(), 2);
    assert_eq!(p.quotient.relations().len(), 1);
    assert!(!p.closed);
    assert_eq!(whole(&p.assertions, "closed"), Some(Value::Bool(false)));
}

#[test]
fn regular_hexagon_has_equal_bins() {
    for rot in [0.0, 22.5, 45.0] {
        let r = render(&place(Figure::RegularHexagon, 24.0, rot), 3);
        let p = polygon_quotient(&r, &cfg());
        assert_eq!(p.quotient.len(), 6);
        let len_bins: BTreeSet<i64> = p.segments.iter().map(|f| f.length_bin).collect();
        assert_eq!(len_bins.len(), 1);
        let angles: BTreeSet<i64> = p
            .quotient
            .relations()
            .iter()
            .map(|r| r.attrs["angle"])
            .collect();
        // 120 degrees in 30-degree bins
        assert_eq!(angles, BTreeSet::from([4]));
        assert!(fired("hexagon", &p.assertions));
        assert!(!fired("triangle", &p.assertions));
    }
}

#[test]
fn non_straight_chains_suppress_polygon_assertions() {
    let mut c = cfg();
    c.straight_tol_px = 50.0;
    c.straight_min = 0.99;
    // a diamond traced with a huge tolerance keeps a bent side
    let ring = outline(&[(3, 12), (12, 3), (21, 12), (12, 21)]);
    let xs = ring.iter().map(|p| p.0).min().unwrap();
    let ys = ring.iter().map(|p| p.1).min().unwrap();
    let ring: Vec<Px> = ring.iter().map(|p| (p.0 - xs + 2, p.1 - ys + 2)).collect();
    let p = polygon_quotient(&raster_of(24, 24, &ring), &c);
    assert!(!p.non_straight.is_empty());
    assert_eq!(whole(&p.assertions, "closed"), None);
    assert_eq!(whole(&p.assertions, "side_count"), None);
}

#[test]
fn regular_polygon_fires_at_any_size_after_length_suppression() {
    let cat = segment_catalog();
    for u in [16.0, 24.0, 32.0] {
        for fig in [Figure::RegularHexagon, Figure::Square, Figure::RegularTriangle] {
            let r = render(&place(fig, u, 0.0), 3);
            let p = polygon_quotient(&r, &cfg());
            let suppressed = apply_morphism(&p.quotient, &suppress_length(), &cat).unwrap();
            assert!(suppressed.parts().iter().all(|q| !q.attrs.contains_key("len_bin")));
            assert!(fired("regular-polygon", &scale_suppressed(&p.assertions)));
        }
    }
}

#[test]
fn equilateral_and_right_triangles() {
    let cat = segment_catalog();
    let eq = render(&place(Figure::RegularTriangle, 16.0, 0.0), 3);
    let rt = render(&place(Figure::RightTriangle, 16.0, 0.0), 3);
    assert!(!are_isomorphic(&eq.structure(), &rt.structure()));
    let (qe, qr) = (polygon_quotient(&eq, &cfg()).quotient, polygon_quotient(&rt, &cfg()).quotient);
    assert!(!are_isomorphic(&qe, &qr));
    let m = suppress_length().then(&suppress_angle());
    let (me, mr) = (apply_morphism(&qe, &m, &cat).unwrap(), apply_morphism(&qr, &m, &cat).unwrap());
    assert!(are_isomorphic(&me, &mr));
}

#[test]
fn candidates_for_triangles_of_different_sizes() {
    // doubling sizes keeps every side in a different length bin
    let sets: Vec<Vec<PropertyAssertion>> = [10.0, 20.0, 40.0]
        .iter()
        .map(|&u| polygon_quotient(&render(&place(Figure::RightTriangle, u, 0.0), 3), &cfg()).assertions)
        .collect();
    let c = build_signature_candidates(&sets, 0.5);
    let req = &c[0].required;
    let has = |f: &str, v: Value| req.iter().any(|r| r.feature == f && r.expected == Some(v));
    assert!(has("closed", Value::Bool(true)));
    assert!(has("side_count", Value::Bin(3)));
    assert!(req.iter().all(|r| r.feature != "len_bin"));
    // candidate sets are exactly the intersection of per-example sets
    let oracle = |a: &[PropertyAssertion]| -> BTreeSet<(String, TargetPattern, String)> {
        a.iter()
            .filter(|x| match x.value {
                Value::Bool(b) => b,
                Value::Score(s) => s >= 0.5,
                Value::Bin(_) => true,
            })
            .map(|x| (x.feature.clone(), TargetPattern::of(&x.target), expected_key(Some(x.value))))
            .collect()
    };
    let mut common = oracle(&sets[0]);
    for s in &sets[1..] {
        common = common.intersection(&oracle(s)).cloned().collect();
    }
    let got: BTreeSet<(String, TargetPattern, String)> = req
        .iter()
        .map(|r| (r.feature.clone(), r.pattern, expected_key(r.expected)))
        .collect();
    assert_eq!(got, common);
}

fn expected_key(v: Option<Value>) -> String {
    match v {
        Some(Value::Bool(b)) => format!("b{b}"),
        Some(Value::Bin(b)) => format!("n{b}"),
        _ => "*".into(),
    }
}

#[test]
fn candidates_from_one_example_keep_everything() {
    let a = polygon_quotient(&render(&place(Figure::Square, 16.0, 0.0), 3), &cfg()).assertions;
    let c = build_signature_candidates(std::slice::from_ref(&a), 0.5);
    assert!(c[0].required.len() >= 5);
    assert!(c.iter().all(|s| s.required.iter().all(|r| r.matched(&a) > 0.0)));
}

#[test]
fn candidates_for_disjoint_shapes_are_generic() {
    let tri = polygon_quotient(&render(&place(Figure::RightTriangle, 16.0, 0.0), 3), &cfg()).assertions;
    let hex = polygon_quotient(&render(&place(Figure::RegularHexagon, 16.0, 0.0), 3), &cfg()).assertions;
    let c = build_signature_candidates(&[tri, hex], 0.5);
    let whole: Vec<&Requirement> = c[0].required.iter().filter(|r| r.pattern == TargetPattern::Whole).collect();
    assert!(whole.iter().any(|r| r.feature == "closed"));
    assert!(whole.iter().all(|r| r.feature != "side_count"));
}

#[test]
fn assertions_are_recomputable() {
    for fig in Figure::ALL {
        let r = render(&place(fig, 24.0, 22.5), 3);
        let s = strokes_of(&r, &cfg());
        let p = polygon_from_strokes(&s, &cfg());
        // quotient-level assertions from the quotient alone
        for a in structural_assertions(&p.quotient, &cfg()) {
            assert!(p.assertions.contains(&a), "{fig:?}: {a:?}");
        }
        // chain-level scores from the referenced chains
        for a in &p.assertions {
            if let Target::Part(id) = &a.target {
                let k = p.quotient.index_of(id).expect("target resolves");
                let f = classify_segment(&s.chains[p.chain_of_part[k]].path, &cfg()).unwrap();
                if a.feature == "is_straight" {
                    assert_eq!(a.value, Value::Score((f.straightness * 1000.0).round() / 1000.0));
                }
            }
            if let Target::Pair(x, y) = &a.target {
                assert!(p.quotient.index_of(x).is_some() && p.quotient.index_of(y).is_some());
            }
        }
    }
}

fn shifted(r: &Raster, dx: usize, dy: usize, w: usize, h: usize) -> Raster {
    let ink = r.ink();
    let mut out = vec![false; w * h];
    for y in 0..r.height {
        for x in 0..r.width {
            out[(y + dy) * w + x + dx] = ink[y * r.width + x];
        }
    }
    Raster::from_ink(w, h, &out)
}

fn scaled_vertices(v: &[Px], k: i64) -> Vec<Px> {
    v.iter().map(|&(x, y)| (x * k, y * k)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn regions_match_union_find(w in 1usize..=32, h in 1usize..=32, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let ink: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(0.45)).collect();
        let r = Raster::from_ink(w, h, &ink);
        prop_assert_eq!(region_blocks(&r), union_find_blocks(&r));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn translation_keeps_the_quotient(fig in 0usize..6, rot in 0usize..16, dx in 0usize..20, dy in 0usize..20) {
        let fig = Figure::ALL[fig];
        let r = render(&place(fig, 16.0, rot as f64 * 22.5), 3);
        let moved = shifted(&r, dx, dy, r.width + 20, r.height + 20);
        let a = polygon_quotient(&r, &cfg());
        let b = polygon_quotient(&moved, &cfg());
        prop_assert!(are_isomorphic(&a.quotient, &b.quotient));
        prop_assert_eq!(whole(&a.assertions, "side_count"), whole(&b.assertions, "side_count"));
    }

    #[test]
    fn integer_scaling_only_changes_lengths(
        fig in prop::sample::select(vec![Figure::RegularTriangle, Figure::Square, Figure::RegularHexagon]),
        rot in 0usize..16,
        k in 2i64..=4,
    ) {
        let cat = segment_catalog();
        let v = place(fig, 12.0, rot as f64 * 22.5);
        let a = polygon_quotient(&render(&v, 3), &cfg());
        let b = polygon_quotient(&render(&scaled_vertices(&v, k), 3), &cfg());
        let strip = |q: &Structure| apply_morphism(q, &suppress_length(), &cat).unwrap();
        prop_assert!(are_isomorphic(&strip(&a.quotient), &strip(&b.quotient)));
    }

    #[test]
    fn adding_assertions_keeps_a_fired_signature(extra in prop::collection::vec((0usize..4, 0i64..8, any::<bool>()), 0..12)) {
        let base = polygon_quotient(&render(&place(Figure::RegularHexagon, 16.0, 0.0), 3), &cfg()).assertions;
        let features = ["closed", "side_count", "len_bin", "parallel_to"];
        for sig in standard_signatures() {
            let before = evaluate_signature(&sig, &base);
            if !before.fired {
                continue;
            }
            let forbidden: BTreeSet<&str> = sig.forbidden.iter().map(|r| r.feature.as_str()).collect();
            let mut more = base.clone();
            for &(f, n, b) in &extra {
                if forbidden.contains(features[f]) {
                    continue;
                }
                let v = if f == 0 || f == 3 { Value::Bool(b) } else { Value::Bin(n) };
                let t = if f >= 2 { Target::Part(format!("x{n}")) } else { Target::Whole };
                more.push(PropertyAssertion::new(t, features[f], v));
            }
            let after = evaluate_signature(&sig, &more);
            prop_assert!(after.fired);
            prop_assert!(after.score >= before.score);
        }
    }
}
