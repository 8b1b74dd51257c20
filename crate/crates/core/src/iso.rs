//! Exact comparison of structures.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::canon::canonical_labeling;
use crate::error::{Error, Result};
use crate::structure::{ensure_valid, Structure, TypeCatalog};

/// Witness of an isomorphism: `map[i]` is the part of `b` matched to part
/// `i` of `a`.
pub type Witness = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsoReport {
    pub isomorphic: bool,
    /// Part id of `a` to part id of `b`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<BTreeMap<String, String>>,
}

/// Isomorphism test without input validation. Deterministic: the witness
/// aligns the canonical labelings of the two structures.
pub fn find_isomorphism(a: &Structure, b: &Structure) -> Option<Witness> {
    if a.len() != b.len()
        || a.oriented() != b.oriented()
        || a.relations().len() != b.relations().len()
    {
        return None;
    }
    let mut ka: Vec<String> = a.parts().iter().map(|p| p.payload_key()).collect();
    let mut kb: Vec<String> = b.parts().iter().map(|p| p.payload_key()).collect();
    ka.sort_unstable();
    kb.sort_unstable();
    if ka != kb {
        return None;
    }
    let mut ra: Vec<String> = a.relations().iter().map(|r| r.key()).collect();
    let mut rb: Vec<String> = b.relations().iter().map(|r| r.key()).collect();
    ra.sort_unstable();
    rb.sort_unstable();
    if ra != rb {
        return None;
    }
    let la = canonical_labeling(a);
    let lb = canonical_labeling(b);
    if la.form != lb.form {
        return None;
    }
    let order_b = lb.order();
    Some(la.position.iter().map(|&k| order_b[k]).collect())
}

pub fn are_isomorphic(a: &Structure, b: &Structure) -> bool {
    find_isomorphism(a, b).is_some()
}

/// Validates both inputs, then tests isomorphism.
pub fn isomorphic(a: &Structure, b: &Structure) -> Result<Option<Witness>> {
    ensure_valid(a)?;
    ensure_valid(b)?;
    Ok(find_isomorphism(a, b))
}

pub fn iso_report(a: &Structure, b: &Structure) -> Result<IsoReport> {
    let w = isomorphic(a, b)?;
    Ok(IsoReport {
        isomorphic: w.is_some(),
        witness: w.map(|w| {
            w.iter()
                .enumerate()
                .map(|(i, &j)| (a.part(i).id.clone(), b.part(j).id.clone()))
                .collect()
        }),
    })
}

/// True iff `w` maps `a` onto `b` preserving payloads, relation labels,
/// relation attributes and orientation.
pub fn is_isomorphism(a: &Structure, b: &Structure, w: &[usize]) -> bool {
    if a.len() != b.len() || w.len() != a.len() || a.oriented() != b.oriented() {
        return false;
    }
    let mut hit = vec![false; b.len()];
    for (i, &j) in w.iter().enumerate() {
        if j >= b.len() || hit[j] || a.part(i).payload_key() != b.part(j).payload_key() {
            return false;
        }
        hit[j] = true;
    }
    let norm = |x: usize, y: usize, oriented: bool| {
        if oriented || x <= y {
            (x, y)
        } else {
            (y, x)
        }
    };
    let mut mapped: Vec<(usize, usize, String)> = a
        .relations()
        .iter()
        .map(|r| {
            let (x, y) = norm(w[r.a], w[r.b], a.oriented());
            (x, y, r.key())
        })
        .collect();
    let mut target: Vec<(usize, usize, String)> = b
        .relations()
        .iter()
        .map(|r| (r.a, r.b, r.key()))
        .collect();
    mapped.sort();
    target.sort();
    mapped == target
}

/// Partition of the parts into internal-indistinguishability classes.
///
/// Two parts share a class iff exchanging them in place leaves the structure
/// unchanged part for part, which holds exactly when their payloads (type id
/// and attributes) coincide. Nested types are interned by canonical form, so
/// equal type ids mean isomorphic contents. Classes are ordered by first
/// member.
pub fn internal_classes(s: &Structure) -> Vec<Vec<usize>> {
    let mut by_key: HashMap<String, usize> = HashMap::new();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (i, p) in s.parts().iter().enumerate() {
        let k = p.payload_key();
        match by_key.get(&k) {
            Some(&c) => classes[c].push(i),
            None => {
                by_key.insert(k, classes.len());
                classes.push(vec![i]);
            }
        }
    }
    classes
}

/// M°: the number of internal-indistinguishability classes.
pub fn internal_class_count(s: &Structure) -> usize {
    internal_classes(s).len()
}

/// Exchanges the payloads of parts `i` and `j`.
pub fn swap_payloads(s: &Structure, i: usize, j: usize) -> Structure {
    let mut t = s.clone();
    let (pi, pj) = (s.part(i).clone(), s.part(j).clone());
    t.set_payload(i, pj.ty, pj.attrs).expect("index in range");
    t.set_payload(j, pi.ty, pi.attrs).expect("index in range");
    t
}

/// Exchange test between two isomorphic structures: every part of `a` takes
/// the full internal content of its counterpart in `b` and vice versa; the
/// structures are swap-indistinguishable iff both results are isomorphic to
/// their originals. Nested contents are resolved through each side's catalog.
pub fn swap_indistinguishable(
    a: &Structure,
    cat_a: &TypeCatalog,
    b: &Structure,
    cat_b: &TypeCatalog,
) -> Result<bool> {
    let w = isomorphic(a, b)?.ok_or_else(|| {
        Error::Precondition("swap test requires isomorphic structures".into())
    })?;
    let da = cat_a.deepened(a, 0);
    let db = cat_b.deepened(b, 0);
    let mut a_swapped = da.clone();
    let mut b_swapped = db.clone();
    for (i, &j) in w.iter().enumerate() {
        let (pa, pb) = (da.part(i), db.part(j));
        a_swapped.set_payload(i, pb.ty.clone(), pb.attrs.clone())?;
        b_swapped.set_payload(j, pa.ty.clone(), pa.attrs.clone())?;
    }
    Ok(are_isomorphic(&a_swapped, &da) && are_isomorphic(&b_swapped, &db))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(ids: &[&str], ty: &str) -> Structure {
        let mut s = Structure::new(false);
        for id in ids {
            s.add_part(*id, ty).unwrap();
        }
        for i in 1..ids.len() {
            s.relate(i - 1, i, "adj").unwrap();
        }
        s
    }

    fn triangle(types: [&str; 3]) -> Structure {
        let mut s = Structure::new(false);
        for (i, t) in types.iter().enumerate() {
            s.add_part(format!("v{i}"), *t).unwrap();
        }
        s.relate(0, 1, "adj").unwrap();
        s.relate(1, 2, "adj").unwrap();
        s.relate(2, 0, "adj").unwrap();
        s
    }

    #[test]
    fn relabeled_paths_are_isomorphic() {
        let a = path(&["a", "b", "c"], "t");
        let b = path(&["z", "y", "x"], "t");
        let w = isomorphic(&a, &b).unwrap().unwrap();
        assert!(is_isomorphism(&a, &b, &w));
    }

    #[test]
    fn cycle_vs_path() {
        let a = triangle(["t", "t", "t"]);
        let b = path(&["a", "b", "c"], "t");
        assert!(isomorphic(&a, &b).unwrap().is_none());
    }

    #[test]
    fn invalid_input_is_an_error() {
        let mut bad = Structure::new(false);
        bad.add_part("a", "t").unwrap();
        bad.add_part("b", "t").unwrap();
        assert!(matches!(
            isomorphic(&bad, &bad),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn symmetric_cycle_has_one_class() {
        let s = triangle(["t", "t", "t"]);
        assert_eq!(internal_class_count(&s), 1);
    }

    #[test]
    fn two_color_triangle_has_two_classes() {
        let s = triangle(["red", "red", "blue"]);
        assert_eq!(internal_classes(&s), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn identical_bricks_share_a_class() {
        let mut model = Structure::new(false);
        model.add_part("base", "plate").unwrap();
        model.add_part("b1", "brick2x4").unwrap();
        model.add_part("b2", "brick2x4").unwrap();
        model.relate(0, 1, "on").unwrap();
        model.relate(0, 2, "on").unwrap();
        let classes = internal_classes(&model);
        assert!(classes.contains(&vec![1, 2]));
    }

    #[test]
    fn swap_identity_and_copies() {
        let cat = TypeCatalog::new();
        let a = triangle(["red", "red", "blue"]);
        let b = a.renamed(|id| format!("{id}'")).unwrap();
        assert!(swap_indistinguishable(&a, &cat, &a, &cat).unwrap());
        assert!(swap_indistinguishable(&a, &cat, &b, &cat).unwrap());
    }

    #[test]
    fn swap_detects_different_nested_contents() {
        let mut small = Structure::new(false);
        small.add_part("s0", "atom").unwrap();
        small.add_part("s1", "atom").unwrap();
        small.relate(0, 1, "bond").unwrap();
        let mut big = small.clone();
        big.add_part("s2", "atom").unwrap();
        big.relate(1, 2, "bond").unwrap();

        let mut cat_a = TypeCatalog::new();
        cat_a.add_nested("brick", small);
        let mut cat_b = TypeCatalog::new();
        cat_b.add_nested("brick", big);

        let a = path(&["p", "q"], "brick");
        let b = path(&["x", "y"], "brick");
        assert!(isomorphic(&a, &b).unwrap().is_some());
        assert!(!swap_indistinguishable(&a, &cat_a, &b, &cat_b).unwrap());
    }

    #[test]
    fn swap_requires_isomorphism() {
        let cat = TypeCatalog::new();
        let a = triangle(["t", "t", "t"]);
        let b = path(&["a", "b", "c"], "t");
        assert!(matches!(
            swap_indistinguishable(&a, &cat, &b, &cat),
            Err(Error::Precondition(_))
        ));
    }
}
