//! Discrete structural arithmetic: composition, difference, convolution and
//! the morphism-number that maps them onto +, - and × of naturals.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{induced, induced_occurrences};
use crate::structure::{Attrs, Part, Relation, Structure};

/// Default operand cap for difference and convolution.
pub const DEFAULT_ARITH_CAP: usize = 64;

/// A relation added between a part of the left operand and a part of the
/// right operand during composition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Glue {
    pub left: String,
    pub right: String,
    pub label: String,
    #[serde(default)]
    pub attrs: Attrs,
}

impl Glue {
    pub fn new(left: impl Into<String>, right: impl Into<String>, label: impl Into<String>) -> Self {
        Glue {
            left: left.into(),
            right: right.into(),
            label: label.into(),
            attrs: Attrs::new(),
        }
    }
}

/// The number left once only the set of parts is retained.
pub fn morphism_number(s: &Structure) -> usize {
    s.len()
}

/// Glues `b` onto `a`. Part ids are kept when the operands' ids are
/// disjoint; otherwise they are prefixed with `a.` and `b.`.
pub fn compose(a: &Structure, b: &Structure, gluing: &[Glue]) -> Result<Structure> {
    if a.is_empty() || b.is_empty() {
        if let Some(g) = gluing.first() {
            let missing = if a.is_empty() { &g.left } else { &g.right };
            return Err(Error::UnknownPart(missing.clone()));
        }
        return Ok(if a.is_empty() { b.clone() } else { a.clone() });
    }
    if a.oriented() != b.oriented() {
        return Err(Error::Incompatible("orientation differs".into()));
    }
    if gluing.is_empty() {
        return Err(Error::Precondition(
            "composition needs at least one gluing relation".into(),
        ));
    }
    let clash = a.parts().iter().any(|p| b.index_of(&p.id).is_some());
    let (pa, pb) = if clash { ("a.", "b.") } else { ("", "") };
    let mut parts: Vec<Part> = Vec::with_capacity(a.len() + b.len());
    for p in a.parts() {
        parts.push(Part {
            id: format!("{pa}{}", p.id),
            ..p.clone()
        });
    }
    for p in b.parts() {
        parts.push(Part {
            id: format!("{pb}{}", p.id),
            ..p.clone()
        });
    }
    let off = a.len();
    let mut relations: Vec<Relation> = a.relations().to_vec();
    relations.extend(b.relations().iter().map(|r| Relation {
        a: r.a + off,
        b: r.b + off,
        ..r.clone()
    }));
    for g in gluing {
        let l = a.require(&g.left)?;
        let r = b.require(&g.right)?;
        relations.push(Relation {
            a: l,
            b: r + off,
            label: g.label.clone(),
            attrs: g.attrs.clone(),
        });
    }
    Structure::from_parts(a.oriented(), parts, relations)
}

fn check_cap(s: &Structure, cap: usize) -> Result<()> {
    if s.len() > cap {
        return Err(Error::SizeCap {
            what: "operand parts",
            got: s.len(),
            limit: cap,
        });
    }
    Ok(())
}

/// One result per portion of `a` isomorphic to `b`: `a` with that portion
/// removed. Empty iff `b` does not occur in `a`.
pub fn difference(a: &Structure, b: &Structure, cap: usize) -> Result<Vec<Structure>> {
    check_cap(a, cap)?;
    check_cap(b, cap)?;
    if b.is_empty() {
        return Ok(vec![a.clone()]);
    }
    let occ = induced_occurrences(b, a);
    Ok(occ
        .into_iter()
        .map(|set| {
            let removed: BTreeSet<usize> = set.into_iter().collect();
            let rest: Vec<usize> = (0..a.len()).filter(|i| !removed.contains(i)).collect();
            induced(a, &rest)
        })
        .collect())
}

/// Replaces every part of `b` with a copy of `a`. Each relation of `b`
/// between slots x and y is inherited as one relation between corresponding
/// parts of the copies in x and y. The operands must agree on orientation and
/// use disjoint relation labels so the inherited relations stay
/// distinguishable from the copies' own.
pub fn convolution(a: &Structure, b: &Structure, cap: usize) -> Result<Structure> {
    check_cap(a, cap)?;
    check_cap(b, cap)?;
    if a.oriented() != b.oriented() {
        return Err(Error::Incompatible("orientation differs".into()));
    }
    let la: BTreeSet<&str> = a.relations().iter().map(|r| r.label.as_str()).collect();
    if let Some(r) = b.relations().iter().find(|r| la.contains(r.label.as_str())) {
        return Err(Error::Incompatible(format!(
            "relation label `{}` used by both operands",
            r.label
        )));
    }
    let n = a.len();
    let mut parts = Vec::with_capacity(n * b.len());
    for slot in b.parts() {
        for p in a.parts() {
            parts.push(Part {
                id: format!("{}.{}", slot.id, p.id),
                ty: p.ty.clone(),
                attrs: p.attrs.clone(),
            });
        }
    }
    let mut relations = Vec::new();
    for x in 0..b.len() {
        for r in a.relations() {
            relations.push(Relation {
                a: x * n + r.a,
                b: x * n + r.b,
                ..r.clone()
            });
        }
    }
    for r in b.relations() {
        for i in 0..n {
            relations.push(Relation {
                a: r.a * n + i,
                b: r.b * n + i,
                label: r.label.clone(),
                attrs: r.attrs.clone(),
            });
        }
    }
    Structure::from_parts(a.oriented(), parts, relations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iso::are_isomorphic;
    use crate::structure::validate;

    fn path(prefix: &str, n: usize, label: &str) -> Structure {
        let mut s = Structure::new(false);
        for i in 0..n {
            s.add_part(format!("{prefix}{i}"), "t").unwrap();
        }
        for i in 1..n {
            s.relate(i - 1, i, label).unwrap();
        }
        s
    }

    #[test]
    fn compose_adds_part_counts() {
        let a = path("a", 3, "adj");
        let b = path("b", 4, "adj");
        let c = compose(&a, &b, &[Glue::new("a2", "b0", "adj")]).unwrap();
        assert_eq!(morphism_number(&c), 7);
        assert!(validate(&c).is_empty());
    }

    #[test]
    fn compose_with_empty_is_identity() {
        let a = path("a", 3, "adj");
        let c = compose(&a, &Structure::empty(), &[]).unwrap();
        assert_eq!(c, a);
        let c = compose(&Structure::empty(), &a, &[]).unwrap();
        assert_eq!(c, a);
    }

    #[test]
    fn two_gluings_give_equinumerous_non_isomorphic_results() {
        let a = path("a", 3, "adj");
        let b = path("b", 3, "adj");
        let end = compose(&a, &b, &[Glue::new("a2", "b0", "adj")]).unwrap();
        let mid = compose(&a, &b, &[Glue::new("a1", "b1", "adj")]).unwrap();
        assert_eq!(end.len(), mid.len());
        assert!(!are_isomorphic(&end, &mid));
    }

    #[test]
    fn compose_rejects_unknown_gluing_part() {
        let a = path("a", 2, "adj");
        let b = path("b", 2, "adj");
        assert!(matches!(
            compose(&a, &b, &[Glue::new("nope", "b0", "adj")]),
            Err(Error::UnknownPart(_))
        ));
    }

    #[test]
    fn compose_prefixes_on_id_clash() {
        let a = path("v", 2, "adj");
        let c = compose(&a, &a, &[Glue::new("v1", "v0", "adj")]).unwrap();
        assert!(c.index_of("a.v0").is_some() && c.index_of("b.v1").is_some());
    }

    #[test]
    fn difference_of_paths() {
        let a = path("a", 5, "adj");
        let b = path("b", 2, "adj");
        let out = difference(&a, &b, DEFAULT_ARITH_CAP).unwrap();
        assert_eq!(out.len(), 4);
        assert!(out.iter().all(|s| s.len() == 3));
    }

    #[test]
    fn difference_without_occurrence_is_empty() {
        let a = path("a", 3, "adj");
        let b = path("b", 4, "adj");
        assert!(difference(&a, &b, DEFAULT_ARITH_CAP).unwrap().is_empty());
    }

    #[test]
    fn difference_respects_cap() {
        let a = path("a", 5, "adj");
        let b = path("b", 2, "adj");
        assert!(matches!(difference(&a, &b, 4), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn convolution_multiplies() {
        let a = path("a", 2, "adj");
        let b = path("b", 3, "link");
        let c = convolution(&a, &b, DEFAULT_ARITH_CAP).unwrap();
        assert_eq!(morphism_number(&c), 6);
    }

    #[test]
    fn convolution_with_single_part_is_identity() {
        let a = path("a", 4, "adj");
        let mut one = Structure::new(false);
        one.add_part("x", "slot").unwrap();
        let c = convolution(&a, &one, DEFAULT_ARITH_CAP).unwrap();
        assert!(are_isomorphic(&c, &a));
    }

    #[test]
    fn convolution_two_paths_builds_a_square() {
        let a = path("a", 2, "adj");
        let b = path("b", 2, "link");
        let c = convolution(&a, &b, DEFAULT_ARITH_CAP).unwrap();
        // Manual construction: two copies of the edge plus two inherited
        // links between corresponding parts.
        let mut manual = Structure::new(false);
        for id in ["p", "q", "r", "s"] {
            manual.add_part(id, "t").unwrap();
        }
        manual.relate(0, 1, "adj").unwrap();
        manual.relate(2, 3, "adj").unwrap();
        manual.relate(0, 2, "link").unwrap();
        manual.relate(1, 3, "link").unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c.relations().iter().filter(|r| r.label == "link").count(), 2);
        assert!(are_isomorphic(&c, &manual));
    }

    #[test]
    fn convolution_rejects_shared_labels() {
        let a = path("a", 2, "adj");
        let b = path("b", 2, "adj");
        assert!(matches!(
            convolution(&a, &b, DEFAULT_ARITH_CAP),
            Err(Error::Incompatible(_))
        ));
    }
}
