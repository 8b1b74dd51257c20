//! Runs the analysis pipeline over the synthetic polygon corpus and checks
//! class firings and scale invariance.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{generate_corpus, CorpusItem, Figure};
use super::signature::{build_signature_candidates, Signature};
use super::{
    analyze, scale_suppressed, suppress_length, AnalysisReport, PixelConfig, PropertyAssertion,
    Target, Value,
};
use crate::canon::canonical_hash;
use crate::derivation::apply_unchecked;
use crate::structure::Structure;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemResult {
    pub name: String,
    pub figure: Figure,
    pub base: usize,
    pub scale: usize,
    pub expected: Vec<String>,
    pub fired: Vec<String>,
    pub correct: bool,
    /// Firings on the scale-suppressed assertions.
    pub scale_free_fired: Vec<String>,
    /// Scale-suppressed whole-figure assertions with boolean or bin values.
    pub scale_free: Vec<PropertyAssertion>,
    /// Canonical hash of the segment quotient with lengths suppressed.
    pub scale_free_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub figure: Figure,
    pub items: usize,
    pub correct: usize,
    /// Signature induced from the class's scale-suppressed assertions.
    pub induced: Option<Signature>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoSummary {
    pub seed: u64,
    pub items: usize,
    pub correct: usize,
    /// Base figures whose scale variants agree on scale-suppressed firings
    /// and categorical assertions.
    pub scale_invariant_bases: usize,
    pub bases: usize,
    pub classes: Vec<ClassSummary>,
}

pub struct DemoRun {
    pub corpus: Vec<CorpusItem>,
    pub reports: Vec<AnalysisReport>,
    pub items: Vec<ItemResult>,
    pub summary: DemoSummary,
}

impl DemoRun {
    pub fn passed(&self) -> bool {
        let s = &self.summary;
        s.correct == s.items && s.scale_invariant_bases == s.bases
    }
}

/// Signatures a clean rendering of `fig` should fire.
pub fn expected_firings(fig: Figure) -> Vec<String> {
    let class = match fig.sides() {
        3 => "triangle",
        4 => "quadrilateral",
        _ => "hexagon",
    };
    let shape = if fig.regular() { "regular-polygon" } else { "irregular-polygon" };
    let mut out = vec![class.to_string(), shape.to_string()];
    out.sort();
    out
}

fn fired(sigs: &[Signature], assertions: &[PropertyAssertion]) -> Vec<String> {
    let mut out: Vec<String> = sigs
        .iter()
        .map(|s| super::evaluate_signature(s, assertions))
        .filter(|r| r.fired)
        .map(|r| r.subject)
        .collect();
    out.sort();
    out
}

/// Whole-figure boolean and bin assertions in a fixed order. Scores are
/// left out: they shift with pixel quantization at every scale. Per-segment
/// facts are compared through the quotient, where segment naming does not
/// matter.
fn categorical(a: &[PropertyAssertion]) -> Vec<PropertyAssertion> {
    let mut a: Vec<PropertyAssertion> = a
        .iter()
        .filter(|x| x.target == Target::Whole && !matches!(x.value, Value::Score(_)))
        .cloned()
        .collect();
    a.sort_by(|x, y| {
        (&x.target, &x.feature)
            .cmp(&(&y.target, &y.feature))
            .then_with(|| format!("{:?}", x.value).cmp(&format!("{:?}", y.value)))
    });
    a
}

pub fn run_demo(seed: u64, cfg: &PixelConfig, sigs: &[Signature]) -> DemoRun {
    let corpus = generate_corpus(seed);
    let reports: Vec<AnalysisReport> = corpus
        .par_iter()
        .map(|it| analyze(&it.raster, cfg, sigs))
        .collect();
    let items: Vec<ItemResult> = corpus
        .iter()
        .zip(&reports)
        .map(|(it, rep)| {
            let expected = expected_firings(it.figure);
            let got = fired(sigs, &rep.assertions);
            let suppressed = scale_suppressed(&rep.assertions);
            ItemResult {
                name: it.name.clone(),
                figure: it.figure,
                base: it.base,
                scale: it.scale,
                correct: got == expected,
                expected,
                fired: got,
                scale_free_fired: fired(sigs, &suppressed),
                scale_free: categorical(&suppressed),
                scale_free_hash: Structure::from_text(&rep.quotient)
                    .map(|q| canonical_hash(&apply_unchecked(&q, &suppress_length())))
                    .unwrap_or_default(),
            }
        })
        .collect();

    let bases: BTreeSet<usize> = items.iter().map(|i| i.base).collect();
    let invariant = bases
        .iter()
        .filter(|&&b| {
            let group: Vec<&ItemResult> = items.iter().filter(|i| i.base == b).collect();
            group.windows(2).all(|w| {
                w[0].scale_free == w[1].scale_free
                    && w[0].scale_free_hash == w[1].scale_free_hash
                    && w[0].scale_free_fired == w[1].scale_free_fired
            })
        })
        .count();
    let classes = Figure::ALL
        .iter()
        .map(|&fig| {
            let members: Vec<&ItemResult> = items.iter().filter(|i| i.figure == fig).collect();
            let examples: Vec<Vec<PropertyAssertion>> =
                members.iter().map(|i| i.scale_free.clone()).collect();
            ClassSummary {
                figure: fig,
                items: members.len(),
                correct: members.iter().filter(|i| i.correct).count(),
                induced: build_signature_candidates(&examples, 0.5).into_iter().next(),
            }
        })
        .collect();
    let summary = DemoSummary {
        seed,
        items: items.len(),
        correct: items.iter().filter(|i| i.correct).count(),
        scale_invariant_bases: invariant,
        bases: bases.len(),
        classes,
    };
    DemoRun {
        corpus,
        reports,
        items,
        summary,
    }
}
