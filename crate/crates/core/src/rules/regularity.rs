//! Regularity detection: shared motifs, near-identical structures,
//! coincidence after derivation, and operator-generated sequences.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::canon::{canonical_hash, canonical_labeling};
use crate::derivation::{apply_unchecked, payload_components, quotient, MorphismMask};
use crate::error::{Error, Result};
use crate::iso::{are_isomorphic, find_isomorphism, is_isomorphism};
use crate::matching::induced;
use crate::schema::{execute, Schema, SchemaLibrary, DEFAULT_FUEL};
use crate::structure::{Attrs, Relation, Structure, TypeCatalog};

pub const MAX_MOTIF: usize = 5;
pub const DEFAULT_EPS: f64 = 0.10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegularityCase {
    IdenticalPortions,
    NearIdentical,
    DerivedCoincidence,
    OperatorCoincidence,
}

/// Motif part `i` sits on `parts[i]` of population member `member`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occurrence {
    pub member: usize,
    pub parts: Vec<String>,
}

/// Relation given by endpoint ids of the source structure.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelSpec {
    pub from: String,
    pub to: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attrs: Attrs,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditOp {
    Substitute { part: String, ty: String, attrs: Attrs },
    Insert { rel: RelSpec },
    Delete { rel: RelSpec },
    Relabel { old: RelSpec, new: RelSpec },
}

/// Edits turning `a` into a structure that `mapping` (a id to b id) maps
/// isomorphically onto `b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditScript {
    pub mapping: Vec<(String, String)>,
    pub ops: Vec<EditOp>,
    pub distance: usize,
    pub budget: usize,
}

/// Named derivation stage followed by suppressions of named mask atoms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Recipe {
    pub stage: String,
    pub masks: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    Motif { motif: Structure, occurrences: Vec<Occurrence> },
    Edit { script: EditScript },
    Recipe { recipe: Recipe, members: Vec<usize> },
    Operator { schema: String, steps: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub case: RegularityCase,
    pub evidence: Evidence,
    /// The search stopped at a size cap before finishing.
    #[serde(default)]
    pub partial: bool,
}

// -- case 1 ------------------------------------------------------------------

/// Every connected part set of size `1..=k`, each once, sorted.
pub fn connected_subsets(s: &Structure, k: usize) -> Vec<Vec<usize>> {
    let nb = s.neighbors();
    let mut out = Vec::new();
    fn extend(
        nb: &[BTreeSet<usize>],
        k: usize,
        root: usize,
        sub: &mut Vec<usize>,
        mut ext: Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let mut sorted = sub.clone();
        sorted.sort_unstable();
        out.push(sorted);
        if sub.len() == k {
            return;
        }
        while let Some(w) = ext.pop() {
            // Exclusive neighbours of w: beyond the root, outside the current
            // set and not adjacent to it.
            let mut next = ext.clone();
            for &u in &nb[w] {
                if u > root
                    && !sub.contains(&u)
                    && !sub.iter().any(|&x| nb[x].contains(&u))
                    && !next.contains(&u)
                {
                    next.push(u);
                }
            }
            sub.push(w);
            extend(nb, k, root, sub, next, out);
            sub.pop();
        }
    }
    if k == 0 {
        return out;
    }
    for v in 0..s.len() {
        let ext: Vec<usize> = nb[v].iter().copied().filter(|&u| u > v).collect();
        extend(&nb, k, v, &mut vec![v], ext, &mut out);
    }
    out.sort();
    out
}

/// Connected motifs of at most `k_max` parts that occur in two or more
/// population members, with every occurrence. Ordered by motif size, then
/// canonical hash.
pub fn detect_regularity_case1(pop: &[Structure], k_max: usize) -> Result<Vec<RegularityReport>> {
    if k_max > MAX_MOTIF {
        return Err(Error::SizeCap {
            what: "motif size",
            got: k_max,
            limit: MAX_MOTIF,
        });
    }
    struct Group {
        motif: Structure,
        occurrences: Vec<Occurrence>,
        members: BTreeSet<usize>,
    }
    let mut groups: BTreeMap<(usize, String), Group> = BTreeMap::new();
    for (m, s) in pop.iter().enumerate() {
        for set in connected_subsets(s, k_max) {
            let sub = induced(s, &set);
            let lab = canonical_labeling(&sub);
            let order = lab.order();
            let ordered: Vec<usize> = order.iter().map(|&i| set[i]).collect();
            let parts = ordered.iter().map(|&i| s.part(i).id.clone()).collect();
            let key = (set.len(), crate::canon::form_hash(&lab.form));
            let g = groups.entry(key).or_insert_with(|| Group {
                motif: renumbered(&sub.permuted(&order)),
                occurrences: Vec::new(),
                members: BTreeSet::new(),
            });
            g.occurrences.push(Occurrence { member: m, parts });
            g.members.insert(m);
        }
    }
    Ok(groups
        .into_values()
        .filter(|g| g.members.len() >= 2)
        .map(|g| RegularityReport {
            case: RegularityCase::IdenticalPortions,
            evidence: Evidence::Motif {
                motif: g.motif,
                occurrences: g.occurrences,
            },
            partial: false,
        })
        .collect())
}

fn renumbered(s: &Structure) -> Structure {
    let mut k = 0;
    s.renamed(|_| {
        k += 1;
        format!("m{}", k - 1)
    })
    .expect("fresh ids are distinct")
}

fn index_all(s: &Structure, ids: &[String]) -> Option<Vec<usize>> {
    ids.iter().map(|id| s.index_of(id)).collect()
}

/// Each occurrence induces a sub-structure that the listed part order maps
/// isomorphically onto the motif, in a member that exists.
pub fn verify_motif(report: &RegularityReport, pop: &[Structure]) -> bool {
    let Evidence::Motif { motif, occurrences } = &report.evidence else {
        return false;
    };
    let members: BTreeSet<usize> = occurrences.iter().map(|o| o.member).collect();
    members.len() >= 2
        && motif.is_connected()
        && occurrences.iter().all(|o| {
            let Some(s) = pop.get(o.member) else {
                return false;
            };
            let Some(idx) = index_all(s, &o.parts) else {
                return false;
            };
            let ident: Vec<usize> = (0..idx.len()).collect();
            is_isomorphism(motif, &induced(s, &idx), &ident)
        })
}

// -- case 2 ------------------------------------------------------------------

/// Parts, relations and attribute entries.
pub fn definitional_size(s: &Structure) -> usize {
    s.len()
        + s.relations().len()
        + s.parts().iter().map(|p| p.attrs.len()).sum::<usize>()
        + s.relations().iter().map(|r| r.attrs.len()).sum::<usize>()
}

/// Relations grouped by unordered endpoint pair.
fn pair_map(s: &Structure) -> HashMap<(usize, usize), Vec<&Relation>> {
    let mut m: HashMap<(usize, usize), Vec<&Relation>> = HashMap::new();
    for r in s.relations() {
        m.entry((r.a.min(r.b), r.a.max(r.b))).or_default().push(r);
    }
    m
}

/// Relation identity relative to the ordered pair (x, y): key plus whether
/// it runs y to x (oriented structures only).
fn unit(r: &Relation, x: usize, oriented: bool) -> (String, bool) {
    (r.key(), oriented && r.a != x)
}

struct EditSearch<'a> {
    a: &'a Structure,
    b: &'a Structure,
    pa: HashMap<(usize, usize), Vec<&'a Relation>>,
    pb: HashMap<(usize, usize), Vec<&'a Relation>>,
    order: Vec<usize>,
    map: Vec<usize>,
    used: Vec<bool>,
    best: Option<(usize, Vec<usize>)>,
    bound: usize,
}

impl EditSearch<'_> {
    fn units(&self, side_a: bool, x: usize, y: usize) -> Vec<(String, bool)> {
        let (pm, s) = if side_a { (&self.pa, self.a) } else { (&self.pb, self.b) };
        let mut v: Vec<(String, bool)> = pm
            .get(&(x.min(y), x.max(y)))
            .map(|rs| rs.iter().map(|r| unit(r, x, s.oriented())).collect())
            .unwrap_or_default();
        v.sort();
        v
    }

    /// Relation edits on the pair (i, k) of `a` mapped to (j, map[k]).
    fn pair_cost(&self, i: usize, k: usize, j: usize, jk: usize) -> usize {
        let ua = self.units(true, i, k);
        let ub = self.units(false, j, jk);
        let common = multiset_common(&ua, &ub);
        ua.len().max(ub.len()) - common
    }

    fn step_cost(&self, depth: usize, i: usize, j: usize) -> usize {
        let mut c = (self.a.part(i).payload_key() != self.b.part(j).payload_key()) as usize;
        c += self.pair_cost(i, i, j, j);
        for &k in &self.order[..depth] {
            c += self.pair_cost(i, k, j, self.map[k]);
        }
        c
    }

    fn run(&mut self, depth: usize, cost: usize) {
        if depth == self.order.len() {
            self.best = Some((cost, self.map.clone()));
            self.bound = cost.saturating_sub(1);
            return;
        }
        if cost == 0 && self.best.as_ref().is_some_and(|b| b.0 == 0) {
            return;
        }
        let i = self.order[depth];
        for j in 0..self.b.len() {
            if self.used[j] {
                continue;
            }
            let c = cost + self.step_cost(depth, i, j);
            if c > self.bound || self.best.as_ref().is_some_and(|b| c >= b.0) {
                continue;
            }
            self.used[j] = true;
            self.map[i] = j;
            self.run(depth + 1, c);
            self.used[j] = false;
        }
    }
}

fn multiset_common(a: &[(String, bool)], b: &[(String, bool)]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Cheapest edit script of at most `bound` edits (part payload
/// substitutions, relation insertions, deletions and relabelings). Needs
/// equal part counts.
pub fn edit_distance(a: &Structure, b: &Structure, bound: usize) -> Option<EditScript> {
    if a.len() != b.len() || a.oriented() != b.oriented() {
        return None;
    }
    let script = |map: &[usize], distance: usize| EditScript {
        mapping: map
            .iter()
            .enumerate()
            .map(|(i, &j)| (a.part(i).id.clone(), b.part(j).id.clone()))
            .collect(),
        ops: Vec::new(),
        distance,
        budget: bound,
    };
    if let Some(w) = find_isomorphism(a, b) {
        return Some(script(&w, 0));
    }
    let deg: Vec<usize> = a.neighbors().iter().map(|n| n.len()).collect();
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(deg[i]), i));
    let mut search = EditSearch {
        a,
        b,
        pa: pair_map(a),
        pb: pair_map(b),
        order,
        map: vec![usize::MAX; a.len()],
        used: vec![false; b.len()],
        best: None,
        bound,
    };
    search.run(0, 0);
    let (distance, map) = search.best.take()?;
    let mut out = script(&map, distance);
    out.ops = edit_ops(a, b, &map, &search);
    debug_assert_eq!(out.ops.len(), distance);
    Some(out)
}

fn spec_of(s: &Structure, r: &Relation) -> RelSpec {
    RelSpec {
        from: s.part(r.a).id.clone(),
        to: s.part(r.b).id.clone(),
        label: r.label.clone(),
        attrs: r.attrs.clone(),
    }
}

fn edit_ops(a: &Structure, b: &Structure, map: &[usize], es: &EditSearch<'_>) -> Vec<EditOp> {
    let mut inv = vec![0; map.len()];
    for (i, &j) in map.iter().enumerate() {
        inv[j] = i;
    }
    let mut ops = Vec::new();
    for (i, &j) in map.iter().enumerate() {
        let (pa, pb) = (a.part(i), b.part(j));
        if pa.payload_key() != pb.payload_key() {
            ops.push(EditOp::Substitute {
                part: pa.id.clone(),
                ty: pb.ty.clone(),
                attrs: pb.attrs.clone(),
            });
        }
    }
    for i in 0..a.len() {
        for k in i..a.len() {
            let (j, jk) = (map[i], map[k]);
            let ra: Vec<&Relation> = es.pa.get(&(i, k)).cloned().unwrap_or_default();
            let rb: Vec<&Relation> = es.pb.get(&(j.min(jk), j.max(jk))).cloned().unwrap_or_default();
            let mut left_b: Vec<&Relation> = rb.clone();
            let mut dels = Vec::new();
            for r in ra {
                let u = unit(r, i, a.oriented());
                match left_b.iter().position(|q| unit(q, j, b.oriented()) == u) {
                    Some(p) => {
                        left_b.remove(p);
                    }
                    None => dels.push(spec_of(a, r)),
                }
            }
            // Relations of b restated with a's endpoint ids.
            let ins: Vec<RelSpec> = left_b
                .into_iter()
                .map(|q| RelSpec {
                    from: a.part(inv[q.a]).id.clone(),
                    to: a.part(inv[q.b]).id.clone(),
                    label: q.label.clone(),
                    attrs: q.attrs.clone(),
                })
                .collect();
            let mut dels = dels.into_iter();
            let mut ins = ins.into_iter();
            loop {
                match (dels.next(), ins.next()) {
                    (Some(old), Some(new)) => ops.push(EditOp::Relabel { old, new }),
                    (Some(old), None) => ops.push(EditOp::Delete { rel: old }),
                    (None, Some(new)) => ops.push(EditOp::Insert { rel: new }),
                    (None, None) => break,
                }
            }
        }
    }
    ops
}

/// `s` with the script's edits applied.
pub fn apply_edits(s: &Structure, ops: &[EditOp]) -> Result<Structure> {
    let mut parts = s.parts().to_vec();
    let mut rels: Vec<RelSpec> = s.relations().iter().map(|r| spec_of(s, r)).collect();
    let same = |x: &RelSpec, y: &RelSpec| {
        x.label == y.label
            && x.attrs == y.attrs
            && ((x.from == y.from && x.to == y.to) || (!s.oriented() && x.from == y.to && x.to == y.from))
    };
    let delete = |rels: &mut Vec<RelSpec>, r: &RelSpec| -> Result<()> {
        let p = rels
            .iter()
            .position(|x| same(x, r))
            .ok_or_else(|| Error::Precondition(format!("no relation {} {} {}", r.from, r.to, r.label)))?;
        rels.remove(p);
        Ok(())
    };
    for op in ops {
        match op {
            EditOp::Substitute { part, ty, attrs } => {
                let i = s.require(part)?;
                parts[i].ty = ty.clone();
                parts[i].attrs = attrs.clone();
            }
            EditOp::Insert { rel } => rels.push(rel.clone()),
            EditOp::Delete { rel } => delete(&mut rels, rel)?,
            EditOp::Relabel { old, new } => {
                delete(&mut rels, old)?;
                rels.push(new.clone());
            }
        }
    }
    let relations = rels
        .into_iter()
        .map(|r| {
            Ok(Relation {
                a: s.require(&r.from)?,
                b: s.require(&r.to)?,
                label: r.label,
                attrs: r.attrs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Structure::from_parts(s.oriented(), parts, relations)
}

/// Reports `a` and `b` as near-identical when at most
/// `eps * definitional_size(larger)` edits separate them.
pub fn detect_regularity_case2(a: &Structure, b: &Structure, eps: f64) -> Result<Option<RegularityReport>> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Precondition(format!("eps {eps} outside (0, 0.5]")));
    }
    let size = definitional_size(a).max(definitional_size(b));
    let budget = (eps * size as f64 + 1e-9).floor() as usize;
    Ok(edit_distance(a, b, budget).map(|script| RegularityReport {
        case: RegularityCase::NearIdentical,
        evidence: Evidence::Edit { script },
        partial: false,
    }))
}

/// The script's edits applied to `a` give a structure its mapping carries
/// onto `b`, within budget.
pub fn verify_edit(report: &RegularityReport, a: &Structure, b: &Structure) -> bool {
    let Evidence::Edit { script } = &report.evidence else {
        return false;
    };
    if script.ops.len() != script.distance || script.distance > script.budget {
        return false;
    }
    let Ok(edited) = apply_edits(a, &script.ops) else {
        return false;
    };
    let w: Option<Vec<usize>> = a
        .parts()
        .iter()
        .map(|p| {
            let (_, to) = script.mapping.iter().find(|(from, _)| *from == p.id)?;
            b.index_of(to)
        })
        .collect();
    w.is_some_and(|w| is_isomorphism(&edited, b, &w))
}

// -- case 3 ------------------------------------------------------------------

pub type DeriveFn = Arc<dyn Fn(&Structure) -> Result<Structure> + Send + Sync>;

/// Derivation search space: named stages times subsets of named masks of at
/// most `max_mask` atoms, tried in that order.
#[derive(Clone)]
pub struct Grammar {
    pub stages: Vec<(String, DeriveFn)>,
    pub masks: Vec<(String, MorphismMask)>,
    pub max_mask: usize,
    pub max_recipes: usize,
}

pub const IDENTITY_STAGE: &str = "identity";

impl Grammar {
    /// Only the identity stage, no masks.
    pub fn new() -> Self {
        Grammar {
            stages: vec![(IDENTITY_STAGE.into(), Arc::new(|s: &Structure| Ok(s.clone())))],
            masks: Vec::new(),
            max_mask: 2,
            max_recipes: 4096,
        }
    }

    /// Identity plus quotients by equal-payload components (over all labels
    /// and per label); one mask atom per attribute name occurring in the
    /// population or its quotients.
    pub fn canonical(pop: &[Structure], max_mask: usize) -> Self {
        let mut g = Grammar::new();
        g.max_mask = max_mask;
        let labels: BTreeSet<String> = pop
            .iter()
            .flat_map(|s| s.relations().iter().map(|r| r.label.clone()))
            .collect();
        let mut keys: Vec<Option<String>> = vec![None];
        if labels.len() > 1 {
            keys.extend(labels.into_iter().map(Some));
        }
        for key in keys {
            let name = match &key {
                None => "components".to_string(),
                Some(l) => format!("components:{l}"),
            };
            g = g.with_stage(name, move |s| {
                let k = payload_components(s, key.as_deref());
                quotient(s, &k, &mut TypeCatalog::new())
            });
        }
        let mut attrs = BTreeSet::new();
        for s in pop {
            for (_, f) in &g.stages {
                if let Ok(d) = f(s) {
                    attrs.extend(d.parts().iter().flat_map(|p| p.attrs.keys().cloned()));
                    attrs.extend(d.relations().iter().flat_map(|r| r.attrs.keys().cloned()));
                }
            }
        }
        for a in attrs {
            let m = MorphismMask::new().drop_attr(a.clone());
            g = g.with_mask(a, m);
        }
        g
    }

    pub fn with_stage(
        mut self,
        name: impl Into<String>,
        f: impl Fn(&Structure) -> Result<Structure> + Send + Sync + 'static,
    ) -> Self {
        self.stages.push((name.into(), Arc::new(f)));
        self
    }

    pub fn with_mask(mut self, name: impl Into<String>, m: MorphismMask) -> Self {
        self.masks.push((name.into(), m));
        self
    }

    /// Recipes in search order: stage, then mask count, then atom order.
    pub fn recipes(&self) -> Vec<Recipe> {
        let mut out = Vec::new();
        for (stage, _) in &self.stages {
            for k in 0..=self.max_mask.min(self.masks.len()) {
                for combo in combinations(self.masks.len(), k) {
                    out.push(Recipe {
                        stage: stage.clone(),
                        masks: combo.iter().map(|&i| self.masks[i].0.clone()).collect(),
                    });
                }
            }
        }
        out
    }

    pub fn derive(&self, s: &Structure, recipe: &Recipe) -> Result<Structure> {
        let (_, f) = self
            .stages
            .iter()
            .find(|(n, _)| *n == recipe.stage)
            .ok_or_else(|| Error::Precondition(format!("unknown stage `{}`", recipe.stage)))?;
        let mut mask = MorphismMask::new();
        for name in &recipe.masks {
            let (_, m) = self
                .masks
                .iter()
                .find(|(n, _)| n == name)
                .ok_or_else(|| Error::Precondition(format!("unknown mask `{name}`")))?;
            mask = mask.then(m);
        }
        Ok(apply_unchecked(&f(s)?, &mask))
    }
}

impl Default for Grammar {
    fn default() -> Self {
        Self::new()
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Recipes under which two or more members become isomorphic. A group is
/// reported only if it joins some pair no earlier recipe joined.
pub fn detect_regularity_case3(pop: &[Structure], grammar: &Grammar) -> Vec<RegularityReport> {
    let recipes = grammar.recipes();
    let partial = recipes.len() > grammar.max_recipes;
    let mut joined: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut out = Vec::new();
    for recipe in recipes.into_iter().take(grammar.max_recipes) {
        let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, s) in pop.iter().enumerate() {
            if let Ok(d) = grammar.derive(s, &recipe) {
                groups.entry(canonical_hash(&d)).or_default().push(i);
            }
        }
        for members in groups.into_values().filter(|m| m.len() >= 2) {
            let mut new = false;
            for (x, &i) in members.iter().enumerate() {
                for &j in &members[x + 1..] {
                    new |= joined.insert((i, j));
                }
            }
            if new {
                out.push(RegularityReport {
                    case: RegularityCase::DerivedCoincidence,
                    evidence: Evidence::Recipe {
                        recipe: recipe.clone(),
                        members,
                    },
                    partial,
                });
            }
        }
    }
    out
}

/// Re-derives the listed members and checks they are pairwise isomorphic.
pub fn verify_recipe(report: &RegularityReport, pop: &[Structure], grammar: &Grammar) -> bool {
    let Evidence::Recipe { recipe, members } = &report.evidence else {
        return false;
    };
    let derived: Option<Vec<Structure>> = members
        .iter()
        .map(|&i| pop.get(i).and_then(|s| grammar.derive(s, recipe).ok()))
        .collect();
    match derived {
        Some(d) if d.len() >= 2 => d.iter().all(|x| are_isomorphic(x, &d[0])),
        _ => false,
    }
}

// -- case 4 ------------------------------------------------------------------

/// True iff running `op` on each element gives (up to isomorphism) the next.
pub fn verify_regularity_case4(seq: &[Structure], op: &Schema, lib: &SchemaLibrary) -> Result<bool> {
    if seq.len() < 2 {
        return Err(Error::Precondition("sequence needs two or more structures".into()));
    }
    for w in seq.windows(2) {
        if !are_isomorphic(&execute(op, lib, &w[0], DEFAULT_FUEL)?, &w[1]) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(types: &[&str]) -> Structure {
        let mut s = Structure::new(false);
        for (i, t) in types.iter().enumerate() {
            s.add_part(format!("v{i}"), *t).unwrap();
            if i > 0 {
                s.relate(i - 1, i, "e").unwrap();
            }
        }
        s
    }

    #[test]
    fn subsets_of_a_triangle() {
        let mut t = path(&["a", "a", "a"]);
        t.relate(0, 2, "e").unwrap();
        let sets = connected_subsets(&t, 3);
        assert_eq!(sets.len(), 3 + 3 + 1);
        assert_eq!(connected_subsets(&path(&["a", "a", "a"]), 3).len(), 3 + 2 + 1);
    }

    #[test]
    fn shared_three_path() {
        let a = path(&["x", "y", "z", "q"]);
        let b = path(&["r", "x", "y", "z"]);
        let reports = detect_regularity_case1(&[a.clone(), b.clone()], 3).unwrap();
        let big: Vec<_> = reports
            .iter()
            .filter(|r| matches!(&r.evidence, Evidence::Motif { motif, .. } if motif.len() == 3))
            .collect();
        assert_eq!(big.len(), 1);
        assert!(reports.iter().all(|r| verify_motif(r, &[a.clone(), b.clone()])));
        assert!(detect_regularity_case1(&[a], 6).is_err());
    }

    #[test]
    fn disjoint_alphabets_share_nothing() {
        let reports = detect_regularity_case1(&[path(&["a", "b"]), path(&["c", "d"])], 3).unwrap();
        assert!(reports.is_empty());
    }

    #[test]
    fn single_substitution_within_budget() {
        // 6 parts + 5 relations = 11 elements
        let a = path(&["a", "b", "c", "d", "e", "f"]);
        let b = path(&["a", "b", "c", "X", "e", "f"]);
        let r = detect_regularity_case2(&a, &b, 0.10).unwrap().unwrap();
        let Evidence::Edit { script } = &r.evidence else { panic!() };
        assert_eq!((script.distance, script.budget), (1, 1));
        assert!(verify_edit(&r, &a, &b));
        assert!(detect_regularity_case2(&a, &b, 0.6).is_err());
    }

    #[test]
    fn path_and_clique_are_far_apart() {
        let p = path(&["a"; 5]);
        let mut k = Structure::new(false);
        for i in 0..5 {
            k.add_part(format!("v{i}"), "a").unwrap();
        }
        for i in 0..5 {
            for j in i + 1..5 {
                k.relate(i, j, "e").unwrap();
            }
        }
        assert!(detect_regularity_case2(&p, &k, 0.10).unwrap().is_none());
        assert_eq!(edit_distance(&p, &k, 100).unwrap().distance, 6);
    }

    #[test]
    fn relabel_and_direction_edits() {
        let mut a = Structure::new(true);
        let mut b = Structure::new(true);
        for s in [&mut a, &mut b] {
            s.add_part("u", "t").unwrap();
            s.add_part("w", "t").unwrap();
            s.add_part("z", "k").unwrap();
        }
        a.relate(0, 1, "e").unwrap();
        a.relate(1, 2, "f").unwrap();
        b.relate(0, 1, "g").unwrap();
        b.relate(2, 1, "f").unwrap();
        let sc = edit_distance(&a, &b, 10).unwrap();
        assert_eq!(sc.distance, 2);
        let edited = apply_edits(&a, &sc.ops).unwrap();
        assert!(are_isomorphic(&edited, &b));
    }

    #[test]
    fn identity_recipe_for_isomorphic_pair() {
        let a = path(&["a", "b", "a"]);
        let b = path(&["a", "b", "a"]).permuted(&[2, 1, 0]);
        let reports = detect_regularity_case3(&[a.clone(), b.clone()], &Grammar::canonical(&[a.clone(), b.clone()], 2));
        assert_eq!(reports.len(), 1);
        let Evidence::Recipe { recipe, .. } = &reports[0].evidence else { panic!() };
        assert_eq!((recipe.stage.as_str(), recipe.masks.len()), (IDENTITY_STAGE, 0));
    }

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
    }
}
