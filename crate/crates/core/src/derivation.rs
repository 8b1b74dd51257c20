//! Derived structures: portions, partitions, quotients and morphisms, plus
//! a lineage store recording how each derived structure was obtained.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::induced;
use crate::structure::{strip_comment, Attrs, Part, Relation, Structure, TypeCatalog};

/// Default cap on the number of partitions proposed for one structure.
pub const DEFAULT_PARTITION_CAP: usize = 8;

/// Label of quotient relations.
pub const CROSS_LABEL: &str = "cross";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Portion {
    /// Parent part indices, ascending.
    pub members: Vec<usize>,
    pub induced: Structure,
}

/// Induced portion of `s` on `members`.
pub fn portion(s: &Structure, members: &[usize], allow_disconnected: bool) -> Result<Portion> {
    if members.is_empty() {
        return Err(Error::EmptyPortion);
    }
    let set: BTreeSet<usize> = members.iter().copied().collect();
    if let Some(&bad) = set.iter().find(|&&m| m >= s.len()) {
        return Err(Error::PartIndex(bad));
    }
    let members: Vec<usize> = set.into_iter().collect();
    if !allow_disconnected && !s.is_connected_subset(&members) {
        return Err(Error::Disconnected);
    }
    Ok(Portion {
        induced: induced(s, &members),
        members,
    })
}

pub fn portion_by_ids(s: &Structure, ids: &[&str], allow_disconnected: bool) -> Result<Portion> {
    let idx = ids
        .iter()
        .map(|id| s.require(id))
        .collect::<Result<Vec<_>>>()?;
    portion(s, &idx, allow_disconnected)
}

/// Disjoint covering of a structure's parts by non-empty blocks.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Blocks are sorted internally and ordered by their smallest member.
    pub fn new(s: &Structure, blocks: Vec<Vec<usize>>) -> Result<Self> {
        Self::covering(s.len(), blocks)
    }

    /// Partition of the indices `0..n`.
    pub fn covering(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let p = Self::normalized(blocks);
        p.check(n)?;
        Ok(p)
    }

    pub fn from_ids(s: &Structure, blocks: &[Vec<String>]) -> Result<Self> {
        let idx = blocks
            .iter()
            .map(|b| b.iter().map(|id| s.require(id)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(s, idx)
    }

    /// One block per distinct value of `key`, in order of first occurrence.
    pub fn by_key<K: std::hash::Hash + Eq>(s: &Structure, key: impl Fn(usize) -> K) -> Self {
        let mut map: HashMap<K, usize> = HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for i in 0..s.len() {
            let k = key(i);
            let b = *map.entry(k).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[b].push(i);
        }
        Self::normalized(blocks)
    }

    pub fn whole(s: &Structure) -> Self {
        Self::normalized(vec![(0..s.len()).collect()])
    }

    fn normalized(mut blocks: Vec<Vec<usize>>) -> Self {
        for b in blocks.iter_mut() {
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b.first().copied().unwrap_or(usize::MAX));
        Partition { blocks }
    }

    fn check(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for b in &self.blocks {
            if b.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            for &m in b {
                if m >= n {
                    return Err(Error::InvalidPartition(format!("part index {m} out of range")));
                }
                if std::mem::replace(&mut seen[m], true) {
                    return Err(Error::InvalidPartition(format!("part {m} in two blocks")));
                }
            }
        }
        if let Some(i) = seen.iter().position(|x| !x) {
            return Err(Error::InvalidPartition(format!("part {i} not covered")));
        }
        Ok(())
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Block index of every part.
    pub fn block_of(&self, n: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; n];
        for (k, b) in self.blocks.iter().enumerate() {
            for &m in b {
                out[m] = k;
            }
        }
        out
    }

    pub fn portions(&self, s: &Structure) -> Vec<Portion> {
        self.blocks
            .iter()
            .map(|b| Portion {
                members: b.clone(),
                induced: induced(s, b),
            })
            .collect()
    }

    /// Same blocks expressed through a part map (`map[i]` = new index of i).
    pub fn mapped(&self, map: &[usize]) -> Self {
        Self::normalized(
            self.blocks
                .iter()
                .map(|b| b.iter().map(|&m| map[m]).collect())
                .collect(),
        )
    }
}

/// Quotient of `s` by `k`. Block `i` becomes part `k<i>` whose type is the
/// interned canonical id of the block's induced structure. A `cross`
/// relation joins two blocks iff some parent relation crosses them; it
/// carries `count` and `n_<label>` for every crossing base label. Oriented
/// parents give one relation per crossing direction.
pub fn quotient(s: &Structure, k: &Partition, catalog: &mut TypeCatalog) -> Result<Structure> {
    k.check(s.len())?;
    let mut out = Structure::new(s.oriented());
    for (i, b) in k.blocks().iter().enumerate() {
        let ty = catalog.intern(&induced(s, b));
        out.add_part(format!("k{i}"), ty)?;
    }
    let block = k.block_of(s.len());
    let mut crossing: BTreeMap<(usize, usize), Attrs> = BTreeMap::new();
    for r in s.relations() {
        let (x, y) = (block[r.a], block[r.b]);
        if x == y {
            continue;
        }
        let key = if s.oriented() || x < y { (x, y) } else { (y, x) };
        let attrs = crossing.entry(key).or_default();
        *attrs.entry("count".into()).or_insert(0) += 1;
        *attrs.entry(format!("n_{}", r.label)).or_insert(0) += 1;
    }
    for ((x, y), attrs) in crossing {
        out.relate_with(x, y, CROSS_LABEL, attrs)?;
    }
    Ok(out)
}

/// Suppression of distinguishing information. Type and label maps coarsen
/// ids; dropped attributes are removed from parts and/or relations.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MorphismMask {
    #[serde(default)]
    pub drop_part_attrs: BTreeSet<String>,
    #[serde(default)]
    pub drop_rel_attrs: BTreeSet<String>,
    #[serde(default)]
    pub type_map: BTreeMap<String, String>,
    #[serde(default)]
    pub label_map: BTreeMap<String, String>,
}

impl MorphismMask {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drops an attribute from both parts and relations.
    pub fn drop_attr(mut self, name: impl Into<String>) -> Self {
        let name = name.into();
        self.drop_part_attrs.insert(name.clone());
        self.drop_rel_attrs.insert(name);
        self
    }

    pub fn drop_part_attr(mut self, name: impl Into<String>) -> Self {
        self.drop_part_attrs.insert(name.into());
        self
    }

    pub fn drop_rel_attr(mut self, name: impl Into<String>) -> Self {
        self.drop_rel_attrs.insert(name.into());
        self
    }

    pub fn merge_type(mut self, from: impl Into<String>, to: impl Into<String>) -> Self {
        self.type_map.insert(from.into(), to.into());
        self
    }

    pub fn merge_label(mut self, from: impl Into<String>, to: impl Into<String>) -> Self {
        self.label_map.insert(from.into(), to.into());
        self
    }

    pub fn is_identity(&self) -> bool {
        self.drop_part_attrs.is_empty()
            && self.drop_rel_attrs.is_empty()
            && self.type_map.iter().all(|(a, b)| a == b)
            && self.label_map.iter().all(|(a, b)| a == b)
    }

    pub fn map_type<'a>(&'a self, t: &'a str) -> &'a str {
        self.type_map.get(t).map(String::as_str).unwrap_or(t)
    }

    pub fn map_label<'a>(&'a self, l: &'a str) -> &'a str {
        self.label_map.get(l).map(String::as_str).unwrap_or(l)
    }

    /// The mask equivalent to applying `self` and then `other`.
    pub fn then(&self, other: &MorphismMask) -> MorphismMask {
        let compose = |first: &BTreeMap<String, String>, second: &BTreeMap<String, String>| {
            let mut out = BTreeMap::new();
            for (k, v) in first {
                out.insert(k.clone(), second.get(v).unwrap_or(v).clone());
            }
            for (k, v) in second {
                out.entry(k.clone()).or_insert_with(|| v.clone());
            }
            out
        };
        MorphismMask {
            drop_part_attrs: self.drop_part_attrs.union(&other.drop_part_attrs).cloned().collect(),
            drop_rel_attrs: self.drop_rel_attrs.union(&other.drop_rel_attrs).cloned().collect(),
            type_map: compose(&self.type_map, &other.type_map),
            label_map: compose(&self.label_map, &other.label_map),
        }
    }

    /// Sidecar lines (`mask ...`) for this mask.
    pub fn to_lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for a in self.drop_part_attrs.intersection(&self.drop_rel_attrs) {
            out.push(format!("mask drop-attr {a}"));
        }
        for a in self.drop_part_attrs.difference(&self.drop_rel_attrs) {
            out.push(format!("mask drop-part-attr {a}"));
        }
        for a in self.drop_rel_attrs.difference(&self.drop_part_attrs) {
            out.push(format!("mask drop-rel-attr {a}"));
        }
        for (from, to) in &self.type_map {
            out.push(format!("mask merge-type {from} -> {to}"));
        }
        for (from, to) in &self.label_map {
            out.push(format!("mask merge-label {from} -> {to}"));
        }
        out
    }
}

/// Applies `m` to `s`. Every attribute name, type id and label the mask
/// names must occur in `s` or be declared in `catalog`.
pub fn apply_morphism(s: &Structure, m: &MorphismMask, catalog: &TypeCatalog) -> Result<Structure> {
    let part_attrs: BTreeSet<&str> = s
        .parts()
        .iter()
        .flat_map(|p| p.attrs.keys().map(String::as_str))
        .collect();
    let rel_attrs: BTreeSet<&str> = s
        .relations()
        .iter()
        .flat_map(|r| r.attrs.keys().map(String::as_str))
        .collect();
    let types: BTreeSet<&str> = s.parts().iter().map(|p| p.ty.as_str()).collect();
    let labels: BTreeSet<&str> = s.relations().iter().map(|r| r.label.as_str()).collect();
    // drop-attr lines cover both kinds; one side knowing the name suffices.
    let known_attr = |a: &str| {
        part_attrs.contains(a) || rel_attrs.contains(a) || catalog.attr(a).is_some()
    };
    for a in m.drop_part_attrs.iter().chain(&m.drop_rel_attrs) {
        if !known_attr(a) {
            return Err(Error::UnknownMaskTarget {
                kind: "attribute",
                name: a.clone(),
            });
        }
    }
    for t in m.type_map.keys() {
        if !types.contains(t.as_str()) && !catalog.has_type(t) {
            return Err(Error::UnknownMaskTarget {
                kind: "type",
                name: t.clone(),
            });
        }
    }
    for l in m.label_map.keys() {
        if !labels.contains(l.as_str()) && !catalog.has_type(l) {
            return Err(Error::UnknownMaskTarget {
                kind: "label",
                name: l.clone(),
            });
        }
    }
    Ok(apply_unchecked(s, m))
}

/// Applies `m` without checking that its targets exist.
pub fn apply_unchecked(s: &Structure, m: &MorphismMask) -> Structure {
    let parts: Vec<Part> = s
        .parts()
        .iter()
        .map(|p| Part {
            id: p.id.clone(),
            ty: m.map_type(&p.ty).to_string(),
            attrs: p
                .attrs
                .iter()
                .filter(|(k, _)| !m.drop_part_attrs.contains(*k))
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
        })
        .collect();
    // Relations that become equal in (endpoints, label) merge; the merged
    // relation keeps the attributes they all share.
    let mut merged: BTreeMap<(usize, usize, String), Attrs> = BTreeMap::new();
    let mut order: Vec<(usize, usize, String)> = Vec::new();
    for r in s.relations() {
        let label = m.map_label(&r.label).to_string();
        let attrs: Attrs = r
            .attrs
            .iter()
            .filter(|(k, _)| !m.drop_rel_attrs.contains(*k))
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        let key = (r.a, r.b, label);
        match merged.get_mut(&key) {
            Some(existing) => existing.retain(|k, v| attrs.get(k) == Some(v)),
            None => {
                order.push(key.clone());
                merged.insert(key, attrs);
            }
        }
    }
    let relations: Vec<Relation> = order
        .into_iter()
        .map(|key| {
            let attrs = merged.remove(&key).unwrap_or_default();
            Relation {
                a: key.0,
                b: key.1,
                label: key.2,
                attrs,
            }
        })
        .collect();
    Structure::from_parts(s.oriented(), parts, relations).expect("ids unchanged")
}

/// Candidate partitions from internal-information ruptures: components of
/// equal-payload parts joined by any relation, then the same restricted to
/// each relation label. Deduplicated, at most `cap`, most blocks first.
pub fn canonical_partitions(s: &Structure, cap: usize) -> Vec<Partition> {
    let keys: Vec<String> = s.parts().iter().map(|p| p.payload_key()).collect();
    let mut labels: Vec<Option<&str>> = vec![None];
    let distinct: BTreeSet<&str> = s.relations().iter().map(|r| r.label.as_str()).collect();
    if distinct.len() > 1 {
        labels.extend(distinct.into_iter().map(Some));
    }
    let mut out: Vec<Partition> = Vec::new();
    for label in labels {
        let p = same_key_components(s, &keys, label);
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out.sort_by(|a, b| b.len().cmp(&a.len()));
    out.truncate(cap.max(1));
    out
}

/// Components of equal-payload parts joined by relations carrying `label`
/// (any label when `None`).
pub fn payload_components(s: &Structure, label: Option<&str>) -> Partition {
    let keys: Vec<String> = s.parts().iter().map(|p| p.payload_key()).collect();
    same_key_components(s, &keys, label)
}

fn same_key_components(s: &Structure, keys: &[String], label: Option<&str>) -> Partition {
    let n = s.len();
    let mut adj = vec![Vec::new(); n];
    for r in s.relations() {
        if label.is_some_and(|l| l != r.label) || keys[r.a] != keys[r.b] {
            continue;
        }
        adj[r.a].push(r.b);
        adj[r.b].push(r.a);
    }
    let mut comp = vec![usize::MAX; n];
    let mut blocks = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = blocks.len();
        let mut block = vec![start];
        comp[start] = id;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if comp[u] == usize::MAX {
                    comp[u] = id;
                    block.push(u);
                    queue.push_back(u);
                }
            }
        }
        blocks.push(block);
    }
    Partition::normalized(blocks)
}

// -- lineage ---------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivationKind {
    Portion,
    Quotient,
    Morphism,
    Compose,
    Difference,
    Convolution,
    Execute,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivationRecord {
    pub kind: DerivationKind,
    pub inputs: Vec<usize>,
    pub params: String,
    pub output: usize,
}

/// Append-only store of structures and the records that derived them.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LineageStore {
    structures: Vec<Structure>,
    /// Record index deriving each structure, if any.
    origin: Vec<Option<usize>>,
    records: Vec<DerivationRecord>,
}

impl LineageStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a base (underived) structure.
    pub fn register(&mut self, s: Structure) -> usize {
        self.structures.push(s);
        self.origin.push(None);
        self.structures.len() - 1
    }

    /// Registers `output` as derived from `inputs`.
    pub fn derive(
        &mut self,
        kind: DerivationKind,
        inputs: &[usize],
        params: impl Into<String>,
        output: Structure,
    ) -> Result<usize> {
        if let Some(&bad) = inputs.iter().find(|&&i| i >= self.structures.len()) {
            return Err(Error::Unregistered(bad));
        }
        let out = self.register(output);
        self.records.push(DerivationRecord {
            kind,
            inputs: inputs.to_vec(),
            params: params.into(),
            output: out,
        });
        self.origin[out] = Some(self.records.len() - 1);
        Ok(out)
    }

    pub fn get(&self, id: usize) -> Option<&Structure> {
        self.structures.get(id)
    }

    pub fn records(&self) -> &[DerivationRecord] {
        &self.records
    }

    pub fn record_of(&self, id: usize) -> Option<&DerivationRecord> {
        self.origin.get(id).copied().flatten().map(|r| &self.records[r])
    }

    /// Latest registration of a structure equal to `s`.
    pub fn id_of(&self, s: &Structure) -> Option<usize> {
        self.structures.iter().rposition(|x| x == s)
    }

    /// Records leading from `ancestor` to `id`, oldest first; `None` when
    /// `id` does not derive from `ancestor`.
    pub fn lineage(&self, id: usize, ancestor: usize) -> Result<Option<Vec<&DerivationRecord>>> {
        for x in [id, ancestor] {
            if x >= self.structures.len() {
                return Err(Error::Unregistered(x));
            }
        }
        // BFS backwards through records; shortest path wins.
        let mut via: HashMap<usize, usize> = HashMap::new();
        let mut queue = VecDeque::from([id]);
        let mut seen = BTreeSet::from([id]);
        while let Some(v) = queue.pop_front() {
            if v == ancestor {
                let mut path = Vec::new();
                let mut cur = v;
                while let Some(&r) = via.get(&cur) {
                    path.push(&self.records[r]);
                    cur = self.records[r].output;
                }
                return Ok(Some(path));
            }
            if let Some(r) = self.origin[v] {
                for &i in &self.records[r].inputs {
                    if seen.insert(i) {
                        via.insert(i, r);
                        queue.push_back(i);
                    }
                }
            }
        }
        Ok(None)
    }

    /// Lineage between registered structures looked up by value.
    pub fn derives_from(&self, a: &Structure, b: &Structure) -> Result<Option<Vec<&DerivationRecord>>> {
        let ia = self.id_of(a).ok_or(Error::Unregistered(usize::MAX))?;
        let ib = self.id_of(b).ok_or(Error::Unregistered(usize::MAX))?;
        if ia == ib {
            return Ok(Some(Vec::new()));
        }
        self.lineage(ia, ib)
    }
}

// -- sidecar format ----------------------------------------------------------

/// Masks and partitions stored next to a `.struct` file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub mask: MorphismMask,
    pub blocks: Vec<Vec<String>>,
}

impl Sidecar {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for l in self.mask.to_lines() {
            out.push_str(&l);
            out.push('\n');
        }
        for b in &self.blocks {
            out.push_str("block ");
            out.push_str(&b.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut sc = Sidecar::default();
        for (no, raw) in text.lines().enumerate() {
            let line = no + 1;
            let toks: Vec<&str> = strip_comment(raw).split_whitespace().collect();
            let err = |msg: &str| Error::Parse {
                line,
                msg: msg.to_string(),
            };
            match toks.as_slice() {
                [] => {}
                ["block", ids @ ..] if !ids.is_empty() => {
                    sc.blocks.push(ids.iter().map(|s| s.to_string()).collect())
                }
                ["mask", "drop-attr", a] => sc.mask = sc.mask.clone().drop_attr(*a),
                ["mask", "drop-part-attr", a] => sc.mask = sc.mask.clone().drop_part_attr(*a),
                ["mask", "drop-rel-attr", a] => sc.mask = sc.mask.clone().drop_rel_attr(*a),
                ["mask", "merge-type", from @ .., "->", to] if !from.is_empty() => {
                    for f in from {
                        sc.mask.type_map.insert(f.to_string(), to.to_string());
                    }
                }
                ["mask", "merge-label", from @ .., "->", to] if !from.is_empty() => {
                    for f in from {
                        sc.mask.label_map.insert(f.to_string(), to.to_string());
                    }
                }
                ["mask", ..] => return Err(err("malformed mask line")),
                ["block"] => return Err(err("empty block")),
                [kw, ..] => return Err(err(&format!("unknown keyword `{kw}`"))),
            }
        }
        Ok(sc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iso::{are_isomorphic, internal_class_count};

    fn typed_path(types: &str) -> Structure {
        let mut s = Structure::new(false);
        for (i, c) in types.chars().enumerate() {
            s.add_part(format!("p{i}"), c.to_string()).unwrap();
        }
        for i in 1..s.len() {
            s.relate(i - 1, i, "adj").unwrap();
        }
        s
    }

    fn cycle(n: usize) -> Structure {
        let mut s = typed_path(&"t".repeat(n));
        s.relate(n - 1, 0, "adj").unwrap();
        s
    }

    #[test]
    fn improper_portion_is_isomorphic() {
        let s = typed_path("abcab");
        let p = portion(&s, &[0, 1, 2, 3, 4], false).unwrap();
        assert!(are_isomorphic(&p.induced, &s));
    }

    #[test]
    fn disconnected_portion_needs_flag() {
        let s = typed_path("aaaaa");
        assert!(matches!(portion(&s, &[0, 4], false), Err(Error::Disconnected)));
        assert_eq!(portion(&s, &[0, 4], true).unwrap().induced.len(), 2);
        assert!(matches!(portion(&s, &[], false), Err(Error::EmptyPortion)));
    }

    #[test]
    fn partition_validation() {
        let s = typed_path("aaa");
        assert!(Partition::new(&s, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(Partition::new(&s, vec![vec![0, 1]]).is_err());
        assert!(Partition::new(&s, vec![vec![0, 1], vec![2]]).is_ok());
    }

    #[test]
    fn single_block_quotient_has_one_part() {
        let s = cycle(5);
        let mut cat = TypeCatalog::new();
        let q = quotient(&s, &Partition::whole(&s), &mut cat).unwrap();
        assert_eq!(q.len(), 1);
        assert!(q.relations().is_empty());
    }

    #[test]
    fn cycle_quotient_by_pairs() {
        // 8-cycle cut into 4 consecutive pairs gives a 4-cycle whose parts
        // all share one type.
        let s = cycle(8);
        let blocks = (0..4).map(|i| vec![2 * i, 2 * i + 1]).collect();
        let k = Partition::new(&s, blocks).unwrap();
        let mut cat = TypeCatalog::new();
        let q = quotient(&s, &k, &mut cat).unwrap();
        assert_eq!(q.len(), 4);
        assert_eq!(q.relations().len(), 4);
        assert_eq!(internal_class_count(&q), 1);
        let r = &q.relations()[0];
        assert_eq!(r.attrs["count"], 1);
        assert_eq!(r.attrs["n_adj"], 1);
    }

    #[test]
    fn quotient_types_follow_block_isomorphism() {
        let s = typed_path("aabab");
        let k = Partition::new(&s, vec![vec![0, 1], vec![2], vec![3, 4]]).unwrap();
        let mut cat = TypeCatalog::new();
        let q = quotient(&s, &k, &mut cat).unwrap();
        // {a,a} and {a,b} differ; {b} differs from both.
        assert_eq!(internal_class_count(&q), 3);
        let k2 = Partition::new(&s, vec![vec![0], vec![1, 2], vec![3, 4]]).unwrap();
        let q2 = quotient(&s, &k2, &mut cat).unwrap();
        assert_eq!(q2.part(1).ty, q2.part(2).ty);
    }

    #[test]
    fn empty_mask_is_identity() {
        let s = typed_path("abc");
        let out = apply_morphism(&s, &MorphismMask::new(), &TypeCatalog::new()).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn mask_unknown_attribute_is_error() {
        let s = typed_path("abc");
        let m = MorphismMask::new().drop_attr("len_bin");
        assert!(matches!(
            apply_morphism(&s, &m, &TypeCatalog::new()),
            Err(Error::UnknownMaskTarget { .. })
        ));
        let mut cat = TypeCatalog::new();
        cat.declare_attr("len_bin", None, "log2 px");
        assert!(apply_morphism(&s, &m, &cat).is_ok());
    }

    #[test]
    fn merging_types_reduces_classes() {
        let s = typed_path("aab");
        let m = MorphismMask::new().merge_type("b", "a");
        let out = apply_morphism(&s, &m, &TypeCatalog::new()).unwrap();
        assert_eq!(internal_class_count(&out), 1);
        assert!(are_isomorphic(&out, &typed_path("aaa")));
    }

    #[test]
    fn merged_relations_keep_shared_attributes() {
        let mut s = Structure::new(false);
        s.add_part("x", "t").unwrap();
        s.add_part("y", "t").unwrap();
        let a: Attrs = [("w".to_string(), 1), ("z".to_string(), 2)].into();
        let b: Attrs = [("w".to_string(), 1), ("z".to_string(), 3)].into();
        s.relate_with(0, 1, "l1", a).unwrap();
        s.relate_with(0, 1, "l2", b).unwrap();
        let out = apply_unchecked(&s, &MorphismMask::new().merge_label("l2", "l1"));
        assert_eq!(out.relations().len(), 1);
        assert_eq!(out.relations()[0].attrs, [("w".to_string(), 1)].into());
    }

    #[test]
    fn mask_composition() {
        let m1 = MorphismMask::new().merge_type("a", "b").drop_part_attr("x");
        let m2 = MorphismMask::new().merge_type("b", "c");
        let m = m1.then(&m2);
        assert_eq!(m.map_type("a"), "c");
        assert_eq!(m.map_type("b"), "c");
        assert!(m.drop_part_attrs.contains("x"));
    }

    #[test]
    fn uniform_path_is_one_block() {
        let parts = canonical_partitions(&typed_path("aaaa"), DEFAULT_PARTITION_CAP);
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].len(), 1);
    }

    #[test]
    fn type_runs_split() {
        let parts = canonical_partitions(&typed_path("aaabbb"), DEFAULT_PARTITION_CAP);
        assert_eq!(parts[0].blocks(), &[vec![0, 1, 2], vec![3, 4, 5]]);
    }

    #[test]
    fn lineage_paths() {
        let mut store = LineageStore::new();
        let s = cycle(4);
        let base = store.register(s.clone());
        let mut cat = TypeCatalog::new();
        let k = Partition::new(&s, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let q = quotient(&s, &k, &mut cat).unwrap();
        let qi = store.derive(DerivationKind::Quotient, &[base], "pairs", q.clone()).unwrap();
        let m = apply_unchecked(&q, &MorphismMask::new().drop_rel_attr("count"));
        store.derive(DerivationKind::Morphism, &[qi], "drop count", m.clone()).unwrap();
        assert_eq!(store.derives_from(&q, &s).unwrap().unwrap().len(), 1);
        let path = store.derives_from(&m, &s).unwrap().unwrap();
        assert_eq!(path.len(), 2);
        assert_eq!(path[0].kind, DerivationKind::Quotient);
        let other = store.register(typed_path("xy"));
        assert!(store.lineage(other, base).unwrap().is_none());
        assert!(store.derives_from(&typed_path("zzz"), &s).is_err());
    }

    #[test]
    fn sidecar_round_trip() {
        let sc = Sidecar {
            mask: MorphismMask::new()
                .drop_attr("len_bin")
                .drop_rel_attr("angle")
                .merge_type("red", "color"),
            blocks: vec![vec!["a".into(), "b".into()], vec!["c".into()]],
        };
        let text = sc.to_text();
        assert_eq!(Sidecar::from_text(&text).unwrap(), sc);
        let parsed = Sidecar::from_text("mask merge-type t1 t2 -> t\n").unwrap();
        assert_eq!(parsed.mask.map_type("t2"), "t");
        assert!(matches!(
            Sidecar::from_text("mask\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
