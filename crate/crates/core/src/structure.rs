//! First-kind structures: a set of parts, the internal type carried by each
//! part, and labeled external relations between pairs of parts.
//!
//! Parts are addressed by index internally and by an opaque string id at the
//! boundary. Attributes are quantized integers; two attribute values are equal
//! iff they fall in the same bin.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quantized attributes, keyed by name. Ordered so that serialization and
/// canonical keys are stable.
pub type Attrs = BTreeMap<String, i64>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Part {
    pub id: String,
    /// Internal type id. Resolves in a [`TypeCatalog`] to an atomic label or
    /// a nested structure.
    pub ty: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attrs: Attrs,
}

impl Part {
    /// Key describing everything that distinguishes this part internally.
    pub fn payload_key(&self) -> String {
        key_with_attrs(&self.ty, &self.attrs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub a: usize,
    pub b: usize,
    pub label: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attrs: Attrs,
}

impl Relation {
    pub fn key(&self) -> String {
        key_with_attrs(&self.label, &self.attrs)
    }

    pub fn other(&self, p: usize) -> Option<usize> {
        if self.a == p {
            Some(self.b)
        } else if self.b == p {
            Some(self.a)
        } else {
            None
        }
    }
}

pub(crate) fn key_with_attrs(head: &str, attrs: &Attrs) -> String {
    let mut k = head.to_string();
    for (name, v) in attrs {
        k.push(' ');
        k.push_str(name);
        k.push('=');
        k.push_str(&v.to_string());
    }
    k
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(try_from = "RawStructure")]
pub struct Structure {
    parts: Vec<Part>,
    relations: Vec<Relation>,
    oriented: bool,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct RawStructure {
    parts: Vec<Part>,
    relations: Vec<Relation>,
    oriented: bool,
}

impl TryFrom<RawStructure> for Structure {
    type Error = Error;

    fn try_from(raw: RawStructure) -> Result<Self> {
        Structure::from_parts(raw.oriented, raw.parts, raw.relations)
    }
}

impl PartialEq for Structure {
    fn eq(&self, other: &Self) -> bool {
        self.oriented == other.oriented
            && self.parts == other.parts
            && self.relations == other.relations
    }
}

impl Eq for Structure {}

fn check_token(kind: &str, tok: &str) -> Result<()> {
    if tok.is_empty()
        || tok
            .chars()
            .any(|c| c.is_whitespace() || c == '#' || c == '=')
    {
        return Err(Error::Precondition(format!("invalid {kind} token `{tok}`")));
    }
    Ok(())
}

impl Structure {
    pub fn new(oriented: bool) -> Self {
        Structure {
            oriented,
            ..Default::default()
        }
    }

    /// The empty structure. Only meaningful as the identity of `compose`.
    pub fn empty() -> Self {
        Self::new(false)
    }

    pub fn oriented(&self) -> bool {
        self.oriented
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    /// N°: the number of parts.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn part(&self, i: usize) -> &Part {
        &self.parts[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn require(&self, id: &str) -> Result<usize> {
        self.index_of(id)
            .ok_or_else(|| Error::UnknownPart(id.to_string()))
    }

    pub fn add_part(&mut self, id: impl Into<String>, ty: impl Into<String>) -> Result<usize> {
        self.add_part_with(id, ty, Attrs::new())
    }

    pub fn add_part_with(
        &mut self,
        id: impl Into<String>,
        ty: impl Into<String>,
        attrs: Attrs,
    ) -> Result<usize> {
        let id = id.into();
        let ty = ty.into();
        check_token("part id", &id)?;
        check_token("type", &ty)?;
        for k in attrs.keys() {
            check_token("attribute", k)?;
        }
        if self.index.contains_key(&id) {
            return Err(Error::DuplicatePart(id));
        }
        let i = self.parts.len();
        self.index.insert(id.clone(), i);
        self.parts.push(Part { id, ty, attrs });
        Ok(i)
    }

    pub fn relate(&mut self, a: usize, b: usize, label: impl Into<String>) -> Result<()> {
        self.relate_with(a, b, label, Attrs::new())
    }

    /// Adds a relation. Undirected relations are stored with `a <= b`.
    /// Self-loops and duplicates are accepted here and reported by
    /// [`validate`].
    pub fn relate_with(
        &mut self,
        a: usize,
        b: usize,
        label: impl Into<String>,
        attrs: Attrs,
    ) -> Result<()> {
        let label = label.into();
        check_token("relation label", &label)?;
        for k in attrs.keys() {
            check_token("attribute", k)?;
        }
        for p in [a, b] {
            if p >= self.parts.len() {
                return Err(Error::PartIndex(p));
            }
        }
        let (a, b) = if !self.oriented && a > b { (b, a) } else { (a, b) };
        self.relations.push(Relation { a, b, label, attrs });
        Ok(())
    }

    pub fn relate_ids(&mut self, a: &str, b: &str, label: impl Into<String>) -> Result<()> {
        let (a, b) = (self.require(a)?, self.require(b)?);
        self.relate(a, b, label)
    }

    pub fn has_relation(&self, a: usize, b: usize, label: &str) -> bool {
        let (a, b) = if !self.oriented && a > b { (b, a) } else { (a, b) };
        self.relations
            .iter()
            .any(|r| r.a == a && r.b == b && r.label == label)
    }

    /// Relations incident to each part, as indices into `relations()`.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.parts.len()];
        for (k, r) in self.relations.iter().enumerate() {
            inc[r.a].push(k);
            if r.b != r.a {
                inc[r.b].push(k);
            }
        }
        inc
    }

    /// Neighbor sets ignoring labels and orientation.
    pub fn neighbors(&self) -> Vec<BTreeSet<usize>> {
        let mut nb = vec![BTreeSet::new(); self.parts.len()];
        for r in &self.relations {
            if r.a != r.b {
                nb[r.a].insert(r.b);
                nb[r.b].insert(r.a);
            }
        }
        nb
    }

    /// True iff the members induce a connected sub-structure (relations
    /// read as undirected).
    pub fn is_connected_subset(&self, members: &[usize]) -> bool {
        if members.is_empty() {
            return false;
        }
        let inside: BTreeSet<usize> = members.iter().copied().collect();
        let nb = self.neighbors();
        let mut seen = BTreeSet::new();
        let mut stack = vec![members[0]];
        seen.insert(members[0]);
        while let Some(p) = stack.pop() {
            for &q in &nb[p] {
                if inside.contains(&q) && seen.insert(q) {
                    stack.push(q);
                }
            }
        }
        seen.len() == inside.len()
    }

    pub fn is_connected(&self) -> bool {
        let all: Vec<usize> = (0..self.len()).collect();
        self.is_connected_subset(&all)
    }

    /// Replaces the type and attributes of part `i`.
    pub fn set_payload(&mut self, i: usize, ty: impl Into<String>, attrs: Attrs) -> Result<()> {
        if i >= self.parts.len() {
            return Err(Error::PartIndex(i));
        }
        let ty = ty.into();
        check_token("type", &ty)?;
        self.parts[i].ty = ty;
        self.parts[i].attrs = attrs;
        Ok(())
    }

    /// Builds a structure from raw pieces; part ids must be unique.
    pub fn from_parts(
        oriented: bool,
        parts: Vec<Part>,
        relations: Vec<Relation>,
    ) -> Result<Self> {
        let mut s = Structure::new(oriented);
        for p in parts {
            s.add_part_with(p.id, p.ty, p.attrs)?;
        }
        for r in relations {
            s.relate_with(r.a, r.b, r.label, r.attrs)?;
        }
        Ok(s)
    }

    /// Same structure with parts reordered: part `order[k]` becomes part `k`.
    pub fn permuted(&self, order: &[usize]) -> Structure {
        let mut inv = vec![0; order.len()];
        for (k, &o) in order.iter().enumerate() {
            inv[o] = k;
        }
        let parts = order.iter().map(|&o| self.parts[o].clone()).collect();
        let relations = self
            .relations
            .iter()
            .map(|r| Relation {
                a: inv[r.a],
                b: inv[r.b],
                label: r.label.clone(),
                attrs: r.attrs.clone(),
            })
            .collect();
        Structure::from_parts(self.oriented, parts, relations).expect("permutation of a structure")
    }

    /// Same structure with every part id replaced by `f(old_id)`.
    pub fn renamed(&self, mut f: impl FnMut(&str) -> String) -> Result<Structure> {
        let parts = self
            .parts
            .iter()
            .map(|p| Part {
                id: f(&p.id),
                ty: p.ty.clone(),
                attrs: p.attrs.clone(),
            })
            .collect();
        Structure::from_parts(self.oriented, parts, self.relations.clone())
    }

    // -- text format ------------------------------------------------------

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if self.oriented {
            out.push_str("oriented\n");
        }
        for p in &self.parts {
            out.push_str("part ");
            out.push_str(&p.id);
            out.push(' ');
            out.push_str(&key_with_attrs(&p.ty, &p.attrs));
            out.push('\n');
        }
        for r in &self.relations {
            out.push_str("rel ");
            out.push_str(&self.parts[r.a].id);
            out.push(' ');
            out.push_str(&self.parts[r.b].id);
            out.push(' ');
            out.push_str(&key_with_attrs(&r.label, &r.attrs));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut s = Structure::new(false);
        let mut seen_body = false;
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = strip_comment(raw);
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: line_no, msg };
            match toks[0] {
                "oriented" => {
                    if seen_body {
                        return Err(perr("`oriented` must precede parts and relations".into()));
                    }
                    s.oriented = match toks.get(1) {
                        None | Some(&"true") => true,
                        Some(&"false") => false,
                        Some(other) => return Err(perr(format!("bad oriented flag `{other}`"))),
                    };
                }
                "part" => {
                    seen_body = true;
                    if toks.len() < 3 {
                        return Err(perr("expected `part <id> <type> [attr=int ...]`".into()));
                    }
                    let attrs = parse_attrs(&toks[3..]).map_err(perr)?;
                    s.add_part_with(toks[1], toks[2], attrs)
                        .map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;
                }
                "rel" => {
                    seen_body = true;
                    if toks.len() < 4 {
                        return Err(perr("expected `rel <id> <id> <label> [attr=int ...]`".into()));
                    }
                    let a = s
                        .index_of(toks[1])
                        .ok_or_else(|| perr(format!("unknown part `{}`", toks[1])))?;
                    let b = s
                        .index_of(toks[2])
                        .ok_or_else(|| perr(format!("unknown part `{}`", toks[2])))?;
                    let attrs = parse_attrs(&toks[4..]).map_err(perr)?;
                    s.relate_with(a, b, toks[3], attrs)
                        .map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;
                }
                other => return Err(perr(format!("unknown directive `{other}`"))),
            }
        }
        Ok(s)
    }
}

pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

pub(crate) fn parse_attrs(toks: &[&str]) -> std::result::Result<Attrs, String> {
    let mut attrs = Attrs::new();
    for t in toks {
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| format!("expected attr=int, got `{t}`"))?;
        let v: i64 = v
            .parse()
            .map_err(|_| format!("attribute `{k}` is not an integer: `{v}`"))?;
        if attrs.insert(k.to_string(), v).is_some() {
            return Err(format!("duplicate attribute `{k}`"));
        }
    }
    Ok(attrs)
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

// -- validation -----------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ValidationIssue {
    Empty,
    SelfLoop { part: String },
    DuplicateRelation { a: String, b: String, label: String },
    IsolatedPart { part: String },
    UnresolvedType { part: String, ty: String },
    CyclicType { ty: String },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::Empty => write!(f, "structure has no parts"),
            ValidationIssue::SelfLoop { part } => write!(f, "self-loop on `{part}`"),
            ValidationIssue::DuplicateRelation { a, b, label } => {
                write!(f, "duplicate relation `{label}` between `{a}` and `{b}`")
            }
            ValidationIssue::IsolatedPart { part } => write!(f, "part `{part}` is isolated"),
            ValidationIssue::UnresolvedType { part, ty } => {
                write!(f, "type `{ty}` of part `{part}` does not resolve")
            }
            ValidationIssue::CyclicType { ty } => write!(f, "type `{ty}` nests itself"),
        }
    }
}

/// Every violated structural invariant. Empty iff well-formed.
pub fn validate(s: &Structure) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    if s.is_empty() {
        issues.push(ValidationIssue::Empty);
        return issues;
    }
    let mut seen = BTreeSet::new();
    for r in &s.relations {
        if r.a == r.b {
            issues.push(ValidationIssue::SelfLoop {
                part: s.parts[r.a].id.clone(),
            });
            continue;
        }
        if !seen.insert((r.a, r.b, r.label.clone())) {
            issues.push(ValidationIssue::DuplicateRelation {
                a: s.parts[r.a].id.clone(),
                b: s.parts[r.b].id.clone(),
                label: r.label.clone(),
            });
        }
    }
    if s.len() > 1 {
        let mut touched = vec![false; s.len()];
        for r in &s.relations {
            if r.a != r.b {
                touched[r.a] = true;
                touched[r.b] = true;
            }
        }
        for (i, t) in touched.iter().enumerate() {
            if !t {
                issues.push(ValidationIssue::IsolatedPart {
                    part: s.parts[i].id.clone(),
                });
            }
        }
    }
    issues
}

/// Structural validation plus type resolution against a catalog.
pub fn validate_with(s: &Structure, catalog: &TypeCatalog) -> Vec<ValidationIssue> {
    let mut issues = validate(s);
    for p in &s.parts {
        if catalog.resolve(&p.ty).is_none() {
            issues.push(ValidationIssue::UnresolvedType {
                part: p.id.clone(),
                ty: p.ty.clone(),
            });
        }
    }
    for ty in catalog.cyclic_types() {
        issues.push(ValidationIssue::CyclicType { ty });
    }
    issues
}

pub fn ensure_valid(s: &Structure) -> Result<()> {
    let issues = validate(s);
    if issues.is_empty() {
        Ok(())
    } else {
        Err(Error::Invalid(issues))
    }
}

// -- type catalog ---------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TypeEntry {
    Atomic { label: String },
    Nested { structure: Structure },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttrSchema {
    pub name: String,
    /// Number of quantization bins, when bounded.
    pub bins: Option<u32>,
    pub unit: String,
}

/// Resolves internal type ids. Nested entries are interned under an id
/// derived from the canonical form of the nested structure, so equal ids
/// mean isomorphic contents.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeCatalog {
    entries: BTreeMap<String, TypeEntry>,
    attrs: BTreeMap<String, AttrSchema>,
}

impl TypeCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_atomic(&mut self, id: impl Into<String>) {
        let id = id.into();
        self.entries
            .entry(id.clone())
            .or_insert(TypeEntry::Atomic { label: id });
    }

    /// Registers a nested structure under an explicit id.
    pub fn add_nested(&mut self, id: impl Into<String>, structure: Structure) {
        self.entries
            .insert(id.into(), TypeEntry::Nested { structure });
    }

    /// Interns a nested structure under its canonical id and returns the id.
    pub fn intern(&mut self, structure: &Structure) -> String {
        let id = format!("blk:{}", crate::canon::canonical_hash(structure));
        self.entries
            .entry(id.clone())
            .or_insert_with(|| TypeEntry::Nested {
                structure: structure.clone(),
            });
        id
    }

    pub fn declare_attr(&mut self, name: impl Into<String>, bins: Option<u32>, unit: impl Into<String>) {
        let name = name.into();
        self.attrs.insert(
            name.clone(),
            AttrSchema {
                name,
                bins,
                unit: unit.into(),
            },
        );
    }

    pub fn attr(&self, name: &str) -> Option<&AttrSchema> {
        self.attrs.get(name)
    }

    pub fn resolve(&self, id: &str) -> Option<&TypeEntry> {
        self.entries.get(id)
    }

    pub fn has_type(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &TypeEntry)> {
        self.entries.iter()
    }

    /// Nested types that reach themselves through their parts' types.
    pub fn cyclic_types(&self) -> Vec<String> {
        let mut cyclic = Vec::new();
        for id in self.entries.keys() {
            let mut stack: Vec<&str> = self.children(id);
            let mut seen = BTreeSet::new();
            while let Some(t) = stack.pop() {
                if t == id {
                    cyclic.push(id.clone());
                    break;
                }
                if seen.insert(t) {
                    stack.extend(self.children(t));
                }
            }
        }
        cyclic
    }

    fn children(&self, id: &str) -> Vec<&str> {
        match self.entries.get(id) {
            Some(TypeEntry::Nested { structure }) => {
                structure.parts().iter().map(|p| p.ty.as_str()).collect()
            }
            _ => Vec::new(),
        }
    }

    /// A key for the full internal content of a type: atomic label, or the
    /// canonical form of the nested structure with its own parts resolved
    /// recursively. Unknown ids are treated as atomic.
    pub fn deep_key(&self, id: &str) -> String {
        self.deep_key_depth(id, 0)
    }

    fn deep_key_depth(&self, id: &str, depth: usize) -> String {
        match self.entries.get(id) {
            Some(TypeEntry::Nested { structure }) if depth < 32 => {
                let deep = self.deepened(structure, depth + 1);
                format!("N[{}]", crate::canon::canonical_hash(&deep))
            }
            Some(TypeEntry::Atomic { label }) => format!("A[{label}]"),
            _ => format!("A[{id}]"),
        }
    }

    /// Copy of `s` whose part types are replaced by deep keys.
    pub fn deepened(&self, s: &Structure, depth: usize) -> Structure {
        let parts = s
            .parts()
            .iter()
            .map(|p| Part {
                id: p.id.clone(),
                ty: sanitize_key(&self.deep_key_depth(&p.ty, depth)),
                attrs: p.attrs.clone(),
            })
            .collect();
        Structure::from_parts(s.oriented(), parts, s.relations().to_vec())
            .expect("deepened copy keeps ids")
    }
}

fn sanitize_key(k: &str) -> String {
    k.replace(|c: char| c.is_whitespace() || c == '#' || c == '=', "_")
}
