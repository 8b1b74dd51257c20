//! Second-kind structures: a body whose parts are bound to primitive
//! operations (or to other schemas), executed on a working structure.
//!
//! Control flow lives in the body itself. Execution starts at the first
//! part; after each part the machine follows its `jump` edge when the flag
//! is set, otherwise its `next` edge, and returns to the caller (or halts)
//! when neither applies.
//!
//! Operand forms:
//! - `COPY src`, `COMPARE src` with `src` one of `lit:<type>`, `mem:<addr>`,
//!   `flag`, `cursor`
//! - `MEM_STORE <addr>` or `MEM_STORE <addr><-<src>`; `MEM_LOAD <addr>`
//! - `MOVE <label>` (only along a unique neighbour) or `MOVE mark:<addr>`
//! - `BIND <label>@<addr>` relates the cursor to the part marked at `addr`
//! - `CALL <schema>` refers to a nested schema

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::canon::canonical_labeling;
use crate::error::{Error, Result};
use crate::iso::are_isomorphic;
use crate::structure::{strip_comment, Attrs, Structure};

pub const NEXT_LABEL: &str = "next";
pub const JUMP_LABEL: &str = "jump";
/// Relation from the cursor to a part appended by `COPY`.
pub const LINK_LABEL: &str = "link";
/// Step budget per run when schemas are compared on a battery.
pub const COINCIDENCE_FUEL: u64 = 10_000;
pub const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PrimOp {
    MemStore,
    MemLoad,
    Compare,
    Move,
    Copy,
    Bind,
}

impl PrimOp {
    pub const ALL: [PrimOp; 6] = [
        PrimOp::MemStore,
        PrimOp::MemLoad,
        PrimOp::Compare,
        PrimOp::Move,
        PrimOp::Copy,
        PrimOp::Bind,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrimOp::MemStore => "MEM_STORE",
            PrimOp::MemLoad => "MEM_LOAD",
            PrimOp::Compare => "COMPARE",
            PrimOp::Move => "MOVE",
            PrimOp::Copy => "COPY",
            PrimOp::Bind => "BIND",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        PrimOp::ALL.into_iter().find(|op| op.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Binding {
    Prim { op: PrimOp, operand: Option<String> },
    Call { schema: String },
}

impl Binding {
    pub fn prim(op: PrimOp, operand: &str) -> Self {
        Binding::Prim {
            op,
            operand: (!operand.is_empty()).then(|| operand.to_string()),
        }
    }

    pub fn call(schema: impl Into<String>) -> Self {
        Binding::Call { schema: schema.into() }
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Binding::Prim { op, operand: None } => f.write_str(op.name()),
            Binding::Prim { op, operand: Some(x) } => write!(f, "{} {x}", op.name()),
            Binding::Call { schema } => write!(f, "CALL {schema}"),
        }
    }
}

/// What `execute` returns.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResultSel {
    #[default]
    Work,
    Memory,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub body: Structure,
    /// Part id to binding.
    pub bindings: BTreeMap<String, Binding>,
    #[serde(default)]
    pub result: ResultSel,
}

/// Successor table of a body.
struct Flow {
    next: Vec<Option<usize>>,
    jump: Vec<Option<usize>>,
}

impl Flow {
    fn of(body: &Structure) -> Result<Self> {
        let n = body.len();
        let mut next = vec![None; n];
        let mut jump = vec![None; n];
        for r in body.relations() {
            let slot = match r.label.as_str() {
                NEXT_LABEL => &mut next[r.a],
                JUMP_LABEL => &mut jump[r.a],
                other => {
                    return Err(Error::Precondition(format!(
                        "schema body relation `{other}` is neither `{NEXT_LABEL}` nor `{JUMP_LABEL}`"
                    )))
                }
            };
            if slot.replace(r.b).is_some() {
                return Err(Error::Precondition(format!(
                    "part `{}` has two `{}` edges",
                    body.part(r.a).id,
                    r.label
                )));
            }
        }
        Ok(Flow { next, jump })
    }

    fn successor(&self, p: usize, flag: bool) -> Option<usize> {
        match (flag, self.jump[p]) {
            (true, Some(j)) => Some(j),
            _ => self.next[p],
        }
    }
}

impl Schema {
    /// Checks the body shape: oriented, non-empty, only `next`/`jump`
    /// edges, at most one of each per part, bindings on existing parts.
    pub fn new(body: Structure, bindings: BTreeMap<String, Binding>) -> Result<Self> {
        if body.is_empty() {
            return Err(Error::Precondition("schema body is empty".into()));
        }
        if !body.oriented() && !body.relations().is_empty() {
            return Err(Error::Precondition("schema body must be oriented".into()));
        }
        Flow::of(&body)?;
        for id in bindings.keys() {
            body.require(id)?;
        }
        Ok(Schema {
            body,
            bindings,
            result: ResultSel::Work,
        })
    }

    /// A straight-line schema: parts `i0, i1, ...` of type `op` chained by
    /// `next`.
    pub fn sequence(ops: &[Binding]) -> Result<Self> {
        let mut body = Structure::new(true);
        let mut bindings = BTreeMap::new();
        for (i, b) in ops.iter().enumerate() {
            let id = format!("i{i}");
            body.add_part(id.clone(), "op")?;
            if i > 0 {
                body.relate(i - 1, i, NEXT_LABEL)?;
            }
            bindings.insert(id, b.clone());
        }
        Schema::new(body, bindings)
    }

    pub fn with_result(mut self, result: ResultSel) -> Self {
        self.result = result;
        self
    }

    /// Names of directly referenced schemas.
    pub fn calls(&self) -> BTreeSet<String> {
        self.bindings
            .values()
            .filter_map(|b| match b {
                Binding::Call { schema } => Some(schema.clone()),
                _ => None,
            })
            .collect()
    }

    /// True iff every binding is primitive.
    pub fn is_base(&self) -> bool {
        self.calls().is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = self.body.to_text();
        for (id, b) in &self.bindings {
            out.push_str(&format!("bind {id} {b}\n"));
        }
        if self.result == ResultSel::Memory {
            out.push_str("result memory\n");
        }
        out
    }

    /// Parses `.schema` text: a `.struct` body plus `bind` lines and an
    /// optional `result work|memory` line.
    pub fn from_text(text: &str) -> Result<Self> {
        Self::parse_lines(text.lines().enumerate().map(|(i, l)| (i + 1, l)))
    }

    fn parse_lines<'a>(lines: impl Iterator<Item = (usize, &'a str)>) -> Result<Self> {
        let mut body_text = String::new();
        let mut body_lines = Vec::new();
        let mut binds = Vec::new();
        let mut result = ResultSel::Work;
        for (line_no, raw) in lines {
            let toks: Vec<&str> = strip_comment(raw).split_whitespace().collect();
            let perr = |msg: String| Error::Parse { line: line_no, msg };
            match toks.first() {
                Some(&"bind") => {
                    if toks.len() < 3 || toks.len() > 4 {
                        return Err(perr("expected `bind <part> <OP> [operand]`".into()));
                    }
                    let binding = match toks[2] {
                        "CALL" => match toks.get(3) {
                            Some(name) => Binding::call(*name),
                            None => return Err(perr("CALL needs a schema name".into())),
                        },
                        op => {
                            let op = PrimOp::parse(op)
                                .ok_or_else(|| perr(format!("unknown operation `{op}`")))?;
                            Binding::prim(op, toks.get(3).copied().unwrap_or(""))
                        }
                    };
                    binds.push((line_no, toks[1].to_string(), binding));
                }
                Some(&"result") => {
                    result = match toks.get(1) {
                        Some(&"work") => ResultSel::Work,
                        Some(&"memory") => ResultSel::Memory,
                        _ => return Err(perr("expected `result work|memory`".into())),
                    };
                }
                _ => {
                    body_lines.push(line_no);
                    body_text.push_str(raw);
                    body_text.push('\n');
                }
            }
        }
        let body = Structure::from_text(&body_text).map_err(|e| match e {
            Error::Parse { line, msg } => Error::Parse {
                line: body_lines.get(line - 1).copied().unwrap_or(line),
                msg,
            },
            e => e,
        })?;
        let mut bindings = BTreeMap::new();
        for (line, id, b) in binds {
            if body.index_of(&id).is_none() {
                return Err(Error::Parse {
                    line,
                    msg: format!("bind to unknown part `{id}`"),
                });
            }
            if bindings.insert(id.clone(), b).is_some() {
                return Err(Error::Parse {
                    line,
                    msg: format!("part `{id}` bound twice"),
                });
            }
        }
        Ok(Schema::new(body, bindings)?.with_result(result))
    }
}

/// Named schemas that `CALL` bindings resolve against.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SchemaLibrary {
    pub schemas: BTreeMap<String, Schema>,
}

impl SchemaLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, s: Schema) {
        self.schemas.insert(name.into(), s);
    }

    pub fn is_empty(&self) -> bool {
        self.schemas.is_empty()
    }

    pub fn get(&self, name: &str) -> Result<&Schema> {
        self.schemas
            .get(name)
            .ok_or_else(|| Error::UnknownSchema(name.to_string()))
    }

    /// Fails on unknown references or a reference cycle reachable from `s`.
    pub fn check_nesting(&self, s: &Schema) -> Result<()> {
        fn visit<'a>(
            lib: &'a SchemaLibrary,
            s: &'a Schema,
            path: &mut Vec<&'a str>,
            done: &mut BTreeSet<&'a str>,
        ) -> Result<()> {
            for name in s.bindings.values().filter_map(|b| match b {
                Binding::Call { schema } => Some(schema.as_str()),
                _ => None,
            }) {
                if path.contains(&name) {
                    return Err(Error::CyclicNesting(name.to_string()));
                }
                if done.contains(name) {
                    continue;
                }
                let callee = lib.get(name)?;
                path.push(name);
                visit(lib, callee, path, done)?;
                path.pop();
                done.insert(name);
            }
            Ok(())
        }
        visit(self, s, &mut Vec::new(), &mut BTreeSet::new())
    }

    pub fn to_text(&self) -> String {
        self.schemas
            .iter()
            .map(|(name, s)| format!("schema {name}\n{}", s.to_text()))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Sections introduced by `schema <name>` lines, each in `.schema` form.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lib = SchemaLibrary::new();
        let mut current: Option<(String, Vec<(usize, &str)>)> = None;
        let flush = |cur: Option<(String, Vec<(usize, &str)>)>, lib: &mut SchemaLibrary| -> Result<()> {
            if let Some((name, lines)) = cur {
                lib.insert(name, Schema::parse_lines(lines.into_iter())?);
            }
            Ok(())
        };
        for (i, raw) in text.lines().enumerate() {
            let toks: Vec<&str> = strip_comment(raw).split_whitespace().collect();
            if toks.first() == Some(&"schema") {
                let name = toks.get(1).ok_or(Error::Parse {
                    line: i + 1,
                    msg: "expected `schema <name>`".into(),
                })?;
                flush(current.take(), &mut lib)?;
                current = Some((name.to_string(), Vec::new()));
            } else if let Some((_, lines)) = current.as_mut() {
                lines.push((i + 1, raw));
            } else if !toks.is_empty() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "content before the first `schema` line".into(),
                });
            }
        }
        flush(current, &mut lib)?;
        Ok(lib)
    }
}

/// Machine state of one execution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MachineState {
    pub work: Structure,
    /// Stored elements, one part per address.
    pub memory: Structure,
    /// Work positions recorded by `MEM_STORE`.
    pub marks: BTreeMap<String, usize>,
    pub cursor: Option<usize>,
    pub flag: bool,
    pub steps: u64,
    /// Relations of `work` incident to each part.
    #[serde(skip)]
    incident: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecOutcome {
    pub output: Structure,
    pub steps: u64,
    pub flag: bool,
}

fn exec_err(msg: impl Into<String>) -> Error {
    Error::Execution(msg.into())
}

type Payload = (String, Attrs);

impl MachineState {
    /// Starts on a copy of `input`, cursor on its canonically first part.
    pub fn start(input: &Structure) -> Self {
        let cursor = (!input.is_empty()).then(|| canonical_labeling(input).order()[0]);
        MachineState {
            work: input.clone(),
            memory: Structure::new(false),
            marks: BTreeMap::new(),
            cursor,
            flag: false,
            steps: 0,
            incident: input.incidence(),
        }
    }

    fn relate(&mut self, a: usize, b: usize, label: &str) -> Result<()> {
        self.work.relate(a, b, label).map_err(|e| exec_err(e.to_string()))?;
        let k = self.work.relations().len() - 1;
        self.incident.resize(self.work.len(), Vec::new());
        self.incident[a].push(k);
        if b != a {
            self.incident[b].push(k);
        }
        Ok(())
    }

    fn payload_at(&self, i: usize) -> Payload {
        let p = self.work.part(i);
        (p.ty.clone(), p.attrs.clone())
    }

    /// `None` when the source is absent: an empty memory cell, or the cursor
    /// of an empty work structure.
    fn source(&self, src: &str) -> Result<Option<Payload>> {
        if let Some(t) = src.strip_prefix("lit:") {
            return Ok(Some((t.to_string(), Attrs::new())));
        }
        if let Some(a) = src.strip_prefix("mem:") {
            return Ok(self.memory.index_of(a).map(|i| {
                let p = self.memory.part(i);
                (p.ty.clone(), p.attrs.clone())
            }));
        }
        match src {
            "flag" => Ok(Some(((self.flag as u8).to_string(), Attrs::new()))),
            "cursor" => Ok(self.cursor.map(|c| self.payload_at(c))),
            _ => Err(exec_err(format!("bad source operand `{src}`"))),
        }
    }

    fn fresh_id(&self) -> String {
        (self.work.len()..)
            .map(|k| format!("n{k}"))
            .find(|id| self.work.index_of(id).is_none())
            .expect("unbounded ids")
    }

    // An absent source, cursor or mark clears the flag and the step does nothing else.
    fn step(&mut self, op: PrimOp, operand: Option<&str>) -> Result<()> {
        let need = |what: &str| operand.ok_or_else(|| exec_err(format!("{} needs {what}", op.name())));
        macro_rules! or_skip {
            ($e:expr) => {
                match $e {
                    Some(v) => v,
                    None => {
                        self.flag = false;
                        return Ok(());
                    }
                }
            };
        }
        match op {
            PrimOp::MemStore => {
                let arg = need("an address")?;
                let (addr, src) = match arg.split_once("<-") {
                    Some((a, s)) => (a, s),
                    None => (arg, "cursor"),
                };
                let (ty, attrs) = or_skip!(self.source(src)?);
                match self.memory.index_of(addr) {
                    Some(i) => self.memory.set_payload(i, ty, attrs)?,
                    None => {
                        self.memory.add_part_with(addr, ty, attrs)?;
                    }
                }
                if src == "cursor" {
                    if let Some(c) = self.cursor {
                        self.marks.insert(addr.to_string(), c);
                    }
                }
            }
            PrimOp::MemLoad => {
                let (ty, attrs) = or_skip!(self.source(&format!("mem:{}", need("an address")?))?);
                let c = or_skip!(self.cursor);
                self.work.set_payload(c, ty, attrs)?;
            }
            PrimOp::Compare => {
                let want = self.source(need("a source")?)?;
                self.flag = match (self.cursor, want) {
                    (Some(c), Some(w)) => self.payload_at(c) == w,
                    _ => false,
                };
            }
            PrimOp::Move => {
                let arg = need("a label or mark")?;
                let target = if let Some(a) = arg.strip_prefix("mark:") {
                    self.marks.get(a).copied()
                } else {
                    self.cursor.and_then(|c| {
                        let rels = self.work.relations();
                        let hits: BTreeSet<usize> = self.incident[c]
                            .iter()
                            .map(|&k| &rels[k])
                            .filter(|r| r.label == arg)
                            .filter_map(|r| {
                                if r.a == c {
                                    Some(r.b)
                                } else if r.b == c && !self.work.oriented() {
                                    Some(r.a)
                                } else {
                                    None
                                }
                            })
                            .collect();
                        (hits.len() == 1).then(|| *hits.iter().next().unwrap())
                    })
                };
                self.flag = target.is_some();
                if target.is_some() {
                    self.cursor = target;
                }
            }
            PrimOp::Copy => {
                let (ty, attrs) = or_skip!(self.source(need("a source")?)?);
                let id = self.fresh_id();
                let new = self.work.add_part_with(id, ty, attrs)?;
                self.incident.push(Vec::new());
                match self.cursor {
                    Some(c) => self.relate(c, new, LINK_LABEL)?,
                    None => self.cursor = Some(new),
                }
            }
            PrimOp::Bind => {
                let arg = need("`label@addr`")?;
                let (label, addr) = arg
                    .split_once('@')
                    .ok_or_else(|| exec_err(format!("BIND operand `{arg}` is not `label@addr`")))?;
                let to = or_skip!(self.marks.get(addr).copied());
                let c = or_skip!(self.cursor);
                self.relate(c, to, label)?;
            }
        }
        Ok(())
    }
}

/// Runs `sch` on `input` with at most `fuel` primitive steps.
pub fn execute(sch: &Schema, lib: &SchemaLibrary, input: &Structure, fuel: u64) -> Result<Structure> {
    execute_traced(sch, lib, input, fuel).map(|o| o.output)
}

pub fn execute_traced(
    sch: &Schema,
    lib: &SchemaLibrary,
    input: &Structure,
    fuel: u64,
) -> Result<ExecOutcome> {
    lib.check_nesting(sch)?;
    let mut m = MachineState::start(input);
    // Each frame: schema, its flow table, current part.
    let mut stack: Vec<(&Schema, Flow, usize)> = vec![(sch, Flow::of(&sch.body)?, 0)];
    let mut entering = true;
    while let Some(top) = stack.len().checked_sub(1) {
        if entering {
            let (s, _, pc) = &stack[top];
            let id = &s.body.part(*pc).id;
            match s.bindings.get(id) {
                None => return Err(Error::UnboundSymbol(id.clone())),
                Some(Binding::Call { schema }) => {
                    let callee = lib.get(schema)?;
                    stack.push((callee, Flow::of(&callee.body)?, 0));
                    continue;
                }
                Some(Binding::Prim { op, operand }) => {
                    if m.steps >= fuel {
                        return Err(Error::OutOfFuel(m.steps));
                    }
                    m.steps += 1;
                    m.step(*op, operand.as_deref())?;
                }
            }
        }
        let (_, flow, pc) = &mut stack[top];
        match flow.successor(*pc, m.flag) {
            Some(nx) => {
                *pc = nx;
                entering = true;
            }
            None => {
                stack.pop();
                entering = false;
            }
        }
    }
    let output = match sch.result {
        ResultSel::Work => m.work,
        ResultSel::Memory => m.memory,
    };
    Ok(ExecOutcome {
        output,
        steps: m.steps,
        flag: m.flag,
    })
}

/// Inlines every nested reference, giving a base schema with the same
/// behaviour. Inlined parts are named `<call part>/<callee part>`.
pub fn flatten(sch: &Schema, lib: &SchemaLibrary) -> Result<Schema> {
    lib.check_nesting(sch)?;
    let mut memo = BTreeMap::new();
    flatten_rec(sch, lib, &mut memo)
}

fn flatten_rec(sch: &Schema, lib: &SchemaLibrary, memo: &mut BTreeMap<String, Schema>) -> Result<Schema> {
    if sch.is_base() {
        return Ok(sch.clone());
    }
    let flow = Flow::of(&sch.body)?;
    // Expand each part into a list of (id, type, binding) plus local flow.
    struct Piece {
        inlined: bool,
        ids: Vec<String>,
        tys: Vec<(String, Attrs)>,
        binds: Vec<Option<Binding>>,
        next: Vec<Option<usize>>,
        jump: Vec<Option<usize>>,
    }
    let mut taken: BTreeSet<String> = BTreeSet::new();
    let mut pieces = Vec::new();
    for (i, p) in sch.body.parts().iter().enumerate() {
        match sch.bindings.get(&p.id) {
            Some(Binding::Call { schema }) => {
                let callee = match memo.get(schema) {
                    Some(f) => f.clone(),
                    None => {
                        let f = flatten_rec(lib.get(schema)?, lib, memo)?;
                        memo.insert(schema.clone(), f.clone());
                        f
                    }
                };
                let cf = Flow::of(&callee.body)?;
                pieces.push(Piece {
                    inlined: true,
                    ids: callee
                        .body
                        .parts()
                        .iter()
                        .map(|q| format!("{}/{}", p.id, q.id))
                        .collect(),
                    tys: callee.body.parts().iter().map(|q| (q.ty.clone(), q.attrs.clone())).collect(),
                    binds: callee.body.parts().iter().map(|q| callee.bindings.get(&q.id).cloned()).collect(),
                    next: cf.next,
                    jump: cf.jump,
                });
            }
            b => pieces.push(Piece {
                inlined: false,
                ids: vec![p.id.clone()],
                tys: vec![(p.ty.clone(), p.attrs.clone())],
                binds: vec![b.cloned()],
                next: vec![flow.next[i]],
                jump: vec![flow.jump[i]],
            }),
        }
    }
    // Global index of each piece's first part.
    let mut base = Vec::with_capacity(pieces.len());
    let mut total = 0;
    for pc in &pieces {
        base.push(total);
        total += pc.ids.len();
    }
    let mut body = Structure::new(true);
    let mut bindings = BTreeMap::new();
    for pc in &pieces {
        for (k, id) in pc.ids.iter().enumerate() {
            let mut id = id.clone();
            while pc.inlined && (sch.body.index_of(&id).is_some() || taken.contains(&id)) {
                id.push('\'');
            }
            taken.insert(id.clone());
            body.add_part_with(id.clone(), pc.tys[k].0.clone(), pc.tys[k].1.clone())?;
            if let Some(b) = &pc.binds[k] {
                bindings.insert(id, b.clone());
            }
        }
    }
    for (i, pc) in pieces.iter().enumerate() {
        let outer_next = flow.next[i].map(|t| base[t]);
        let outer_jump = flow.jump[i].map(|t| base[t]);
        for k in 0..pc.ids.len() {
            let (mut nx, mut jp) = (pc.next[k].map(|t| base[i] + t), pc.jump[k].map(|t| base[i] + t));
            if pc.inlined {
                // A callee exit continues with the caller's rule at the call.
                if nx.is_none() {
                    if jp.is_none() {
                        jp = outer_jump;
                    }
                    nx = outer_next;
                }
            } else {
                nx = outer_next;
                jp = outer_jump;
            }
            if let Some(t) = nx {
                body.relate(base[i] + k, t, NEXT_LABEL)?;
            }
            if let Some(t) = jp {
                body.relate(base[i] + k, t, JUMP_LABEL)?;
            }
        }
    }
    Ok(Schema::new(body, bindings)?.with_result(sch.result))
}

/// The body with each part's type replaced by its type and binding, the
/// entry part marked.
fn decorated(s: &Schema) -> Structure {
    let parts = s
        .body
        .parts()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let b = s
                .bindings
                .get(&p.id)
                .map(|b| b.to_string())
                .unwrap_or_else(|| "unbound".into());
            let entry = if i == 0 { "entry|" } else { "" };
            let mut q = p.clone();
            q.ty = format!("{entry}{}|{}", p.ty, b.replace(' ', "_"));
            q
        })
        .collect();
    Structure::from_parts(s.body.oriented(), parts, s.body.relations().to_vec())
        .expect("same shape as a valid body")
}

/// Deterministic battery of small input structures for extensional checks.
pub fn pinned_battery() -> Vec<Structure> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_5c4e);
    let mut out = vec![Structure::new(true)];
    for n in 1..=5 {
        for _ in 0..2 {
            let mut s = Structure::new(true);
            for i in 0..n {
                let ty = ["a", "b"][rng.gen_range(0..2)];
                s.add_part(format!("x{i}"), ty).expect("fresh");
                if i > 0 {
                    s.relate(i - 1, i, NEXT_LABEL).expect("fresh");
                }
            }
            out.push(s);
        }
    }
    for n in 2..=4 {
        let mut s = Structure::new(false);
        for i in 0..n {
            s.add_part(format!("u{i}"), ["a", "b", "c"][rng.gen_range(0..3)]).expect("fresh");
        }
        for i in 1..n {
            s.relate(rng.gen_range(0..i), i, NEXT_LABEL).expect("fresh");
        }
        out.push(s);
    }
    out
}

fn variants(x: &Structure) -> Vec<Structure> {
    let n = x.len();
    let mut out = vec![x.clone()];
    if n > 1 {
        let rev: Vec<usize> = (0..n).rev().collect();
        out.push(x.permuted(&rev));
        let rot: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
        out.push(x.permuted(&rot));
    }
    if let Ok(r) = x.renamed(|id| format!("v.{id}")) {
        out.push(r);
    }
    out
}

/// Extensional coincidence on a battery: for every element and isomorphic
/// variants of it, both schemas run out of fuel or give pairwise isomorphic
/// outputs. Runs get [`COINCIDENCE_FUEL`] steps; other execution errors are
/// returned.
pub fn operations_coincide(
    a: &Schema,
    b: &Schema,
    lib: &SchemaLibrary,
    battery: &[Structure],
) -> Result<bool> {
    if battery.is_empty() {
        return Err(Error::Precondition("empty battery".into()));
    }
    let run = |s: &Schema, v: &Structure| match execute(s, lib, v, COINCIDENCE_FUEL) {
        Ok(o) => Ok(Some(o)),
        Err(Error::OutOfFuel(_)) => Ok(None),
        Err(e) => Err(e),
    };
    for x in battery {
        let mut outs = Vec::new();
        for v in variants(x) {
            outs.push(run(a, &v)?);
            outs.push(run(b, &v)?);
        }
        let agree = |o: &Option<Structure>| match (o, &outs[0]) {
            (Some(p), Some(q)) => are_isomorphic(p, q),
            (None, None) => true,
            _ => false,
        };
        if !outs.iter().all(agree) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Flattened bodies isomorphic with matching bindings, and the schemas
/// coincide extensionally on the pinned battery. Any error is a `false`.
pub fn schemas_coincide(a: &Schema, b: &Schema, lib: &SchemaLibrary) -> bool {
    let (Ok(fa), Ok(fb)) = (flatten(a, lib), flatten(b, lib)) else {
        return false;
    };
    if fa.result != fb.result || !are_isomorphic(&decorated(&fa), &decorated(&fb)) {
        return false;
    }
    operations_coincide(&fa, &fb, lib, &pinned_battery()).unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(types: &[&str]) -> Structure {
        let mut s = Structure::new(true);
        for (i, t) in types.iter().enumerate() {
            s.add_part(format!("c{i}"), *t).unwrap();
            if i > 0 {
                s.relate(i - 1, i, NEXT_LABEL).unwrap();
            }
        }
        s
    }

    fn lib() -> SchemaLibrary {
        SchemaLibrary::new()
    }

    #[test]
    fn copy_appends_one_part() {
        let s = Schema::sequence(&[Binding::prim(PrimOp::Copy, "lit:x")]).unwrap();
        let x = chain(&["a", "b"]);
        let out = execute(&s, &lib(), &x, DEFAULT_FUEL).unwrap();
        assert_eq!(out.len(), x.len() + 1);
    }

    #[test]
    fn compare_emits_flag_type() {
        let text = "oriented\npart s op\npart m op\npart c op\npart e op\n\
                    rel s m next\nrel m c next\nrel c e next\n\
                    bind s MEM_STORE a\nbind m MOVE next\nbind c COMPARE mem:a\nbind e MEM_STORE a<-flag\n\
                    result memory\n";
        let s = Schema::from_text(text).unwrap();
        let eq = execute(&s, &lib(), &chain(&["q", "q"]), DEFAULT_FUEL).unwrap();
        assert_eq!(eq.len(), 1);
        assert_eq!(eq.part(0).ty, "1");
        let ne = execute(&s, &lib(), &chain(&["q", "r"]), DEFAULT_FUEL).unwrap();
        assert_eq!(ne.part(0).ty, "0");
    }

    #[test]
    fn counted_loop_appends_five() {
        // copy at every chain element, walking until MOVE fails
        let text = "oriented\npart c op\npart m op\nrel c m next\nrel m c jump\n\
                    bind c COPY lit:x\nbind m MOVE next\n";
        let s = Schema::from_text(text).unwrap();
        let x = chain(&["k"; 5]);
        let out = execute_traced(&s, &lib(), &x, DEFAULT_FUEL).unwrap();
        assert_eq!(out.output.len(), 10);
        assert_eq!(out.steps, 10);
    }

    #[test]
    fn fuel_runs_out_on_a_loop() {
        let text = "oriented\npart a op\npart b op\nrel a b next\nrel b a next\n\
                    bind a COMPARE cursor\nbind b COMPARE cursor\n";
        let s = Schema::from_text(text).unwrap();
        assert!(matches!(
            execute(&s, &lib(), &chain(&["k"]), 100),
            Err(Error::OutOfFuel(100))
        ));
    }

    #[test]
    fn unbound_symbol_is_an_error() {
        let s = Schema::from_text("oriented\npart a op\n").unwrap();
        assert!(matches!(
            execute(&s, &lib(), &chain(&["k"]), 10),
            Err(Error::UnboundSymbol(_))
        ));
    }

    #[test]
    fn cyclic_nesting_is_rejected() {
        let text = "schema f\noriented\npart a op\nbind a CALL g\n\
                    schema g\noriented\npart b op\nbind b CALL f\n";
        let lib = SchemaLibrary::from_text(text).unwrap();
        let f = lib.get("f").unwrap();
        assert!(matches!(flatten(f, &lib), Err(Error::CyclicNesting(_))));
    }

    #[test]
    fn text_round_trip() {
        let text = "oriented\npart c op\npart m op\nrel c m next\nrel m c jump\n\
                    bind c COPY lit:x\nbind m MOVE next\nresult memory\n";
        let s = Schema::from_text(text).unwrap();
        assert_eq!(Schema::from_text(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn bind_links_back_to_a_mark() {
        let s = Schema::sequence(&[
            Binding::prim(PrimOp::MemStore, "head"),
            Binding::prim(PrimOp::Move, "next"),
            Binding::prim(PrimOp::Move, "next"),
            Binding::prim(PrimOp::Bind, "back@head"),
        ])
        .unwrap();
        let out = execute(&s, &lib(), &chain(&["a", "b", "c"]), DEFAULT_FUEL).unwrap();
        assert!(out.has_relation(2, 0, "back"));
    }
}
