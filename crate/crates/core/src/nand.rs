//! Boolean functions as networks of two-input NAND gates.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::strip_comment;

pub const MAX_NAND_INPUTS: usize = 4;

/// Complete truth table. Row `r` assigns input `i` the bit `(r >> i) & 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthTable {
    pub inputs: usize,
    pub rows: Vec<bool>,
}

impl TruthTable {
    pub fn new(inputs: usize, rows: Vec<bool>) -> Result<Self> {
        if rows.len() != 1 << inputs {
            return Err(Error::Precondition(format!(
                "{inputs} inputs need {} rows, got {}",
                1 << inputs,
                rows.len()
            )));
        }
        Ok(TruthTable { inputs, rows })
    }

    /// Function number `code` of `inputs` variables: row `r` is bit `r`.
    pub fn from_code(inputs: usize, code: u64) -> Result<Self> {
        if inputs > 6 {
            return Err(Error::SizeCap {
                what: "truth table inputs",
                got: inputs,
                limit: 6,
            });
        }
        Self::new(inputs, (0..1usize << inputs).map(|r| code >> r & 1 == 1).collect())
    }

    pub fn from_fn(inputs: usize, f: impl Fn(&[bool]) -> bool) -> Self {
        let rows = (0..1usize << inputs)
            .map(|r| f(&row_bits(inputs, r)))
            .collect();
        TruthTable { inputs, rows }
    }
}

fn row_bits(inputs: usize, r: usize) -> Vec<bool> {
    (0..inputs).map(|i| r >> i & 1 == 1).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub id: String,
    pub a: String,
    pub b: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NandNet {
    pub inputs: Vec<String>,
    /// Output name and the line driving it.
    pub outputs: Vec<(String, String)>,
    /// In topological order.
    pub gates: Vec<Gate>,
}

struct Builder {
    net: NandNet,
    memo: HashMap<(String, String), String>,
}

impl Builder {
    fn nand(&mut self, a: &str, b: &str) -> String {
        let key = if a <= b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
        if let Some(g) = self.memo.get(&key) {
            return g.clone();
        }
        let id = format!("g{}", self.net.gates.len() + 1);
        self.net.gates.push(Gate {
            id: id.clone(),
            a: a.to_string(),
            b: b.to_string(),
        });
        self.memo.insert(key, id.clone());
        id
    }

    fn not(&mut self, a: &str) -> String {
        self.nand(a, a)
    }

    fn and(&mut self, a: &str, b: &str) -> String {
        let g = self.nand(a, b);
        self.not(&g)
    }

    fn or(&mut self, a: &str, b: &str) -> String {
        let (na, nb) = (self.not(a), self.not(b));
        self.nand(&na, &nb)
    }
}

/// Sum of minterms rewritten into NAND gates, without minimization.
pub fn compile_to_nand(t: &TruthTable) -> Result<NandNet> {
    if t.inputs == 0 {
        return Err(Error::Precondition("a NAND net needs at least one input".into()));
    }
    if t.inputs > MAX_NAND_INPUTS {
        return Err(Error::SizeCap {
            what: "NAND inputs",
            got: t.inputs,
            limit: MAX_NAND_INPUTS,
        });
    }
    if t.rows.len() != 1 << t.inputs {
        return Err(Error::Precondition("incomplete truth table".into()));
    }
    let names: Vec<String> = (0..t.inputs).map(|i| format!("x{i}")).collect();
    let mut b = Builder {
        net: NandNet {
            inputs: names.clone(),
            outputs: Vec::new(),
            gates: Vec::new(),
        },
        memo: HashMap::new(),
    };
    let x = names[0].clone();
    let out = if t.rows.iter().all(|&v| v) {
        // constant 1 = x NAND (NOT x)
        let nx = b.not(&x);
        b.nand(&x, &nx)
    } else if t.rows.iter().all(|&v| !v) {
        let nx = b.not(&x);
        let one = b.nand(&x, &nx);
        b.not(&one)
    } else {
        let mut sum: Option<String> = None;
        for (r, &on) in t.rows.iter().enumerate() {
            if !on {
                continue;
            }
            let mut term: Option<String> = None;
            for (i, bit) in row_bits(t.inputs, r).into_iter().enumerate() {
                let lit = if bit { names[i].clone() } else { b.not(&names[i]) };
                term = Some(match term {
                    None => lit,
                    Some(acc) => b.and(&acc, &lit),
                });
            }
            let term = term.expect("at least one input");
            sum = Some(match sum {
                None => term,
                Some(acc) => b.or(&acc, &term),
            });
        }
        let s = sum.expect("some row is on");
        if names.contains(&s) {
            // a bare input still goes through a gate
            let n = b.not(&s);
            b.not(&n)
        } else {
            s
        }
    };
    b.net.outputs.push(("y".into(), out));
    Ok(b.net)
}

impl NandNet {
    /// Output values for one assignment of the inputs.
    pub fn eval(&self, inputs: &[bool]) -> Result<Vec<bool>> {
        if inputs.len() != self.inputs.len() {
            return Err(Error::Precondition(format!(
                "net has {} inputs, got {}",
                self.inputs.len(),
                inputs.len()
            )));
        }
        let mut val: HashMap<&str, bool> = self
            .inputs
            .iter()
            .map(String::as_str)
            .zip(inputs.iter().copied())
            .collect();
        for g in &self.gates {
            let get = |n: &str| {
                val.get(n)
                    .copied()
                    .ok_or_else(|| Error::Precondition(format!("gate `{}` reads undriven line `{n}`", g.id)))
            };
            let v = !(get(&g.a)? && get(&g.b)?);
            val.insert(&g.id, v);
        }
        self.outputs
            .iter()
            .map(|(name, line)| {
                val.get(line.as_str())
                    .copied()
                    .ok_or_else(|| Error::Precondition(format!("output `{name}` is undriven")))
            })
            .collect()
    }

    /// First output over every input row.
    pub fn truth_table(&self) -> Result<TruthTable> {
        let k = self.inputs.len();
        let rows = (0..1usize << k)
            .map(|r| self.eval(&row_bits(k, r)).map(|v| v[0]))
            .collect::<Result<Vec<bool>>>()?;
        TruthTable::new(k, rows)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    /// Parses `input`, `gate <id> = NAND(<a>,<b>)` and `output <name> = <line>`
    /// lines. Gates must be listed after the lines they read.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut net = NandNet {
            inputs: Vec::new(),
            outputs: Vec::new(),
            gates: Vec::new(),
        };
        let mut known: std::collections::HashSet<String> = Default::default();
        for (n, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: n + 1, msg };
            if let Some(rest) = line.strip_prefix("input ") {
                for name in rest.split_whitespace() {
                    if !known.insert(name.to_string()) {
                        return Err(perr(format!("line `{name}` defined twice")));
                    }
                    net.inputs.push(name.to_string());
                }
            } else if let Some(rest) = line.strip_prefix("gate ") {
                let (id, rhs) = rest
                    .split_once('=')
                    .ok_or_else(|| perr("expected `gate <id> = NAND(<a>,<b>)`".into()))?;
                let args = rhs
                    .trim()
                    .strip_prefix("NAND(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| perr("expected `NAND(<a>,<b>)`".into()))?;
                let (a, b) = args
                    .split_once(',')
                    .ok_or_else(|| perr("NAND takes two lines".into()))?;
                let (id, a, b) = (id.trim(), a.trim(), b.trim());
                for x in [a, b] {
                    if !known.contains(x) {
                        return Err(perr(format!("line `{x}` used before it is driven")));
                    }
                }
                if !known.insert(id.to_string()) {
                    return Err(perr(format!("line `{id}` defined twice")));
                }
                net.gates.push(Gate {
                    id: id.into(),
                    a: a.into(),
                    b: b.into(),
                });
            } else if let Some(rest) = line.strip_prefix("output ") {
                let (name, src) = rest
                    .split_once('=')
                    .ok_or_else(|| perr("expected `output <name> = <line>`".into()))?;
                let src = src.trim();
                if !known.contains(src) {
                    return Err(perr(format!("output reads unknown line `{src}`")));
                }
                net.outputs.push((name.trim().into(), src.into()));
            } else {
                return Err(perr(format!("unknown netlist line `{line}`")));
            }
        }
        Ok(net)
    }
}

impl fmt::Display for NandNet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "input {}", self.inputs.join(" "))?;
        for g in &self.gates {
            writeln!(f, "gate {} = NAND({},{})", g.id, g.a, g.b)?;
        }
        for (name, line) in &self.outputs {
            writeln!(f, "output {name} = {line}")?;
        }
        Ok(())
    }
}
