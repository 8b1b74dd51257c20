//! Canonical labeling of attributed structures.
//!
//! Iterated color refinement (initial color = part payload, refined by the
//! multiset of incident relation keys and neighbor colors) followed by an
//! individualization search over non-singleton cells. The canonical labeling
//! is the leaf with the lexicographically smallest edge encoding; leaves with
//! equal encodings yield automorphisms, which prune sibling branches.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::structure::Structure;

/// Isomorphism-invariant encoding of a structure. Two structures are
/// isomorphic iff their canonical forms are equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CanonicalForm {
    pub oriented: bool,
    pub node_keys: Vec<String>,
    pub edge_keys: Vec<String>,
    /// Node key index for each canonical position.
    pub nodes: Vec<u32>,
    /// (position, position, edge key index), sorted.
    pub edges: Vec<(u32, u32, u32)>,
}

#[derive(Clone, Debug)]
pub struct Labeling {
    /// `position[part]` is the canonical position of the part.
    pub position: Vec<usize>,
    pub form: CanonicalForm,
}

impl Labeling {
    /// `order[k]` is the part at canonical position `k`.
    pub fn order(&self) -> Vec<usize> {
        let mut order = vec![0; self.position.len()];
        for (p, &k) in self.position.iter().enumerate() {
            order[k] = p;
        }
        order
    }
}

const DIR_NONE: u8 = 0;
const DIR_OUT: u8 = 1;
const DIR_IN: u8 = 2;

struct Graph {
    n: usize,
    oriented: bool,
    node_keys: Vec<String>,
    edge_keys: Vec<String>,
    color0: Vec<u32>,
    adj: Vec<Vec<(u32, u8, usize)>>,
    edges: Vec<(usize, usize, u32)>,
}

impl Graph {
    fn new(s: &Structure) -> Self {
        let payloads: Vec<String> = s.parts().iter().map(|p| p.payload_key()).collect();
        let node_keys: Vec<String> = payloads
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let rel_keys: Vec<String> = s.relations().iter().map(|r| r.key()).collect();
        let edge_keys: Vec<String> = rel_keys
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let rank = |keys: &[String], k: &String| keys.binary_search(k).unwrap() as u32;
        let color0 = payloads.iter().map(|k| rank(&node_keys, k)).collect();
        let mut adj = vec![Vec::new(); s.len()];
        let mut edges = Vec::with_capacity(s.relations().len());
        for (r, k) in s.relations().iter().zip(&rel_keys) {
            let e = rank(&edge_keys, k);
            edges.push((r.a, r.b, e));
            if s.oriented() {
                adj[r.a].push((e, DIR_OUT, r.b));
                adj[r.b].push((e, DIR_IN, r.a));
            } else {
                adj[r.a].push((e, DIR_NONE, r.b));
                if r.a != r.b {
                    adj[r.b].push((e, DIR_NONE, r.a));
                }
            }
        }
        Graph {
            n: s.len(),
            oriented: s.oriented(),
            node_keys,
            edge_keys,
            color0,
            adj,
            edges,
        }
    }

    /// Refines `colors` to the coarsest equitable partition finer than it.
    /// Colors are dense ranks, so the result is isomorphism-invariant.
    fn refine(&self, colors: &[u32]) -> Vec<u32> {
        let mut colors = dense_ranks(colors);
        let mut count = count_colors(&colors);
        loop {
            let sigs: Vec<(u32, Vec<(u32, u8, u32)>)> = (0..self.n)
                .map(|v| {
                    let mut nb: Vec<(u32, u8, u32)> = self.adj[v]
                        .iter()
                        .map(|&(e, d, u)| (e, d, colors[u]))
                        .collect();
                    nb.sort_unstable();
                    (colors[v], nb)
                })
                .collect();
            let mut sorted: Vec<&(u32, Vec<(u32, u8, u32)>)> = sigs.iter().collect();
            sorted.sort();
            sorted.dedup();
            let next: Vec<u32> = sigs
                .iter()
                .map(|s| sorted.binary_search(&s).unwrap() as u32)
                .collect();
            let next_count = sorted.len();
            colors = next;
            if next_count == count {
                return colors;
            }
            count = next_count;
        }
    }

    fn encode(&self, position: &[u32]) -> Vec<(u32, u32, u32)> {
        let mut out: Vec<(u32, u32, u32)> = self
            .edges
            .iter()
            .map(|&(a, b, e)| {
                let (pa, pb) = (position[a], position[b]);
                if self.oriented || pa <= pb {
                    (pa, pb, e)
                } else {
                    (pb, pa, e)
                }
            })
            .collect();
        out.sort_unstable();
        out
    }
}

fn dense_ranks(colors: &[u32]) -> Vec<u32> {
    let mut distinct: Vec<u32> = colors.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    colors
        .iter()
        .map(|c| distinct.binary_search(c).unwrap() as u32)
        .collect()
}

fn count_colors(colors: &[u32]) -> usize {
    let mut c: Vec<u32> = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

const MAX_STORED_AUTOMORPHISMS: usize = 64;

struct Search<'g> {
    g: &'g Graph,
    best: Option<(Vec<(u32, u32, u32)>, Vec<u32>)>,
    automorphisms: Vec<Vec<usize>>,
}

impl Search<'_> {
    fn run(&mut self, colors: Vec<u32>, prefix: &mut Vec<usize>) {
        let n = self.g.n;
        let mut cells: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (v, &c) in colors.iter().enumerate() {
            cells[c as usize].push(v);
        }
        let target = cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.len() > 1)
            .min_by_key(|(i, c)| (c.len(), *i))
            .map(|(_, c)| c.clone());
        let Some(cell) = target else {
            self.leaf(&colors);
            return;
        };
        let mut explored: Vec<usize> = Vec::new();
        for &v in &cell {
            if !explored.is_empty() && self.in_explored_orbit(v, &explored, prefix) {
                continue;
            }
            let mut indiv: Vec<u32> = colors
                .iter()
                .enumerate()
                .map(|(u, &c)| 2 * c + u32::from(u != v))
                .collect();
            indiv = self.g.refine(&indiv);
            prefix.push(v);
            self.run(indiv, prefix);
            prefix.pop();
            explored.push(v);
        }
    }

    fn leaf(&mut self, position: &[u32]) {
        let enc = self.g.encode(position);
        match &self.best {
            None => self.best = Some((enc, position.to_vec())),
            Some((best_enc, best_pos)) => match enc.cmp(best_enc) {
                std::cmp::Ordering::Less => self.best = Some((enc, position.to_vec())),
                std::cmp::Ordering::Equal => {
                    if self.automorphisms.len() < MAX_STORED_AUTOMORPHISMS {
                        // gamma maps each part to the part holding the same
                        // position in the best leaf.
                        let mut at = vec![0usize; self.g.n];
                        for (p, &k) in best_pos.iter().enumerate() {
                            at[k as usize] = p;
                        }
                        let gamma: Vec<usize> =
                            position.iter().map(|&k| at[k as usize]).collect();
                        self.automorphisms.push(gamma);
                    }
                }
                std::cmp::Ordering::Greater => {}
            },
        }
    }

    /// True iff `v` lies in the orbit of an explored sibling under the group
    /// generated by known automorphisms that fix the prefix pointwise.
    fn in_explored_orbit(&self, v: usize, explored: &[usize], prefix: &[usize]) -> bool {
        let gens: Vec<&Vec<usize>> = self
            .automorphisms
            .iter()
            .filter(|g| prefix.iter().all(|&p| g[p] == p))
            .collect();
        if gens.is_empty() {
            return false;
        }
        let mut parent: Vec<usize> = (0..self.g.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for g in gens {
            for (x, &y) in g.iter().enumerate() {
                let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
                if rx != ry {
                    parent[rx] = ry;
                }
            }
        }
        let rv = find(&mut parent, v);
        explored.iter().any(|&e| find(&mut parent, e) == rv)
    }
}

/// Canonical labeling of a structure.
pub fn canonical_labeling(s: &Structure) -> Labeling {
    let g = Graph::new(s);
    let colors = g.refine(&g.color0);
    let mut search = Search {
        g: &g,
        best: None,
        automorphisms: Vec::new(),
    };
    search.run(colors, &mut Vec::new());
    let (edges, pos) = search.best.unwrap_or_default();
    let mut nodes = vec![0u32; g.n];
    for (p, &k) in pos.iter().enumerate() {
        nodes[k as usize] = g.color0[p];
    }
    Labeling {
        position: pos.iter().map(|&k| k as usize).collect(),
        form: CanonicalForm {
            oriented: g.oriented,
            node_keys: g.node_keys,
            edge_keys: g.edge_keys,
            nodes,
            edges,
        },
    }
}

pub fn canonical_form(s: &Structure) -> CanonicalForm {
    canonical_labeling(s).form
}

/// Short stable digest of the canonical form.
pub fn canonical_hash(s: &Structure) -> String {
    form_hash(&canonical_form(s))
}

pub fn form_hash(form: &CanonicalForm) -> String {
    let bytes = serde_json::to_vec(form).expect("canonical form serializes");
    let digest = Sha256::digest(&bytes);
    digest[..12].iter().map(|b| format!("{b:02x}")).collect()
}

/// The coarsest equitable coloring of a structure (isomorphism-invariant).
pub fn refined_colors(s: &Structure) -> Vec<u32> {
    let g = Graph::new(s);
    g.refine(&g.color0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize, ty: &str) -> Structure {
        let mut s = Structure::new(false);
        for i in 0..n {
            s.add_part(format!("v{i}"), ty).unwrap();
        }
        for i in 0..n {
            s.relate(i, (i + 1) % n, "e").unwrap();
        }
        s
    }

    #[test]
    fn relabeled_cycles_share_a_form() {
        let c = cycle(6, "x");
        let p = c.permuted(&[3, 1, 5, 0, 2, 4]);
        assert_eq!(canonical_form(&c), canonical_form(&p));
    }

    #[test]
    fn complete_graph_terminates_quickly() {
        let mut s = Structure::new(false);
        for i in 0..9 {
            s.add_part(format!("v{i}"), "x").unwrap();
        }
        for i in 0..9 {
            for j in i + 1..9 {
                s.relate(i, j, "e").unwrap();
            }
        }
        let l = canonical_labeling(&s);
        assert_eq!(l.form.edges.len(), 36);
    }

    #[test]
    fn refinement_separates_path_ends() {
        let mut s = Structure::new(false);
        for i in 0..4 {
            s.add_part(format!("v{i}"), "x").unwrap();
        }
        for i in 0..3 {
            s.relate(i, i + 1, "e").unwrap();
        }
        let c = refined_colors(&s);
        assert_eq!(c[0], c[3]);
        assert_eq!(c[1], c[2]);
        assert_ne!(c[0], c[1]);
    }

    #[test]
    fn orientation_matters() {
        let mut a = Structure::new(true);
        let mut b = Structure::new(true);
        for s in [&mut a, &mut b] {
            for i in 0..3 {
                s.add_part(format!("v{i}"), "x").unwrap();
            }
        }
        a.relate(0, 1, "e").unwrap();
        a.relate(1, 2, "e").unwrap();
        b.relate(0, 1, "e").unwrap();
        b.relate(2, 1, "e").unwrap();
        assert_ne!(canonical_form(&a), canonical_form(&b));
    }
}
