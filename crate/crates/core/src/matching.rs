//! Induced sub-structure matching by backtracking.

use std::collections::{BTreeSet, HashMap};

use crate::structure::Structure;

/// Relation keys between an ordered pair of parts, tagged with direction
/// (0 = stored a→b or undirected, 1 = stored b→a).
pub(crate) struct PairRelations {
    map: HashMap<(usize, usize), Vec<(String, u8)>>,
    oriented: bool,
}

impl PairRelations {
    pub(crate) fn new(s: &Structure) -> Self {
        let mut map: HashMap<(usize, usize), Vec<(String, u8)>> = HashMap::new();
        for r in s.relations() {
            let (x, y, d) = if r.a <= r.b { (r.a, r.b, 0) } else { (r.b, r.a, 1) };
            let d = if s.oriented() { d } else { 0 };
            map.entry((x, y)).or_default().push((r.key(), d));
        }
        for v in map.values_mut() {
            v.sort();
        }
        PairRelations {
            map,
            oriented: s.oriented(),
        }
    }

    /// Relations between `i` and `j`, directions expressed relative to the
    /// order (i, j).
    pub(crate) fn between(&self, i: usize, j: usize) -> Vec<(String, u8)> {
        let (x, y, flip) = if i <= j { (i, j, false) } else { (j, i, true) };
        let mut v = self.map.get(&(x, y)).cloned().unwrap_or_default();
        if flip && self.oriented {
            for e in v.iter_mut() {
                e.1 ^= 1;
            }
            v.sort();
        }
        v
    }
}

/// Every distinct part set of `host` whose induced sub-structure is
/// isomorphic to `pattern`. Sets are sorted and returned in ascending order.
pub fn induced_occurrences(pattern: &Structure, host: &Structure) -> Vec<Vec<usize>> {
    search(pattern, host, true, false)
}

/// True when `pattern` maps injectively into `host` with equal payloads and
/// every pattern relation present (the host may have more).
pub fn embeds(pattern: &Structure, host: &Structure) -> bool {
    pattern.is_empty() || !search(pattern, host, false, true).is_empty()
}

fn sub_multiset(a: &[(String, u8)], b: &[(String, u8)]) -> bool {
    let mut j = 0;
    for x in a {
        while j < b.len() && b[j] < *x {
            j += 1;
        }
        if j == b.len() || b[j] != *x {
            return false;
        }
        j += 1;
    }
    true
}

fn search(pattern: &Structure, host: &Structure, induced: bool, first: bool) -> Vec<Vec<usize>> {
    let n = pattern.len();
    if n == 0 || n > host.len() || pattern.oriented() != host.oriented() {
        return Vec::new();
    }
    // Match pattern parts in BFS order so each new part (after the first of
    // its component) has an already-mapped neighbor.
    let pnb = pattern.neighbors();
    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    for start in 0..n {
        if placed[start] {
            continue;
        }
        placed[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &u in &pnb[v] {
                if !placed[u] {
                    placed[u] = true;
                    queue.push_back(u);
                }
            }
        }
    }
    let pp = PairRelations::new(pattern);
    let hp = PairRelations::new(host);
    let hnb = host.neighbors();
    let pkeys: Vec<String> = pattern.parts().iter().map(|p| p.payload_key()).collect();
    let hkeys: Vec<String> = host.parts().iter().map(|p| p.payload_key()).collect();

    let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut image = vec![usize::MAX; n];
    let mut used = vec![false; host.len()];

    struct Ctx<'a> {
        order: &'a [usize],
        pnb: &'a [BTreeSet<usize>],
        hnb: &'a [BTreeSet<usize>],
        pp: &'a PairRelations,
        hp: &'a PairRelations,
        pkeys: &'a [String],
        hkeys: &'a [String],
        host_len: usize,
        induced: bool,
        first: bool,
    }

    fn extend(
        ctx: &Ctx,
        depth: usize,
        image: &mut Vec<usize>,
        used: &mut Vec<bool>,
        found: &mut BTreeSet<Vec<usize>>,
    ) {
        if ctx.first && !found.is_empty() {
            return;
        }
        if depth == ctx.order.len() {
            let mut set: Vec<usize> = image.clone();
            set.sort_unstable();
            found.insert(set);
            return;
        }
        let v = ctx.order[depth];
        let anchor = ctx.pnb[v].iter().find(|&&u| image[u] != usize::MAX).copied();
        let candidates: Vec<usize> = match anchor {
            Some(u) => ctx.hnb[image[u]].iter().copied().collect(),
            None => (0..ctx.host_len).collect(),
        };
        for c in candidates {
            if used[c] || ctx.pkeys[v] != ctx.hkeys[c] {
                continue;
            }
            let fits = |u: usize, hu: usize| {
                let (p, h) = (ctx.pp.between(u, v), ctx.hp.between(hu, c));
                if ctx.induced {
                    p == h
                } else {
                    sub_multiset(&p, &h)
                }
            };
            let consistent = fits(v, c) && ctx.order[..depth].iter().all(|&u| fits(u, image[u]));
            if !consistent {
                continue;
            }
            image[v] = c;
            used[c] = true;
            extend(ctx, depth + 1, image, used, found);
            used[c] = false;
            image[v] = usize::MAX;
        }
    }

    let ctx = Ctx {
        order: &order,
        pnb: &pnb,
        hnb: &hnb,
        pp: &pp,
        hp: &hp,
        pkeys: &pkeys,
        hkeys: &hkeys,
        host_len: host.len(),
        induced,
        first,
    };
    extend(&ctx, 0, &mut image, &mut used, &mut found);
    found.into_iter().collect()
}

/// Induced sub-structure on `members` (in the given order), keeping part
/// ids, payloads and every relation with both endpoints inside.
pub fn induced(s: &Structure, members: &[usize]) -> Structure {
    let mut pos = HashMap::with_capacity(members.len());
    let mut out = Structure::new(s.oriented());
    for &m in members {
        let p = s.part(m);
        let i = out
            .add_part_with(p.id.clone(), p.ty.clone(), p.attrs.clone())
            .expect("members are distinct parts");
        pos.insert(m, i);
    }
    for r in s.relations() {
        if let (Some(&a), Some(&b)) = (pos.get(&r.a), pos.get(&r.b)) {
            out.relate_with(a, b, r.label.clone(), r.attrs.clone())
                .expect("endpoints exist");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_in_triangle_occurs_three_times() {
        let mut tri = Structure::new(false);
        for i in 0..3 {
            tri.add_part(format!("v{i}"), "t").unwrap();
        }
        tri.relate(0, 1, "e").unwrap();
        tri.relate(1, 2, "e").unwrap();
        tri.relate(0, 2, "e").unwrap();
        let mut edge = Structure::new(false);
        edge.add_part("x", "t").unwrap();
        edge.add_part("y", "t").unwrap();
        edge.relate(0, 1, "e").unwrap();
        assert_eq!(induced_occurrences(&edge, &tri).len(), 3);

        // A 3-path is not an induced portion of a triangle.
        let mut p3 = edge.clone();
        p3.add_part("z", "t").unwrap();
        p3.relate(1, 2, "e").unwrap();
        assert!(induced_occurrences(&p3, &tri).is_empty());
    }
}
