//! Stroke chains: tracing the 4-connected ink graph, splitting at junctions
//! and corners, and per-segment classification.

use serde::{Deserialize, Serialize};

use super::PixelConfig;
use crate::error::{Error, Result};

/// Pixel position `(x, y)` in image coordinates (y grows downwards).
pub type Px = (i64, i64);

const DIRS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub id: usize,
    /// Ordered pixels including shared end pixels.
    pub path: Vec<Px>,
    /// Pixels assigned to this chain alone.
    pub owned: Vec<Px>,
}

impl Chain {
    pub fn start(&self) -> Px {
        self.path[0]
    }

    pub fn end(&self) -> Px {
        *self.path.last().expect("chains are non-empty")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StrokeSet {
    pub chains: Vec<Chain>,
    /// Pixels with three or more ink neighbours.
    pub junctions: Vec<Px>,
    /// Pixels with exactly one ink neighbour.
    pub endpoints: Vec<Px>,
    /// Split points found on otherwise unbranched strokes.
    pub corners: Vec<Px>,
    /// Chains produced by one closed stroke, in counter-clockwise order.
    pub loops: Vec<Vec<usize>>,
}

struct InkGraph {
    w: i64,
    h: i64,
    ink: Vec<bool>,
}

impl InkGraph {
    fn at(&self, p: Px) -> bool {
        p.0 >= 0 && p.1 >= 0 && p.0 < self.w && p.1 < self.h && self.ink[(p.1 * self.w + p.0) as usize]
    }

    fn neighbors(&self, p: Px) -> Vec<Px> {
        DIRS.iter()
            .map(|d| (p.0 + d.0, p.1 + d.1))
            .filter(|&q| self.at(q))
            .collect()
    }

    fn idx(&self, p: Px) -> usize {
        (p.1 * self.w + p.0) as usize
    }
}

/// Undirected edge key.
fn edge(a: Px, b: Px) -> (Px, Px) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Traces the ink of a (thinned) binary mask into chains. Unbranched paths
/// run between junctions and endpoints; closed strokes become loops. Every
/// path is further split at corners found by polyline simplification with
/// the configured tolerance.
pub fn extract_strokes(width: usize, height: usize, ink: &[bool], cfg: &PixelConfig) -> StrokeSet {
    let g = InkGraph {
        w: width as i64,
        h: height as i64,
        ink: ink.to_vec(),
    };
    let mut out = StrokeSet::default();
    let mut visited = std::collections::HashSet::new();
    let mut paths: Vec<(Vec<Px>, bool)> = Vec::new();
    let pixels: Vec<Px> = (0..g.h)
        .flat_map(|y| (0..g.w).map(move |x| (x, y)))
        .filter(|&p| g.at(p))
        .collect();
    let degree = |p: Px| g.neighbors(p).len();

    for &p in &pixels {
        match degree(p) {
            0 => paths.push((vec![p], false)),
            1 => out.endpoints.push(p),
            2 => {}
            _ => out.junctions.push(p),
        }
    }
    // Open paths from every node.
    for &p in &pixels {
        let d = degree(p);
        if d == 2 || d == 0 {
            continue;
        }
        for q in g.neighbors(p) {
            if visited.contains(&edge(p, q)) {
                continue;
            }
            visited.insert(edge(p, q));
            let mut path = vec![p, q];
            let (mut prev, mut cur) = (p, q);
            while degree(cur) == 2 {
                let next = g
                    .neighbors(cur)
                    .into_iter()
                    .find(|&n| n != prev && !visited.contains(&edge(cur, n)));
                let Some(next) = next else { break };
                visited.insert(edge(cur, next));
                path.push(next);
                prev = cur;
                cur = next;
            }
            paths.push((path, false));
        }
    }
    // Remaining edges form node-free cycles.
    for &p in &pixels {
        if degree(p) != 2 {
            continue;
        }
        let Some(q) = g
            .neighbors(p)
            .into_iter()
            .find(|&q| !visited.contains(&edge(p, q)))
        else {
            continue;
        };
        visited.insert(edge(p, q));
        let mut cycle = vec![p];
        let (mut prev, mut cur) = (p, q);
        while cur != p {
            cycle.push(cur);
            let next = g
                .neighbors(cur)
                .into_iter()
                .find(|&n| n != prev && !visited.contains(&edge(cur, n)))
                .expect("cycle pixels have two neighbours");
            visited.insert(edge(cur, next));
            prev = cur;
            cur = next;
        }
        paths.push((cycle, true));
    }

    for (path, closed) in paths {
        if closed {
            let (cycle, vertices) = split_loop(path, cfg.straight_tol_px);
            let n = cycle.len();
            let mut ids = Vec::new();
            for (k, &v) in vertices.iter().enumerate() {
                let next = vertices[(k + 1) % vertices.len()];
                let len = match (next + n - v) % n {
                    0 => n,
                    l => l,
                };
                let seg: Vec<Px> = (0..=len).map(|i| cycle[(v + i) % n]).collect();
                out.corners.push(cycle[v]);
                ids.push(out.chains.len());
                out.chains.push(Chain {
                    id: out.chains.len(),
                    path: seg,
                    owned: Vec::new(),
                });
            }
            out.loops.push(ids);
        } else if path.len() == 1 {
            out.chains.push(Chain {
                id: out.chains.len(),
                path,
                owned: Vec::new(),
            });
        } else {
            let vertices = split_open(&path, cfg.straight_tol_px);
            for &v in &vertices[1..vertices.len() - 1] {
                out.corners.push(path[v]);
            }
            for win in vertices.windows(2) {
                out.chains.push(Chain {
                    id: out.chains.len(),
                    path: path[win[0]..=win[1]].to_vec(),
                    owned: Vec::new(),
                });
            }
        }
    }

    // Ownership: interior and start pixels first, then unclaimed ends.
    let mut owner = vec![usize::MAX; width * height];
    for c in out.chains.iter() {
        let body = if c.path.len() > 1 { &c.path[..c.path.len() - 1] } else { &c.path[..] };
        for &p in body {
            let i = g.idx(p);
            if owner[i] == usize::MAX {
                owner[i] = c.id;
            }
        }
    }
    for c in out.chains.iter() {
        let i = g.idx(c.end());
        if owner[i] == usize::MAX {
            owner[i] = c.id;
        }
    }
    for c in out.chains.iter_mut() {
        let mut seen = std::collections::HashSet::new();
        c.owned = c
            .path
            .iter()
            .copied()
            .filter(|&p| owner[g.idx(p)] == c.id && seen.insert(p))
            .collect();
    }
    out.corners.sort();
    out.corners.dedup();
    out
}

fn geo(p: Px) -> (f64, f64) {
    (p.0 as f64, -(p.1 as f64))
}

/// Distance of `p` from the line through `a` and `b` (from `a` if equal).
fn line_dist(p: Px, a: Px, b: Px) -> f64 {
    let (px, py) = geo(p);
    let (ax, ay) = geo(a);
    let (bx, by) = geo(b);
    let (dx, dy) = (bx - ax, by - ay);
    let len = (dx * dx + dy * dy).sqrt();
    if len == 0.0 {
        return ((px - ax).powi(2) + (py - ay).powi(2)).sqrt();
    }
    ((px - ax) * dy - (py - ay) * dx).abs() / len
}

/// Largest distance of `pts` from the chord joining its ends.
pub fn max_chord_deviation(pts: &[Px]) -> f64 {
    let (a, b) = (pts[0], pts[pts.len() - 1]);
    pts.iter().map(|&p| line_dist(p, a, b)).fold(0.0, f64::max)
}

/// Half the width of the narrowest strip holding every pixel, i.e. the
/// deviation from the best-placed chord. Zero for collinear pixels.
pub fn strip_deviation(pts: &[Px]) -> f64 {
    let mut h: Vec<(f64, f64)> = pts.iter().map(|&p| geo(p)).collect();
    h.sort_by(|a, b| a.partial_cmp(b).unwrap());
    h.dedup();
    if h.len() < 3 {
        return 0.0;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let it: Box<dyn Iterator<Item = &(f64, f64)>> =
            if pass == 0 { Box::new(h.iter()) } else { Box::new(h.iter().rev()) };
        for &p in it {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return 0.0;
    }
    let m = hull.len();
    (0..m)
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % m]);
            let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
            hull.iter().map(|&p| cross(a, b, p).abs() / len).fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
        / 2.0
}

fn dp(pts: &[Px], lo: usize, hi: usize, tol: f64, keep: &mut Vec<usize>) {
    if hi <= lo + 1 {
        return;
    }
    let (a, b) = (pts[lo], pts[hi]);
    let mut best = (0.0, lo);
    for (i, &p) in pts.iter().enumerate().take(hi).skip(lo + 1) {
        let d = line_dist(p, a, b);
        if d > best.0 {
            best = (d, i);
        }
    }
    if best.0 > tol {
        dp(pts, lo, best.1, tol, keep);
        keep.push(best.1);
        dp(pts, best.1, hi, tol, keep);
    }
}

/// Strip deviation of the cyclic run from `i` to `j` (inclusive).
fn run_dev(cycle: &[Px], i: usize, j: usize) -> f64 {
    let n = cycle.len();
    let len = (j + n - i) % n;
    let run: Vec<Px> = (0..=len).map(|k| cycle[(i + k) % n]).collect();
    strip_deviation(&run)
}

fn split_open(path: &[Px], tol: f64) -> Vec<usize> {
    let last = path.len() - 1;
    let mut keep = vec![0];
    if path[0] == path[last] {
        // A loop hanging off a node: split at the farthest pixel first.
        let far = (1..last)
            .max_by(|&i, &j| {
                line_dist(path[i], path[0], path[0])
                    .partial_cmp(&line_dist(path[j], path[0], path[0]))
                    .unwrap()
                    .then(j.cmp(&i))
            })
            .unwrap_or(0);
        if far > 0 {
            dp(path, 0, far, tol, &mut keep);
            keep.push(far);
            dp(path, far, last, tol, &mut keep);
        }
    } else {
        dp(path, 0, last, tol, &mut keep);
    }
    keep.push(last);
    keep.sort_unstable();
    keep.dedup();
    for _ in 0..2 {
        drop_redundant_open(path, &mut keep, tol);
        refine_open(path, &mut keep);
    }
    drop_redundant_open(path, &mut keep, tol);
    keep
}

/// Open-path counterpart of `drop_redundant`; the two ends always stay.
fn drop_redundant_open(path: &[Px], keep: &mut Vec<usize>, tol: f64) {
    // A path closed on itself needs an interior corner to stay a loop.
    let floor = if path[0] == path[path.len() - 1] { 3 } else { 2 };
    while keep.len() > floor {
        let (k, dev) = (1..keep.len() - 1)
            .map(|k| (k, strip_deviation(&path[keep[k - 1]..=keep[k + 1]])))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
            .expect("interior corner");
        if dev > tol {
            break;
        }
        keep.remove(k);
    }
}

fn refine_open(path: &[Px], keep: &mut [usize]) {
    for _ in 0..2 {
        for k in 1..keep.len().saturating_sub(1) {
            let (prev, next) = (keep[k - 1], keep[k + 1]);
            let cost = |c: usize| {
                strip_deviation(&path[prev..=c]).max(strip_deviation(&path[c..=next]))
            };
            keep[k] = best_candidate(keep[k], prev + 1, next - 1, cost);
        }
    }
}

/// Candidate within ±3 of `cur` (clamped to `[lo, hi]`) minimizing `cost`;
/// ties prefer the smallest shift.
fn best_candidate(cur: usize, lo: usize, hi: usize, cost: impl Fn(usize) -> f64) -> usize {
    if lo > hi {
        return cur;
    }
    let mut best = (cost(cur), 0i64, cur);
    for off in [-1i64, 1, -2, 2, -3, 3] {
        let c = cur as i64 + off;
        if c < lo as i64 || c > hi as i64 {
            continue;
        }
        let v = cost(c as usize);
        if v + 1e-9 < best.0 {
            best = (v, off, c as usize);
        }
    }
    best.2
}

/// Orients a closed stroke counter-clockwise, starts it at the pixel farthest
/// from the centroid and returns the cycle with its corner indices.
fn split_loop(mut cycle: Vec<Px>, tol: f64) -> (Vec<Px>, Vec<usize>) {
    let n = cycle.len();
    let area: f64 = (0..n)
        .map(|i| {
            let (x0, y0) = geo(cycle[i]);
            let (x1, y1) = geo(cycle[(i + 1) % n]);
            x0 * y1 - x1 * y0
        })
        .sum();
    if area < 0.0 {
        cycle[1..].reverse();
    }
    let cx = cycle.iter().map(|p| p.0 as f64).sum::<f64>() / n as f64;
    let cy = cycle.iter().map(|p| p.1 as f64).sum::<f64>() / n as f64;
    let d2 = |p: Px| (p.0 as f64 - cx).powi(2) + (p.1 as f64 - cy).powi(2);
    let mut start = 0;
    for i in 1..n {
        if d2(cycle[i]) > d2(cycle[start]) + 1e-9 {
            start = i;
        }
    }
    cycle.rotate_left(start);
    if n < 4 {
        return (cycle, vec![0]);
    }
    let far = (1..n)
        .max_by(|&i, &j| {
            line_dist(cycle[i], cycle[0], cycle[0])
                .partial_cmp(&line_dist(cycle[j], cycle[0], cycle[0]))
                .unwrap()
                .then(j.cmp(&i))
        })
        .expect("n >= 4");
    let mut closed = cycle.clone();
    closed.push(cycle[0]);
    let mut keep = vec![0];
    dp(&closed, 0, far, tol, &mut keep);
    keep.push(far);
    dp(&closed, far, n, tol, &mut keep);
    keep.sort_unstable();
    keep.dedup();

    for _ in 0..2 {
        drop_redundant(&cycle, &mut keep, tol);
        refine_loop(&cycle, &mut keep);
    }
    drop_redundant(&cycle, &mut keep, tol);
    // Start the cycle at the first corner.
    let first = keep[0];
    cycle.rotate_left(first);
    let mut vertices: Vec<usize> = keep.iter().map(|&v| (v + n - first) % n).collect();
    vertices.sort_unstable();
    (cycle, vertices)
}

/// Repeatedly removes the corner whose neighbours' chord fits best, while
/// that fit is within tolerance.
fn drop_redundant(cycle: &[Px], keep: &mut Vec<usize>, tol: f64) {
    while keep.len() > 3 {
        let m = keep.len();
        let (k, dev) = (0..m)
            .map(|k| (k, run_dev(cycle, keep[(k + m - 1) % m], keep[(k + 1) % m])))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
            .expect("non-empty");
        if dev > tol {
            break;
        }
        keep.remove(k);
    }
}

/// Moves each corner within a small window to minimize the worst chord
/// deviation of its two adjacent runs.
fn refine_loop(cycle: &[Px], keep: &mut [usize]) {
    let n = cycle.len();
    let m = keep.len();
    if m < 2 {
        return;
    }
    for k in 0..m {
        let (prev, next) = (keep[(k + m - 1) % m], keep[(k + 1) % m]);
        // Offsets relative to `prev` keep the search on the cyclic run.
        let span = (next + n - prev) % n;
        let rel = (keep[k] + n - prev) % n;
        if span < 4 {
            continue;
        }
        let cost = |r: usize| {
            let c = (prev + r) % n;
            run_dev(cycle, prev, c).max(run_dev(cycle, c, next))
        };
        let r = best_candidate(rel, 2, span - 2, cost);
        keep[k] = (prev + r) % n;
    }
}

/// Measured features of one chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentFeatures {
    /// `1 - deviation / tolerance`, clamped to [0, 1].
    pub straightness: f64,
    pub max_deviation: f64,
    /// Chord length in pixels.
    pub length: f64,
    /// `floor(log2(length))`.
    pub length_bin: i64,
    /// Direction of travel, y up, in degrees [0, 360).
    pub direction_deg: f64,
    pub orientation_bin: i64,
    /// `floor(16 * deviation / length)`, capped at 15.
    pub curvature_bin: i64,
}

/// Classifies an ordered pixel path.
pub fn classify_segment(path: &[Px], cfg: &PixelConfig) -> Result<SegmentFeatures> {
    if path.len() < 2 {
        return Err(Error::Precondition("segment needs at least two pixels".into()));
    }
    let dev = strip_deviation(path);
    let (ax, ay) = geo(path[0]);
    let (bx, by) = geo(path[path.len() - 1]);
    let length = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt();
    let direction = principal_direction(path, (bx - ax, by - ay));
    let bin_width = 360.0 / cfg.orientation_bins as f64;
    let orientation_bin =
        ((direction / bin_width).round() as i64).rem_euclid(cfg.orientation_bins as i64);
    Ok(SegmentFeatures {
        straightness: (1.0 - dev / cfg.straight_tol_px).clamp(0.0, 1.0),
        max_deviation: dev,
        length,
        length_bin: length.max(1.0).log2().floor() as i64,
        direction_deg: direction,
        orientation_bin,
        curvature_bin: if length > 0.0 {
            ((16.0 * dev / length).floor() as i64).min(15)
        } else {
            15
        },
    })
}

/// Principal axis of the pixel cloud, signed to agree with `toward`.
fn principal_direction(path: &[Px], toward: (f64, f64)) -> f64 {
    let n = path.len() as f64;
    let pts: Vec<(f64, f64)> = path.iter().map(|&p| geo(p)).collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pts {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (mut ux, mut uy) = (theta.cos(), theta.sin());
    if ux * toward.0 + uy * toward.1 < 0.0 {
        ux = -ux;
        uy = -uy;
    }
    uy.atan2(ux).to_degrees().rem_euclid(360.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(w: usize, h: usize, pts: &[Px]) -> Vec<bool> {
        let mut m = vec![false; w * h];
        for &(x, y) in pts {
            m[y as usize * w + x as usize] = true;
        }
        m
    }

    #[test]
    fn horizontal_line() {
        let pts: Vec<Px> = (1..11).map(|x| (x, 2)).collect();
        let s = extract_strokes(12, 5, &mask(12, 5, &pts), &PixelConfig::default());
        assert_eq!(s.chains.len(), 1);
        assert_eq!(s.endpoints.len(), 2);
        let f = classify_segment(&s.chains[0].path, &PixelConfig::default()).unwrap();
        assert_eq!(f.straightness, 1.0);
        assert_eq!(f.orientation_bin, 0);
    }

    #[test]
    fn crossing_lines() {
        let mut pts: Vec<Px> = (0..9).map(|x| (x, 4)).collect();
        pts.extend((0..9).filter(|&y| y != 4).map(|y| (4, y)));
        let s = extract_strokes(9, 9, &mask(9, 9, &pts), &PixelConfig::default());
        assert_eq!(s.chains.len(), 4);
        assert_eq!(s.junctions, vec![(4, 4)]);
        let owned: usize = s.chains.iter().map(|c| c.owned.len()).sum();
        assert_eq!(owned, pts.len());
    }

    #[test]
    fn diagonal_orientation() {
        let mut pts = Vec::new();
        for i in 0..8 {
            pts.push((i, 9 - i));
            pts.push((i + 1, 9 - i));
        }
        let f = classify_segment(&pts, &PixelConfig::default()).unwrap();
        assert_eq!(f.orientation_bin, 2);
    }

    #[test]
    fn single_pixel_is_degenerate() {
        assert!(classify_segment(&[(0, 0)], &PixelConfig::default()).is_err());
    }
}
