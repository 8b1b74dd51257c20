//! Synthetic polygon rasters: outlines drawn as 4-connected simple cycles.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::raster::Raster;
use super::strokes::Px;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Figure {
    RegularTriangle,
    RightTriangle,
    Square,
    Parallelogram,
    RegularHexagon,
    IrregularHexagon,
}

impl Figure {
    pub const ALL: [Figure; 6] = [
        Figure::RegularTriangle,
        Figure::RightTriangle,
        Figure::Square,
        Figure::Parallelogram,
        Figure::RegularHexagon,
        Figure::IrregularHexagon,
    ];

    pub fn sides(self) -> usize {
        match self {
            Figure::RegularTriangle | Figure::RightTriangle => 3,
            Figure::Square | Figure::Parallelogram => 4,
            Figure::RegularHexagon | Figure::IrregularHexagon => 6,
        }
    }

    pub fn regular(self) -> bool {
        matches!(
            self,
            Figure::RegularTriangle | Figure::Square | Figure::RegularHexagon
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Figure::RegularTriangle => "regular-triangle",
            Figure::RightTriangle => "right-triangle",
            Figure::Square => "square",
            Figure::Parallelogram => "parallelogram",
            Figure::RegularHexagon => "regular-hexagon",
            Figure::IrregularHexagon => "irregular-hexagon",
        }
    }

    /// Number of distinct rotations in the demo corpus.
    fn copies(self) -> usize {
        match self {
            Figure::RegularTriangle | Figure::Square => 4,
            _ => 3,
        }
    }

    /// Counter-clockwise vertices (y up) for unit length `u`, centred on
    /// the vertex centroid.
    pub fn vertices(self, u: f64) -> Vec<(f64, f64)> {
        let polar = |n: usize, r: f64, start: f64| -> Vec<(f64, f64)> {
            (0..n)
                .map(|k| {
                    let a = (start + 360.0 * k as f64 / n as f64).to_radians();
                    (r * a.cos(), r * a.sin())
                })
                .collect()
        };
        let s3 = 3f64.sqrt();
        let pts = match self {
            Figure::RegularTriangle => polar(3, 1.2 * u, 90.0),
            Figure::RightTriangle => vec![(0.0, 0.0), (1.2 * s3 * u, 0.0), (0.0, 1.2 * u)],
            Figure::Square => polar(4, 1.8 * u / 2f64.sqrt(), 45.0),
            Figure::Parallelogram => {
                let (a, b) = (2.2 * u, 1.3 * u);
                let (dx, dy) = (b * 0.5, b * s3 / 2.0);
                vec![(0.0, 0.0), (a, 0.0), (a + dx, dy), (dx, dy)]
            }
            Figure::RegularHexagon => polar(6, 1.1 * u, 0.0),
            Figure::IrregularHexagon => {
                // Rectangle with two opposite corners cut at 30 degrees.
                let (w, h, c) = (2.4 * u, 1.6 * u, 0.9 * u);
                let t = c / s3;
                vec![
                    (c, 0.0),
                    (w, 0.0),
                    (w, h - t),
                    (w - c, h),
                    (0.0, h),
                    (0.0, t),
                ]
            }
        };
        let n = pts.len() as f64;
        let cx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let cy = pts.iter().map(|p| p.1).sum::<f64>() / n;
        pts.into_iter().map(|(x, y)| (x - cx, y - cy)).collect()
    }
}

/// 4-connected pixel line between integer points, hugging the ideal line.
pub fn line4(a: Px, b: Px) -> Vec<Px> {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let (sx, sy) = (dx.signum(), dy.signum());
    let err = |p: Px| ((p.0 - a.0) * dy - (p.1 - a.1) * dx).abs();
    let mut p = a;
    let mut out = vec![p];
    while p != b {
        let cx = (p.0 + sx, p.1);
        let cy = (p.0, p.1 + sy);
        p = match (p.0 != b.0, p.1 != b.1) {
            (true, true) if err(cy) < err(cx) => cy,
            (true, _) => cx,
            _ => cy,
        };
        out.push(p);
    }
    out
}

fn adjacent4(a: Px, b: Px) -> bool {
    (a.0 - b.0).abs() + (a.1 - b.1).abs() == 1
}

/// Removes shortcuts until no two non-consecutive pixels of the cycle are
/// equal or 4-adjacent; the shorter arc of each shortcut is dropped.
pub fn simplify_cycle(mut cyc: Vec<Px>) -> Vec<Px> {
    'outer: loop {
        let n = cyc.len();
        if n <= 4 {
            return cyc;
        }
        let pos: std::collections::HashMap<Px, usize> =
            cyc.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        for i in 0..n {
            let p = cyc[i];
            let mut hits: Vec<usize> = [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .filter_map(|d| pos.get(&(p.0 + d.0, p.1 + d.1)).copied())
                .collect();
            if pos[&p] != i {
                hits.push(pos[&p]);
            }
            for j in hits {
                let fwd = (j + n - i) % n;
                if fwd <= 1 || fwd >= n - 1 {
                    continue;
                }
                debug_assert!(cyc[j] == p || adjacent4(cyc[j], p));
                // Keep the longer arc.
                let (from, len) = if fwd <= n - fwd { (i, fwd) } else { (j, n - fwd) };
                let drop_same = cyc[j] == p;
                let mut next = Vec::with_capacity(n);
                for k in 0..n {
                    let off = (k + n - from) % n;
                    let interior = off > 0 && off < len;
                    let dup_end = drop_same && off == len;
                    if !interior && !dup_end {
                        next.push(cyc[k]);
                    }
                }
                cyc = next;
                continue 'outer;
            }
        }
        return cyc;
    }
}

/// Pixel outline of a closed polygon through integer vertices.
pub fn outline(vertices: &[Px]) -> Vec<Px> {
    let mut cyc = Vec::new();
    for k in 0..vertices.len() {
        let a = vertices[k];
        let b = vertices[(k + 1) % vertices.len()];
        let seg = line4(a, b);
        cyc.extend_from_slice(&seg[..seg.len() - 1]);
    }
    simplify_cycle(cyc)
}

/// Rasterizes a polygon outline on a canvas with the given margin.
pub fn render(vertices: &[Px], margin: i64) -> Raster {
    let pts = outline(vertices);
    let minx = pts.iter().map(|p| p.0).min().unwrap_or(0);
    let miny = pts.iter().map(|p| p.1).min().unwrap_or(0);
    let maxx = pts.iter().map(|p| p.0).max().unwrap_or(0);
    let maxy = pts.iter().map(|p| p.1).max().unwrap_or(0);
    let w = (maxx - minx + 1 + 2 * margin) as usize;
    let h = (maxy - miny + 1 + 2 * margin) as usize;
    let mut ink = vec![false; w * h];
    for (x, y) in pts {
        let (xx, yy) = ((x - minx + margin) as usize, (y - miny + margin) as usize);
        ink[yy * w + xx] = true;
    }
    Raster::from_ink(w, h, &ink)
}

fn direction(a: (f64, f64), b: (f64, f64)) -> f64 {
    (b.1 - a.1).atan2(b.0 - a.0).to_degrees()
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Integer image-space vertices of `fig` at unit `u`, rotated by `rot_deg`
/// counter-clockwise. A sub-pixel offset is searched so that rounding
/// keeps every side within 2.5 degrees of its ideal direction and, for
/// regular figures, side lengths within 10% of each other.
pub fn place(fig: Figure, u: f64, rot_deg: f64) -> Vec<Px> {
    let (sr, cr) = rot_deg.to_radians().sin_cos();
    let ideal: Vec<(f64, f64)> = fig
        .vertices(u)
        .into_iter()
        .map(|(x, y)| (x * cr - y * sr, x * sr + y * cr))
        .collect();
    let n = ideal.len();
    let offsets: Vec<f64> = (0..8).map(|k| k as f64 / 8.0).collect();
    let mut fallback = None;
    for &oy in &offsets {
        for &ox in &offsets {
            let pts: Vec<Px> = ideal
                .iter()
                .map(|&(x, y)| ((x + ox).round() as i64, -((y + oy).round() as i64)))
                .collect();
            let geo: Vec<(f64, f64)> = pts.iter().map(|p| (p.0 as f64, -(p.1 as f64))).collect();
            let dir_ok = (0..n).all(|k| {
                let k1 = (k + 1) % n;
                angle_diff(direction(geo[k], geo[k1]), direction(ideal[k], ideal[k1])) <= 2.5
            });
            let lens: Vec<f64> = (0..n)
                .map(|k| {
                    let (a, b) = (geo[k], geo[(k + 1) % n]);
                    ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt()
                })
                .collect();
            let max = lens.iter().cloned().fold(0.0, f64::max);
            let min = lens.iter().cloned().fold(f64::INFINITY, f64::min);
            let len_ok = !fig.regular() || max / min <= 1.1;
            if dir_ok && len_ok {
                return pts;
            }
            fallback.get_or_insert(pts);
        }
    }
    fallback.expect("offset grid is non-empty")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusItem {
    pub name: String,
    pub figure: Figure,
    /// Index of the base figure (shared by its scale variants).
    pub base: usize,
    pub scale: usize,
    pub unit: f64,
    pub rotation_deg: f64,
    pub raster: Raster,
}

/// Unit lengths of the three scales.
pub const SCALES: [f64; 3] = [16.0, 24.0, 32.0];

/// Rotation steps, in multiples of 22.5 degrees, for every base figure.
pub fn rotations(seed: u64) -> Vec<(Figure, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for fig in Figure::ALL {
        let mut steps: Vec<usize> = (0..16).collect();
        steps.shuffle(&mut rng);
        for &k in steps.iter().take(fig.copies()) {
            out.push((fig, k));
        }
    }
    out
}

/// The demo corpus: 20 base figures at three scales.
pub fn generate_corpus(seed: u64) -> Vec<CorpusItem> {
    let mut out = Vec::new();
    for (base, (fig, k)) in rotations(seed).into_iter().enumerate() {
        let rot = k as f64 * 22.5;
        for (scale, &u) in SCALES.iter().enumerate() {
            let verts = place(fig, u, rot);
            out.push(CorpusItem {
                name: format!("{}-{base:02}-r{k:02}-s{scale}", fig.name()),
                figure: fig,
                base,
                scale,
                unit: u,
                rotation_deg: rot,
                raster: render(&verts, 3),
            });
        }
    }
    out
}
