//! PBM/PGM ingestion, the per-pixel base structure and region segmentation.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::derivation::Partition;
use crate::error::{Error, Result};
use crate::structure::Structure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RasterFormat {
    /// Plain PBM (`P1`): 1 is ink.
    Pbm,
    /// Plain PGM (`P2`): 0 is black.
    Pgm,
}

/// A quantized raster. `bins` holds one darkness bin per pixel, row-major,
/// 0 = lightest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub format: RasterFormat,
    pub maxval: u32,
    /// Raw sample values as read.
    pub values: Vec<u32>,
    pub levels: u32,
    pub bins: Vec<u32>,
}

fn perr(msg: impl Into<String>) -> Error {
    Error::Raster(msg.into())
}

/// Whitespace-separated tokens with `#` comments removed.
fn tokens(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .flat_map(|l| l.split('#').next().unwrap_or("").split_whitespace())
}

/// Parses a plain PBM (P1) or PGM (P2) image, quantizing PGM samples into
/// `levels` darkness bins.
pub fn load_raster(bytes: &[u8], levels: u32) -> Result<Raster> {
    let text = std::str::from_utf8(bytes).map_err(|_| perr("not ASCII"))?;
    let mut toks = tokens(text);
    let magic = toks.next().ok_or_else(|| perr("missing magic number"))?;
    let format = match magic {
        "P1" => RasterFormat::Pbm,
        "P2" => RasterFormat::Pgm,
        _ => return Err(perr(format!("unsupported magic `{magic}`"))),
    };
    let mut dim = |what: &str| -> Result<usize> {
        let t = toks.next().ok_or_else(|| perr(format!("missing {what}")))?;
        t.parse::<usize>()
            .map_err(|_| perr(format!("bad {what} `{t}`")))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    if width == 0 || height == 0 {
        return Err(perr("zero dimension"));
    }
    let n = width
        .checked_mul(height)
        .filter(|&n| n <= 1 << 24)
        .ok_or_else(|| perr("image too large"))?;
    let (maxval, values) = match format {
        RasterFormat::Pbm => {
            // Bits may be packed without separators.
            let mut values = Vec::with_capacity(n);
            for t in toks {
                for c in t.chars() {
                    match c {
                        '0' => values.push(0),
                        '1' => values.push(1),
                        _ => return Err(perr(format!("bad PBM sample `{c}`"))),
                    }
                }
            }
            (1, values)
        }
        RasterFormat::Pgm => {
            let maxval = dim("maxval")? as u32;
            if maxval == 0 || maxval > 65535 {
                return Err(perr("maxval out of range"));
            }
            let mut values = Vec::with_capacity(n);
            for t in toks {
                let v: u32 = t.parse().map_err(|_| perr(format!("bad PGM sample `{t}`")))?;
                if v > maxval {
                    return Err(perr(format!("sample {v} exceeds maxval {maxval}")));
                }
                values.push(v);
            }
            (maxval, values)
        }
    };
    if values.len() < n {
        return Err(perr(format!(
            "truncated pixel data: {} of {n} samples",
            values.len()
        )));
    }
    if values.len() > n {
        return Err(perr(format!("{} trailing samples", values.len() - n)));
    }
    Raster::from_values(width, height, format, maxval, values, levels)
}

impl Raster {
    pub fn from_values(
        width: usize,
        height: usize,
        format: RasterFormat,
        maxval: u32,
        values: Vec<u32>,
        levels: u32,
    ) -> Result<Self> {
        if values.len() != width * height {
            return Err(perr("sample count does not match dimensions"));
        }
        let levels = if format == RasterFormat::Pbm { 2 } else { levels.max(2) };
        let bins = values
            .iter()
            .map(|&v| match format {
                RasterFormat::Pbm => v,
                RasterFormat::Pgm => {
                    ((maxval - v) as u64 * levels as u64 / (maxval as u64 + 1)) as u32
                }
            })
            .collect();
        Ok(Raster {
            width,
            height,
            format,
            maxval,
            values,
            levels,
            bins,
        })
    }

    /// Binary raster from an ink mask.
    pub fn from_ink(width: usize, height: usize, ink: &[bool]) -> Self {
        let values = ink.iter().map(|&b| b as u32).collect();
        Raster::from_values(width, height, RasterFormat::Pbm, 1, values, 2)
            .expect("mask matches dimensions")
    }

    pub fn bin(&self, x: usize, y: usize) -> u32 {
        self.bins[y * self.width + x]
    }

    /// Ink mask: darkness in the upper half of the bins.
    pub fn ink(&self) -> Vec<bool> {
        self.bins.iter().map(|&b| 2 * b >= self.levels).collect()
    }

    pub fn part_id(x: usize, y: usize) -> String {
        format!("p{x}_{y}")
    }

    /// One part per pixel typed `i<bin>`, with `h` relations between
    /// horizontal neighbours and `v` relations between vertical ones.
    pub fn structure(&self) -> Structure {
        let mut s = Structure::new(false);
        for y in 0..self.height {
            for x in 0..self.width {
                s.add_part(Self::part_id(x, y), format!("i{}", self.bin(x, y)))
                    .expect("pixel ids are unique");
            }
        }
        let w = self.width;
        for y in 0..self.height {
            for x in 0..w {
                let i = y * w + x;
                if x + 1 < w {
                    s.relate(i, i + 1, "h").expect("in range");
                }
                if y + 1 < self.height {
                    s.relate(i, i + w, "v").expect("in range");
                }
            }
        }
        s
    }

    /// Binary raster back from a pixel structure built by
    /// [`Raster::structure`] of a raster with `levels` bins.
    pub fn from_pixel_structure(s: &Structure, levels: u32) -> Result<Self> {
        let mut px = Vec::with_capacity(s.len());
        for p in s.parts() {
            let bad = || perr(format!("`{}` is not a pixel part", p.id));
            let (x, y) = p.id.strip_prefix('p').and_then(|r| r.split_once('_')).ok_or_else(bad)?;
            let x: usize = x.parse().map_err(|_| bad())?;
            let y: usize = y.parse().map_err(|_| bad())?;
            let bin: u32 = p.ty.strip_prefix('i').and_then(|b| b.parse().ok()).ok_or_else(bad)?;
            px.push((x, y, bin));
        }
        let width = px.iter().map(|p| p.0 + 1).max().unwrap_or(0);
        let height = px.iter().map(|p| p.1 + 1).max().unwrap_or(0);
        if width * height != px.len() {
            return Err(perr("pixel parts do not fill a rectangle"));
        }
        let mut ink = vec![false; width * height];
        for (x, y, bin) in px {
            ink[y * width + x] = 2 * bin >= levels.max(2);
        }
        Ok(Raster::from_ink(width, height, &ink))
    }

    /// Plain-text PBM of the ink mask, rows wrapped at 70 columns.
    pub fn to_pbm(&self) -> String {
        let mut out = format!("P1\n{} {}\n", self.width, self.height);
        for row in self.ink().chunks(self.width) {
            let line: String = row.iter().map(|&b| if b { '1' } else { '0' }).collect();
            for chunk in line.as_bytes().chunks(70) {
                out.push_str(std::str::from_utf8(chunk).expect("ascii"));
                out.push('\n');
            }
        }
        out
    }
}

/// Connected components of equal-bin pixels under 4-adjacency, as a
/// partition of the base structure's parts (row-major indices).
pub fn segment_regions(r: &Raster) -> Partition {
    let (w, h) = (r.width, r.height);
    let mut label = vec![usize::MAX; w * h];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for start in 0..w * h {
        if label[start] != usize::MAX {
            continue;
        }
        let id = blocks.len();
        let mut block = vec![start];
        label[start] = id;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if label[j] == usize::MAX && r.bins[j] == r.bins[i] {
                    label[j] = id;
                    block.push(j);
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        blocks.push(block);
    }
    Partition::covering(w * h, blocks).expect("flood fill covers the grid")
}

/// Thins ink to 1-pixel-wide 4-connected strokes by repeatedly deleting
/// simple border pixels in four directional passes. Endpoints (one ink
/// 4-neighbour) are kept. Already-thin strokes are left unchanged.
pub fn thin(width: usize, height: usize, ink: &[bool]) -> Vec<bool> {
    let mut img = ink.to_vec();
    let at = |img: &[bool], x: i64, y: i64| -> bool {
        x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height
            && img[y as usize * width + x as usize]
    };
    // 8-neighbourhood in circular order starting east.
    const RING: [(i64, i64); 8] = [
        (1, 0),
        (1, -1),
        (0, -1),
        (-1, -1),
        (-1, 0),
        (-1, 1),
        (0, 1),
        (1, 1),
    ];
    let simple = |img: &[bool], x: i64, y: i64| -> bool {
        let n: Vec<bool> = RING.iter().map(|&(dx, dy)| at(img, x + dx, y + dy)).collect();
        // 4-components of ink in the ring that touch a 4-neighbour of p.
        let mut comp = [usize::MAX; 8];
        let mut ink_touching = 0;
        for s in 0..8 {
            if !n[s] || comp[s] != usize::MAX {
                continue;
            }
            let mut stack = vec![s];
            comp[s] = s;
            let mut touches = false;
            while let Some(k) = stack.pop() {
                touches |= k % 2 == 0;
                // Ring positions k and k±1 are 4-adjacent only when one of
                // them is a 4-neighbour of p.
                for j in [(k + 1) % 8, (k + 7) % 8] {
                    if n[j] && comp[j] == usize::MAX && (k % 2 == 0 || j % 2 == 0) {
                        comp[j] = s;
                        stack.push(j);
                    }
                }
            }
            if touches {
                ink_touching += 1;
            }
        }
        // 8-components of background in the ring.
        let mut bg = 0;
        let mut seen = [false; 8];
        for s in 0..8 {
            if n[s] || seen[s] {
                continue;
            }
            bg += 1;
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(k) = stack.pop() {
                let mut nb = vec![(k + 1) % 8, (k + 7) % 8];
                if k % 2 == 0 {
                    nb.extend([(k + 2) % 8, (k + 6) % 8]);
                }
                for j in nb {
                    if !n[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        ink_touching == 1 && bg == 1
    };
    loop {
        let mut changed = false;
        for &(dx, dy) in &[(0i64, -1i64), (0, 1), (1, 0), (-1, 0)] {
            // Border pixels for this direction are fixed before deleting so
            // a pass peels one layer only.
            // Endpoints are judged on the same snapshot.
            let degree = |img: &[bool], x: i64, y: i64| {
                [(1, 0), (-1, 0), (0, 1), (0, -1)]
                    .iter()
                    .filter(|&&(a, b)| at(img, x + a, y + b))
                    .count()
            };
            let border: Vec<(i64, i64)> = (0..height as i64)
                .flat_map(|y| (0..width as i64).map(move |x| (x, y)))
                .filter(|&(x, y)| {
                    at(&img, x, y) && !at(&img, x + dx, y + dy) && degree(&img, x, y) > 1
                })
                .collect();
            for (x, y) in border {
                if !simple(&img, x, y) {
                    continue;
                }
                img[y as usize * width + x as usize] = false;
                changed = true;
            }
        }
        if !changed {
            return img;
        }
    }
}

/// Removes one-pixel spurs: endpoints whose only 4-neighbour is a junction.
pub fn prune_spurs(width: usize, height: usize, ink: &[bool]) -> Vec<bool> {
    let at = |x: i64, y: i64| {
        x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height
            && ink[y as usize * width + x as usize]
    };
    let nbrs = |x: i64, y: i64| -> Vec<(i64, i64)> {
        [(1, 0), (-1, 0), (0, 1), (0, -1)]
            .iter()
            .map(|&(dx, dy)| (x + dx, y + dy))
            .filter(|&(a, b)| at(a, b))
            .collect()
    };
    let mut out = ink.to_vec();
    for y in 0..height as i64 {
        for x in 0..width as i64 {
            if !at(x, y) {
                continue;
            }
            if let [(nx, ny)] = nbrs(x, y)[..] {
                if nbrs(nx, ny).len() >= 3 {
                    out[y as usize * width + x as usize] = false;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_3x3() {
        let r = load_raster(b"P1\n3 3\n000\n000\n000\n", 2).unwrap();
        let s = r.structure();
        assert_eq!(s.len(), 9);
        assert_eq!(s.relations().len(), 12);
        assert_eq!(segment_regions(&r).len(), 1);
    }

    #[test]
    fn single_pixel() {
        let r = load_raster(b"P1 1 1 1", 2).unwrap();
        let s = r.structure();
        assert_eq!(s.len(), 1);
        assert!(crate::structure::validate(&s).is_empty());
    }

    #[test]
    fn truncated_data_is_an_error() {
        assert!(load_raster(b"P1\n3 3\n000\n00", 2).is_err());
        assert!(load_raster(b"P1\n3\n", 2).is_err());
        assert!(load_raster(b"P5\n1 1\n255\n0", 2).is_err());
    }

    #[test]
    fn pgm_quantization() {
        let r = load_raster(b"P2\n# comment\n2 1\n255\n0 255\n", 2).unwrap();
        assert_eq!(r.bins, vec![1, 0]);
        assert_eq!(r.ink(), vec![true, false]);
    }

    #[test]
    fn checkerboard_has_four_regions() {
        let r = load_raster(b"P1\n2 2\n10\n01\n", 2).unwrap();
        assert_eq!(segment_regions(&r).len(), 4);
    }

    #[test]
    fn pbm_round_trip() {
        let r = load_raster(b"P1\n4 2\n1001\n0110\n", 2).unwrap();
        assert_eq!(load_raster(r.to_pbm().as_bytes(), 2).unwrap(), r);
    }

    #[test]
    fn thick_bar_thins_to_a_line() {
        let (w, h) = (12, 5);
        let mut ink = vec![false; w * h];
        for y in 1..4 {
            for x in 1..11 {
                ink[y * w + x] = true;
            }
        }
        let t = thin(w, h, &ink);
        let count = t.iter().filter(|&&b| b).count();
        assert!((8..=10).contains(&count), "{count}");
        // Every remaining pixel has at most two 4-neighbours.
        for y in 0..h {
            for x in 0..w {
                if t[y * w + x] {
                    let d = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)]
                        .iter()
                        .filter(|&&(a, b)| {
                            let (xx, yy) = (x as i64 + a, y as i64 + b);
                            xx >= 0 && yy >= 0 && (xx as usize) < w && (yy as usize) < h
                                && t[yy as usize * w + xx as usize]
                        })
                        .count();
                    assert!(d <= 2);
                }
            }
        }
    }

    #[test]
    fn thin_lines_are_stable() {
        let (w, h) = (6, 6);
        let mut ink = vec![false; w * h];
        for (x, y) in [(0, 0), (1, 0), (1, 1), (2, 1), (2, 2), (3, 2), (3, 3)] {
            ink[y * w + x] = true;
        }
        assert_eq!(thin(w, h, &ink), ink);
    }
}
