//! Raster explicitation: pixels to regions, strokes, a segment quotient,
//! referenced property assertions and signature firings.

pub mod corpus;
pub mod demo;
pub mod polygon;
pub mod raster;
pub mod signature;
pub mod strokes;

use serde::{Deserialize, Serialize};

use crate::derivation::MorphismMask;
use crate::structure::TypeCatalog;

pub use polygon::{polygon_from_strokes, PolygonAnalysis};
pub use raster::{load_raster, segment_regions, Raster};
pub use signature::{
    build_signature_candidates, evaluate_signature, standard_signatures, PropertyAssertion,
    Signature, SignatureResult, Target, Value,
};
pub use strokes::{classify_segment, extract_strokes, Chain, StrokeSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PixelConfig {
    /// Chord deviation at which straightness reaches zero; also the corner
    /// split tolerance.
    pub straight_tol_px: f64,
    /// Straightness below which a chain is reported as not straight.
    pub straight_min: f64,
    pub orientation_bins: u32,
    pub angle_bin_deg: f64,
    /// Largest max/min side ratio still counted as equal lengths.
    pub equal_length_ratio: f64,
    /// Darkness bins for PGM input.
    pub levels: u32,
    /// Thin strokes before tracing.
    pub thin: bool,
}

impl Default for PixelConfig {
    fn default() -> Self {
        PixelConfig {
            straight_tol_px: 1.5,
            straight_min: 0.05,
            orientation_bins: 16,
            angle_bin_deg: 30.0,
            equal_length_ratio: 1.2,
            levels: 2,
            thin: true,
        }
    }
}

/// Catalog declaring the segment-quotient attributes.
pub fn segment_catalog() -> TypeCatalog {
    let mut cat = TypeCatalog::new();
    cat.add_atomic(polygon::SEGMENT_TYPE);
    cat.declare_attr(polygon::ATTR_LEN_BIN, None, "log2 px");
    cat.declare_attr(polygon::ATTR_LEN_PX, None, "px");
    cat.declare_attr(polygon::ATTR_ORIENT, Some(16), "22.5 deg");
    cat.declare_attr(polygon::ATTR_ANGLE, Some(12), "30 deg");
    cat
}

/// Drops absolute segment lengths.
pub fn suppress_length() -> MorphismMask {
    MorphismMask::new()
        .drop_part_attr(polygon::ATTR_LEN_BIN)
        .drop_part_attr(polygon::ATTR_LEN_PX)
}

/// Drops segment orientations and joint angles.
pub fn suppress_angle() -> MorphismMask {
    MorphismMask::new()
        .drop_part_attr(polygon::ATTR_ORIENT)
        .drop_rel_attr(polygon::ATTR_ANGLE)
}

/// Features that depend on absolute size.
pub const SCALE_FEATURES: &[&str] = &[polygon::ATTR_LEN_BIN, "curvature"];

/// The assertion set with size-dependent features removed.
pub fn scale_suppressed(assertions: &[PropertyAssertion]) -> Vec<PropertyAssertion> {
    assertions
        .iter()
        .filter(|a| !SCALE_FEATURES.contains(&a.feature.as_str()))
        .cloned()
        .collect()
}

/// Thinning and spur pruning (if enabled), then stroke tracing.
pub fn strokes_of(r: &Raster, cfg: &PixelConfig) -> StrokeSet {
    let ink = r.ink();
    let ink = if cfg.thin {
        raster::prune_spurs(r.width, r.height, &raster::thin(r.width, r.height, &ink))
    } else {
        ink
    };
    extract_strokes(r.width, r.height, &ink, cfg)
}

/// Segment quotient of a raster.
pub fn polygon_quotient(r: &Raster, cfg: &PixelConfig) -> PolygonAnalysis {
    polygon_from_strokes(&strokes_of(r, cfg), cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RasterInfo {
    pub width: usize,
    pub height: usize,
    pub levels: u32,
    pub ink_pixels: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionInfo {
    pub count: usize,
    /// Block sizes, largest first.
    pub sizes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainInfo {
    pub id: usize,
    pub start: [i64; 2],
    pub end: [i64; 2],
    pub pixels: usize,
    pub owned: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub raster: RasterInfo,
    pub regions: RegionInfo,
    pub chains: Vec<ChainInfo>,
    pub junctions: Vec<[i64; 2]>,
    pub endpoints: Vec<[i64; 2]>,
    pub corners: Vec<[i64; 2]>,
    /// Segment quotient in `.struct` text.
    pub quotient: String,
    pub non_straight: Vec<usize>,
    pub assertions: Vec<PropertyAssertion>,
    pub firings: Vec<SignatureResult>,
}

/// Runs the full pipeline on one raster.
pub fn analyze(r: &Raster, cfg: &PixelConfig, signatures: &[Signature]) -> AnalysisReport {
    let regions = segment_regions(r);
    let mut sizes: Vec<usize> = regions.blocks().iter().map(Vec::len).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let strokes = strokes_of(r, cfg);
    let poly = polygon_from_strokes(&strokes, cfg);
    let xy = |p: &(i64, i64)| [p.0, p.1];
    AnalysisReport {
        raster: RasterInfo {
            width: r.width,
            height: r.height,
            levels: r.levels,
            ink_pixels: r.ink().iter().filter(|&&b| b).count(),
        },
        regions: RegionInfo {
            count: regions.len(),
            sizes,
        },
        chains: strokes
            .chains
            .iter()
            .map(|c| ChainInfo {
                id: c.id,
                start: xy(&c.start()),
                end: xy(&c.end()),
                pixels: c.path.len(),
                owned: c.owned.len(),
            })
            .collect(),
        junctions: strokes.junctions.iter().map(xy).collect(),
        endpoints: strokes.endpoints.iter().map(xy).collect(),
        corners: strokes.corners.iter().map(xy).collect(),
        quotient: poly.quotient.to_text(),
        non_straight: poly.non_straight.clone(),
        firings: signatures
            .iter()
            .map(|s| evaluate_signature(s, &poly.assertions))
            .collect(),
        assertions: poly.assertions,
    }
}
