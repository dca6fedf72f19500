use std::path::Path;

use serde::{Deserialize, Serialize};

use super::BBox;
use crate::error::{Error, Result};

/// Binary ink mask of a rendered page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelPage {
    width: usize,
    height: usize,
    ink: Vec<bool>,
}

impl PixelPage {
    pub fn new(width: usize, height: usize, ink: Vec<bool>) -> Result<Self> {
        if ink.len() != width * height {
            return Err(Error::InvalidTable(format!(
                "ink mask has {} pixels, expected {width}x{height}",
                ink.len()
            )));
        }
        Ok(Self { width, height, ink })
    }

    pub fn blank(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            ink: vec![false; width * height],
        }
    }

    /// Pixels darker than `threshold` (luminance in `[0, 1]`) are ink.
    pub fn from_luma(width: usize, height: usize, luma: &[u8], threshold: f64) -> Result<Self> {
        let ink = luma.iter().map(|&v| f64::from(v) / 255.0 < threshold).collect();
        Self::new(width, height, ink)
    }

    /// Loads a raster image, converting color to luminance before binarizing.
    pub fn load(path: impl AsRef<Path>, threshold: f64) -> Result<Self> {
        let img = image::open(path.as_ref())?.to_luma8();
        let (w, h) = img.dimensions();
        Self::from_luma(w as usize, h as usize, img.as_raw(), threshold)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_ink(&self, x: usize, y: usize) -> bool {
        self.ink[y * self.width + x]
    }

    /// Marks the half-open rectangle `[x0, x1) x [y0, y1)` as ink.
    pub fn fill(&mut self, x0: usize, y0: usize, x1: usize, y1: usize) {
        for y in y0..y1.min(self.height) {
            for x in x0..x1.min(self.width) {
                self.ink[y * self.width + x] = true;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct XYCutConfig {
    /// Regions whose ink extent is smaller than this (px²) are not split further.
    pub min_area: f64,
    /// Minimum width (px) of an all-background band to cut on.
    pub gap_threshold: usize,
    pub binarization_threshold: f64,
    /// Padding added around regions handed to a detector.
    pub pad_detect: f64,
    /// Padding added around detected tables handed to structure recognition.
    pub pad_structure: f64,
}

impl Default for XYCutConfig {
    fn default() -> Self {
        Self {
            min_area: 1000.0,
            gap_threshold: 10,
            binarization_threshold: 0.5,
            pad_detect: 10.0,
            pad_structure: 100.0,
        }
    }
}

/// Prefix sums giving O(1) ink counts along a row or a column segment.
struct InkIndex {
    width: usize,
    height: usize,
    // row_prefix[y * (width + 1) + x] = ink in row y, columns [0, x)
    row_prefix: Vec<u32>,
    // col_prefix[x * (height + 1) + y] = ink in column x, rows [0, y)
    col_prefix: Vec<u32>,
}

impl InkIndex {
    fn new(page: &PixelPage) -> Self {
        let (w, h) = (page.width, page.height);
        let mut row_prefix = vec![0u32; h * (w + 1)];
        let mut col_prefix = vec![0u32; w * (h + 1)];
        for y in 0..h {
            for x in 0..w {
                let v = u32::from(page.is_ink(x, y));
                row_prefix[y * (w + 1) + x + 1] = row_prefix[y * (w + 1) + x] + v;
                col_prefix[x * (h + 1) + y + 1] = col_prefix[x * (h + 1) + y] + v;
            }
        }
        Self {
            width: w,
            height: h,
            row_prefix,
            col_prefix,
        }
    }

    fn row_ink(&self, y: usize, x0: usize, x1: usize) -> u32 {
        let base = y * (self.width + 1);
        self.row_prefix[base + x1] - self.row_prefix[base + x0]
    }

    fn col_ink(&self, x: usize, y0: usize, y1: usize) -> u32 {
        let base = x * (self.height + 1);
        self.col_prefix[base + y1] - self.col_prefix[base + y0]
    }
}

#[derive(Debug, Clone, Copy)]
struct Region {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
}

impl Region {
    fn area(&self) -> f64 {
        ((self.x1 - self.x0) * (self.y1 - self.y0)) as f64
    }
}

/// Shrinks a region to the bounding box of its ink, if it has any.
fn tighten(index: &InkIndex, r: Region) -> Option<Region> {
    let rows: Vec<bool> = (r.y0..r.y1).map(|y| index.row_ink(y, r.x0, r.x1) > 0).collect();
    let top = rows.iter().position(|&v| v)?;
    let bottom = rows.iter().rposition(|&v| v)?;
    let cols: Vec<bool> = (r.x0..r.x1).map(|x| index.col_ink(x, r.y0, r.y1) > 0).collect();
    let left = cols.iter().position(|&v| v)?;
    let right = cols.iter().rposition(|&v| v)?;
    Some(Region {
        x0: r.x0 + left,
        y0: r.y0 + top,
        x1: r.x0 + right + 1,
        y1: r.y0 + top + (bottom - top) + 1,
    })
}

/// Widest run of empty entries in a profile, as `(start, len)`; the first
/// one wins ties.
fn widest_gap(profile: impl Iterator<Item = bool>) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut run_start = None;
    let consider = |start: usize, end: usize, best: &mut Option<(usize, usize)>| {
        let len = end - start;
        if best.is_none_or(|(_, l)| len > l) {
            *best = Some((start, len));
        }
    };
    let mut n = 0;
    for (i, has_ink) in profile.enumerate() {
        n = i + 1;
        match (has_ink, run_start) {
            (false, None) => run_start = Some(i),
            (true, Some(s)) => {
                consider(s, i, &mut best);
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run_start {
        consider(s, n, &mut best);
    }
    best
}

/// Recursive XY-cut.
///
/// Each region is shrunk to its ink extent, then split along the widest
/// all-background band of at least `gap_threshold` pixels, preferring a
/// horizontal band (cut along Y) on ties. Regions smaller than `min_area`
/// or without a qualifying band become leaves. Leaves are returned as tight
/// ink boxes in cut-tree order: top before bottom, left before right.
pub fn xycut(page: &PixelPage, cfg: &XYCutConfig) -> Vec<BBox> {
    if page.width == 0 || page.height == 0 {
        return Vec::new();
    }
    let index = InkIndex::new(page);
    let mut out = Vec::new();
    let mut stack = vec![Region {
        x0: 0,
        y0: 0,
        x1: page.width,
        y1: page.height,
    }];
    let min_gap = cfg.gap_threshold.max(1);

    while let Some(region) = stack.pop() {
        let Some(r) = tighten(&index, region) else {
            continue;
        };
        let split = if r.area() < cfg.min_area {
            None
        } else {
            let y_gap = widest_gap((r.y0..r.y1).map(|y| index.row_ink(y, r.x0, r.x1) > 0))
                .filter(|&(_, len)| len >= min_gap);
            let x_gap = widest_gap((r.x0..r.x1).map(|x| index.col_ink(x, r.y0, r.y1) > 0))
                .filter(|&(_, len)| len >= min_gap);
            match (y_gap, x_gap) {
                (Some((ys, yl)), Some((_, xl))) if yl >= xl => Some(cut_y(r, ys, yl)),
                (_, Some((xs, xl))) => Some(cut_x(r, xs, xl)),
                (Some((ys, yl)), None) => Some(cut_y(r, ys, yl)),
                (None, None) => None,
            }
        };
        match split {
            Some((first, second)) => {
                stack.push(second);
                stack.push(first);
            }
            None => out.push(BBox {
                x0: r.x0 as f64,
                y0: r.y0 as f64,
                x1: r.x1 as f64,
                y1: r.y1 as f64,
            }),
        }
    }
    out
}

fn cut_y(r: Region, start: usize, len: usize) -> (Region, Region) {
    let at = r.y0 + start;
    (Region { y1: at, ..r }, Region { y0: at + len, ..r })
}

fn cut_x(r: Region, start: usize, len: usize) -> (Region, Region) {
    let at = r.x0 + start;
    (Region { x1: at, ..r }, Region { x0: at + len, ..r })
}
