//! Page geometry: bounding boxes, IoU, non-maximum suppression, token
//! heuristics and XY-cut segmentation.

mod xycut;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use xycut::{xycut, PixelPage, XYCutConfig};

/// Axis-aligned rectangle in page pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        let finite = [x0, y0, x1, y1].iter().all(|v| v.is_finite());
        if !finite || x0 > x1 || y0 > y1 {
            return Err(Error::InvalidBBox { x0, y0, x1, y1 });
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        self.x0 <= x && x <= self.x1 && self.y0 <= y && y <= self.y1
    }

    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let x0 = self.x0.max(other.x0);
        let y0 = self.y0.max(other.y0);
        let x1 = self.x1.min(other.x1);
        let y1 = self.y1.min(other.y1);
        (x0 <= x1 && y0 <= y1).then_some(BBox { x0, y0, x1, y1 })
    }

    /// Expands the box by `pad` on every side.
    pub fn pad(&self, pad: f64) -> BBox {
        BBox {
            x0: self.x0 - pad,
            y0: self.y0 - pad,
            x1: self.x1 + pad,
            y1: self.y1 + pad,
        }
    }

    pub fn within(&self, width: f64, height: f64) -> bool {
        self.x0 >= 0.0 && self.y0 >= 0.0 && self.x1 <= width && self.y1 <= height
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = Error;

    fn try_from([x0, y0, x1, y1]: [f64; 4]) -> Result<Self> {
        BBox::new(x0, y0, x1, y1)
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x0, b.y0, b.x1, b.y1]
    }
}

/// Intersection over union; 0 when the union has no area.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection(b).map_or(0.0, |i| i.area());
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

fn by_confidence_desc(boxes: &[(BBox, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&i, &j| boxes[j].1.total_cmp(&boxes[i].1).then(i.cmp(&j)));
    order
}

/// Greedy NMS. Returns indices of the kept boxes, highest confidence first.
pub fn nms_indices(boxes: &[(BBox, f64)], iou_threshold: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for idx in by_confidence_desc(boxes) {
        let candidate = &boxes[idx].0;
        if kept.iter().all(|&k| iou(&boxes[k].0, candidate) <= iou_threshold) {
            kept.push(idx);
        }
    }
    kept
}

/// Greedy NMS: sorts by descending confidence and discards every box whose
/// IoU with an already kept box exceeds `iou_threshold`.
pub fn nms(boxes: &[(BBox, f64)], iou_threshold: f64) -> Vec<(BBox, f64)> {
    nms_indices(boxes, iou_threshold).into_iter().map(|i| boxes[i]).collect()
}

/// The `k` most confident boxes, highest first.
pub fn top_k(boxes: &[(BBox, f64)], k: usize) -> Vec<(BBox, f64)> {
    by_confidence_desc(boxes).into_iter().take(k).map(|i| boxes[i]).collect()
}

/// A word extracted from the page with its box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub bbox: BBox,
    pub text: String,
}

/// Keeps the items whose box contains the center of at least one token.
pub fn filter_empty<T>(items: Vec<T>, tokens: &[Token], bbox_of: impl Fn(&T) -> Option<BBox>) -> Vec<T> {
    let centers: Vec<(f64, f64)> = tokens.iter().map(|t| t.bbox.center()).collect();
    items
        .into_iter()
        .filter(|item| {
            bbox_of(item).is_some_and(|b| centers.iter().any(|&(x, y)| b.contains_point(x, y)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Upright,
    Rotated,
}

/// Words are wider than tall when read upright, so a table whose tokens are
/// on average taller than wide is rotated by a quarter turn.
pub fn detect_rotation(tokens: &[Token]) -> Result<Orientation> {
    if tokens.is_empty() {
        return Err(Error::InsufficientEvidence);
    }
    let n = tokens.len() as f64;
    let mean_w = tokens.iter().map(|t| t.bbox.width()).sum::<f64>() / n;
    let mean_h = tokens.iter().map(|t| t.bbox.height()).sum::<f64>() / n;
    let rotated = mean_w.partial_cmp(&mean_h) == Some(Ordering::Less);
    Ok(if !rotated { Orientation::Upright } else { Orientation::Rotated })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    fn tok(x0: f64, y0: f64, w: f64, h: f64) -> Token {
        Token {
            bbox: b(x0, y0, x0 + w, y0 + h),
            text: "w".into(),
        }
    }

    #[test]
    fn iou_examples() {
        assert_eq!(iou(&b(0., 0., 4., 4.), &b(0., 0., 4., 4.)), 1.0);
        assert_eq!(iou(&b(0., 0., 1., 1.), &b(2., 2., 3., 3.)), 0.0);
        assert!((iou(&b(0., 0., 2., 1.), &b(1., 0., 3., 1.)) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(iou(&b(1., 1., 1., 1.), &b(1., 1., 1., 1.)), 0.0);
    }

    #[test]
    fn bbox_rejects_inverted_corners() {
        assert!(BBox::new(2., 0., 1., 1.).is_err());
        assert!(BBox::new(0., 0., f64::NAN, 1.).is_err());
        let parsed: std::result::Result<BBox, _> = serde_json::from_str("[0, 5, 1, 1]");
        assert!(parsed.is_err());
    }

    #[test]
    fn nms_drops_duplicates() {
        let boxes = [(b(0., 0., 10., 10.), 0.9), (b(0., 0., 10., 10.), 0.8)];
        assert_eq!(nms(&boxes, 0.5), vec![(b(0., 0., 10., 10.), 0.9)]);
        let disjoint = [(b(0., 0., 1., 1.), 0.3), (b(5., 5., 6., 6.), 0.7)];
        assert_eq!(nms_indices(&disjoint, 0.5), vec![1, 0]);
    }

    #[test]
    fn nms_chain_keeps_ends() {
        // A and C touch without overlapping; B overlaps each by a third.
        let a = b(0., 0., 10., 1.);
        let bb = b(5., 0., 15., 1.);
        let c = b(10., 0., 20., 1.);
        assert!((iou(&a, &bb) - 1.0 / 3.0).abs() < 1e-12);
        assert!((iou(&bb, &c) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(iou(&a, &c), 0.0);
        let kept = nms_indices(&[(a, 0.9), (bb, 0.8), (c, 0.7)], 0.3);
        assert_eq!(kept, vec![0, 2]);
    }

    #[test]
    fn top_k_orders_by_confidence() {
        let boxes = [(b(0., 0., 1., 1.), 0.1), (b(0., 0., 2., 2.), 0.9), (b(0., 0., 3., 3.), 0.5)];
        let top = top_k(&boxes, 2);
        assert_eq!(top.iter().map(|x| x.1).collect::<Vec<_>>(), vec![0.9, 0.5]);
    }

    #[test]
    fn filter_empty_uses_token_centers() {
        let preds = vec![b(0., 0., 10., 10.), b(100., 100., 110., 110.), b(20., 0., 30., 10.)];
        // centered at (5,5); straddles x=20 with center at 19.
        let tokens = vec![tok(4., 4., 2., 2.), tok(16., 4., 6., 2.)];
        let kept = filter_empty(preds, &tokens, |p| Some(*p));
        assert_eq!(kept, vec![b(0., 0., 10., 10.)]);
        assert!(filter_empty(vec![b(0., 0., 1., 1.)], &[], |p| Some(*p)).is_empty());
    }

    #[test]
    fn rotation_from_token_shape() {
        assert_eq!(detect_rotation(&vec![tok(0., 0., 40., 10.); 3]).unwrap(), Orientation::Upright);
        assert_eq!(detect_rotation(&vec![tok(0., 0., 10., 40.); 3]).unwrap(), Orientation::Rotated);
        // means 21 x 20 -> ratio 1.05
        let mixed = [tok(0., 0., 30., 10.), tok(0., 0., 12., 30.)];
        assert_eq!(detect_rotation(&mixed).unwrap(), Orientation::Upright);
        assert!(matches!(detect_rotation(&[]), Err(Error::InsufficientEvidence)));
    }
}
