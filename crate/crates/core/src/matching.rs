//! Positive-set thresholding and one-to-one matching of predicted tables to
//! ground truth, by box IoU or by content Jaccard.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};
use crate::table_model::TableGrid;

/// A model output: an optional box, an optional parsed table, and a
/// confidence (1.0 for methods that emit none).
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub table: Option<TableGrid>,
    pub bbox: Option<BBox>,
    pub confidence: f64,
}

impl Prediction {
    pub fn new(table: Option<TableGrid>, bbox: Option<BBox>, confidence: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::OutOfRange {
                name: "confidence",
                value: confidence,
            });
        }
        Ok(Self { table, bbox, confidence })
    }

    pub fn from_bbox(bbox: BBox, confidence: f64) -> Result<Self> {
        Self::new(None, Some(bbox), confidence)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub table: Option<TableGrid>,
    pub bbox: Option<BBox>,
}

impl GroundTruth {
    pub fn from_bbox(bbox: BBox) -> Self {
        Self { table: None, bbox: Some(bbox) }
    }

    pub fn from_table(table: TableGrid) -> Self {
        Self { table: Some(table), bbox: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    #[default]
    Bbox,
    Content,
}

impl MatchMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            MatchMode::Bbox => "bbox",
            MatchMode::Content => "content",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub mode: MatchMode,
    pub theta_j: f64,
    pub theta_c: f64,
}

impl MatchConfig {
    pub fn new(mode: MatchMode, theta_j: f64, theta_c: f64) -> Result<Self> {
        for (name, value) in [("theta_j", theta_j), ("theta_c", theta_c)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfRange { name, value });
            }
        }
        Ok(Self { mode, theta_j, theta_c })
    }

    pub fn with_theta_j(self, theta_j: f64) -> Self {
        Self { theta_j, ..self }
    }
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            mode: MatchMode::Bbox,
            theta_j: 0.5,
            theta_c: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchedPair {
    pub pred: usize,
    pub gt: usize,
    /// IoU or content Jaccard of the pair.
    pub score: f64,
}

/// Result of matching one page's positive predictions against its ground truth.
/// Prediction indices refer to the slice passed to [`match_predictions`].
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MatchSet {
    pub pairs: Vec<MatchedPair>,
    pub false_positives: Vec<usize>,
    pub false_negatives: Vec<usize>,
    pub n_predictions: usize,
    pub n_ground_truth: usize,
}

impl MatchSet {
    pub fn true_positives(&self) -> usize {
        self.pairs.len()
    }

    /// The similarity of every prediction to its assigned ground truth, 0 for
    /// unmatched predictions.
    pub fn per_prediction_scores(&self) -> Vec<f64> {
        let mut scores = vec![0.0; self.n_predictions];
        for p in &self.pairs {
            scores[p.pred] = p.score;
        }
        scores
    }

    pub fn pair_for_prediction(&self, pred: usize) -> Option<&MatchedPair> {
        self.pairs.iter().find(|p| p.pred == pred)
    }
}

/// Predictions whose confidence is strictly above `theta_c`, with their
/// original indices.
pub fn threshold_positives(preds: &[Prediction], theta_c: f64) -> Vec<usize> {
    preds
        .iter()
        .enumerate()
        .filter(|(_, p)| p.confidence > theta_c)
        .map(|(i, _)| i)
        .collect()
}

/// Text stream used for content matching: cell contents in row-major order
/// with all whitespace removed.
fn content_stream(t: &TableGrid) -> Vec<char> {
    t.cells()
        .iter()
        .flat_map(|c| c.content.chars())
        .filter(|c| !c.is_whitespace())
        .collect()
}

/// Pairs of consecutive two-character chunks of the table's text stream. A
/// trailing odd character forms a one-character chunk.
pub fn chunk_pairs(t: &TableGrid) -> Vec<(String, String)> {
    let stream = content_stream(t);
    let chunks: Vec<String> = stream.chunks(2).map(|c| c.iter().collect()).collect();
    chunks.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect()
}

/// Multiset of chunk pairs as element counts.
pub type ChunkMultiset = HashMap<(String, String), usize>;

pub fn chunk_multiset(t: &TableGrid) -> ChunkMultiset {
    let mut set = HashMap::new();
    for pair in chunk_pairs(t) {
        *set.entry(pair).or_insert(0) += 1;
    }
    set
}

/// Multiset Jaccard index: min-multiplicity intersection over max-multiplicity union.
pub fn multiset_jaccard(a: &ChunkMultiset, b: &ChunkMultiset) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let mut inter = 0usize;
    let mut union = 0usize;
    for (k, &ca) in a {
        let cb = b.get(k).copied().unwrap_or(0);
        inter += ca.min(cb);
        union += ca.max(cb);
    }
    union += b.iter().filter(|(k, _)| !a.contains_key(*k)).map(|(_, &c)| c).sum::<usize>();
    inter as f64 / union as f64
}

pub fn content_jaccard(a: &TableGrid, b: &TableGrid) -> f64 {
    multiset_jaccard(&chunk_multiset(a), &chunk_multiset(b))
}

/// Similarity of every (prediction, ground truth) pair.
pub fn similarity_matrix(preds: &[Prediction], gts: &[GroundTruth], mode: MatchMode) -> Result<Vec<Vec<f64>>> {
    match mode {
        MatchMode::Bbox => {
            let pred_boxes = preds
                .iter()
                .enumerate()
                .map(|(i, p)| p.bbox.ok_or_else(|| missing("prediction", i, "bbox", mode)))
                .collect::<Result<Vec<_>>>()?;
            let gt_boxes = gts
                .iter()
                .enumerate()
                .map(|(i, g)| g.bbox.ok_or_else(|| missing("ground truth", i, "bbox", mode)))
                .collect::<Result<Vec<_>>>()?;
            Ok(pred_boxes
                .iter()
                .map(|p| gt_boxes.iter().map(|g| iou(p, g)).collect())
                .collect())
        }
        MatchMode::Content => {
            let pred_sets = preds
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    p.table
                        .as_ref()
                        .map(chunk_multiset)
                        .ok_or_else(|| missing("prediction", i, "table markup", mode))
                })
                .collect::<Result<Vec<_>>>()?;
            let gt_sets = gts
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    g.table
                        .as_ref()
                        .map(chunk_multiset)
                        .ok_or_else(|| missing("ground truth", i, "table markup", mode))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(pred_sets
                .iter()
                .map(|p| gt_sets.iter().map(|g| multiset_jaccard(p, g)).collect())
                .collect())
        }
    }
}

fn missing(side: &'static str, index: usize, what: &'static str, mode: MatchMode) -> Error {
    Error::ModeMismatch {
        side,
        index,
        missing: what,
        mode: mode.as_str(),
    }
}

/// Greedy one-to-one matching.
///
/// Every pair with similarity strictly above `cfg.theta_j` is a candidate.
/// Candidates are taken in order of decreasing similarity (ties: higher
/// confidence, then lower prediction index, then lower ground-truth index)
/// and accepted when neither side is already matched. `cfg.theta_c` is not
/// applied here; pass the positive set.
pub fn match_predictions(preds: &[Prediction], gts: &[GroundTruth], cfg: &MatchConfig) -> Result<MatchSet> {
    let sims = similarity_matrix(preds, gts, cfg.mode)?;
    Ok(match_with_similarities(preds, gts.len(), &sims, cfg.theta_j))
}

/// Greedy matching over a precomputed `preds x gts` similarity matrix.
pub fn match_with_similarities(
    preds: &[Prediction],
    n_gt: usize,
    sims: &[Vec<f64>],
    theta_j: f64,
) -> MatchSet {
    let mut candidates: Vec<MatchedPair> = Vec::new();
    for (p, row) in sims.iter().enumerate() {
        for (g, &score) in row.iter().enumerate() {
            if score > theta_j {
                candidates.push(MatchedPair { pred: p, gt: g, score });
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| preds[b.pred].confidence.total_cmp(&preds[a.pred].confidence))
            .then_with(|| a.pred.cmp(&b.pred))
            .then_with(|| a.gt.cmp(&b.gt))
    });

    let mut pred_used = vec![false; preds.len()];
    let mut gt_used = vec![false; n_gt];
    let mut pairs = Vec::new();
    for c in candidates {
        if !pred_used[c.pred] && !gt_used[c.gt] {
            pred_used[c.pred] = true;
            gt_used[c.gt] = true;
            pairs.push(c);
        }
    }
    pairs.sort_by_key(|p| p.pred);
    MatchSet {
        pairs,
        false_positives: (0..preds.len()).filter(|&i| !pred_used[i]).collect(),
        false_negatives: (0..n_gt).filter(|&i| !gt_used[i]).collect(),
        n_predictions: preds.len(),
        n_ground_truth: n_gt,
    }
}

/// Agreement counts between box matching (taken as truth) and content
/// matching, both viewed as TP/FP classifiers over the same predictions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ClassifierCounts {
    pub both: usize,
    pub content_only: usize,
    pub bbox_only: usize,
}

impl ClassifierCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.both, self.both + self.content_only, self.bbox_only == 0)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.both, self.both + self.bbox_only, self.content_only == 0)
    }

    pub fn report(&self) -> ClassifierReport {
        ClassifierReport {
            precision: self.precision(),
            recall: self.recall(),
        }
    }
}

impl std::ops::Add for ClassifierCounts {
    type Output = ClassifierCounts;

    fn add(self, o: ClassifierCounts) -> ClassifierCounts {
        ClassifierCounts {
            both: self.both + o.both,
            content_only: self.content_only + o.content_only,
            bbox_only: self.bbox_only + o.bbox_only,
        }
    }
}

fn ratio(num: usize, den: usize, vacuous: bool) -> f64 {
    if den == 0 {
        if vacuous {
            1.0
        } else {
            0.0
        }
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifierReport {
    pub precision: f64,
    pub recall: f64,
}

pub fn content_classifier_counts(bbox: &MatchSet, content: &MatchSet) -> Result<ClassifierCounts> {
    if bbox.n_predictions != content.n_predictions || bbox.n_ground_truth != content.n_ground_truth {
        return Err(Error::CorpusMismatch(format!(
            "{} predictions / {} ground truths vs {} / {}",
            bbox.n_predictions, bbox.n_ground_truth, content.n_predictions, content.n_ground_truth
        )));
    }
    let mut truth = vec![false; bbox.n_predictions];
    for p in &bbox.pairs {
        truth[p.pred] = true;
    }
    let mut claimed = vec![false; content.n_predictions];
    for p in &content.pairs {
        claimed[p.pred] = true;
    }
    let mut counts = ClassifierCounts::default();
    for (t, c) in truth.into_iter().zip(claimed) {
        match (t, c) {
            (true, true) => counts.both += 1,
            (false, true) => counts.content_only += 1,
            (true, false) => counts.bbox_only += 1,
            (false, false) => {}
        }
    }
    Ok(counts)
}

/// Precision and recall of content matching as a TP/FP classifier, with box
/// matching as the reference.
pub fn content_classifier_report(bbox: &MatchSet, content: &MatchSet) -> Result<ClassifierReport> {
    Ok(content_classifier_counts(bbox, content)?.report())
}
