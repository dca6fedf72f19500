//! End-to-end scores: structure quality over detected tables and
//! structure-weighted precision, recall and AP.

use serde::Serialize;

use crate::detection::{
    average_precision, ordered_sum, pooled_curve, precision_ratio, recall_ratio, sweep_with_similarities, PRPoint,
    Prf, StepGain, SweepPolicy,
};
use crate::error::{Error, Result};
use crate::matching::{similarity_matrix, GroundTruth, MatchConfig, MatchSet, MatchedPair, Prediction};
use crate::structure::TsrMetric;

/// A matched pair with the structure score of its predicted table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoredPair {
    pub pair: MatchedPair,
    pub s_tsr: f64,
}

/// Structure score of a prediction against a ground truth. A prediction
/// without a parsed table scores 0; a ground truth without one is an error.
pub fn pair_tsr(pred: &Prediction, gt: &GroundTruth, gt_index: usize, metric: TsrMetric) -> Result<f64> {
    let gt_table = gt.table.as_ref().ok_or(Error::ModeMismatch {
        side: "ground truth",
        index: gt_index,
        missing: "table markup",
        mode: "end-to-end",
    })?;
    Ok(match &pred.table {
        Some(p) => metric.score(p, gt_table).clamp(0.0, 1.0),
        None => 0.0,
    })
}

/// Scores every pair of a match set. Prediction indices in `matches` refer
/// to `preds`.
pub fn score_pairs(
    matches: &MatchSet,
    preds: &[Prediction],
    gts: &[GroundTruth],
    metric: TsrMetric,
) -> Result<Vec<ScoredPair>> {
    matches
        .pairs
        .iter()
        .map(|&pair| {
            Ok(ScoredPair {
                pair,
                s_tsr: pair_tsr(&preds[pair.pred], &gts[pair.gt], pair.gt, metric)?,
            })
        })
        .collect()
}

/// Mean structure score over the true positives; `None` when there are none.
pub fn tsr_given_td(pairs: &[ScoredPair]) -> Option<f64> {
    if pairs.is_empty() {
        None
    } else {
        Some(ordered_sum(pairs.iter().map(|p| p.s_tsr)) / pairs.len() as f64)
    }
}

/// Structure-weighted precision, recall and F1: each pair with similarity
/// above `theta_j` contributes its structure score instead of 1.
pub fn te_precision_recall(scored: &[ScoredPair], positives: usize, ground_truth: usize, theta_j: f64) -> Prf {
    let hits = ordered_sum(scored.iter().filter(|s| s.pair.score > theta_j).map(|s| s.s_tsr));
    Prf::new(
        precision_ratio(hits, positives, ground_truth),
        recall_ratio(hits, ground_truth, positives),
    )
}

/// Per-level structure-weighted gains of one page, highest confidence first.
/// `tsr(pred, gt)` is looked up for every pair matched at some level.
pub fn te_page_gains(
    preds: &[Prediction],
    n_gt: usize,
    sims: &[Vec<f64>],
    theta_j: f64,
    mut tsr: impl FnMut(usize, usize) -> f64,
) -> Vec<StepGain> {
    sweep_with_similarities(preds, n_gt, sims, theta_j)
        .into_iter()
        .map(|s| StepGain {
            confidence: s.confidence,
            positives: s.positives,
            gain: ordered_sum(s.pairs.iter().map(|p| tsr(p.pred, p.gt))),
        })
        .collect()
}

/// Structure-weighted precision–recall curve over a corpus.
pub fn te_curve(
    pages: &[(&[Prediction], &[GroundTruth])],
    cfg: &MatchConfig,
    metric: TsrMetric,
    policy: &SweepPolicy,
) -> Result<Vec<PRPoint>> {
    let mut all = Vec::with_capacity(pages.len());
    let mut ground_truth = 0;
    for (preds, gts) in pages {
        ground_truth += gts.len();
        let sims = similarity_matrix(preds, gts, cfg.mode)?;
        let n = gts.len();
        let mut cache: Vec<Option<f64>> = vec![None; preds.len() * n];
        let mut failure = None;
        let gains = te_page_gains(preds, n, &sims, cfg.theta_j, |p, g| {
            *cache[p * n + g].get_or_insert_with(|| match pair_tsr(&preds[p], &gts[g], g, metric) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            })
        });
        if let Some(e) = failure {
            return Err(e);
        }
        all.push(gains);
    }
    Ok(pooled_curve(&all, ground_truth, policy))
}

/// Step-sum average precision of the structure-weighted curve.
pub fn te_ap(
    pages: &[(&[Prediction], &[GroundTruth])],
    cfg: &MatchConfig,
    metric: TsrMetric,
) -> Result<f64> {
    Ok(average_precision(&te_curve(pages, cfg, metric, &SweepPolicy::Distinct)?))
}
