//! Table detection scores: thresholded precision/recall/F1, WAvg(F1),
//! expected metrics under a random IoU threshold, confidence-swept
//! precision–recall curves, average precision and D-ECE.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{match_with_similarities, similarity_matrix, GroundTruth, MatchConfig, MatchSet, MatchedPair, Prediction};

/// Precision, recall and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        Self {
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall <= 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// `hits / positives`; with no positives, 1 on a page without ground truth
/// and 0 otherwise.
pub fn precision_ratio(hits: f64, positives: usize, ground_truth: usize) -> f64 {
    if positives == 0 {
        if ground_truth == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        hits / positives as f64
    }
}

/// `hits / ground_truth`; with no ground truth, 1 when nothing was predicted
/// and 0 otherwise.
pub fn recall_ratio(hits: f64, ground_truth: usize, positives: usize) -> f64 {
    if ground_truth == 0 {
        if positives == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        hits / ground_truth as f64
    }
}

pub fn prf_from_counts(true_positives: usize, positives: usize, ground_truth: usize) -> Prf {
    let tp = true_positives as f64;
    Prf::new(
        precision_ratio(tp, positives, ground_truth),
        recall_ratio(tp, ground_truth, positives),
    )
}

pub fn prf_at(matches: &MatchSet) -> Prf {
    prf_from_counts(matches.true_positives(), matches.n_predictions, matches.n_ground_truth)
}

/// IoU thresholds of the weighted-average F1.
pub const WAVG_THRESHOLDS: [f64; 4] = [0.6, 0.7, 0.8, 0.9];

/// F1 averaged over [`WAVG_THRESHOLDS`] with weights equal to the thresholds.
pub fn wavg_f1(f1_at: &[f64; 4]) -> f64 {
    let num: f64 = WAVG_THRESHOLDS.iter().zip(f1_at).map(|(t, f)| t * f).sum();
    let den: f64 = WAVG_THRESHOLDS.iter().sum();
    num / den
}

/// Density of a random IoU threshold: `f_s(θ) = α_s θ` on `[s, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ThresholdDensity {
    /// `s = 0`, `α = 2`.
    #[serde(rename = "0")]
    Zero,
    /// `s = 0.5`, `α = 8/3`.
    #[serde(rename = "0.5")]
    Half,
}

impl ThresholdDensity {
    pub const ALL: [ThresholdDensity; 2] = [ThresholdDensity::Zero, ThresholdDensity::Half];

    pub fn lower(&self) -> f64 {
        match self {
            ThresholdDensity::Zero => 0.0,
            ThresholdDensity::Half => 0.5,
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            ThresholdDensity::Zero => 2.0,
            ThresholdDensity::Half => 8.0 / 3.0,
        }
    }

    pub fn pdf(&self, theta: f64) -> f64 {
        if (self.lower()..=1.0).contains(&theta) {
            self.alpha() * theta
        } else {
            0.0
        }
    }

    /// Label used in metric names: `s0` or `s0.5`.
    pub fn label(&self) -> &'static str {
        match self {
            ThresholdDensity::Zero => "s0",
            ThresholdDensity::Half => "s0.5",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "0" | "0.0" => Some(ThresholdDensity::Zero),
            "0.5" | ".5" => Some(ThresholdDensity::Half),
            _ => None,
        }
    }
}

/// `E[1{J > θ}]` for `θ ~ f_s`, in closed form: `J²` for `s = 0`, and
/// `4/3 (J² − 1/4)` above one half (0 below) for `s = 0.5`.
pub fn expected_indicator(j: f64, density: ThresholdDensity) -> f64 {
    let j = j.clamp(0.0, 1.0);
    match density {
        ThresholdDensity::Zero => j * j,
        ThresholdDensity::Half => {
            if j > 0.5 {
                4.0 / 3.0 * (j * j - 0.25)
            } else {
                0.0
            }
        }
    }
}

/// Sum of values in ascending order, so the result does not depend on input order.
pub fn ordered_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    v.into_iter().sum()
}

/// Expected precision, recall and F1 for a random IoU threshold.
///
/// `scores` holds one similarity per positive prediction against its
/// assigned ground truth (0 when unassigned).
pub fn expected_prf(scores: &[f64], positives: usize, ground_truth: usize, density: ThresholdDensity) -> Prf {
    let hits = ordered_sum(scores.iter().map(|&j| expected_indicator(j, density)));
    Prf::new(
        precision_ratio(hits, positives, ground_truth),
        recall_ratio(hits, ground_truth, positives),
    )
}

/// One point of a confidence-swept precision–recall curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PRPoint {
    pub theta_c: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Which confidence thresholds a curve is evaluated at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SweepPolicy {
    /// Every distinct confidence `c`, counting predictions with confidence `>= c`.
    #[default]
    Distinct,
    /// The given thresholds, counting predictions with confidence `> θ`.
    Fixed(Vec<f64>),
}

/// The matching of one page's predictions with confidence at least
/// `confidence`. Pair prediction indices refer to the full prediction list.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepStep {
    pub confidence: f64,
    pub positives: usize,
    pub pairs: Vec<MatchedPair>,
}

/// Rebuilds the matching of a page at each of its distinct confidences,
/// highest first.
pub fn sweep_page(preds: &[Prediction], gts: &[GroundTruth], cfg: &MatchConfig) -> Result<Vec<SweepStep>> {
    let sims = similarity_matrix(preds, gts, cfg.mode)?;
    Ok(sweep_with_similarities(preds, gts.len(), &sims, cfg.theta_j))
}

pub fn sweep_with_similarities(preds: &[Prediction], n_gt: usize, sims: &[Vec<f64>], theta_j: f64) -> Vec<SweepStep> {
    let mut levels: Vec<f64> = preds.iter().map(|p| p.confidence).collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();

    levels
        .into_iter()
        .map(|level| {
            let subset: Vec<usize> = (0..preds.len()).filter(|&i| preds[i].confidence >= level).collect();
            let sub_preds: Vec<Prediction> = subset.iter().map(|&i| preds[i].clone()).collect();
            let sub_sims: Vec<Vec<f64>> = subset.iter().map(|&i| sims[i].clone()).collect();
            let m = match_with_similarities(&sub_preds, n_gt, &sub_sims, theta_j);
            SweepStep {
                confidence: level,
                positives: subset.len(),
                pairs: m
                    .pairs
                    .into_iter()
                    .map(|p| MatchedPair { pred: subset[p.pred], ..p })
                    .collect(),
            }
        })
        .collect()
}

/// A page's cumulative state at one confidence level: positives and the
/// summed gain of its matched pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepGain {
    pub confidence: f64,
    pub positives: usize,
    pub gain: f64,
}

/// Pools per-page step functions into a corpus precision–recall curve.
///
/// Each page contributes the change of its state at every confidence level.
/// Changes are applied in a canonical order, so the result does not depend
/// on page order. The curve starts with the anchor `(recall 0, precision 1)`.
pub fn pooled_curve(pages: &[Vec<StepGain>], ground_truth: usize, policy: &SweepPolicy) -> Vec<PRPoint> {
    struct Event {
        level: f64,
        d_pos: i64,
        d_gain: f64,
    }
    let mut events: Vec<Event> = Vec::new();
    for steps in pages {
        let mut prev_pos = 0i64;
        let mut prev_gain = 0.0;
        for s in steps {
            events.push(Event {
                level: s.confidence,
                d_pos: s.positives as i64 - prev_pos,
                d_gain: s.gain - prev_gain,
            });
            prev_pos = s.positives as i64;
            prev_gain = s.gain;
        }
    }
    events.sort_by(|a, b| {
        b.level
            .total_cmp(&a.level)
            .then(a.d_pos.cmp(&b.d_pos))
            .then(a.d_gain.total_cmp(&b.d_gain))
    });

    let (queries, inclusive): (Vec<f64>, bool) = match policy {
        SweepPolicy::Distinct => {
            let mut q: Vec<f64> = events.iter().map(|e| e.level).collect();
            q.dedup();
            (q, true)
        }
        SweepPolicy::Fixed(list) => {
            let mut q = list.clone();
            q.sort_by(|a, b| b.total_cmp(a));
            q.dedup();
            (q, false)
        }
    };

    let mut curve = vec![PRPoint {
        theta_c: 1.0,
        precision: 1.0,
        recall: 0.0,
    }];
    let mut positives = 0i64;
    let mut gain = 0.0;
    let mut next = 0;
    for theta in queries {
        while next < events.len() && (events[next].level > theta || (inclusive && events[next].level == theta)) {
            positives += events[next].d_pos;
            gain += events[next].d_gain;
            next += 1;
        }
        let pos = positives.max(0) as usize;
        curve.push(PRPoint {
            theta_c: theta,
            precision: precision_ratio(gain, pos, ground_truth).clamp(0.0, 1.0),
            recall: recall_ratio(gain, ground_truth, pos).clamp(0.0, 1.0),
        });
    }
    curve
}

/// Precision–recall curve over a corpus of pages, sweeping the confidence
/// threshold over every distinct confidence and rebuilding the matching at
/// each step.
pub fn pr_curve(pages: &[(&[Prediction], &[GroundTruth])], cfg: &MatchConfig) -> Result<Vec<PRPoint>> {
    let mut steps = Vec::with_capacity(pages.len());
    let mut ground_truth = 0;
    for (preds, gts) in pages {
        ground_truth += gts.len();
        steps.push(
            sweep_page(preds, gts, cfg)?
                .into_iter()
                .map(|s| StepGain {
                    confidence: s.confidence,
                    positives: s.positives,
                    gain: s.pairs.len() as f64,
                })
                .collect(),
        );
    }
    Ok(pooled_curve(&steps, ground_truth, &SweepPolicy::Distinct))
}

/// Step-sum average precision `Σ (R_k − R_{k−1}) P_k` over the curve in
/// threshold order, starting from recall 0. No interpolation.
pub fn average_precision(curve: &[PRPoint]) -> f64 {
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for p in curve {
        ap += (p.recall - prev_recall) * p.precision;
        prev_recall = p.recall;
    }
    ap
}

/// One confidence bin of a reliability diagram, covering `(lo, hi]` (the
/// first bin also holds confidence 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean_conf: Option<f64>,
    pub precision: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    /// `None` when there are no predictions.
    pub d_ece: Option<f64>,
    pub bins: Vec<ReliabilityBin>,
}

/// 0-based bin of `conf` among `m` bins `((k−1)/m, k/m]`, with the bin edges
/// computed exactly as the bounds reported for the bins.
pub fn bin_index(conf: f64, m: usize) -> usize {
    let edge = |k: usize| k as f64 / m as f64;
    let mut k = ((conf * m as f64).ceil() as isize).clamp(1, m as isize) as usize;
    while k > 1 && conf <= edge(k - 1) {
        k -= 1;
    }
    while k < m && conf > edge(k) {
        k += 1;
    }
    k - 1
}

/// Detection expected calibration error over `(confidence, is_true_positive)`
/// samples: `Σ_m (|B_m| / n) |prec(B_m) − conf(B_m)|` over `bins` equal-width
/// bins.
pub fn d_ece(samples: &[(f64, bool)], bins: usize) -> Result<Calibration> {
    if bins == 0 {
        return Err(Error::OutOfRange {
            name: "bins",
            value: 0.0,
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut members: Vec<Vec<(f64, bool)>> = vec![Vec::new(); bins];
    for &(c, tp) in &sorted {
        members[bin_index(c, bins)].push((c, tp));
    }
    let n = sorted.len();
    let mut out = Vec::with_capacity(bins);
    let mut total = 0.0;
    for (k, m) in members.iter().enumerate() {
        let count = m.len();
        let (mean_conf, precision) = if count == 0 {
            (None, None)
        } else {
            let conf = m.iter().map(|s| s.0).sum::<f64>() / count as f64;
            let prec = m.iter().filter(|s| s.1).count() as f64 / count as f64;
            total += count as f64 / n as f64 * (prec - conf).abs();
            (Some(conf), Some(prec))
        };
        out.push(ReliabilityBin {
            lo: k as f64 / bins as f64,
            hi: (k + 1) as f64 / bins as f64,
            count,
            mean_conf,
            precision,
        });
    }
    Ok(Calibration {
        d_ece: (n > 0).then_some(total),
        bins: out,
    })
}
