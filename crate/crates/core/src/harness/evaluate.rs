//! Corpus evaluation: per-page matching in parallel, then order-independent
//! pooling into corpus scalars and curves.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{MetricScope, RunConfig};
use super::corpus::{CorpusRecord, Page};
use super::report::MetricReport;
use crate::detection::{
    average_precision, d_ece, expected_prf, ordered_sum, pooled_curve, precision_ratio, prf_from_counts, recall_ratio,
    sweep_with_similarities, wavg_f1, Prf, StepGain, WAVG_THRESHOLDS,
};
use crate::end_to_end::{pair_tsr, te_page_gains};
use crate::error::{Error, Result};
use crate::matching::{
    chunk_multiset, content_classifier_counts, match_with_similarities, multiset_jaccard, similarity_matrix,
    threshold_positives, ClassifierCounts, MatchMode, MatchSet, Prediction,
};
use crate::structure::TsrMetric;

/// Per-page counts and thresholded scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageDiagnostics {
    pub page_id: String,
    pub ground_truth: usize,
    pub predictions: usize,
    pub positives: usize,
    pub true_positives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub unparsed_predictions: usize,
    pub filtered_predictions: usize,
}

#[derive(Debug, Clone)]
struct PageEval {
    diag: PageDiagnostics,
    tp_wavg: [usize; 4],
    expected_scores: Vec<f64>,
    steps: Vec<StepGain>,
    calibration: Vec<(f64, bool)>,
    tsr: BTreeMap<TsrMetric, Vec<f64>>,
    te_steps: BTreeMap<TsrMetric, Vec<StepGain>>,
    classifier: Option<ClassifierCounts>,
}

/// `preds × gts` similarities for the configured mode. In content mode a
/// prediction whose markup failed to parse is dissimilar to everything.
pub fn page_similarities(page: &Page, mode: MatchMode) -> Result<Vec<Vec<f64>>> {
    if mode == MatchMode::Bbox {
        return similarity_matrix(&page.predictions, &page.ground_truth, mode);
    }
    let gt_sets = page
        .ground_truth
        .iter()
        .enumerate()
        .map(|(i, g)| {
            g.table.as_ref().map(chunk_multiset).ok_or(Error::ModeMismatch {
                side: "ground truth",
                index: i,
                missing: "markup",
                mode: mode.as_str(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    page.predictions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if !page.has_markup[i] {
                return Err(Error::ModeMismatch {
                    side: "prediction",
                    index: i,
                    missing: "markup",
                    mode: mode.as_str(),
                });
            }
            Ok(match &p.table {
                Some(t) => {
                    let s = chunk_multiset(t);
                    gt_sets.iter().map(|g| multiset_jaccard(&s, g)).collect()
                }
                None => vec![0.0; gt_sets.len()],
            })
        })
        .collect()
}

fn subset<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

/// Matching restricted to the predictions in `idx`, with pair indices mapped
/// back to the full prediction list. Predictions outside `idx` are neither
/// matched nor false positives.
fn match_subset(preds: &[Prediction], sims: &[Vec<f64>], idx: &[usize], n_gt: usize, theta_j: f64) -> MatchSet {
    let mut m = match_with_similarities(&subset(preds, idx), n_gt, &subset(sims, idx), theta_j);
    for p in &mut m.pairs {
        p.pred = idx[p.pred];
    }
    for p in &mut m.false_positives {
        *p = idx[*p];
    }
    m.n_predictions = preds.len();
    m
}

fn classifier_counts(page: &Page, positives: &[usize], theta_j: f64) -> Option<ClassifierCounts> {
    let complete = page.predictions.iter().zip(&page.has_markup).all(|(p, &m)| p.bbox.is_some() && m)
        && page.ground_truth.iter().all(|g| g.bbox.is_some() && g.table.is_some());
    if !complete {
        return None;
    }
    let bbox = page_similarities(page, MatchMode::Bbox).ok()?;
    let content = page_similarities(page, MatchMode::Content).ok()?;
    let n = page.ground_truth.len();
    let a = match_subset(&page.predictions, &bbox, positives, n, theta_j);
    let b = match_subset(&page.predictions, &content, positives, n, theta_j);
    content_classifier_counts(&a, &b).ok()
}

fn eval_page(rec: &CorpusRecord, cfg: &RunConfig) -> Result<PageEval> {
    let page = Page::from_record(rec, cfg.filter_empty)?;
    let preds = &page.predictions;
    let n_gt = page.ground_truth.len();
    let sims = page_similarities(&page, cfg.mode)?;
    let all: Vec<usize> = (0..preds.len()).collect();
    let positives = threshold_positives(preds, cfg.theta_c);

    let matched = match_subset(preds, &sims, &positives, n_gt, cfg.theta_j);
    let prf = prf_from_counts(matched.true_positives(), positives.len(), n_gt);

    let mut tp_wavg = [0; 4];
    for (slot, &t) in tp_wavg.iter_mut().zip(WAVG_THRESHOLDS.iter()) {
        *slot = match_subset(preds, &sims, &positives, n_gt, t).true_positives();
    }

    let loose = match_subset(preds, &sims, &positives, n_gt, 0.0);
    let expected_scores: Vec<f64> = positives
        .iter()
        .map(|&i| loose.pair_for_prediction(i).map_or(0.0, |p| p.score))
        .collect();

    let steps = sweep_with_similarities(preds, n_gt, &sims, cfg.theta_j)
        .into_iter()
        .map(|s| StepGain {
            confidence: s.confidence,
            positives: s.positives,
            gain: s.pairs.len() as f64,
        })
        .collect();

    let everything = match_subset(preds, &sims, &all, n_gt, cfg.theta_j);
    let calibration = preds
        .iter()
        .enumerate()
        .map(|(i, p)| (p.confidence, everything.pair_for_prediction(i).is_some()))
        .collect();

    let mut tsr = BTreeMap::new();
    let mut te_steps = BTreeMap::new();
    if cfg.scope >= MetricScope::Structure {
        let metrics: Vec<TsrMetric> = if cfg.scope == MetricScope::Structure {
            TsrMetric::ALL.to_vec()
        } else {
            let mut m = cfg.weightings.clone();
            m.sort();
            m.dedup();
            m
        };
        for metric in metrics {
            let mut cache: BTreeMap<(usize, usize), f64> = BTreeMap::new();
            let mut score = |p: usize, g: usize| -> Result<f64> {
                if let Some(&v) = cache.get(&(p, g)) {
                    return Ok(v);
                }
                let v = pair_tsr(&preds[p], &page.ground_truth[g], g, metric)?;
                cache.insert((p, g), v);
                Ok(v)
            };
            let scores = matched
                .pairs
                .iter()
                .map(|pair| score(pair.pred, pair.gt))
                .collect::<Result<Vec<_>>>()?;
            tsr.insert(metric, scores);
            if cfg.scope == MetricScope::EndToEnd {
                let mut failure = None;
                let gains = te_page_gains(preds, n_gt, &sims, cfg.theta_j, |p, g| {
                    score(p, g).unwrap_or_else(|e| {
                        failure.get_or_insert(e);
                        0.0
                    })
                });
                if let Some(e) = failure {
                    return Err(e);
                }
                te_steps.insert(metric, gains);
            }
        }
    }

    Ok(PageEval {
        diag: PageDiagnostics {
            page_id: page.page_id.clone(),
            ground_truth: n_gt,
            predictions: preds.len(),
            positives: positives.len(),
            true_positives: matched.true_positives(),
            precision: prf.precision,
            recall: prf.recall,
            f1: prf.f1,
            unparsed_predictions: page.unparsed_predictions,
            filtered_predictions: page.filtered_predictions,
        },
        tp_wavg,
        expected_scores,
        steps,
        calibration,
        tsr,
        te_steps,
        classifier: classifier_counts(&page, &positives, cfg.theta_j),
    })
}

fn fmt_theta(v: f64) -> String {
    format!("{v}")
}

fn insert_prf(scalars: &mut BTreeMap<String, Option<f64>>, prefix: &str, suffix: &str, prf: Option<Prf>) {
    for (name, v) in [
        ("P", prf.map(|p| p.precision)),
        ("R", prf.map(|p| p.recall)),
        ("F1", prf.map(|p| p.f1)),
    ] {
        scalars.insert(format!("{prefix}{name}{suffix}"), v);
    }
}

/// Scores a corpus. Pages are evaluated in parallel; every failing page is
/// reported in one [`Error::Evaluation`].
pub fn evaluate(corpus: &[CorpusRecord], cfg: &RunConfig) -> Result<MetricReport> {
    cfg.validate()?;
    let results: Vec<std::result::Result<PageEval, String>> = corpus
        .par_iter()
        .map(|rec| {
            eval_page(rec, cfg).map_err(|e| format!("page {:?} (line {}): {e}", rec.page_id, rec.line))
        })
        .collect();
    let mut pages = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(p) => pages.push(p),
            Err(e) => failures.push(e),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Evaluation(failures));
    }
    pages.sort_by(|a, b| a.diag.page_id.cmp(&b.diag.page_id));
    Ok(aggregate(&pages, cfg))
}

fn aggregate(pages: &[PageEval], cfg: &RunConfig) -> MetricReport {
    let mut scalars = BTreeMap::new();
    let n_gt: usize = pages.iter().map(|p| p.diag.ground_truth).sum();
    let n_pos: usize = pages.iter().map(|p| p.diag.positives).sum();
    let tp: usize = pages.iter().map(|p| p.diag.true_positives).sum();
    let tj = fmt_theta(cfg.theta_j);

    insert_prf(&mut scalars, "", &format!("_{tj}"), Some(prf_from_counts(tp, n_pos, n_gt)));
    let macro_prf = (!pages.is_empty()).then(|| {
        let n = pages.len() as f64;
        let mean = |f: fn(&PageDiagnostics) -> f64| ordered_sum(pages.iter().map(|p| f(&p.diag))) / n;
        Prf {
            precision: mean(|d| d.precision),
            recall: mean(|d| d.recall),
            f1: mean(|d| d.f1),
        }
    });
    insert_prf(&mut scalars, "macro.", &format!("_{tj}"), macro_prf);

    let mut f1s = [0.0; 4];
    for (k, (slot, &t)) in f1s.iter_mut().zip(WAVG_THRESHOLDS.iter()).enumerate() {
        let tp_t: usize = pages.iter().map(|p| p.tp_wavg[k]).sum();
        let prf = prf_from_counts(tp_t, n_pos, n_gt);
        *slot = prf.f1;
        scalars.insert(format!("F1_{}", fmt_theta(t)), Some(prf.f1));
    }
    scalars.insert("WAvgF1".into(), Some(wavg_f1(&f1s)));

    let expected: Vec<f64> = pages.iter().flat_map(|p| p.expected_scores.iter().copied()).collect();
    for d in &cfg.densities {
        let prf = expected_prf(&expected, n_pos, n_gt, *d);
        let prefix = format!("E{}", d.lower());
        for (name, v) in [("P", prf.precision), ("R", prf.recall), ("F1", prf.f1)] {
            scalars.insert(format!("{prefix}[{name}]"), Some(v));
        }
    }

    let steps: Vec<Vec<StepGain>> = pages.iter().map(|p| p.steps.clone()).collect();
    let pr_curve = pooled_curve(&steps, n_gt, &cfg.sweep);
    scalars.insert("AP".into(), Some(average_precision(&pr_curve)));

    let samples: Vec<(f64, bool)> = pages.iter().flat_map(|p| p.calibration.iter().copied()).collect();
    let calibration = d_ece(&samples, cfg.bins).expect("bins validated");
    scalars.insert("D-ECE".into(), calibration.d_ece);

    let mut notes = Vec::new();
    let mut te_curves = BTreeMap::new();
    if cfg.scope >= MetricScope::Structure {
        notes.push(
            "TSR|TD averages over each detector's own true positives and is not directly comparable across detectors"
                .to_string(),
        );
        let metrics: Vec<TsrMetric> = pages.first().map_or_else(
            || cfg.weightings.clone(),
            |p| p.tsr.keys().copied().collect(),
        );
        for metric in metrics {
            let scores: Vec<f64> = pages
                .iter()
                .flat_map(|p| p.tsr.get(&metric).into_iter().flatten().copied())
                .collect();
            let mean = (!scores.is_empty()).then(|| ordered_sum(scores.iter().copied()) / scores.len() as f64);
            scalars.insert(format!("TSR|TD[{metric}]"), mean);

            if cfg.scope == MetricScope::EndToEnd && cfg.weightings.contains(&metric) {
                let hits = ordered_sum(scores.iter().copied());
                let prf = Prf::new(
                    precision_ratio(hits, n_pos, n_gt),
                    recall_ratio(hits, n_gt, n_pos),
                );
                insert_prf(&mut scalars, "", &format!("^TSR[{metric}]"), Some(prf));
                let te_steps: Vec<Vec<StepGain>> = pages
                    .iter()
                    .map(|p| p.te_steps.get(&metric).cloned().unwrap_or_default())
                    .collect();
                let curve = pooled_curve(&te_steps, n_gt, &cfg.sweep);
                scalars.insert(format!("AP^TSR[{metric}]"), Some(average_precision(&curve)));
                te_curves.insert(metric, curve);
            }
        }
    }

    if !pages.is_empty() && pages.iter().all(|p| p.classifier.is_some()) {
        let counts = pages
            .iter()
            .filter_map(|p| p.classifier)
            .fold(ClassifierCounts::default(), |a, b| a + b);
        scalars.insert("content_classifier.precision".into(), Some(counts.precision()));
        scalars.insert("content_classifier.recall".into(), Some(counts.recall()));
    }

    MetricReport {
        scalars,
        pr_curve,
        te_curves,
        reliability: calibration.bins,
        pages: pages.iter().map(|p| p.diag.clone()).collect(),
        notes,
        config: Some(cfg.clone()),
    }
}
