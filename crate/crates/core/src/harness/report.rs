use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::RunConfig;
use super::evaluate::PageDiagnostics;
use crate::detection::{PRPoint, ReliabilityBin};
use crate::error::{Error, Result};
use crate::structure::TsrMetric;

/// Everything one evaluation run produces. Scalars are `None` when not
/// applicable, e.g. structure scores without any true positive.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct MetricReport {
    pub scalars: BTreeMap<String, Option<f64>>,
    pub pr_curve: Vec<PRPoint>,
    pub te_curves: BTreeMap<TsrMetric, Vec<PRPoint>>,
    pub reliability: Vec<ReliabilityBin>,
    pub pages: Vec<PageDiagnostics>,
    pub notes: Vec<String>,
    pub config: Option<RunConfig>,
}

impl MetricReport {
    /// Keeps D-ECE and the reliability bins only.
    pub fn calibration_only(&self) -> MetricReport {
        MetricReport {
            scalars: self
                .scalars
                .iter()
                .filter(|(k, _)| k.as_str() == "D-ECE")
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
            reliability: self.reliability.clone(),
            config: self.config.clone(),
            ..MetricReport::default()
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    scalars: &'a BTreeMap<String, Option<f64>>,
    notes: &'a [String],
    pages: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<&'a RunConfig>,
}

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn curve_rows(curve: &[PRPoint]) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
    curve.iter().map(|p| (p.theta_c, p.precision, p.recall))
}

/// Writes the report into `dir` and returns the files written:
///
/// * `summary.json`: scalars (null when not applicable), notes and config
/// * `pr_curve.csv`: `threshold,precision,recall`
/// * `te_curve_<metric>.csv`: structure-weighted curves, same columns
/// * `reliability.csv`: `lo,hi,count,mean_conf,precision`
/// * `pages.csv`: per-page diagnostics
///
/// Output depends only on the report, so identical reports give identical bytes.
pub fn emit_report(report: &MetricReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let summary = Summary {
        scalars: &report.scalars,
        notes: &report.notes,
        pages: report.pages.len(),
        config: report.config.as_ref(),
    };
    let path = dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    written.push(path);

    if !report.pr_curve.is_empty() {
        let path = dir.join("pr_curve.csv");
        write_csv(&path, &["threshold", "precision", "recall"], curve_rows(&report.pr_curve))?;
        written.push(path);
    }
    for (metric, curve) in &report.te_curves {
        let path = dir.join(format!("te_curve_{metric}.csv"));
        write_csv(&path, &["threshold", "precision", "recall"], curve_rows(curve))?;
        written.push(path);
    }
    if !report.reliability.is_empty() {
        let path = dir.join("reliability.csv");
        write_csv(
            &path,
            &["lo", "hi", "count", "mean_conf", "precision"],
            report.reliability.iter().map(|b| (b.lo, b.hi, b.count, b.mean_conf, b.precision)),
        )?;
        written.push(path);
    }
    if !report.pages.is_empty() {
        let path = dir.join("pages.csv");
        write_csv(
            &path,
            &[
                "page_id",
                "ground_truth",
                "predictions",
                "positives",
                "true_positives",
                "precision",
                "recall",
                "f1",
                "unparsed_predictions",
                "filtered_predictions",
            ],
            &report.pages,
        )?;
        written.push(path);
    }
    Ok(written)
}
