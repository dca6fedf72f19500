//! Line-delimited JSON corpus: one page per line.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{filter_empty, BBox, Token};
use crate::matching::{GroundTruth, Prediction};
use crate::table_model::parse_table_markup;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub markup: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub markup: Option<String>,
    /// Missing for methods without scores; read as 1.0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

/// One document page. Coordinates are pixels of the rendered page image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub page_id: String,
    pub width: f64,
    pub height: f64,
    #[serde(default)]
    pub ground_truth: Vec<GroundTruthRecord>,
    #[serde(default)]
    pub predictions: Vec<PredictionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<Token>>,
    /// 1-based source line, 0 for records built in memory.
    #[serde(skip)]
    pub line: usize,
}

/// Parses a corpus. Blank lines are skipped; unknown fields are ignored.
pub fn parse_corpus(reader: impl BufRead) -> Result<Vec<CorpusRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Corpus {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut rec: CorpusRecord = serde_json::from_str(&line).map_err(|e| Error::Corpus {
            line: lineno,
            message: e.to_string(),
        })?;
        rec.line = lineno;
        validate_record(&rec)?;
        if !seen.insert(rec.page_id.clone()) {
            return Err(Error::Corpus {
                line: lineno,
                message: format!("duplicate page_id {:?}", rec.page_id),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(BufReader::new(file))
}

pub fn write_corpus(records: &[CorpusRecord], mut w: impl Write) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io("<corpus>", e))?;
    }
    Ok(())
}

fn validate_record(rec: &CorpusRecord) -> Result<()> {
    let err = |message: String| Error::Corpus {
        line: rec.line,
        message,
    };
    if !(rec.width.is_finite() && rec.height.is_finite() && rec.width >= 0.0 && rec.height >= 0.0) {
        return Err(err(format!("invalid page size {}x{}", rec.width, rec.height)));
    }
    for (i, p) in rec.predictions.iter().enumerate() {
        if p.bbox.is_none() && p.markup.is_none() {
            return Err(err(format!("prediction {i} has neither bbox nor markup")));
        }
        if let Some(c) = p.confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(err(format!("prediction {i} confidence {c} outside [0, 1]")));
            }
        }
    }
    let out_of_page = |b: &Option<BBox>| b.as_ref().is_some_and(|b| !b.within(rec.width, rec.height));
    let n_out = rec.ground_truth.iter().filter(|g| out_of_page(&g.bbox)).count()
        + rec.predictions.iter().filter(|p| out_of_page(&p.bbox)).count();
    if n_out > 0 {
        log::warn!("line {}: {n_out} box(es) extend past the page bounds", rec.line);
    }
    Ok(())
}

/// A page ready for scoring.
#[derive(Debug, Clone)]
pub struct Page {
    pub page_id: String,
    pub ground_truth: Vec<GroundTruth>,
    pub predictions: Vec<Prediction>,
    /// Whether each prediction carried markup (parsed or not).
    pub has_markup: Vec<bool>,
    pub unparsed_predictions: usize,
    pub filtered_predictions: usize,
}

impl Page {
    /// Parses markup. Ground-truth markup must parse; prediction markup that
    /// fails to parse leaves the prediction without a table.
    pub fn from_record(rec: &CorpusRecord, drop_empty: bool) -> Result<Self> {
        let ground_truth = rec
            .ground_truth
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let table = match &g.markup {
                    Some(m) => Some(parse_table_markup(m).map_err(|e| Error::Corpus {
                        line: rec.line,
                        message: format!("ground truth {i}: {e}"),
                    })?),
                    None => None,
                };
                Ok(GroundTruth { table, bbox: g.bbox })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut preds = rec.predictions.clone();
        let mut filtered_predictions = 0;
        if drop_empty {
            if let Some(tokens) = &rec.tokens {
                let before = preds.len();
                preds = filter_empty(preds, tokens, |p| p.bbox);
                filtered_predictions = before - preds.len();
            }
        }

        let mut unparsed = 0;
        let mut has_markup = Vec::with_capacity(preds.len());
        let mut predictions = Vec::with_capacity(preds.len());
        for (i, p) in preds.iter().enumerate() {
            has_markup.push(p.markup.is_some());
            let table = match &p.markup {
                Some(m) => match parse_table_markup(m) {
                    Ok(t) => Some(t),
                    Err(e) => {
                        log::warn!("page {}: prediction {i} markup ignored: {e}", rec.page_id);
                        unparsed += 1;
                        None
                    }
                },
                None => None,
            };
            predictions.push(Prediction::new(table, p.bbox, p.confidence.unwrap_or(1.0))?);
        }
        Ok(Self {
            page_id: rec.page_id.clone(),
            ground_truth,
            predictions,
            has_markup,
            unparsed_predictions: unparsed,
            filtered_predictions,
        })
    }
}
