//! Seeded synthetic corpora: ground-truth tables and perturbed predictions.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::corpus::{CorpusRecord, GroundTruthRecord, PredictionRecord};
use crate::geometry::{BBox, Token};
use crate::table_model::{MarkupCell, MarkupTable};

const WORDS: &[&str] = &[
    "Location", "Time", "Times", "Paris", "Lyon", "depth", "age", "sample", "total", "mean", "12", "3.5", "0.71", "n/a",
    "Ma", "km",
];

const PAGE_W: f64 = 1000.0;
const PAGE_H: f64 = 1400.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureConfig {
    pub pages: usize,
    /// Chance that a ground-truth table has a matching prediction.
    pub detect_rate: f64,
    /// Chance of one extra spurious prediction per page.
    pub false_positive_rate: f64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            pages: 20,
            detect_rate: 0.85,
            false_positive_rate: 0.3,
        }
    }
}

fn random_table(rng: &mut ChaCha8Rng) -> MarkupTable {
    let rows = rng.gen_range(1..=4);
    let cols = rng.gen_range(1..=4);
    let mut out = Vec::with_capacity(rows);
    for r in 0..rows {
        let mut cells = Vec::new();
        let mut c = 0;
        while c < cols {
            let text = WORDS.choose(rng).copied().unwrap_or_default();
            if r == 0 && c + 1 < cols && rng.gen_bool(0.2) {
                cells.push(MarkupCell::with_span(text, 1, 2));
                c += 2;
            } else {
                cells.push(MarkupCell::new(text));
                c += 1;
            }
        }
        out.push(cells);
    }
    MarkupTable::from_rows(out)
}

fn perturb_table(rng: &mut ChaCha8Rng, t: &MarkupTable) -> MarkupTable {
    let mut t = t.clone();
    match rng.gen_range(0..10) {
        0..=3 => {}
        4..=6 => {
            let row = rng.gen_range(0..t.rows.len());
            if let Some(cell) = t.rows[row].cells.choose_mut(rng) {
                cell.content = format!("{}x", cell.content.chars().skip(1).collect::<String>());
            }
        }
        7 | 8 => {
            if t.rows.len() > 1 {
                t.rows.pop();
            }
        }
        _ => {
            for row in &mut t.rows {
                if row.cells.len() > 1 {
                    row.cells.pop();
                }
            }
        }
    }
    t
}

fn round(v: f64) -> f64 {
    v.round()
}

fn jitter(rng: &mut ChaCha8Rng, b: &BBox) -> BBox {
    let dx = b.width() * rng.gen_range(-0.15..0.15);
    let dy = b.height() * rng.gen_range(-0.15..0.15);
    let grow = rng.gen_range(0.85..1.15);
    let x0 = round((b.x0 + dx).clamp(0.0, PAGE_W - 2.0));
    let y0 = round((b.y0 + dy).clamp(0.0, PAGE_H - 2.0));
    let x1 = round((x0 + b.width() * grow).min(PAGE_W)).max(x0 + 1.0);
    let y1 = round((y0 + b.height() * grow).min(PAGE_H)).max(y0 + 1.0);
    BBox { x0, y0, x1, y1 }
}

fn confidence(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo..hi) * 100.0).round() / 100.0
}

fn token_at(b: &BBox, text: &str) -> Token {
    let (cx, cy) = b.center();
    Token {
        bbox: BBox {
            x0: cx - 10.0,
            y0: cy - 4.0,
            x1: cx + 10.0,
            y1: cy + 4.0,
        },
        text: text.to_string(),
    }
}

/// A reproducible corpus: identical `(seed, cfg)` give identical records.
pub fn gen_fixture(seed: u64, cfg: &FixtureConfig) -> Vec<CorpusRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..cfg.pages)
        .map(|page| {
            let n_tables = rng.gen_range(0..=3);
            let mut ground_truth = Vec::new();
            let mut predictions = Vec::new();
            let mut tokens = Vec::new();
            for k in 0..n_tables {
                let x0 = round(rng.gen_range(40.0..150.0));
                let y0 = round(60.0 + 440.0 * k as f64 + rng.gen_range(0.0..40.0));
                let w = round(rng.gen_range(500.0..800.0));
                let h = round(rng.gen_range(150.0..350.0));
                let bbox = BBox {
                    x0,
                    y0,
                    x1: x0 + w,
                    y1: y0 + h,
                };
                let table = random_table(&mut rng);
                tokens.push(token_at(&bbox, &table.rows[0].cells[0].content));
                if rng.gen_bool(cfg.detect_rate) {
                    predictions.push(PredictionRecord {
                        bbox: Some(jitter(&mut rng, &bbox)),
                        markup: Some(perturb_table(&mut rng, &table).to_markup()),
                        confidence: Some(confidence(&mut rng, 0.3, 1.0)),
                    });
                }
                ground_truth.push(GroundTruthRecord {
                    bbox: Some(bbox),
                    markup: Some(table.to_markup()),
                });
            }
            if rng.gen_bool(cfg.false_positive_rate) {
                let x0 = round(rng.gen_range(0.0..700.0));
                let y0 = round(rng.gen_range(0.0..1200.0));
                predictions.push(PredictionRecord {
                    bbox: Some(BBox {
                        x0,
                        y0,
                        x1: x0 + round(rng.gen_range(50.0..300.0)),
                        y1: y0 + round(rng.gen_range(30.0..200.0)),
                    }),
                    markup: Some(random_table(&mut rng).to_markup()),
                    confidence: Some(confidence(&mut rng, 0.05, 0.7)),
                });
            }
            predictions.shuffle(&mut rng);
            CorpusRecord {
                page_id: format!("page-{page:04}"),
                width: PAGE_W,
                height: PAGE_H,
                ground_truth,
                predictions,
                tokens: Some(tokens),
                line: page + 1,
            }
        })
        .collect()
}
