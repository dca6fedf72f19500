//! Evaluation toolkit for end-to-end table extraction.
//!
//! The crate scores table detection, structure recognition and their
//! composition on a per-page corpus of ground-truth and predicted tables:
//!
//! * [`table_model`]: markup normalization and the grid model of a table.
//! * [`geometry`]: boxes, IoU, NMS, XY-cut segmentation and token heuristics.
//! * [`matching`]: confidence thresholding and one-to-one prediction matching.
//! * [`detection`]: precision/recall, expected metrics, AP and D-ECE.
//! * [`structure`]: TEDS and GriTS.
//! * [`end_to_end`]: structure-weighted precision, recall and AP.
//! * [`harness`]: corpus IO, run configuration, evaluation and reports.

pub mod detection;
pub mod end_to_end;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod matching;
pub mod matrix;
pub mod structure;
pub mod table_model;

pub use error::{Error, Result};
pub use geometry::BBox;
pub use matrix::GridMatrix;
pub use table_model::{parse_table_markup, TableGrid};
