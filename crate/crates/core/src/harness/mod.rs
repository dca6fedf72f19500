//! Corpus IO, run configuration, evaluation and report files.

mod config;
mod corpus;
mod evaluate;
mod fixture;
mod report;

pub use config::{MetricScope, RunConfig};
pub use corpus::{load_corpus, parse_corpus, write_corpus, CorpusRecord, GroundTruthRecord, Page, PredictionRecord};
pub use evaluate::{evaluate, page_similarities, PageDiagnostics};
pub use fixture::{gen_fixture, FixtureConfig};
pub use report::{emit_report, MetricReport};
