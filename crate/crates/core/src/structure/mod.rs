//! Structure-recognition similarity: TEDS and GriTS.

mod grits;
mod teds;

use serde::{Deserialize, Serialize};

use crate::table_model::TableGrid;

pub use grits::{
    exact_2dmss, grits, grits_content, grits_topology, lcs_len, lcs_similarity, selection_total, topology_similarity,
    GritsResult, Substructures, EXACT_LIMIT,
};
pub use teds::{
    levenshtein, normalized_levenshtein, relabel_cost, teds, teds_markup, tree_edit_distance, NodeLabel, TableTree,
};

/// The table-structure score used to weight end-to-end matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TsrMetric {
    Topology,
    Content,
    Teds,
}

impl TsrMetric {
    pub const ALL: [TsrMetric; 3] = [TsrMetric::Topology, TsrMetric::Content, TsrMetric::Teds];

    pub fn as_str(self) -> &'static str {
        match self {
            TsrMetric::Teds => "teds",
            TsrMetric::Topology => "topology",
            TsrMetric::Content => "content",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }

    pub fn score(self, pred: &TableGrid, gt: &TableGrid) -> f64 {
        match self {
            TsrMetric::Teds => teds(&TableTree::from_grid(pred), &TableTree::from_grid(gt)),
            TsrMetric::Topology => grits_topology(pred, gt),
            TsrMetric::Content => grits_content(pred, gt),
        }
    }
}

impl std::fmt::Display for TsrMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
