//! Logical table model: cells with row/column spans on a rectangular grid,
//! plus parsing and normalization of HTML-style table markup.

mod grid;
mod markup;

pub use grid::{
    grid_entries_content, grid_entries_topology, grid_from_markup, grid_from_normalized, parse_table_markup,
    GridWarning, LogicalCell, SpanRect, TableGrid,
};
pub use markup::{collapse_whitespace, normalize_markup, MarkupCell, MarkupRow, MarkupTable, NormalizedMarkup, MAX_SPAN};
