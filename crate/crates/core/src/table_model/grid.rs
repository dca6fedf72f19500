use std::fmt;

use log::warn;
use serde::{Deserialize, Serialize};

use super::markup::{normalize_markup, MarkupCell, MarkupTable, NormalizedMarkup};
use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::matrix::GridMatrix;

/// A cell placed on the grid: top-left corner `(row, col)` (1-based) spanning
/// `extra_rows + 1` rows and `extra_cols + 1` columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalCell {
    pub row: usize,
    pub col: usize,
    pub extra_rows: usize,
    pub extra_cols: usize,
    pub content: String,
}

impl LogicalCell {
    pub fn new(row: usize, col: usize, extra_rows: usize, extra_cols: usize, content: impl Into<String>) -> Self {
        Self {
            row,
            col,
            extra_rows,
            extra_cols,
            content: content.into(),
        }
    }

    pub fn last_row(&self) -> usize {
        self.row + self.extra_rows
    }

    pub fn last_col(&self) -> usize {
        self.col + self.extra_cols
    }

    /// Number of grid positions the cell covers.
    pub fn area(&self) -> usize {
        (self.extra_rows + 1) * (self.extra_cols + 1)
    }

    pub fn is_simple(&self) -> bool {
        self.extra_rows == 0 && self.extra_cols == 0
    }
}

/// Irregularities repaired while placing markup cells on the grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GridWarning {
    /// No free column was left in the row for the cell.
    CellDropped { row: usize, content: String },
    RowSpanClamped { row: usize, col: usize, requested: usize, kept: usize },
    ColSpanClamped { row: usize, col: usize, requested: usize, kept: usize },
}

impl fmt::Display for GridWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridWarning::CellDropped { row, content } => {
                write!(f, "row {row}: cell {content:?} does not fit the grid and was dropped")
            }
            GridWarning::RowSpanClamped { row, col, requested, kept } => {
                write!(f, "cell ({row},{col}): rowspan {requested} clamped to {kept}")
            }
            GridWarning::ColSpanClamped { row, col, requested, kept } => {
                write!(f, "cell ({row},{col}): colspan {requested} clamped to {kept}")
            }
        }
    }
}

/// Relative extent of the cell owning a grid position, as
/// `(top, left, bottom, right)` offsets from that position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpanRect {
    pub top: i32,
    pub left: i32,
    pub bottom: i32,
    pub right: i32,
}

impl SpanRect {
    pub const UNIT: SpanRect = SpanRect {
        top: 0,
        left: 0,
        bottom: 0,
        right: 0,
    };

    pub fn new(top: i32, left: i32, bottom: i32, right: i32) -> Self {
        Self { top, left, bottom, right }
    }

    pub fn area(&self) -> i64 {
        i64::from(self.bottom - self.top + 1) * i64::from(self.right - self.left + 1)
    }

    /// IoU of the two rectangles over inclusive integer ranges.
    pub fn iou(&self, other: &SpanRect) -> f64 {
        let rows = (self.bottom.min(other.bottom) - self.top.max(other.top) + 1).max(0);
        let cols = (self.right.min(other.right) - self.left.max(other.left) + 1).max(0);
        let inter = i64::from(rows) * i64::from(cols);
        let union = self.area() + other.area() - inter;
        if union <= 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// A table laid out on an `n_rows x m_cols` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TableGrid {
    n_rows: usize,
    m_cols: usize,
    cells: Vec<LogicalCell>,
    bbox: Option<BBox>,
    warnings: Vec<GridWarning>,
    source: Option<MarkupTable>,
}

impl TableGrid {
    /// Builds a grid from explicit cells, checking bounds and disjointness.
    pub fn new(n_rows: usize, m_cols: usize, cells: Vec<LogicalCell>) -> Result<Self> {
        if n_rows == 0 || m_cols == 0 {
            return Err(Error::InvalidTable(format!("shape {n_rows}x{m_cols}")));
        }
        let mut owner = vec![false; n_rows * m_cols];
        for cell in &cells {
            if cell.row == 0 || cell.col == 0 || cell.last_row() > n_rows || cell.last_col() > m_cols {
                return Err(Error::InvalidTable(format!(
                    "cell ({},{},{},{}) lies outside {n_rows}x{m_cols}",
                    cell.row, cell.col, cell.extra_rows, cell.extra_cols
                )));
            }
            for r in cell.row..=cell.last_row() {
                for c in cell.col..=cell.last_col() {
                    let slot = &mut owner[(r - 1) * m_cols + (c - 1)];
                    if *slot {
                        return Err(Error::InvalidTable(format!("cells overlap at ({r},{c})")));
                    }
                    *slot = true;
                }
            }
        }
        let mut cells = cells;
        cells.sort_by_key(|c| (c.row, c.col));
        Ok(Self {
            n_rows,
            m_cols,
            cells,
            bbox: None,
            warnings: Vec::new(),
            source: None,
        })
    }

    pub fn with_bbox(mut self, bbox: BBox) -> Self {
        self.bbox = Some(bbox);
        self
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn m_cols(&self) -> usize {
        self.m_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.m_cols)
    }

    /// Cells in row-major order of their top-left corners.
    pub fn cells(&self) -> &[LogicalCell] {
        &self.cells
    }

    pub fn bbox(&self) -> Option<&BBox> {
        self.bbox.as_ref()
    }

    pub fn warnings(&self) -> &[GridWarning] {
        &self.warnings
    }

    /// The normalized markup rows the grid was parsed from, if any.
    pub fn source(&self) -> Option<&MarkupTable> {
        self.source.as_ref()
    }

    /// Index into `cells()` of the cell covering each 0-based grid position.
    pub fn owners(&self) -> GridMatrix<Option<usize>> {
        let mut owners = GridMatrix::from_fn(self.n_rows, self.m_cols, |_, _| None);
        for (idx, cell) in self.cells.iter().enumerate() {
            for r in cell.row..=cell.last_row() {
                for c in cell.col..=cell.last_col() {
                    owners[(r - 1, c - 1)] = Some(idx);
                }
            }
        }
        owners
    }

    /// Back to markup rows. Every uncovered position is written as an explicit
    /// empty cell so that re-parsing reproduces the same shape.
    pub fn to_markup_table(&self) -> MarkupTable {
        let owners = self.owners();
        let rows = (0..self.n_rows)
            .map(|r| {
                let mut cells = Vec::new();
                for c in 0..self.m_cols {
                    match owners[(r, c)] {
                        Some(idx) => {
                            let cell = &self.cells[idx];
                            if cell.row == r + 1 && cell.col == c + 1 {
                                cells.push(MarkupCell::with_span(
                                    cell.content.clone(),
                                    cell.extra_rows + 1,
                                    cell.extra_cols + 1,
                                ));
                            }
                        }
                        None => cells.push(MarkupCell::new("")),
                    }
                }
                cells
            })
            .collect();
        MarkupTable::from_rows(rows)
    }

    pub fn to_markup(&self) -> String {
        self.to_markup_table().to_markup()
    }
}

/// Parses table markup into a grid.
///
/// The markup is normalized first. Cells are placed left to right in the
/// first column not already covered by a rowspan from above. The column count
/// is the widest declared row (sum of colspans); cells that find no free
/// column within it are dropped, and spans running past the grid or into an
/// occupied position are shortened. Each repair is recorded as a
/// [`GridWarning`].
pub fn parse_table_markup(markup: &str) -> Result<TableGrid> {
    let normalized = normalize_markup(markup)?;
    grid_from_markup(normalized.table())
}

pub fn grid_from_normalized(markup: &NormalizedMarkup) -> Result<TableGrid> {
    grid_from_markup(markup.table())
}

pub fn grid_from_markup(table: &MarkupTable) -> Result<TableGrid> {
    let n_rows = table.rows.len();
    if n_rows == 0 {
        return Err(Error::EmptyTable);
    }
    let m_cols = table
        .rows
        .iter()
        .map(|row| row.cells.iter().map(|c| c.colspan.max(1)).sum::<usize>())
        .max()
        .unwrap_or(0)
        .max(1);

    let mut occupied = vec![false; n_rows * m_cols];
    let mut cells = Vec::new();
    let mut warnings = Vec::new();

    for (r, row) in table.rows.iter().enumerate() {
        let mut cursor = 0;
        for cell in &row.cells {
            while cursor < m_cols && occupied[r * m_cols + cursor] {
                cursor += 1;
            }
            if cursor >= m_cols {
                warnings.push(GridWarning::CellDropped {
                    row: r + 1,
                    content: cell.content.clone(),
                });
                continue;
            }
            let requested_cols = cell.colspan.max(1);
            let mut width = 0;
            while width < requested_cols && cursor + width < m_cols && !occupied[r * m_cols + cursor + width] {
                width += 1;
            }
            if width < requested_cols {
                warnings.push(GridWarning::ColSpanClamped {
                    row: r + 1,
                    col: cursor + 1,
                    requested: requested_cols,
                    kept: width,
                });
            }
            let requested_rows = cell.rowspan.max(1);
            let mut height = 1;
            while height < requested_rows
                && r + height < n_rows
                && (cursor..cursor + width).all(|c| !occupied[(r + height) * m_cols + c])
            {
                height += 1;
            }
            if height < requested_rows {
                warnings.push(GridWarning::RowSpanClamped {
                    row: r + 1,
                    col: cursor + 1,
                    requested: requested_rows,
                    kept: height,
                });
            }
            for rr in r..r + height {
                for cc in cursor..cursor + width {
                    occupied[rr * m_cols + cc] = true;
                }
            }
            cells.push(LogicalCell::new(r + 1, cursor + 1, height - 1, width - 1, cell.content.clone()));
            cursor += width;
        }
    }

    for w in &warnings {
        warn!("{w}");
    }
    let mut grid = TableGrid::new(n_rows, m_cols, cells)?;
    grid.warnings = warnings;
    grid.source = Some(table.clone());
    Ok(grid)
}

/// Topology entries: each position holds the extent of its owning cell
/// relative to that position; uncovered positions hold the unit rectangle.
pub fn grid_entries_topology(t: &TableGrid) -> GridMatrix<SpanRect> {
    let owners = t.owners();
    GridMatrix::from_fn(t.n_rows, t.m_cols, |r, c| match owners[(r, c)] {
        None => SpanRect::UNIT,
        Some(idx) => {
            let cell = &t.cells[idx];
            let dr = cell.row as i32 - (r as i32 + 1);
            let dc = cell.col as i32 - (c as i32 + 1);
            SpanRect::new(dr, dc, dr + cell.extra_rows as i32, dc + cell.extra_cols as i32)
        }
    })
}

/// Content entries: each position holds its owning cell's text, or `""`.
pub fn grid_entries_content(t: &TableGrid) -> GridMatrix<String> {
    let owners = t.owners();
    GridMatrix::from_fn(t.n_rows, t.m_cols, |r, c| {
        owners[(r, c)].map_or_else(String::new, |idx| t.cells[idx].content.clone())
    })
}
