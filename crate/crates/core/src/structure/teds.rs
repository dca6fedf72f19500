//! Tree-edit-distance similarity over `table > tr > td` trees.

use crate::table_model::{normalize_markup, MarkupTable, TableGrid};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeLabel {
    Table,
    Row,
    Cell {
        rowspan: usize,
        colspan: usize,
        content: Vec<char>,
    },
}

impl NodeLabel {
    fn kind(&self) -> u8 {
        match self {
            NodeLabel::Table => 0,
            NodeLabel::Row => 1,
            NodeLabel::Cell { .. } => 2,
        }
    }
}

/// A table tree stored in postorder: a `table` root, one `tr` child per row
/// and one `td` leaf per cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableTree {
    labels: Vec<NodeLabel>,
    // postorder index of each node's leftmost leaf descendant
    leftmost: Vec<usize>,
}

impl TableTree {
    pub fn from_markup(table: &MarkupTable) -> Self {
        let mut labels = Vec::new();
        let mut leftmost = Vec::new();
        for row in &table.rows {
            let row_first = labels.len();
            for cell in &row.cells {
                leftmost.push(labels.len());
                labels.push(NodeLabel::Cell {
                    rowspan: cell.rowspan,
                    colspan: cell.colspan,
                    content: cell.content.chars().collect(),
                });
            }
            leftmost.push(row_first);
            labels.push(NodeLabel::Row);
        }
        leftmost.push(0);
        labels.push(NodeLabel::Table);
        Self { labels, leftmost }
    }

    /// Uses the markup the grid was parsed from when available, otherwise the
    /// grid's own serialization.
    pub fn from_grid(grid: &TableGrid) -> Self {
        match grid.source() {
            Some(src) => Self::from_markup(src),
            None => Self::from_markup(&grid.to_markup_table()),
        }
    }

    pub fn parse(markup: &str) -> Result<Self> {
        Ok(Self::from_markup(normalize_markup(markup)?.table()))
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[NodeLabel] {
        &self.labels
    }

    fn keyroots(&self) -> Vec<usize> {
        // A node is a keyroot unless it shares its leftmost leaf with an
        // ancestor; keep the highest node for each leftmost leaf.
        let mut highest = vec![usize::MAX; self.len()];
        for (i, &l) in self.leftmost.iter().enumerate() {
            highest[l] = i;
        }
        let mut k: Vec<usize> = highest.into_iter().filter(|&i| i != usize::MAX).collect();
        k.sort_unstable();
        k
    }
}

/// Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Levenshtein distance divided by the longer length; 0 for two empty strings.
pub fn normalized_levenshtein(a: &[char], b: &[char]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        0.0
    } else {
        levenshtein(a, b) as f64 / longest as f64
    }
}

/// Relabel cost: 1 across node kinds and between cells with different spans,
/// otherwise the normalized content edit distance.
pub fn relabel_cost(a: &NodeLabel, b: &NodeLabel) -> f64 {
    match (a, b) {
        (
            NodeLabel::Cell {
                rowspan: ra,
                colspan: ca,
                content: ta,
            },
            NodeLabel::Cell {
                rowspan: rb,
                colspan: cb,
                content: tb,
            },
        ) => {
            if ra != rb || ca != cb {
                1.0
            } else {
                normalized_levenshtein(ta, tb)
            }
        }
        _ if a.kind() == b.kind() => 0.0,
        _ => 1.0,
    }
}

/// Ordered tree edit distance with unit insert/delete costs and
/// [`relabel_cost`] substitutions, by the Zhang–Shasha keyroot recursion.
pub fn tree_edit_distance(a: &TableTree, b: &TableTree) -> f64 {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return (n + m) as f64;
    }
    let mut relabel = vec![f64::NAN; n * m];
    let mut tree_dist = vec![0.0f64; n * m];
    let mut forest = vec![0.0f64; (n + 1) * (m + 1)];

    for &i in &a.keyroots() {
        for &j in &b.keyroots() {
            let li = a.leftmost[i];
            let lj = b.leftmost[j];
            let rows = i - li + 2;
            let cols = j - lj + 2;
            // forest[(x - li + 1) * cols + (y - lj + 1)] holds the distance
            // between forests a[li..=x] and b[lj..=y].
            let at = |x: usize, y: usize| x * cols + y;
            forest[at(0, 0)] = 0.0;
            for x in 1..rows {
                forest[at(x, 0)] = forest[at(x - 1, 0)] + 1.0;
            }
            for y in 1..cols {
                forest[at(0, y)] = forest[at(0, y - 1)] + 1.0;
            }
            for x in 1..rows {
                let node_a = li + x - 1;
                for y in 1..cols {
                    let node_b = lj + y - 1;
                    let del = forest[at(x - 1, y)] + 1.0;
                    let ins = forest[at(x, y - 1)] + 1.0;
                    if a.leftmost[node_a] == li && b.leftmost[node_b] == lj {
                        let slot = &mut relabel[node_a * m + node_b];
                        if slot.is_nan() {
                            *slot = relabel_cost(&a.labels[node_a], &b.labels[node_b]);
                        }
                        let sub = forest[at(x - 1, y - 1)] + *slot;
                        let d = del.min(ins).min(sub);
                        forest[at(x, y)] = d;
                        tree_dist[node_a * m + node_b] = d;
                    } else {
                        let px = a.leftmost[node_a] - li;
                        let py = b.leftmost[node_b] - lj;
                        let sub = forest[at(px, py)] + tree_dist[node_a * m + node_b];
                        forest[at(x, y)] = del.min(ins).min(sub);
                    }
                }
            }
        }
    }
    tree_dist[(n - 1) * m + (m - 1)]
}

/// `1 − EditDist(a, b) / max(|a|, |b|)`.
pub fn teds(a: &TableTree, b: &TableTree) -> f64 {
    let largest = a.len().max(b.len());
    if largest == 0 {
        return 1.0;
    }
    (1.0 - tree_edit_distance(a, b) / largest as f64).clamp(0.0, 1.0)
}

/// TEDS between two markup strings.
pub fn teds_markup(a: &str, b: &str) -> Result<f64> {
    Ok(teds(&TableTree::parse(a)?, &TableTree::parse(b)?))
}
