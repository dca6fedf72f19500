//! Grid table similarity over the most similar substructures of two matrices.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::matrix::GridMatrix;
use crate::table_model::{grid_entries_content, grid_entries_topology, SpanRect, TableGrid};

/// Largest side length accepted by [`exact_2dmss`].
pub const EXACT_LIMIT: usize = 4;

/// A row-subsequence by column-subsequence selection in each matrix. Paired
/// entries are `p[p_rows[k]][p_cols[l]]` and `g[g_rows[k]][g_cols[l]]`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Substructures {
    pub p_rows: Vec<usize>,
    pub p_cols: Vec<usize>,
    pub g_rows: Vec<usize>,
    pub g_cols: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GritsResult {
    pub score: f64,
    /// Σf over the selected substructures.
    pub total: f64,
    pub selection: Substructures,
}

/// Interned entries of both matrices with a lazily filled similarity table,
/// so `f` runs at most once per unique entry pair.
struct PairCache<'a, T, F> {
    p_ids: GridMatrix<usize>,
    g_ids: GridMatrix<usize>,
    p_uniq: Vec<&'a T>,
    g_uniq: Vec<&'a T>,
    table: Vec<f64>,
    f: F,
}

fn intern<T: Eq + Hash>(m: &GridMatrix<T>) -> (GridMatrix<usize>, Vec<&T>) {
    let mut seen: HashMap<&T, usize> = HashMap::new();
    let mut uniq = Vec::new();
    let ids = m.map(|_| 0);
    let data: Vec<usize> = m
        .iter()
        .map(|e| {
            *seen.entry(e).or_insert_with(|| {
                uniq.push(e);
                uniq.len() - 1
            })
        })
        .collect();
    (GridMatrix::from_vec(ids.rows(), ids.cols(), data), uniq)
}

impl<'a, T: Eq + Hash, F: Fn(&T, &T) -> f64> PairCache<'a, T, F> {
    fn new(p: &'a GridMatrix<T>, g: &'a GridMatrix<T>, f: F) -> Self {
        let (p_ids, p_uniq) = intern(p);
        let (g_ids, g_uniq) = intern(g);
        let table = vec![f64::NAN; p_uniq.len() * g_uniq.len()];
        Self {
            p_ids,
            g_ids,
            p_uniq,
            g_uniq,
            table,
            f,
        }
    }

    fn sim(&mut self, pr: usize, pc: usize, gr: usize, gc: usize) -> f64 {
        let a = self.p_ids[(pr, pc)];
        let b = self.g_ids[(gr, gc)];
        let slot = &mut self.table[a * self.g_uniq.len() + b];
        if slot.is_nan() {
            *slot = (self.f)(self.p_uniq[a], self.g_uniq[b]);
        }
        *slot
    }
}

/// Weighted LCS over an `n × m` reward table: returns the best total and the
/// matched index pairs in increasing order.
fn weighted_lcs(n: usize, m: usize, reward: &[f64]) -> (f64, Vec<(usize, usize)>) {
    let w = m + 1;
    let mut dp = vec![0.0f64; (n + 1) * w];
    for i in 1..=n {
        for j in 1..=m {
            let diag = dp[(i - 1) * w + j - 1] + reward[(i - 1) * m + j - 1];
            dp[i * w + j] = diag.max(dp[(i - 1) * w + j]).max(dp[i * w + j - 1]);
        }
    }
    let mut pairs = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        let r = reward[(i - 1) * m + j - 1];
        if r > 0.0 && dp[i * w + j] == dp[(i - 1) * w + j - 1] + r {
            pairs.push((i - 1, j - 1));
            i -= 1;
            j -= 1;
        } else if dp[i * w + j] == dp[(i - 1) * w + j] {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    pairs.reverse();
    (dp[n * w + m], pairs)
}

/// Columns first, then rows given the column correspondence. `transposed`
/// swaps the roles of rows and columns in both matrices.
fn two_stage<T, F>(cache: &mut PairCache<'_, T, F>, transposed: bool) -> (f64, Substructures)
where
    T: Eq + Hash,
    F: Fn(&T, &T) -> f64,
{
    let (pn, pm) = (cache.p_ids.rows(), cache.p_ids.cols());
    let (gn, gm) = (cache.g_ids.rows(), cache.g_ids.cols());
    // (outer, inner) extents: inner is aligned first.
    let (p_out, p_in, g_out, g_in) = if transposed { (pm, pn, gm, gn) } else { (pn, pm, gn, gm) };
    let at = |cache: &mut PairCache<'_, T, F>, po: usize, pi: usize, go: usize, gi: usize| {
        if transposed {
            cache.sim(pi, po, gi, go)
        } else {
            cache.sim(po, pi, go, gi)
        }
    };

    // Stage 1: reward of pairing inner line a with inner line b is the best
    // order-preserving alignment of their entries.
    let mut inner_reward = vec![0.0; p_in * g_in];
    let mut line = vec![0.0; p_out * g_out];
    for a in 0..p_in {
        for b in 0..g_in {
            for x in 0..p_out {
                for y in 0..g_out {
                    line[x * g_out + y] = at(cache, x, a, y, b);
                }
            }
            inner_reward[a * g_in + b] = weighted_lcs(p_out, g_out, &line).0;
        }
    }
    let (_, inner_pairs) = weighted_lcs(p_in, g_in, &inner_reward);

    // Stage 2: align outer lines given the fixed inner correspondence.
    let mut outer_reward = vec![0.0; p_out * g_out];
    for x in 0..p_out {
        for y in 0..g_out {
            outer_reward[x * g_out + y] = inner_pairs.iter().map(|&(a, b)| at(cache, x, a, y, b)).sum();
        }
    }
    let (total, outer_pairs) = weighted_lcs(p_out, g_out, &outer_reward);

    let (p_o, g_o): (Vec<usize>, Vec<usize>) = outer_pairs.into_iter().unzip();
    let (p_i, g_i): (Vec<usize>, Vec<usize>) = inner_pairs.into_iter().unzip();
    let sel = if transposed {
        Substructures {
            p_rows: p_i,
            p_cols: p_o,
            g_rows: g_i,
            g_cols: g_o,
        }
    } else {
        Substructures {
            p_rows: p_o,
            p_cols: p_i,
            g_rows: g_o,
            g_cols: g_i,
        }
    };
    (total, sel)
}

fn grits_score(total: f64, p_len: usize, g_len: usize) -> f64 {
    if p_len + g_len == 0 {
        1.0
    } else {
        (2.0 * total / (p_len + g_len) as f64).clamp(0.0, 1.0)
    }
}

/// `2 Σf(P̃, G̃) / (|P| + |G|)` with the substructures found by the factored
/// two-stage alignment, run in both orders.
pub fn grits<T, F>(p: &GridMatrix<T>, g: &GridMatrix<T>, f: F) -> GritsResult
where
    T: Eq + Hash,
    F: Fn(&T, &T) -> f64,
{
    let mut best = (f64::NEG_INFINITY, Substructures::default());
    let mut cache = PairCache::new(p, g, |a: &T, b: &T| f(a, b));
    for transposed in [false, true] {
        let run = two_stage(&mut cache, transposed);
        if run.0 > best.0 {
            best = run;
        }
    }
    // the same stages with the matrices swapped, so the score is symmetric
    let mut cache = PairCache::new(g, p, |a: &T, b: &T| f(b, a));
    for transposed in [false, true] {
        let (t, s) = two_stage(&mut cache, transposed);
        if t > best.0 {
            best = (
                t,
                Substructures {
                    p_rows: s.g_rows,
                    p_cols: s.g_cols,
                    g_rows: s.p_rows,
                    g_cols: s.p_cols,
                },
            );
        }
    }
    let (total, selection) = best;
    GritsResult {
        score: grits_score(total, p.len(), g.len()),
        total,
        selection,
    }
}

/// Every strictly increasing index sequence of `0..n`, grouped by length.
fn subsequences(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut by_len = vec![Vec::new(); n + 1];
    for mask in 0u32..(1 << n) {
        let s: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        by_len[s.len()].push(s);
    }
    by_len
}

/// Exact most-similar substructures by enumerating every equal-shape pair
/// of row and column selections. Both matrices must be at most 4×4.
pub fn exact_2dmss<T, F>(p: &GridMatrix<T>, g: &GridMatrix<T>, f: F) -> Result<GritsResult>
where
    F: Fn(&T, &T) -> f64,
{
    for m in [p, g] {
        if m.rows() > EXACT_LIMIT || m.cols() > EXACT_LIMIT {
            return Err(Error::TooLarge {
                rows: m.rows(),
                cols: m.cols(),
                limit: EXACT_LIMIT,
            });
        }
    }
    let (pn, pm, gn, gm) = (p.rows(), p.cols(), g.rows(), g.cols());
    let sims: Vec<f64> = (0..pn * pm)
        .flat_map(|a| (0..gn * gm).map(move |b| (a, b)))
        .map(|(a, b)| f(&p[(a / pm, a % pm)], &g[(b / gm, b % gm)]))
        .collect();
    let sim = |pr: usize, pc: usize, gr: usize, gc: usize| sims[(pr * pm + pc) * (gn * gm) + gr * gm + gc];

    let (p_rs, g_rs, p_cs, g_cs) = (subsequences(pn), subsequences(gn), subsequences(pm), subsequences(gm));
    let mut best = (0.0f64, Substructures::default());
    for k in 1..=pn.min(gn) {
        for pr in &p_rs[k] {
            for gr in &g_rs[k] {
                for l in 1..=pm.min(gm) {
                    for pc in &p_cs[l] {
                        for gc in &g_cs[l] {
                            let mut total = 0.0;
                            for (&a, &b) in pr.iter().zip(gr) {
                                for (&c, &d) in pc.iter().zip(gc) {
                                    total += sim(a, c, b, d);
                                }
                            }
                            if total > best.0 {
                                best = (
                                    total,
                                    Substructures {
                                        p_rows: pr.clone(),
                                        p_cols: pc.clone(),
                                        g_rows: gr.clone(),
                                        g_cols: gc.clone(),
                                    },
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(GritsResult {
        score: grits_score(best.0, p.len(), g.len()),
        total: best.0,
        selection: best.1,
    })
}

/// Sum of `f` over the entries a selection pairs up.
pub fn selection_total<T>(
    p: &GridMatrix<T>,
    g: &GridMatrix<T>,
    sel: &Substructures,
    f: impl Fn(&T, &T) -> f64,
) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in sel.p_rows.iter().zip(&sel.g_rows) {
        for (&c, &d) in sel.p_cols.iter().zip(&sel.g_cols) {
            total += f(&p[(a, c)], &g[(b, d)]);
        }
    }
    total
}

/// Longest common subsequence length over Unicode scalar values.
pub fn lcs_len(a: &[char], b: &[char]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for ca in a {
        for (j, cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `2 |LCS(a, b)| / (|a| + |b|)`; 1 for two empty strings.
pub fn lcs_similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    2.0 * lcs_len(&a, &b) as f64 / (a.len() + b.len()) as f64
}

pub fn topology_similarity(a: &SpanRect, b: &SpanRect) -> f64 {
    a.iou(b)
}

pub fn grits_topology(p: &TableGrid, g: &TableGrid) -> f64 {
    grits(&grid_entries_topology(p), &grid_entries_topology(g), topology_similarity).score
}

pub fn grits_content(p: &TableGrid, g: &TableGrid) -> f64 {
    grits(&grid_entries_content(p), &grid_entries_content(g), |a: &String, b: &String| {
        lcs_similarity(a, b)
    })
    .score
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table_model::parse_table_markup;

    fn exact_eq(a: &u8, b: &u8) -> f64 {
        f64::from(u8::from(a == b))
    }

    fn m(rows: &[&[u8]]) -> GridMatrix<u8> {
        GridMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn identity() {
        let p = m(&[&[1, 2], &[3, 4]]);
        let r = grits(&p, &p, exact_eq);
        assert_eq!(r.score, 1.0);
        assert_eq!(r.selection.p_rows, vec![0, 1]);
        let e = exact_2dmss(&p, &p, exact_eq).unwrap();
        assert_eq!(e.score, 1.0);
    }

    #[test]
    fn single_entry_against_two_by_two() {
        let p = m(&[&[7]]);
        let g = m(&[&[1, 2], &[7, 4]]);
        let r = grits(&p, &g, exact_eq);
        assert!((r.score - 0.4).abs() < 1e-12);
        assert_eq!(r.selection.g_rows, vec![1]);
        assert_eq!(r.selection.g_cols, vec![0]);
    }

    #[test]
    fn deleted_row() {
        let g = m(&[&[1, 2], &[3, 4], &[5, 6]]);
        let p = m(&[&[1, 2], &[5, 6]]);
        let e = exact_2dmss(&p, &g, exact_eq).unwrap();
        assert_eq!(e.total, 4.0);
        assert_eq!(e.selection.g_rows, vec![0, 2]);
        assert_eq!(grits(&p, &g, exact_eq).total, 4.0);
    }

    #[test]
    fn disjoint_alphabets() {
        let p = m(&[&[1, 1], &[1, 1]]);
        let g = m(&[&[2, 2], &[2, 2]]);
        assert_eq!(exact_2dmss(&p, &g, exact_eq).unwrap().score, 0.0);
        assert_eq!(grits(&p, &g, exact_eq).score, 0.0);
    }

    #[test]
    fn exact_rejects_large() {
        let p = GridMatrix::from_fn(5, 1, |_, _| 0u8);
        assert!(matches!(exact_2dmss(&p, &p, exact_eq), Err(Error::TooLarge { limit: 4, .. })));
    }

    #[test]
    fn selection_total_matches() {
        let p = m(&[&[1, 2, 1], &[2, 1, 2]]);
        let g = m(&[&[2, 1], &[1, 1], &[2, 2]]);
        let r = grits(&p, &g, exact_eq);
        assert_eq!(selection_total(&p, &g, &r.selection, exact_eq), r.total);
    }

    #[test]
    fn lcs_values() {
        assert!((lcs_similarity("abc", "axc") - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(lcs_similarity("", ""), 1.0);
        assert_eq!(lcs_similarity("", "a"), 0.0);
    }

    #[test]
    fn topology_ignores_content() {
        let a = parse_table_markup("<table><tr><td rowspan=2>a</td><td>b</td></tr><tr><td>c</td></tr></table>").unwrap();
        let b = parse_table_markup("<table><tr><td rowspan=2>x</td><td>y</td></tr><tr><td>z</td></tr></table>").unwrap();
        assert_eq!(grits_topology(&a, &b), 1.0);
        assert!(grits_content(&a, &b) < 1.0);
        assert_eq!(
            topology_similarity(&SpanRect::new(0, 0, 0, 0), &SpanRect::new(0, 0, 0, 1)),
            0.5
        );
    }
}
