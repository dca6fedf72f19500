//! Slow, direct reference implementations used to check the library, plus
//! proptest generators. Nothing here calls the library's metric code.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use proptest::prelude::*;
use tabeval::harness::{CorpusRecord, Page, RunConfig};
use tabeval::table_model::{MarkupCell, MarkupTable};
use tabeval::{BBox, TableGrid};

// ---------------------------------------------------------------- strings

pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, v) in d[0].iter_mut().enumerate() {
        *v = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

fn lcs(a: &[char], b: &[char], memo: &mut HashMap<(usize, usize), usize>) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    if let Some(&v) = memo.get(&(a.len(), b.len())) {
        return v;
    }
    let v = if a[a.len() - 1] == b[b.len() - 1] {
        1 + lcs(&a[..a.len() - 1], &b[..b.len() - 1], memo)
    } else {
        lcs(&a[..a.len() - 1], b, memo).max(lcs(a, &b[..b.len() - 1], memo))
    };
    memo.insert((a.len(), b.len()), v);
    v
}

pub fn lcs_sim(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    2.0 * lcs(&a, &b, &mut HashMap::new()) as f64 / (a.len() + b.len()) as f64
}

// ------------------------------------------------------------------- trees

#[derive(Debug, Clone)]
pub enum Label {
    Table,
    Tr,
    Td { rs: usize, cs: usize, text: Vec<char> },
}

#[derive(Debug, Clone)]
pub struct Tree {
    pub label: Label,
    pub children: Vec<Tree>,
}

impl Tree {
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Tree::size).sum::<usize>()
    }
}

pub fn tree_of(t: &MarkupTable) -> Tree {
    Tree {
        label: Label::Table,
        children: t
            .rows
            .iter()
            .map(|r| Tree {
                label: Label::Tr,
                children: r
                    .cells
                    .iter()
                    .map(|c| Tree {
                        label: Label::Td {
                            rs: c.rowspan,
                            cs: c.colspan,
                            text: c.content.chars().collect(),
                        },
                        children: vec![],
                    })
                    .collect(),
            })
            .collect(),
    }
}

fn relabel(a: &Label, b: &Label) -> f64 {
    match (a, b) {
        (Label::Table, Label::Table) | (Label::Tr, Label::Tr) => 0.0,
        (Label::Td { rs, cs, text }, Label::Td { rs: r2, cs: c2, text: t2 }) => {
            if rs != r2 || cs != c2 {
                1.0
            } else if text.is_empty() && t2.is_empty() {
                0.0
            } else {
                levenshtein(text, t2) as f64 / text.len().max(t2.len()) as f64
            }
        }
        _ => 1.0,
    }
}

type ForestKey = (Vec<usize>, Vec<usize>);

/// Forest edit distance by the rightmost-root recursion, memoized on the
/// identity of the forests' roots.
fn forest_dist<'a>(f: &[&'a Tree], g: &[&'a Tree], memo: &mut HashMap<ForestKey, f64>) -> f64 {
    if f.is_empty() {
        return g.iter().map(|t| t.size()).sum::<usize>() as f64;
    }
    if g.is_empty() {
        return f.iter().map(|t| t.size()).sum::<usize>() as f64;
    }
    let key = (
        f.iter().map(|t| *t as *const Tree as usize).collect(),
        g.iter().map(|t| *t as *const Tree as usize).collect(),
    );
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let v = f[f.len() - 1];
    let w = g[g.len() - 1];
    let mut f_minus: Vec<&Tree> = f[..f.len() - 1].to_vec();
    f_minus.extend(v.children.iter());
    let mut g_minus: Vec<&Tree> = g[..g.len() - 1].to_vec();
    g_minus.extend(w.children.iter());
    let vc: Vec<&Tree> = v.children.iter().collect();
    let wc: Vec<&Tree> = w.children.iter().collect();

    let del = forest_dist(&f_minus, g, memo) + 1.0;
    let ins = forest_dist(f, &g_minus, memo) + 1.0;
    let sub = forest_dist(&vc, &wc, memo) + forest_dist(&f[..f.len() - 1], &g[..g.len() - 1], memo) + relabel(&v.label, &w.label);
    let d = del.min(ins).min(sub);
    memo.insert(key, d);
    d
}

pub fn ted(a: &Tree, b: &Tree) -> f64 {
    forest_dist(&[a], &[b], &mut HashMap::new())
}

pub fn teds(a: &MarkupTable, b: &MarkupTable) -> f64 {
    let (ta, tb) = (tree_of(a), tree_of(b));
    1.0 - ted(&ta, &tb) / ta.size().max(tb.size()) as f64
}

// ------------------------------------------------------------------- grids

pub type Rect = (i32, i32, i32, i32);

pub fn topology_entries(t: &TableGrid) -> Vec<Vec<Rect>> {
    let (n, m) = t.shape();
    let mut out = vec![vec![(0, 0, 0, 0); m]; n];
    for c in t.cells() {
        for i in c.row..=c.row + c.extra_rows {
            for j in c.col..=c.col + c.extra_cols {
                let (i, j, r, cc) = (i as i32, j as i32, c.row as i32, c.col as i32);
                out[i as usize - 1][j as usize - 1] =
                    (r - i, cc - j, r - i + c.extra_rows as i32, cc - j + c.extra_cols as i32);
            }
        }
    }
    out
}

pub fn content_entries(t: &TableGrid) -> Vec<Vec<String>> {
    let (n, m) = t.shape();
    let mut out = vec![vec![String::new(); m]; n];
    for c in t.cells() {
        for i in c.row..=c.row + c.extra_rows {
            for j in c.col..=c.col + c.extra_cols {
                out[i - 1][j - 1] = c.content.clone();
            }
        }
    }
    out
}

/// IoU of two inclusive integer rectangles by counting lattice points.
pub fn rect_iou(a: &Rect, b: &Rect) -> f64 {
    let inside = |r: &Rect, x: i32, y: i32| x >= r.0 && x <= r.2 && y >= r.1 && y <= r.3;
    let (mut inter, mut union) = (0, 0);
    for x in a.0.min(b.0)..=a.2.max(b.2) {
        for y in a.1.min(b.1)..=a.3.max(b.3) {
            let (ia, ib) = (inside(a, x, y), inside(b, x, y));
            inter += i32::from(ia && ib);
            union += i32::from(ia || ib);
        }
    }
    if union == 0 {
        0.0
    } else {
        f64::from(inter) / f64::from(union)
    }
}

fn increasing(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Best Σf over all equal-shape substructures, by enumeration.
pub fn best_substructure_total<T>(p: &[Vec<T>], g: &[Vec<T>], f: impl Fn(&T, &T) -> f64) -> f64 {
    let (pn, gn) = (p.len(), g.len());
    let (pm, gm) = (p.first().map_or(0, Vec::len), g.first().map_or(0, Vec::len));
    let mut best = 0.0f64;
    for k in 1..=pn.min(gn) {
        for l in 1..=pm.min(gm) {
            for pr in increasing(pn, k) {
                for gr in increasing(gn, k) {
                    for pc in increasing(pm, l) {
                        for gc in increasing(gm, l) {
                            let mut s = 0.0;
                            for x in 0..k {
                                for y in 0..l {
                                    s += f(&p[pr[x]][pc[y]], &g[gr[x]][gc[y]]);
                                }
                            }
                            best = best.max(s);
                        }
                    }
                }
            }
        }
    }
    best
}

pub fn grits_exhaustive<T>(p: &[Vec<T>], g: &[Vec<T>], f: impl Fn(&T, &T) -> f64) -> f64 {
    let size = |m: &[Vec<T>]| m.len() * m.first().map_or(0, Vec::len);
    let denom = size(p) + size(g);
    if denom == 0 {
        return 1.0;
    }
    2.0 * best_substructure_total(p, g, f) / denom as f64
}

pub fn grits_topology(a: &TableGrid, b: &TableGrid) -> f64 {
    grits_exhaustive(&topology_entries(a), &topology_entries(b), rect_iou)
}

pub fn grits_content(a: &TableGrid, b: &TableGrid) -> f64 {
    grits_exhaustive(&content_entries(a), &content_entries(b), |x: &String, y: &String| lcs_sim(x, y))
}

pub fn markup_of(t: &TableGrid) -> MarkupTable {
    t.source().cloned().unwrap_or_else(|| t.to_markup_table())
}

// --------------------------------------------------------------- detection

pub fn box_iou(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.x1.min(b.x1) - a.x0.max(b.x0)).max(0.0);
    let ih = (a.y1.min(b.y1) - a.y0.max(b.y0)).max(0.0);
    let inter = iw * ih;
    let union = (a.x1 - a.x0) * (a.y1 - a.y0) + (b.x1 - b.x0) * (b.y1 - b.y0) - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

pub fn chunk_pairs_of(t: &TableGrid) -> Vec<(String, String)> {
    let mut text = String::new();
    for c in t.cells() {
        text.extend(c.content.chars().filter(|c| !c.is_whitespace()));
    }
    let chars: Vec<char> = text.chars().collect();
    let mut chunks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        chunks.push(chars[i..(i + 2).min(chars.len())].iter().collect::<String>());
        i += 2;
    }
    let mut pairs = Vec::new();
    for k in 1..chunks.len() {
        pairs.push((chunks[k - 1].clone(), chunks[k].clone()));
    }
    pairs
}

pub fn content_jaccard(a: &TableGrid, b: &TableGrid) -> f64 {
    let count = |t: &TableGrid| {
        let mut m: BTreeMap<(String, String), i64> = BTreeMap::new();
        for p in chunk_pairs_of(t) {
            *m.entry(p).or_default() += 1;
        }
        m
    };
    let (ca, cb) = (count(a), count(b));
    if ca.is_empty() && cb.is_empty() {
        return 1.0;
    }
    if ca.is_empty() || cb.is_empty() {
        return 0.0;
    }
    let mut keys: Vec<&(String, String)> = ca.keys().chain(cb.keys()).collect();
    keys.sort();
    keys.dedup();
    let (mut inter, mut union) = (0, 0);
    for k in keys {
        let (x, y) = (ca.get(k).copied().unwrap_or(0), cb.get(k).copied().unwrap_or(0));
        inter += x.min(y);
        union += x.max(y);
    }
    inter as f64 / union as f64
}

/// Greedy one-to-one matching by repeated scans for the best remaining pair.
pub fn greedy(sims: &[Vec<f64>], conf: &[f64], active: &[bool], theta: f64) -> Vec<(usize, usize, f64)> {
    let n_gt = sims.first().map_or(0, Vec::len);
    let mut pu = vec![false; sims.len()];
    let mut gu = vec![false; n_gt];
    let mut out = Vec::new();
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for p in 0..sims.len() {
            if pu[p] || !active[p] {
                continue;
            }
            for g in 0..n_gt {
                let s = sims[p][g];
                if gu[g] || s <= theta {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bp, _, bs)) => s > bs || (s == bs && conf[p] > conf[bp]),
                };
                if better {
                    best = Some((p, g, s));
                }
            }
        }
        match best {
            Some((p, g, s)) => {
                pu[p] = true;
                gu[g] = true;
                out.push((p, g, s));
            }
            None => break,
        }
    }
    out
}

pub fn expected_indicator(j: f64, s: f64) -> f64 {
    // ∫_s^j α θ dθ with α = 2 / (1 − s²)
    if j <= s {
        0.0
    } else {
        (j * j - s * s) / (1.0 - s * s)
    }
}

fn ratio(num: f64, den: usize, other: usize) -> f64 {
    if den == 0 {
        if other == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        num / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn tsr_score(metric: &str, pred: Option<&TableGrid>, gt: &TableGrid) -> f64 {
    let Some(pred) = pred else { return 0.0 };
    match metric {
        "topology" => grits_topology(pred, gt),
        "content" => grits_content(pred, gt),
        _ => teds(&markup_of(pred), &markup_of(gt)),
    }
}

struct OraclePage {
    page: Page,
    sims: Vec<Vec<f64>>,
    conf: Vec<f64>,
}

/// Every corpus scalar, recomputed from scratch by sweeping thresholds and
/// rematching at each one. Bbox matching, default thresholds.
pub fn corpus_scalars(records: &[CorpusRecord], cfg: &RunConfig) -> BTreeMap<String, f64> {
    let pages: Vec<OraclePage> = records
        .iter()
        .map(|r| {
            let page = Page::from_record(r, cfg.filter_empty).unwrap();
            let sims = page
                .predictions
                .iter()
                .map(|p| page.ground_truth.iter().map(|g| box_iou(&p.bbox.unwrap(), &g.bbox.unwrap())).collect())
                .collect();
            let conf = page.predictions.iter().map(|p| p.confidence).collect();
            OraclePage { page, sims, conf }
        })
        .collect();
    let tj = cfg.theta_j;
    let n_gt: usize = pages.iter().map(|p| p.page.ground_truth.len()).sum();
    let positive = |op: &OraclePage| -> Vec<bool> { op.conf.iter().map(|&c| c > cfg.theta_c).collect() };
    let n_pos: usize = pages.iter().map(|p| positive(p).iter().filter(|&&x| x).count()).sum();

    let mut out = BTreeMap::new();
    let put_prf = |out: &mut BTreeMap<String, f64>, name: &str, hits: f64, pos: usize, gt: usize| {
        let p = ratio(hits, pos, gt);
        let r = ratio(hits, gt, pos);
        out.insert(name.replace("{}", "P"), p);
        out.insert(name.replace("{}", "R"), r);
        out.insert(name.replace("{}", "F1"), f1(p, r));
    };

    // thresholded, micro and macro
    let mut tp = 0;
    let (mut mp, mut mr, mut mf) = (0.0, 0.0, 0.0);
    for op in &pages {
        let act = positive(op);
        let m = greedy(&op.sims, &op.conf, &act, tj).len();
        tp += m;
        let pos = act.iter().filter(|&&x| x).count();
        let g = op.page.ground_truth.len();
        let (p, r) = (ratio(m as f64, pos, g), ratio(m as f64, g, pos));
        mp += p;
        mr += r;
        mf += f1(p, r);
    }
    put_prf(&mut out, &format!("{{}}_{tj}"), tp as f64, n_pos, n_gt);
    let np = pages.len() as f64;
    out.insert(format!("macro.P_{tj}"), mp / np);
    out.insert(format!("macro.R_{tj}"), mr / np);
    out.insert(format!("macro.F1_{tj}"), mf / np);

    // WAvg
    let (mut num, mut den) = (0.0, 0.0);
    for t in [0.6, 0.7, 0.8, 0.9] {
        let tp_t: usize = pages.iter().map(|op| greedy(&op.sims, &op.conf, &positive(op), t).len()).sum();
        let (p, r) = (ratio(tp_t as f64, n_pos, n_gt), ratio(tp_t as f64, n_gt, n_pos));
        out.insert(format!("F1_{t}"), f1(p, r));
        num += t * f1(p, r);
        den += t;
    }
    out.insert("WAvgF1".into(), num / den);

    // expected metrics
    for s in [0.0, 0.5] {
        let hits: f64 = pages
            .iter()
            .flat_map(|op| greedy(&op.sims, &op.conf, &positive(op), 0.0))
            .map(|(_, _, j)| expected_indicator(j, s))
            .sum();
        put_prf(&mut out, &format!("E{s}[{{}}]"), hits, n_pos, n_gt);
    }

    // swept curves: plain and structure-weighted
    let mut levels: Vec<f64> = pages.iter().flat_map(|op| op.conf.iter().copied()).collect();
    levels.sort_by(|a, b| b.partial_cmp(a).unwrap());
    levels.dedup();
    let ap = |gain: &dyn Fn(&OraclePage, usize, usize) -> f64| -> f64 {
        let (mut prev_r, mut total) = (0.0, 0.0);
        for &c in &levels {
            let mut hits = 0.0;
            let mut pos = 0;
            for op in &pages {
                let act: Vec<bool> = op.conf.iter().map(|&x| x >= c).collect();
                pos += act.iter().filter(|&&x| x).count();
                hits += greedy(&op.sims, &op.conf, &act, tj)
                    .iter()
                    .map(|&(p, g, _)| gain(op, p, g))
                    .sum::<f64>();
            }
            let (p, r) = (ratio(hits, pos, n_gt), ratio(hits, n_gt, pos));
            total += (r - prev_r) * p;
            prev_r = r;
        }
        total
    };
    out.insert("AP".into(), ap(&|_, _, _| 1.0));

    // calibration, over all predictions
    let bins = cfg.bins;
    let mut members: Vec<Vec<(f64, bool)>> = vec![Vec::new(); bins];
    let mut n = 0;
    for op in &pages {
        let all = vec![true; op.conf.len()];
        let matched = greedy(&op.sims, &op.conf, &all, tj);
        for (i, &c) in op.conf.iter().enumerate() {
            let k = (1..=bins).find(|&k| c <= k as f64 / bins as f64).unwrap_or(bins);
            members[k - 1].push((c, matched.iter().any(|m| m.0 == i)));
            n += 1;
        }
    }
    if n > 0 {
        let mut dece = 0.0;
        for m in members.iter().filter(|m| !m.is_empty()) {
            let conf = m.iter().map(|x| x.0).sum::<f64>() / m.len() as f64;
            let prec = m.iter().filter(|x| x.1).count() as f64 / m.len() as f64;
            dece += m.len() as f64 / n as f64 * (prec - conf).abs();
        }
        out.insert("D-ECE".into(), dece);
    }

    // structure
    for metric in ["topology", "content", "teds"] {
        let score = |op: &OraclePage, p: usize, g: usize| {
            tsr_score(
                metric,
                op.page.predictions[p].table.as_ref(),
                op.page.ground_truth[g].table.as_ref().unwrap(),
            )
        };
        let scores: Vec<f64> = pages
            .iter()
            .flat_map(|op| {
                greedy(&op.sims, &op.conf, &positive(op), tj)
                    .into_iter()
                    .map(|(p, g, _)| score(op, p, g))
                    .collect::<Vec<_>>()
            })
            .collect();
        if !scores.is_empty() {
            out.insert(format!("TSR|TD[{metric}]"), scores.iter().sum::<f64>() / scores.len() as f64);
        }
        put_prf(&mut out, &format!("{{}}^TSR[{metric}]"), scores.iter().sum(), n_pos, n_gt);
        out.insert(format!("AP^TSR[{metric}]"), ap(&score));
    }

    // content-matching agreement with box matching
    let (mut both, mut content_only, mut bbox_only) = (0, 0, 0);
    for op in &pages {
        let act = positive(op);
        let csims: Vec<Vec<f64>> = op
            .page
            .predictions
            .iter()
            .map(|p| {
                op.page
                    .ground_truth
                    .iter()
                    .map(|g| match &p.table {
                        Some(t) => content_jaccard(t, g.table.as_ref().unwrap()),
                        None => 0.0,
                    })
                    .collect()
            })
            .collect();
        let a = greedy(&op.sims, &op.conf, &act, tj);
        let b = greedy(&csims, &op.conf, &act, tj);
        for i in 0..op.conf.len() {
            match (a.iter().any(|m| m.0 == i), b.iter().any(|m| m.0 == i)) {
                (true, true) => both += 1,
                (false, true) => content_only += 1,
                (true, false) => bbox_only += 1,
                _ => {}
            }
        }
    }
    out.insert(
        "content_classifier.precision".into(),
        ratio(both as f64, both + content_only, bbox_only),
    );
    out.insert("content_classifier.recall".into(), ratio(both as f64, both + bbox_only, content_only));
    out
}

// -------------------------------------------------------------- generators

/// Markup tables of up to `max` rows and `max` columns over a small alphabet,
/// with spans drawn at probability `span_p`.
pub fn markup_table(max: usize, alphabet: &'static [&'static str], span_p: f64) -> impl Strategy<Value = MarkupTable> {
    let cell = (
        proptest::sample::select(alphabet),
        proptest::bool::weighted(span_p),
        proptest::bool::ANY,
    )
        .prop_map(|(text, span, vertical)| match (span, vertical) {
            (true, true) => MarkupCell::with_span(text, 2, 1),
            (true, false) => MarkupCell::with_span(text, 1, 2),
            _ => MarkupCell::new(text),
        });
    proptest::collection::vec(proptest::collection::vec(cell, 1..=max), 1..=max).prop_map(MarkupTable::from_rows)
}

pub fn bbox() -> impl Strategy<Value = BBox> {
    (0u32..100, 0u32..100, 1u32..60, 1u32..60).prop_map(|(x, y, w, h)| {
        BBox::new(f64::from(x), f64::from(y), f64::from(x + w), f64::from(y + h)).unwrap()
    })
}
