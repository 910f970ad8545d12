//! Exact nearest-neighbor retrieval by cosine and CSLS.
//!
//! Rows are assumed unit-normalized, so cosine similarity is a dot product.
//! CSLS scores a mapped source row `x` against a target row `y` as
//!
//! ```text
//! csls(x, y) = 2 cos(x, y) - r_T(x) - r_S(y)
//! ```
//!
//! where `r_T(x)` is the mean cosine of `x` to its `k` nearest target rows
//! and `r_S(y)` the mean cosine of `y` to its `k` nearest mapped source rows.
//! Density terms always range over the full spaces. Ties rank the lower
//! index first. Queries are scored in fixed-size blocks on the rayon pool and
//! merged in query order, so results do not depend on the thread count.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::embedspace::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::lexicon::PairLexicon;
use crate::solver::OrthogonalMap;

pub const DEFAULT_K_DENSITY: usize = 10;
pub const DEFAULT_RANK_MAX: usize = 15_000;

const BLOCK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Cosine,
    Csls { k_density: usize },
}

impl Metric {
    pub fn csls() -> Self {
        Metric::Csls {
            k_density: DEFAULT_K_DENSITY,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::Csls { .. } => "csls",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub score: f64,
}

/// Ranked neighbors per query, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    pub metric: Metric,
    pub rows: Vec<Vec<Neighbor>>,
}

impl NeighborList {
    pub fn indices(&self) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|n| n.index).collect())
            .collect()
    }
}

/// Runs `f(query, sims)` for each query row, where `sims[j]` is the dot
/// product of the query with key row `j`.
fn scan<T, F>(queries: &DMatrix<f64>, keys: &DMatrix<f64>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &[f64]) -> T + Sync,
{
    let q = queries.nrows();
    let n = keys.nrows();
    let starts: Vec<usize> = (0..q).step_by(BLOCK).collect();
    let blocks: Vec<Vec<T>> = starts
        .into_par_iter()
        .map(|start| {
            let len = BLOCK.min(q - start);
            let block = keys * queries.rows(start, len).transpose();
            let data = block.as_slice();
            (0..len)
                .map(|j| f(start + j, &data[j * n..(j + 1) * n]))
                .collect()
        })
        .collect();
    blocks.into_iter().flatten().collect()
}

fn rank_desc(scores: &[f64], a: usize, b: usize) -> std::cmp::Ordering {
    scores[b].total_cmp(&scores[a]).then(a.cmp(&b))
}

/// Exact top-`k` of `scores`, descending, ties by lower index.
pub(crate) fn top_k(scores: &[f64], k: usize) -> Vec<Neighbor> {
    let n = scores.len();
    let k = k.min(n);
    if k == 0 {
        return Vec::new();
    }
    if k == 1 {
        let mut best = 0;
        for j in 1..n {
            if scores[j] > scores[best] {
                best = j;
            }
        }
        return vec![Neighbor {
            index: best,
            score: scores[best],
        }];
    }
    let mut idx: Vec<usize> = (0..n).collect();
    if k < n {
        idx.select_nth_unstable_by(k - 1, |&a, &b| rank_desc(scores, a, b));
        idx.truncate(k);
    }
    idx.sort_unstable_by(|&a, &b| rank_desc(scores, a, b));
    idx.into_iter()
        .map(|j| Neighbor {
            index: j,
            score: scores[j],
        })
        .collect()
}

fn mean_top_k(sims: &[f64], k: usize) -> f64 {
    let mut v = sims.to_vec();
    if k < v.len() {
        v.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
        v.truncate(k);
    }
    v.sort_unstable_by(|a, b| b.total_cmp(a));
    v.iter().sum::<f64>() / k as f64
}

fn check_pair(queries: &DMatrix<f64>, keys: &DMatrix<f64>) -> Result<()> {
    if keys.nrows() == 0 {
        return Err(Error::InvalidArgument("no keys to search".into()));
    }
    if queries.ncols() != keys.ncols() {
        return Err(Error::Shape(format!(
            "query dimension {} vs key dimension {}",
            queries.ncols(),
            keys.ncols()
        )));
    }
    Ok(())
}

/// Exact top-`k` keys by dot product for every query row.
pub fn cosine_topk(queries: &DMatrix<f64>, keys: &DMatrix<f64>, k: usize) -> Result<NeighborList> {
    check_pair(queries, keys)?;
    if k == 0 || k > keys.nrows() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} with {} keys",
            keys.nrows()
        )));
    }
    let rows = scan(queries, keys, |_, sims| top_k(sims, k));
    Ok(NeighborList {
        metric: Metric::Cosine,
        rows,
    })
}

/// Density terms for CSLS between mapped source rows and target rows.
#[derive(Debug)]
pub struct CslsIndex<'a> {
    src: &'a DMatrix<f64>,
    tgt: &'a DMatrix<f64>,
    k_density: usize,
    /// `r_T` for each source row.
    src_density: Vec<f64>,
    /// `r_S` for each target row.
    tgt_density: Vec<f64>,
}

impl<'a> CslsIndex<'a> {
    pub fn new(src: &'a DMatrix<f64>, tgt: &'a DMatrix<f64>, k_density: usize) -> Result<Self> {
        check_pair(src, tgt)?;
        if src.nrows() == 0 {
            return Err(Error::InvalidArgument("no source rows".into()));
        }
        if k_density == 0 || k_density > tgt.nrows() || k_density > src.nrows() {
            return Err(Error::InvalidArgument(format!(
                "k_density = {k_density} with {} source and {} target rows",
                src.nrows(),
                tgt.nrows()
            )));
        }
        let src_density = scan(src, tgt, |_, sims| mean_top_k(sims, k_density));
        let tgt_density = scan(tgt, src, |_, sims| mean_top_k(sims, k_density));
        Ok(CslsIndex {
            src,
            tgt,
            k_density,
            src_density,
            tgt_density,
        })
    }

    pub fn k_density(&self) -> usize {
        self.k_density
    }

    pub fn source_len(&self) -> usize {
        self.src.nrows()
    }

    pub fn target_len(&self) -> usize {
        self.tgt.nrows()
    }

    pub fn source_density(&self) -> &[f64] {
        &self.src_density
    }

    pub fn target_density(&self) -> &[f64] {
        &self.tgt_density
    }

    pub fn cosine(&self, src_row: usize, tgt_row: usize) -> f64 {
        self.src.row(src_row).dot(&self.tgt.row(tgt_row))
    }

    pub fn score(&self, src_row: usize, tgt_row: usize) -> f64 {
        2.0 * self.cosine(src_row, tgt_row) - self.src_density[src_row] - self.tgt_density[tgt_row]
    }

    /// Top-`k` target rows for the given source rows.
    pub fn topk(&self, src_rows: &[usize], k: usize) -> Vec<Vec<Neighbor>> {
        let queries = self.src.select_rows(src_rows);
        scan(&queries, self.tgt, |q, sims| {
            let r = self.src_density[src_rows[q]];
            let scores: Vec<f64> = sims
                .iter()
                .zip(&self.tgt_density)
                .map(|(c, d)| 2.0 * c - r - d)
                .collect();
            top_k(&scores, k)
        })
    }

    /// Best source row for each of the given target rows.
    pub fn reverse_top1(&self, tgt_rows: &[usize]) -> Vec<Neighbor> {
        let queries = self.tgt.select_rows(tgt_rows);
        scan(&queries, self.src, |q, sims| {
            let r = self.tgt_density[tgt_rows[q]];
            let scores: Vec<f64> = sims
                .iter()
                .zip(&self.src_density)
                .map(|(c, d)| 2.0 * c - r - d)
                .collect();
            top_k(&scores, 1)[0]
        })
    }
}

/// Exact top-`k_out` targets under CSLS for every mapped source row.
pub fn csls_topk(
    mapped_src: &DMatrix<f64>,
    tgt: &DMatrix<f64>,
    k_out: usize,
    k_density: usize,
) -> Result<NeighborList> {
    let index = CslsIndex::new(mapped_src, tgt, k_density)?;
    if k_out == 0 || k_out > tgt.nrows() {
        return Err(Error::InvalidArgument(format!(
            "k = {k_out} with {} keys",
            tgt.nrows()
        )));
    }
    let all: Vec<usize> = (0..mapped_src.nrows()).collect();
    Ok(NeighborList {
        metric: Metric::Csls { k_density },
        rows: index.topk(&all, k_out),
    })
}

/// Which frequency ranks a candidate pair must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankFilter {
    /// Source and target rank both below `rank_max`.
    Both,
    /// Only the source rank is constrained.
    SourceOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InduceParams {
    pub rank_max: usize,
    pub mutual: bool,
    pub filter: RankFilter,
}

impl Default for InduceParams {
    fn default() -> Self {
        InduceParams {
            rank_max: DEFAULT_RANK_MAX,
            mutual: true,
            filter: RankFilter::Both,
        }
    }
}

/// Pairs each of the first `rank_max` source rows with its CSLS top-1 target,
/// keeping pairs that pass the rank filter and, if `mutual`, whose target
/// also picks the source back.
pub fn induce_pairs(index: &CslsIndex<'_>, params: &InduceParams) -> Vec<(usize, usize)> {
    let n_src = index.source_len();
    let n_tgt = index.target_len();
    if params.rank_max > n_src || (params.filter == RankFilter::Both && params.rank_max > n_tgt) {
        log::warn!(
            "rank_max {} exceeds vocabulary ({n_src} source, {n_tgt} target); clamping",
            params.rank_max
        );
    }
    let sources: Vec<usize> = (0..params.rank_max.min(n_src)).collect();
    let forward = index.topk(&sources, 1);
    let mut pairs: Vec<(usize, usize)> = sources
        .iter()
        .zip(&forward)
        .map(|(&i, best)| (i, best[0].index))
        .filter(|&(_, j)| params.filter == RankFilter::SourceOnly || j < params.rank_max)
        .collect();
    if params.mutual {
        let targets: Vec<usize> = pairs.iter().map(|&(_, j)| j).collect();
        let back = index.reverse_top1(&targets);
        pairs = pairs
            .into_iter()
            .zip(back)
            .filter(|((i, _), b)| b.index == *i)
            .map(|(p, _)| p)
            .collect();
    }
    pairs
}

/// Induces a lexicon from `src` mapped by `map` into `tgt`.
pub fn induce_dictionary(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    map: &OrthogonalMap,
    k_density: usize,
    params: &InduceParams,
) -> Result<PairLexicon> {
    let mapped = map.apply(src.vectors())?;
    let index = CslsIndex::new(&mapped, tgt.vectors(), k_density)?;
    Ok(PairLexicon {
        src_space: src.lang().to_owned(),
        tgt_space: tgt.lang().to_owned(),
        pairs: induce_pairs(&index, params),
        unique: true,
    })
}

/// Ranked target rows for selected source rows under `map`.
pub fn rank_targets(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    map: &OrthogonalMap,
    src_rows: &[usize],
    k: usize,
    metric: Metric,
) -> Result<Vec<Vec<Neighbor>>> {
    if let Some(&index) = src_rows.iter().find(|&&i| i >= src.len()) {
        return Err(Error::OutOfRange { index, len: src.len() });
    }
    if k == 0 || k > tgt.len() {
        return Err(Error::InvalidArgument(format!("k = {k} with {} targets", tgt.len())));
    }
    let mapped = map.apply(src.vectors())?;
    match metric {
        Metric::Cosine => {
            let queries = mapped.select_rows(src_rows);
            Ok(cosine_topk(&queries, tgt.vectors(), k)?.rows)
        }
        Metric::Csls { k_density } => {
            let index = CslsIndex::new(&mapped, tgt.vectors(), k_density)?;
            Ok(index.topk(src_rows, k))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Translation {
    Oov(String),
    Ranked {
        word: String,
        candidates: Vec<(String, f64)>,
    },
}

/// Token-level retrieval: ranked target words for each source word.
pub fn translate_topk(
    words: &[&str],
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    map: &OrthogonalMap,
    k: usize,
    metric: Metric,
) -> Result<Vec<Translation>> {
    let rows: Vec<usize> = words.iter().filter_map(|w| src.lookup(w)).collect();
    let mut ranked = if rows.is_empty() {
        Vec::new()
    } else {
        rank_targets(src, tgt, map, &rows, k, metric)?
    }
    .into_iter();
    Ok(words
        .iter()
        .map(|&w| match src.lookup(w) {
            None => Translation::Oov(w.to_owned()),
            Some(_) => {
                let hits = ranked.next().unwrap_or_default();
                Translation::Ranked {
                    word: w.to_owned(),
                    candidates: hits
                        .into_iter()
                        .map(|n| (tgt.word(n.index).to_owned(), n.score))
                        .collect(),
                }
            }
        })
        .collect())
}
