//! Precision@k and the Procrustes-fit diagnostic.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::embedspace::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::lexicon::{Coverage, PairLexicon};
use crate::retrieval::{rank_targets, Metric};
use crate::solver::{compose_to_target, gpa_solve, procrustes_solve, GpaInit, GpaParams, OrthogonalMap};
use crate::trainer::Mode;

/// Precision per `k`, in percent, over unique source types.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub p_at: BTreeMap<usize, f64>,
    pub evaluated: usize,
    /// Source types dropped because a word was out of vocabulary.
    pub skipped: usize,
}

impl EvalResult {
    pub fn coverage(&self) -> f64 {
        self.evaluated as f64 / (self.evaluated + self.skipped) as f64
    }

    pub fn at(&self, k: usize) -> Option<f64> {
        self.p_at.get(&k).copied()
    }

    /// `metric<TAB>k<TAB>value<TAB>coverage`, one line per k.
    pub fn machine_lines(&self, metric: &str) -> String {
        let mut out = String::new();
        for (k, p) in &self.p_at {
            let _ = writeln!(out, "{metric}\t{k}\t{p:.2}\t{:.4}", self.coverage());
        }
        out
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:>6} {:>8}", "k", "P@k");
        for (k, p) in &self.p_at {
            let _ = writeln!(out, "{k:>6} {p:>8.2}");
        }
        let _ = writeln!(
            out,
            "evaluated {} source words, skipped {} OOV (coverage {:.2}%)",
            self.evaluated,
            self.skipped,
            100.0 * self.coverage()
        );
        out
    }
}

/// Scores ranked candidates against a gold lexicon.
///
/// A source type is correct at `k` when any of its gold targets is among its
/// first `k` candidates. `ranked` must hold at least `max(ks)` candidates for
/// every source row in `test`.
pub fn precision_at_k(
    test: &PairLexicon,
    skipped: usize,
    ranked: &HashMap<usize, Vec<usize>>,
    ks: &[usize],
) -> Result<EvalResult> {
    let gold = test.by_source();
    if gold.is_empty() {
        return Err(Error::EmptyLexicon("no evaluable source words".into()));
    }
    let max_k = ks.iter().copied().max().unwrap_or(0);
    if ks.contains(&0) || max_k == 0 {
        return Err(Error::InvalidArgument("k values must be positive".into()));
    }

    let mut correct: BTreeMap<usize, usize> = ks.iter().map(|&k| (k, 0)).collect();
    for (src, targets) in &gold {
        let cands = ranked
            .get(src)
            .ok_or_else(|| Error::InvalidArgument(format!("no candidates for source row {src}")))?;
        if cands.len() < max_k {
            return Err(Error::InvalidArgument(format!(
                "{} candidates for source row {src}, need {max_k}",
                cands.len()
            )));
        }
        let first_hit = cands.iter().position(|c| targets.contains(c));
        for (&k, hits) in correct.iter_mut() {
            if first_hit.is_some_and(|r| r < k) {
                *hits += 1;
            }
        }
    }
    let n = gold.len();
    Ok(EvalResult {
        p_at: correct
            .into_iter()
            .map(|(k, c)| (k, 100.0 * c as f64 / n as f64))
            .collect(),
        evaluated: n,
        skipped,
    })
}

/// Retrieves candidates for every test source word under `map` and scores
/// them.
pub fn evaluate_map(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    map: &OrthogonalMap,
    test: &PairLexicon,
    coverage: Option<&Coverage>,
    ks: &[usize],
    metric: Metric,
) -> Result<EvalResult> {
    let rows: Vec<usize> = test.by_source().into_iter().map(|(s, _)| s).collect();
    if rows.is_empty() {
        return Err(Error::EmptyLexicon("no evaluable source words".into()));
    }
    let max_k = ks.iter().copied().max().unwrap_or(1);
    let ranked = rank_targets(src, tgt, map, &rows, max_k, metric)?;
    let ranked: HashMap<usize, Vec<usize>> = rows
        .into_iter()
        .zip(ranked)
        .map(|(s, r)| (s, r.into_iter().map(|n| n.index).collect()))
        .collect();
    let skipped = coverage.map_or(0, Coverage::skipped_source_types);
    precision_at_k(test, skipped, &ranked, ks)
}

/// Fits one supervised alignment on `test` and evaluates on the same lexicon.
///
/// GPA still runs its full inner loop; there is no bootstrapping.
#[allow(clippy::too_many_arguments)]
pub fn procrustes_fit(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    test: &PairLexicon,
    coverage: Option<&Coverage>,
    mode: Mode,
    gpa: &GpaParams,
    rng_seed: u64,
    ks: &[usize],
    metric: Metric,
) -> Result<EvalResult> {
    let map = fit_map(src, tgt, test, mode, gpa, rng_seed)?;
    evaluate_map(src, tgt, &map, test, coverage, ks, metric)
}

/// The supervised source→target map behind [`procrustes_fit`].
pub fn fit_map(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    lexicon: &PairLexicon,
    mode: Mode,
    gpa: &GpaParams,
    rng_seed: u64,
) -> Result<OrthogonalMap> {
    if lexicon.is_empty() {
        return Err(Error::EmptyLexicon("empty fit lexicon".into()));
    }
    let e = src.gather_rows(&lexicon.pairs.iter().map(|p| p.0).collect::<Vec<_>>())?;
    let f = tgt.gather_rows(&lexicon.pairs.iter().map(|p| p.1).collect::<Vec<_>>())?;
    match mode {
        Mode::Pa => procrustes_solve(&e, &f),
        Mode::Gpa => {
            let state = gpa_solve(&[e, f], gpa, GpaInit::Random { seed: rng_seed })?;
            compose_to_target(&state.transforms[0], &state.transforms[1])
        }
        other => Err(Error::InvalidArgument(format!("fit test supports pa and gpa, not {other}"))),
    }
}
