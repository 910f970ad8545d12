//! Brute-force reference implementations for retrieval, written as plain
//! loops over `Vec<Vec<f64>>` so they share no code with the library.

#![allow(dead_code)]

use nalgebra::DMatrix;

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

pub fn cosine_table(src: &[Vec<f64>], tgt: &[Vec<f64>]) -> Vec<Vec<f64>> {
    src.iter().map(|a| tgt.iter().map(|b| cosine(a, b)).collect()).collect()
}

/// Indices of the `k` largest scores; equal scores go to the lower index.
pub fn argsort_top(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

fn mean_top(values: Vec<f64>, k: usize) -> f64 {
    let mut v = values;
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let k = k.min(v.len());
    v[..k].iter().sum::<f64>() / k as f64
}

pub fn cosine_topk_oracle(src: &[Vec<f64>], tgt: &[Vec<f64>], k: usize) -> Vec<Vec<usize>> {
    cosine_table(src, tgt).iter().map(|r| argsort_top(r, k)).collect()
}

/// CSLS score table with neighbourhood densities over the full spaces.
pub fn csls_table(src: &[Vec<f64>], tgt: &[Vec<f64>], k_density: usize) -> Vec<Vec<f64>> {
    let cos = cosine_table(src, tgt);
    let r_src: Vec<f64> = cos.iter().map(|r| mean_top(r.clone(), k_density)).collect();
    let r_tgt: Vec<f64> = (0..tgt.len())
        .map(|j| mean_top(cos.iter().map(|r| r[j]).collect(), k_density))
        .collect();
    cos.iter()
        .enumerate()
        .map(|(i, r)| r.iter().enumerate().map(|(j, c)| 2.0 * c - r_src[i] - r_tgt[j]).collect())
        .collect()
}

pub fn csls_topk_oracle(src: &[Vec<f64>], tgt: &[Vec<f64>], k: usize, k_density: usize) -> Vec<Vec<usize>> {
    csls_table(src, tgt, k_density).iter().map(|r| argsort_top(r, k)).collect()
}

/// Forward CSLS top-1 for the first `rank_max` sources, target rank filter
/// optional, mutual check against every source.
pub fn induce_oracle(
    src: &[Vec<f64>],
    tgt: &[Vec<f64>],
    k_density: usize,
    rank_max: usize,
    filter_targets: bool,
    mutual: bool,
) -> Vec<(usize, usize)> {
    let table = csls_table(src, tgt, k_density);
    let mut out = Vec::new();
    for (i, row) in table.iter().enumerate().take(rank_max) {
        let j = argsort_top(row, 1)[0];
        if filter_targets && j >= rank_max {
            continue;
        }
        if mutual {
            let column: Vec<f64> = table.iter().map(|r| r[j]).collect();
            if argsort_top(&column, 1)[0] != i {
                continue;
            }
        }
        out.push((i, j));
    }
    out
}
