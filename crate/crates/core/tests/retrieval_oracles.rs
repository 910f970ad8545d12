mod common;

use nalgebra::DMatrix;
use procrustes_bdi::retrieval::{cosine_topk, csls_topk, induce_pairs, CslsIndex, InduceParams, RankFilter};
use procrustes_bdi::synthkit::make_synthetic_pair;

use common::*;

fn instance(n: usize, dim: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let p = make_synthetic_pair(n, dim, 0.7, seed);
    (p.source, p.target)
}

#[test]
fn cosine_topk_matches_brute_force() {
    for seed in 0..10 {
        let (s, t) = instance(30 + seed as usize, 6, seed);
        let got = cosine_topk(&s, &t, 5).unwrap();
        assert_eq!(got.indices(), cosine_topk_oracle(&rows(&s), &rows(&t), 5), "seed {seed}");
        let table = cosine_table(&rows(&s), &rows(&t));
        for (i, r) in got.rows.iter().enumerate() {
            for n in r {
                assert!((n.score - table[i][n.index]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn csls_topk_matches_brute_force() {
    for seed in 0..10 {
        let (s, t) = instance(40, 5, seed);
        for k_density in [1, 3, 10] {
            let got = csls_topk(&s, &t, 4, k_density).unwrap();
            let table = csls_table(&rows(&s), &rows(&t), k_density);
            assert_eq!(got.indices(), csls_topk_oracle(&rows(&s), &rows(&t), 4, k_density));
            for (i, r) in got.rows.iter().enumerate() {
                for n in r {
                    assert!((n.score - table[i][n.index]).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn induction_matches_brute_force() {
    for seed in 0..10 {
        let (s, t) = instance(45, 4, seed);
        let index = CslsIndex::new(&s, &t, 5).unwrap();
        for rank_max in [10, 30, 45] {
            for (filter, filter_targets) in [(RankFilter::Both, true), (RankFilter::SourceOnly, false)] {
                for mutual in [true, false] {
                    let params = InduceParams { rank_max, mutual, filter };
                    let want = induce_oracle(&rows(&s), &rows(&t), 5, rank_max, filter_targets, mutual);
                    assert_eq!(induce_pairs(&index, &params), want, "seed {seed} rank {rank_max}");
                }
            }
        }
    }
}

#[test]
fn ties_go_to_lower_index() {
    let s = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
    let t = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 1.0, 0.0, 1.0, 0.0]);
    let got = cosine_topk(&s, &t, 3).unwrap();
    assert_eq!(got.indices(), vec![vec![1, 2, 0]]);
}

#[test]
fn blocks_do_not_change_results() {
    // more than one 256-row query block
    let (s, t) = instance(600, 8, 3);
    let got = csls_topk(&s, &t, 2, 10).unwrap();
    let want = csls_topk_oracle(&rows(&s), &rows(&t), 2, 10);
    assert_eq!(got.indices(), want);
}
