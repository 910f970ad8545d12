//! Synthetic spaces with a planted orthogonal map, for oracle tests.
//!
//! Generation is seed-driven with ChaCha8. Every seed feeds independent
//! ChaCha streams:
//!
//! * stream 0: source rows, i.i.d. standard normal, then unit-normalized;
//! * stream 1: the planted map, Haar-distributed via QR of a Gaussian matrix;
//! * stream 2: noise, i.i.d. standard normal scaled by `sigma / sqrt(d)`.
//!
//! The noise scaling makes the expected noise norm per row equal to `sigma`,
//! so `sigma` reads as a perturbation relative to the unit-norm signal.
//! Target rows are re-normalized after noise when `sigma > 0`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::embedspace::{normalize_rows, EmbeddingSpace};
use crate::error::Result;
use crate::solver::OrthogonalMap;

const SOURCE_STREAM: u64 = 0;
const MAP_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    // from_fn fills column-major; generate row-major so rows do not depend on N.
    let data: Vec<f64> = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    DMatrix::from_row_slice(rows, cols, &data)
}

/// A Haar-random orthogonal matrix. The determinant may be either sign.
pub fn random_orthogonal(dim: usize, seed: u64) -> OrthogonalMap {
    haar(dim, &mut rng(seed, MAP_STREAM))
}

fn haar(dim: usize, rng: &mut ChaCha8Rng) -> OrthogonalMap {
    let a = gaussian(dim, dim, rng);
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    OrthogonalMap::from_matrix_unchecked(q)
}

#[derive(Debug, Clone)]
pub struct SyntheticPair {
    pub source: DMatrix<f64>,
    pub target: DMatrix<f64>,
    pub planted: OrthogonalMap,
    pub sigma: f64,
    pub seed: u64,
}

/// Source rows `E`, target `F = E Q + noise`, row `i` of both paired.
pub fn make_synthetic_pair(n: usize, dim: usize, sigma: f64, seed: u64) -> SyntheticPair {
    if n < dim {
        log::warn!("synthetic pair with {n} rows in {dim} dimensions");
    }
    let source = unit_rows(gaussian(n, dim, &mut rng(seed, SOURCE_STREAM)));
    let planted = random_orthogonal(dim, seed);
    let target = perturb(&source * planted.matrix(), sigma, &mut rng(seed, NOISE_STREAM));
    SyntheticPair {
        source,
        target,
        planted,
        sigma,
        seed,
    }
}

/// A base space plus `count - 1` noisy rotated copies, all row-paired.
///
/// Copy `c` uses the planted map of seed `seed + c` and noise from that
/// seed's noise stream; element 0 is the base with an identity map.
pub fn make_synthetic_family(n: usize, dim: usize, sigma: f64, count: usize, seed: u64) -> Vec<(DMatrix<f64>, OrthogonalMap)> {
    let base = unit_rows(gaussian(n, dim, &mut rng(seed, SOURCE_STREAM)));
    let mut family = vec![(base.clone(), OrthogonalMap::identity(dim))];
    for c in 1..count as u64 {
        let q = random_orthogonal(dim, seed + c);
        let m = perturb(&base * q.matrix(), sigma, &mut rng(seed + c, NOISE_STREAM));
        family.push((m, q));
    }
    family
}

fn unit_rows(mut m: DMatrix<f64>) -> DMatrix<f64> {
    // A Gaussian row is zero with probability 0.
    normalize_rows(&mut m).expect("zero Gaussian row");
    m
}

fn perturb(mut m: DMatrix<f64>, sigma: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    if sigma > 0.0 {
        let scale = sigma / (m.ncols() as f64).sqrt();
        m += gaussian(m.nrows(), m.ncols(), rng) * scale;
        m = unit_rows(m);
    }
    m
}

/// Tokens `w0 .. w{n-1}`.
pub fn synthetic_words(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("w{i}")).collect()
}

impl SyntheticPair {
    /// Both sides as embedding spaces sharing the token list `w0..`.
    pub fn to_spaces(&self) -> Result<(EmbeddingSpace, EmbeddingSpace)> {
        let words = synthetic_words(self.source.nrows());
        let mut src = EmbeddingSpace::new("src", words.clone(), self.source.clone())?;
        let mut tgt = EmbeddingSpace::new("tgt", words, self.target.clone())?;
        src.normalize()?;
        tgt.normalize()?;
        Ok((src, tgt))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::procrustes_solve;

    #[test]
    fn one_dimensional_is_sign() {
        for seed in 0..10 {
            let q = random_orthogonal(1, seed);
            assert_eq!(q.matrix()[(0, 0)].abs(), 1.0);
        }
    }

    #[test]
    fn orthogonal_across_seeds() {
        for seed in 0..100 {
            let q = random_orthogonal(50, seed);
            assert!(q.orthogonality_error() <= 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn reproducible() {
        assert_eq!(random_orthogonal(8, 3), random_orthogonal(8, 3));
        assert_ne!(random_orthogonal(8, 3), random_orthogonal(8, 4));
        let a = make_synthetic_pair(20, 4, 0.2, 5);
        let b = make_synthetic_pair(20, 4, 0.2, 5);
        assert_eq!(a.source, b.source);
        assert_eq!(a.target, b.target);
    }

    #[test]
    fn noiseless_pair_is_exact() {
        let p = make_synthetic_pair(100, 8, 0.0, 1);
        assert!((&p.source * p.planted.matrix() - &p.target).abs().max() <= 1e-12);
        for row in p.source.row_iter() {
            assert!((row.norm() - 1.0).abs() < 1e-12);
        }
        let t = procrustes_solve(&p.source, &p.target).unwrap();
        assert!((t.matrix() - p.planted.matrix()).norm() <= 1e-4);
    }

    #[test]
    fn heavy_noise_loses_the_map() {
        let far = (0..10)
            .filter(|&seed| {
                let p = make_synthetic_pair(100, 8, 10.0, seed);
                let t = procrustes_solve(&p.source, &p.target).unwrap();
                (t.matrix() - p.planted.matrix()).norm() > 0.5
            })
            .count();
        assert!(far >= 9, "only {far}/10 seeds degraded");
    }

    #[test]
    fn recovery_error_grows_with_noise() {
        let median_err = |sigma: f64| {
            let mut errs: Vec<f64> = (0..10)
                .map(|seed| {
                    let p = make_synthetic_pair(200, 10, sigma, seed);
                    let t = procrustes_solve(&p.source, &p.target).unwrap();
                    (t.matrix() - p.planted.matrix()).norm()
                })
                .collect();
            errs.sort_by(f64::total_cmp);
            (errs[4] + errs[5]) / 2.0
        };
        let grid: Vec<f64> = [0.0, 0.1, 0.3, 1.0].iter().map(|&s| median_err(s)).collect();
        assert!(grid.windows(2).all(|w| w[0] < w[1]), "{grid:?}");
    }

    #[test]
    fn family_members_are_rotations_of_base() {
        let fam = make_synthetic_family(30, 5, 0.0, 3, 2);
        assert_eq!(fam.len(), 3);
        for (m, q) in &fam[1..] {
            assert!((&fam[0].0 * q.matrix() - m).abs().max() <= 1e-12);
        }
    }

    #[test]
    fn exported_spaces_use_w_tokens() {
        let p = make_synthetic_pair(5, 3, 0.0, 0);
        let (s, t) = p.to_spaces().unwrap();
        assert_eq!(s.word(4), "w4");
        assert_eq!(t.lookup("w2"), Some(2));
    }
}
