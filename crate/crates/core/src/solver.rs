//! Orthogonal Procrustes and Generalized Procrustes solvers.
//!
//! Convention: embeddings are row vectors and transforms multiply on the
//! right, so a space `E` is mapped as `E * T`. Under that convention the
//! minimizer of `||E T - F||_F` over orthogonal `T` comes from the SVD
//! `F^T E = U S V^T` as `T = V U^T`. No determinant constraint is imposed,
//! so reflections are valid solutions.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Largest tolerated entry of `T^T T - I`.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-6;

/// Default number of alternating GPA rounds.
pub const DEFAULT_INNER_ITERS: usize = 100;

/// Relative objective improvement below which GPA stops early.
pub const DEFAULT_GPA_TOLERANCE: f64 = 1e-9;

/// A square orthogonal transform applied on the right of row-vector matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMap {
    matrix: DMatrix<f64>,
}

impl OrthogonalMap {
    /// Wraps `matrix`, rejecting it unless it is square, finite and orthogonal
    /// within [`ORTHOGONALITY_TOLERANCE`].
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::Shape(format!(
                "transform must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("transform".into()));
        }
        let map = OrthogonalMap { matrix };
        let err = map.orthogonality_error();
        if err > ORTHOGONALITY_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "transform is not orthogonal (max |T^T T - I| = {err:e})"
            )));
        }
        Ok(map)
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<f64>) -> Self {
        OrthogonalMap { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        OrthogonalMap {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn transpose(&self) -> Self {
        OrthogonalMap {
            matrix: self.matrix.transpose(),
        }
    }

    /// Maps every row of `x`: returns `x * T`.
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::Shape(format!(
                "cannot map {}-dimensional rows with a {}-dimensional transform",
                x.ncols(),
                self.dim()
            )));
        }
        Ok(x * &self.matrix)
    }

    /// `max |T^T T - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let gram = self.matrix.tr_mul(&self.matrix);
        let d = self.dim();
        (gram - DMatrix::<f64>::identity(d, d)).abs().max()
    }

    /// Writes the transform as text: a `d d` header, then `d` rows of `d`
    /// floats with 9 significant digits.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let d = self.dim();
        writeln!(w, "{d} {d}")?;
        for row in self.matrix.row_iter() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.8e}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_from<R: BufRead>(reader: R, source: &Path) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: source.to_path_buf(),
            line,
            msg,
        };
        let mut lines = reader.lines();
        let header = lines
            .next()
            .transpose()
            .map_err(|e| Error::io(source, e))?
            .ok_or_else(|| parse_err(1, "missing header".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|f| f.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(1, format!("malformed header {header:?}")))?;
        let d = match dims.as_slice() {
            [a, b] if a == b && *a > 0 => *a,
            _ => return Err(parse_err(1, format!("expected square header, got {header:?}"))),
        };
        let mut data = Vec::with_capacity(d * d);
        for i in 0..d {
            let line = lines
                .next()
                .transpose()
                .map_err(|e| Error::io(source, e))?
                .ok_or_else(|| parse_err(i + 2, "missing row".into()))?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| parse_err(i + 2, "invalid number".into()))?;
            if row.len() != d {
                return Err(parse_err(i + 2, format!("expected {d} values, found {}", row.len())));
            }
            data.extend(row);
        }
        OrthogonalMap::new(DMatrix::from_row_slice(d, d, &data))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file), path)
    }
}

/// `M = U diag(S) V^T` with `S` sorted descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd_square(m: &DMatrix<f64>) -> Result<Svd> {
    if !m.is_square() {
        return Err(Error::Shape(format!("expected square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("SVD input".into()));
    }
    // try_new returns singular values sorted in descending order.
    let svd = SVD::try_new(m.clone(), true, true, f64::EPSILON, 0).ok_or(Error::Convergence)?;
    let u = svd.u.ok_or(Error::Convergence)?;
    let v_t = svd.v_t.ok_or(Error::Convergence)?;
    Ok(Svd {
        u,
        singular_values: svd.singular_values.iter().copied().collect(),
        v: v_t.transpose(),
    })
}

/// Orthogonal `T` minimizing `||E T - F||_F`.
pub fn procrustes_solve(e: &DMatrix<f64>, f: &DMatrix<f64>) -> Result<OrthogonalMap> {
    if e.shape() != f.shape() {
        return Err(Error::Shape(format!(
            "paired matrices differ: {:?} vs {:?}",
            e.shape(),
            f.shape()
        )));
    }
    if e.nrows() == 0 || e.ncols() == 0 {
        return Err(Error::Shape("empty paired matrices".into()));
    }
    if e.nrows() < e.ncols() {
        log::warn!(
            "only {} pairs for {} dimensions; the alignment is underdetermined",
            e.nrows(),
            e.ncols()
        );
    }
    procrustes_unchecked(e, f)
}

fn procrustes_unchecked(e: &DMatrix<f64>, f: &DMatrix<f64>) -> Result<OrthogonalMap> {
    let svd = svd_square(&f.tr_mul(e))?;
    Ok(OrthogonalMap::from_matrix_unchecked(&svd.v * svd.u.transpose()))
}

/// `T_src * T_tgt^T`: maps source rows straight into the target space.
pub fn compose_to_target(src: &OrthogonalMap, tgt: &OrthogonalMap) -> Result<OrthogonalMap> {
    if src.dim() != tgt.dim() {
        return Err(Error::Shape(format!(
            "cannot compose {}- and {}-dimensional transforms",
            src.dim(),
            tgt.dim()
        )));
    }
    Ok(OrthogonalMap::from_matrix_unchecked(src.matrix() * tgt.matrix().transpose()))
}

/// Result of a GPA run.
#[derive(Debug, Clone)]
pub struct GpaState {
    pub transforms: Vec<OrthogonalMap>,
    /// Mean of the transformed spaces after the last round.
    pub latent: DMatrix<f64>,
    /// Pairwise objective after every round.
    pub objective_trace: Vec<f64>,
    /// Space used to seed the latent mean, when it was not warm-started.
    pub init_index: Option<usize>,
}

impl GpaState {
    pub fn final_objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpaParams {
    pub inner_iters: usize,
    /// Stop once a round improves the objective by less than this fraction.
    pub tolerance: Option<f64>,
}

impl Default for GpaParams {
    fn default() -> Self {
        GpaParams {
            inner_iters: DEFAULT_INNER_ITERS,
            tolerance: Some(DEFAULT_GPA_TOLERANCE),
        }
    }
}

/// Starting point for the latent mean.
#[derive(Debug, Clone)]
pub enum GpaInit {
    /// `G = E_i` for `i` drawn uniformly with the given seed.
    Random { seed: u64 },
    /// `G = E_i` for a fixed `i`.
    Index(usize),
    /// `G` is the mean of the spaces under these transforms.
    Warm(Vec<OrthogonalMap>),
}

/// Aligns `k >= 2` paired matrices to their common mean.
///
/// Each round first re-solves every `T_i` against the current mean, then
/// recomputes the mean; the pairwise objective is recorded after each round.
pub fn gpa_solve(matrices: &[DMatrix<f64>], params: &GpaParams, init: GpaInit) -> Result<GpaState> {
    let k = matrices.len();
    if k < 2 {
        return Err(Error::InvalidArgument(format!("GPA needs at least 2 spaces, got {k}")));
    }
    let shape = matrices[0].shape();
    if shape.0 == 0 || shape.1 == 0 {
        return Err(Error::Shape("empty paired matrices".into()));
    }
    if let Some(m) = matrices.iter().find(|m| m.shape() != shape) {
        return Err(Error::Shape(format!("GPA inputs differ: {:?} vs {:?}", shape, m.shape())));
    }
    if params.inner_iters == 0 {
        return Err(Error::InvalidArgument("inner_iters must be positive".into()));
    }
    if shape.0 < shape.1 {
        log::warn!(
            "only {} pairs for {} dimensions; the alignment is underdetermined",
            shape.0,
            shape.1
        );
    }

    let (mut latent, init_index) = match init {
        GpaInit::Random { seed } => {
            let i = ChaCha8Rng::seed_from_u64(seed).random_range(0..k);
            (matrices[i].clone(), Some(i))
        }
        GpaInit::Index(i) => {
            if i >= k {
                return Err(Error::OutOfRange { index: i, len: k });
            }
            (matrices[i].clone(), Some(i))
        }
        GpaInit::Warm(transforms) => {
            if transforms.len() != k {
                return Err(Error::InvalidArgument(format!(
                    "warm start has {} transforms for {k} spaces",
                    transforms.len()
                )));
            }
            if transforms.iter().any(|t| t.dim() != shape.1) {
                return Err(Error::Shape("warm-start transform dimension".into()));
            }
            (latent_mean(matrices, &transforms), None)
        }
    };

    let mut transforms = Vec::with_capacity(k);
    let mut trace = Vec::with_capacity(params.inner_iters);
    for _ in 0..params.inner_iters {
        transforms = matrices
            .par_iter()
            .map(|e| procrustes_unchecked(e, &latent))
            .collect::<Result<Vec<_>>>()?;
        let mapped: Vec<DMatrix<f64>> = matrices
            .iter()
            .zip(&transforms)
            .map(|(e, t)| e * t.matrix())
            .collect();
        latent = mean_of(&mapped);
        let objective = pairwise_sq_distance(&mapped);
        let previous = trace.last().copied();
        trace.push(objective);
        if let (Some(tol), Some(prev)) = (params.tolerance, previous) {
            if prev - objective <= tol * prev {
                break;
            }
        }
    }

    Ok(GpaState {
        transforms,
        latent,
        objective_trace: trace,
        init_index,
    })
}

/// `sum_{i<j} ||E_i T_i - E_j T_j||_F^2`.
pub fn gpa_objective(matrices: &[DMatrix<f64>], transforms: &[OrthogonalMap]) -> Result<f64> {
    check_pairing(matrices, transforms)?;
    let mapped: Vec<DMatrix<f64>> = matrices
        .iter()
        .zip(transforms)
        .map(|(e, t)| e * t.matrix())
        .collect();
    Ok(pairwise_sq_distance(&mapped))
}

/// `G = (1/k) sum_i E_i T_i`.
pub fn latent_mean(matrices: &[DMatrix<f64>], transforms: &[OrthogonalMap]) -> DMatrix<f64> {
    let mapped: Vec<DMatrix<f64>> = matrices
        .iter()
        .zip(transforms)
        .map(|(e, t)| e * t.matrix())
        .collect();
    mean_of(&mapped)
}

fn check_pairing(matrices: &[DMatrix<f64>], transforms: &[OrthogonalMap]) -> Result<()> {
    if matrices.len() != transforms.len() || matrices.is_empty() {
        return Err(Error::Shape(format!(
            "{} matrices for {} transforms",
            matrices.len(),
            transforms.len()
        )));
    }
    let shape = matrices[0].shape();
    for (m, t) in matrices.iter().zip(transforms) {
        if m.shape() != shape || t.dim() != shape.1 {
            return Err(Error::Shape("inconsistent GPA shapes".into()));
        }
    }
    Ok(())
}

fn mean_of(mapped: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut sum = mapped[0].clone();
    for m in &mapped[1..] {
        sum += m;
    }
    sum / mapped.len() as f64
}

fn pairwise_sq_distance(mapped: &[DMatrix<f64>]) -> f64 {
    let mut total = 0.0;
    for i in 0..mapped.len() {
        for j in i + 1..mapped.len() {
            total += (&mapped[i] - &mapped[j]).norm_squared();
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthkit::random_orthogonal;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn svd_identity_and_diagonal() {
        let s = svd_square(&DMatrix::identity(4, 4)).unwrap();
        assert!(s.singular_values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        let uv = &s.u * s.v.transpose();
        assert!((uv - DMatrix::<f64>::identity(4, 4)).abs().max() < 1e-12);

        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 2.0, 1.0]));
        let s = svd_square(&d).unwrap();
        for (got, want) in s.singular_values.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn svd_reconstructs_and_sorts() {
        let m = gaussian(7, 7, 3);
        let s = svd_square(&m).unwrap();
        let rebuilt = &s.u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s.singular_values.clone())) * s.v.transpose();
        assert!((rebuilt - &m).abs().max() <= 1e-6 * m.abs().max());
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        assert!(s.singular_values.iter().all(|&v| v >= 0.0));
        assert!(OrthogonalMap::from_matrix_unchecked(s.u).orthogonality_error() < 1e-10);
        assert!(OrthogonalMap::from_matrix_unchecked(s.v).orthogonality_error() < 1e-10);
    }

    #[test]
    fn svd_rejects_bad_input() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = f64::INFINITY;
        assert!(matches!(svd_square(&m), Err(Error::NonFinite(_))));
        assert!(matches!(svd_square(&DMatrix::zeros(2, 3)), Err(Error::Shape(_))));
    }

    #[test]
    fn procrustes_identity_case() {
        let e = gaussian(30, 5, 1);
        let t = procrustes_solve(&e, &e).unwrap();
        assert!((t.matrix() - DMatrix::<f64>::identity(5, 5)).abs().max() <= 1e-6);
    }

    #[test]
    fn procrustes_quarter_turn() {
        let e = DMatrix::<f64>::identity(2, 2);
        let f = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let t = procrustes_solve(&e, &f).unwrap();
        assert!((t.matrix() - &f).abs().max() <= 1e-12);
    }

    #[test]
    fn procrustes_recovers_planted_rotation() {
        let e = gaussian(200, 10, 7);
        let q = random_orthogonal(10, 99);
        let f = &e * q.matrix();
        let t = procrustes_solve(&e, &f).unwrap();
        assert!((t.matrix() - q.matrix()).norm() <= 1e-4);
    }

    #[test]
    fn procrustes_scale_equivariant() {
        let e = gaussian(40, 6, 11);
        let f = gaussian(40, 6, 12);
        let t1 = procrustes_solve(&e, &f).unwrap();
        let t2 = procrustes_solve(&(&e * 3.5), &(&f * 3.5)).unwrap();
        assert!((t1.matrix() - t2.matrix()).abs().max() <= 1e-9);
    }

    #[test]
    fn procrustes_rejects_shape_mismatch() {
        assert!(matches!(
            procrustes_solve(&DMatrix::zeros(3, 2), &DMatrix::zeros(2, 2)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn procrustes_beats_perturbations() {
        let e = gaussian(60, 6, 21);
        let f = gaussian(60, 6, 22);
        let t = procrustes_solve(&e, &f).unwrap();
        let best = (&e * t.matrix() - &f).norm();
        for s in 0..100 {
            let r = random_orthogonal(6, 1000 + s);
            // small rotation: orthogonal polar factor of I + 0.1 R
            let near = DMatrix::<f64>::identity(6, 6) + r.matrix() * 0.1;
            let p = procrustes_solve(&DMatrix::identity(6, 6), &near).unwrap();
            let perturbed = t.matrix() * p.matrix();
            assert!((&e * perturbed - &f).norm() >= best - 1e-7);
            let far = t.matrix() * r.matrix();
            assert!((&e * far - &f).norm() >= best - 1e-7);
        }
    }

    #[test]
    fn compose_cases() {
        let a = random_orthogonal(5, 1);
        let b = random_orthogonal(5, 2);
        let same = compose_to_target(&a, &a).unwrap();
        assert!((same.matrix() - DMatrix::<f64>::identity(5, 5)).abs().max() < 1e-12);
        let unchanged = compose_to_target(&a, &OrthogonalMap::identity(5)).unwrap();
        assert_eq!(unchanged.matrix(), a.matrix());
        let ab = compose_to_target(&a, &b).unwrap();
        let gram = ab.matrix().transpose() * ab.matrix();
        assert!((gram - DMatrix::<f64>::identity(5, 5)).abs().max() <= 1e-10);
        assert!(compose_to_target(&a, &OrthogonalMap::identity(4)).is_err());
    }

    #[test]
    fn objective_cases() {
        let e = gaussian(10, 3, 5);
        let id = OrthogonalMap::identity(3);
        let zero = gpa_objective(&[e.clone(), e.clone(), e.clone()], &[id.clone(), id.clone(), id.clone()]).unwrap();
        assert_eq!(zero, 0.0);

        let f = gaussian(10, 3, 6);
        let t1 = random_orthogonal(3, 7);
        let t2 = random_orthogonal(3, 8);
        let got = gpa_objective(&[e.clone(), f.clone()], &[t1.clone(), t2.clone()]).unwrap();
        let want = (&e * t1.matrix() - &f * t2.matrix()).norm_squared();
        assert_eq!(got, want);
        assert!(gpa_objective(&[e], &[t1, t2]).is_err());
    }

    #[test]
    fn objective_mean_identity() {
        for seed in 0..5 {
            let mats: Vec<_> = (0..3).map(|i| gaussian(20, 4, seed * 10 + i)).collect();
            let ts: Vec<_> = (0..3).map(|i| random_orthogonal(4, seed * 10 + i + 100)).collect();
            let pairwise = gpa_objective(&mats, &ts).unwrap();
            let g = latent_mean(&mats, &ts);
            let dev: f64 = mats
                .iter()
                .zip(&ts)
                .map(|(e, t)| (e * t.matrix() - &g).norm_squared())
                .sum();
            let via_mean = 3.0 * dev;
            assert!((pairwise - via_mean).abs() <= 1e-8 * pairwise);
        }
    }

    #[test]
    fn gpa_identical_pair() {
        let e = gaussian(30, 4, 9);
        let state = gpa_solve(&[e.clone(), e.clone()], &GpaParams::default(), GpaInit::Random { seed: 1 }).unwrap();
        assert!(state.final_objective() <= 1e-10);
        let t = compose_to_target(&state.transforms[0], &state.transforms[1]).unwrap();
        assert!((t.matrix() - DMatrix::<f64>::identity(4, 4)).abs().max() <= 1e-6);
    }

    #[test]
    fn gpa_exact_isomorphs() {
        let e1 = gaussian(50, 6, 31);
        let e2 = &e1 * random_orthogonal(6, 32).matrix();
        let e3 = &e1 * random_orthogonal(6, 33).matrix();
        let params = GpaParams { inner_iters: 100, tolerance: None };
        let state = gpa_solve(&[e1.clone(), e2, e3], &params, GpaInit::Index(1)).unwrap();
        assert!(state.final_objective() <= 1e-8 * e1.norm_squared());
        assert_eq!(state.init_index, Some(1));
    }

    #[test]
    fn gpa_latent_is_mean_and_trace_monotone() {
        let mats: Vec<_> = (0..3).map(|i| gaussian(25, 5, 40 + i)).collect();
        let params = GpaParams { inner_iters: 50, tolerance: None };
        let state = gpa_solve(&mats, &params, GpaInit::Random { seed: 4 }).unwrap();
        let g = latent_mean(&mats, &state.transforms);
        assert!((g - &state.latent).abs().max() <= 1e-8);
        for w in state.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-8 * w[0].abs());
        }
        for t in &state.transforms {
            assert!(t.orthogonality_error() <= ORTHOGONALITY_TOLERANCE);
        }
    }

    #[test]
    fn gpa_deterministic_for_seed() {
        let mats: Vec<_> = (0..2).map(|i| gaussian(25, 5, 70 + i)).collect();
        let a = gpa_solve(&mats, &GpaParams::default(), GpaInit::Random { seed: 8 }).unwrap();
        let b = gpa_solve(&mats, &GpaParams::default(), GpaInit::Random { seed: 8 }).unwrap();
        assert_eq!(a.transforms, b.transforms);
        assert_eq!(a.objective_trace, b.objective_trace);
    }

    #[test]
    fn gpa_rejects_bad_input() {
        let e = gaussian(5, 2, 1);
        assert!(gpa_solve(std::slice::from_ref(&e), &GpaParams::default(), GpaInit::Index(0)).is_err());
        assert!(gpa_solve(&[e.clone(), gaussian(4, 2, 2)], &GpaParams::default(), GpaInit::Index(0)).is_err());
        assert!(gpa_solve(&[e.clone(), e.clone()], &GpaParams::default(), GpaInit::Index(2)).is_err());
    }

    #[test]
    fn transform_file_round_trip() {
        let q = random_orthogonal(6, 5);
        let mut buf = Vec::new();
        q.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("6 6\n"));
        assert_eq!(text.lines().count(), 7);
        let back = OrthogonalMap::read_from(&buf[..], Path::new("mem")).unwrap();
        assert!((back.matrix() - q.matrix()).abs().max() <= 1e-8);
        assert!(OrthogonalMap::read_from(&b"2 2\n1 0\n"[..], Path::new("mem")).is_err());
        assert!(OrthogonalMap::read_from(&b"2 2\n1 1\n1 1\n"[..], Path::new("mem")).is_err());
    }
}
