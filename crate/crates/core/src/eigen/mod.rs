//! Symmetric eigensolvers with explicit accuracy contracts.
//!
//! [`eig_sym_dense`] reduces a dense symmetric matrix to tridiagonal form
//! (Householder, or Givens bulge chasing when the matrix is narrow-banded),
//! [`eig_sym_tridiag`] starts from the tridiagonal form directly. Both then
//! find the lowest eigenvalues by bisection and their eigenvectors by
//! inverse iteration.
//!
//! Near-degenerate eigenvectors are returned as the solver produces them.
//! No attempt is made to rotate them back onto symmetry eigenvectors.

mod reduce;
mod residual;
mod tridiag;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, SymmetricMatrix, Tridiagonal, Truncation};

pub use residual::{residual_report, ResidualReport, SymmetricOperator, ORTHONORMALITY_TOL, RESIDUAL_TOL};

/// Relative gap below which two neighbouring eigenvalues are flagged
/// degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Use Givens band reduction when the half-bandwidth is at most
/// `dim / BAND_RATIO`.
const BAND_RATIO: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverPath {
    /// Householder reduction of a general dense matrix.
    DenseHouseholder,
    /// Givens reduction of a dense matrix with a narrow band.
    DenseBanded,
    /// Tridiagonal input, e.g. a parity sector.
    Tridiagonal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Replace each eigenvalue by the Rayleigh quotient of its eigenvector.
    pub rayleigh_refine: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub path: SolverPath,
    pub params: Option<ModelParams>,
    pub truncation: Option<Truncation>,
    pub wall_time_s: f64,
}

/// Lowest eigenpairs of a symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[i]` belongs to `eigenvalues[i]`.
    pub eigenvectors: Vec<Vec<f64>>,
    /// `‖Mv - λv‖₂` per pair.
    pub residual_norms: Vec<f64>,
    /// Set when a neighbour lies within `DEGENERACY_TOL · scale`.
    pub degenerate: Vec<bool>,
    /// `max(1, max|M|)`, the scale residual tolerances refer to.
    pub scale: f64,
    pub meta: SpectrumMeta,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.eigenvectors.first().map_or(0, Vec::len)
    }

    pub fn with_model(mut self, params: ModelParams, trunc: Truncation) -> Self {
        self.meta.params = Some(params);
        self.meta.truncation = Some(trunc);
        self
    }

    pub fn max_residual(&self) -> f64 {
        self.residual_norms.iter().cloned().fold(0.0, f64::max)
    }
}

fn check_k(k: usize, dim: usize) -> Result<()> {
    if k == 0 || k > dim {
        return Err(Error::param("k", format!("{k} must lie in 1..={dim}")));
    }
    Ok(())
}

fn choose_reduction(m: &SymmetricMatrix, keep_transform: bool) -> (reduce::Reduction, SolverPath) {
    let bw = m.half_bandwidth();
    let n = m.dim();
    if bw <= 1 {
        (reduce::copy_tridiagonal(m), SolverPath::DenseBanded)
    } else if bw * BAND_RATIO <= n {
        (reduce::band(m, bw, keep_transform), SolverPath::DenseBanded)
    } else {
        (reduce::householder(m, keep_transform), SolverPath::DenseHouseholder)
    }
}

/// The `k` lowest eigenpairs of a dense symmetric matrix.
pub fn eig_sym_dense(m: &SymmetricMatrix, k: usize) -> Result<Spectrum> {
    eig_sym_dense_with(m, k, &SolverOptions::default())
}

pub fn eig_sym_dense_with(m: &SymmetricMatrix, k: usize, opts: &SolverOptions) -> Result<Spectrum> {
    let start = Instant::now();
    m.check()?;
    check_k(k, m.dim())?;
    let (red, path) = choose_reduction(m, true);
    let values = tridiag::lowest_eigenvalues(&red.diag, &red.offdiag, k);
    let mut vectors = tridiag::inverse_iteration(&red.diag, &red.offdiag, &values)?;
    for v in &mut vectors {
        red.transform.apply(v);
    }
    let apply = |x: &[f64]| m.matvec(x);
    Ok(finish(values, vectors, m.max_abs(), &apply, opts, path, start))
}

/// The `k` lowest eigenvalues only; skips the eigenvector stage.
pub fn eigenvalues_sym_dense(m: &SymmetricMatrix, k: usize) -> Result<Vec<f64>> {
    m.check()?;
    check_k(k, m.dim())?;
    let (red, _) = choose_reduction(m, false);
    Ok(tridiag::lowest_eigenvalues(&red.diag, &red.offdiag, k))
}

/// The `k` lowest eigenpairs of a symmetric tridiagonal matrix.
pub fn eig_sym_tridiag(diag: &[f64], offdiag: &[f64], k: usize) -> Result<Spectrum> {
    eig_sym_tridiag_with(diag, offdiag, k, &SolverOptions::default())
}

pub fn eig_sym_tridiag_with(
    diag: &[f64],
    offdiag: &[f64],
    k: usize,
    opts: &SolverOptions,
) -> Result<Spectrum> {
    let start = Instant::now();
    let tri = Tridiagonal::new(diag.to_vec(), offdiag.to_vec())?;
    check_k(k, tri.dim())?;
    let values = tridiag::lowest_eigenvalues(diag, offdiag, k);
    let vectors = tridiag::inverse_iteration(diag, offdiag, &values)?;
    let max_abs = diag
        .iter()
        .chain(offdiag)
        .fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let apply = |x: &[f64]| tridiag_matvec(&tri, x);
    Ok(finish(values, vectors, max_abs, &apply, opts, SolverPath::Tridiagonal, start))
}

pub(crate) fn tridiag_matvec(tri: &Tridiagonal, x: &[f64]) -> Vec<f64> {
    let n = tri.dim();
    (0..n)
        .map(|i| {
            let mut acc = tri.diag[i] * x[i];
            if i > 0 {
                acc += tri.offdiag[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += tri.offdiag[i] * x[i + 1];
            }
            acc
        })
        .collect()
}

/// Index of the first component that is not negligible against the
/// largest one.
fn first_nonzero(v: &[f64]) -> usize {
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    v.iter()
        .position(|x| x.abs() > DEGENERACY_TOL * max)
        .unwrap_or(v.len())
}

fn finish(
    mut values: Vec<f64>,
    mut vectors: Vec<Vec<f64>>,
    max_abs: f64,
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    opts: &SolverOptions,
    path: SolverPath,
    start: Instant,
) -> Spectrum {
    let scale = max_abs.max(1.0);
    let products: Vec<Vec<f64>> = vectors.iter().map(|v| apply(v)).collect();
    if opts.rayleigh_refine {
        for ((lam, v), mv) in values.iter_mut().zip(&vectors).zip(&products) {
            let num: f64 = v.iter().zip(mv).map(|(a, b)| a * b).sum();
            let den: f64 = v.iter().map(|a| a * a).sum();
            *lam = num / den;
        }
    }
    let mut residual_norms: Vec<f64> = values
        .iter()
        .zip(&vectors)
        .zip(&products)
        .map(|((lam, v), mv)| {
            mv.iter()
                .zip(v)
                .map(|(a, b)| (a - lam * b).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();

    // ascending eigenvalue, ties by the first nonzero basis index
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .total_cmp(&values[b])
            .then(first_nonzero(&vectors[a]).cmp(&first_nonzero(&vectors[b])))
    });
    if order.iter().enumerate().any(|(i, &o)| i != o) {
        values = order.iter().map(|&i| values[i]).collect();
        residual_norms = order.iter().map(|&i| residual_norms[i]).collect();
        let mut taken: Vec<Option<Vec<f64>>> = vectors.into_iter().map(Some).collect();
        vectors = order.iter().map(|&i| taken[i].take().unwrap()).collect();
    }

    let degenerate = (0..values.len())
        .map(|i| {
            let close = |j: usize| (values[i] - values[j]).abs() < DEGENERACY_TOL * scale;
            (i > 0 && close(i - 1)) || (i + 1 < values.len() && close(i + 1))
        })
        .collect();

    Spectrum {
        eigenvalues: values,
        eigenvectors: vectors,
        residual_norms,
        degenerate,
        scale,
        meta: SpectrumMeta {
            path,
            params: None,
            truncation: None,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Cyclic Jacobi rotations; independent of the reduction + bisection
    /// route.
    fn jacobi_eigenvalues(m: &SymmetricMatrix) -> Vec<f64> {
        let n = m.dim();
        let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q] == 0.0 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut vals: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        vals.sort_by(f64::total_cmp);
        vals
    }

    fn random_symmetric(n: usize, seed: u64) -> SymmetricMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = SymmetricMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set_sym(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        m
    }

    #[test]
    fn exchange_matrix() {
        let m = SymmetricMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let spec = eig_sym_dense(&m, 2).unwrap();
        assert!((spec.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((spec.eigenvalues[1] - 1.0).abs() < 1e-15);
        assert!(spec.max_residual() < 1e-15);
    }

    #[test]
    fn diagonal_matrix_gives_coordinate_vectors() {
        let diag = [3.0, -2.0, 0.5, 7.0, 1.0];
        let spec = eig_sym_dense(&SymmetricMatrix::from_diagonal(&diag), 5).unwrap();
        assert_eq!(spec.eigenvalues, vec![-2.0, 0.5, 1.0, 3.0, 7.0]);
        let expect_index = [1, 2, 4, 0, 3];
        for (v, &idx) in spec.eigenvectors.iter().zip(&expect_index) {
            for (i, x) in v.iter().enumerate() {
                let want = if i == idx { 1.0 } else { 0.0 };
                assert!((x.abs() - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn random_matrix_matches_jacobi() {
        for seed in 0..5 {
            let m = random_symmetric(12, seed);
            let oracle = jacobi_eigenvalues(&m);
            let spec = eig_sym_dense(&m, 12).unwrap();
            assert_eq!(spec.meta.path, SolverPath::DenseHouseholder);
            for (a, b) in spec.eigenvalues.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
            let report = residual_report(&m, &spec).unwrap();
            assert!(report.flagged.is_empty());
        }
    }

    #[test]
    fn banded_path_matches_jacobi() {
        let n = 70;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut m = SymmetricMatrix::zeros(n);
        for i in 0..n {
            for j in i.saturating_sub(3)..=i {
                m.set_sym(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        let oracle = jacobi_eigenvalues(&m);
        let spec = eig_sym_dense(&m, 10).unwrap();
        assert_eq!(spec.meta.path, SolverPath::DenseBanded);
        for (a, b) in spec.eigenvalues.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!(spec.max_residual() < 1e-12);
    }

    #[test]
    fn householder_and_band_agree() {
        let n = 64;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut m = SymmetricMatrix::zeros(n);
        for i in 0..n {
            for j in i.saturating_sub(4)..=i {
                m.set_sym(i, j, rng.gen_range(-2.0..2.0));
            }
        }
        let hh = reduce::householder(&m, false);
        let bd = reduce::band(&m, 4, false);
        let a = tridiag::lowest_eigenvalues(&hh.diag, &hh.offdiag, n);
        let b = tridiag::lowest_eigenvalues(&bd.diag, &bd.offdiag, n);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_tridiagonals() {
        let s = eig_sym_tridiag(&[2.5], &[], 1).unwrap();
        assert_eq!(s.eigenvalues, vec![2.5]);
        let s = eig_sym_tridiag(&[0.0, 0.0], &[-0.3], 2).unwrap();
        assert!((s.eigenvalues[0] + 0.3).abs() < 1e-16);
        assert!((s.eigenvalues[1] - 0.3).abs() < 1e-16);
    }

    #[test]
    fn tridiagonal_matches_dense_embedding() {
        let diag: Vec<f64> = (0..50).map(|i| i as f64 * 0.3 - 4.0).collect();
        let off: Vec<f64> = (0..49).map(|i| 0.8 + 0.01 * i as f64).collect();
        let tri = eig_sym_tridiag(&diag, &off, 6).unwrap();
        let dense = SymmetricMatrix::from_tridiagonal(&Tridiagonal::new(diag, off).unwrap());
        let full = eig_sym_dense(&dense, 6).unwrap();
        for (a, b) in tri.eigenvalues.iter().zip(&full.eigenvalues) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn bad_inputs_rejected() {
        assert!(eig_sym_tridiag(&[1.0, 2.0], &[], 1).is_err());
        assert!(eig_sym_tridiag(&[1.0, 2.0], &[0.5], 3).is_err());
        assert!(eig_sym_tridiag(&[1.0, 2.0], &[0.5], 0).is_err());
        let err = SymmetricMatrix::from_rows(&[vec![0.0, 1.0], vec![1.5, 0.0]]);
        assert!(matches!(err, Err(Error::NotSymmetric { .. })));
        let err = SymmetricMatrix::from_rows(&[vec![f64::NAN, 1.0], vec![1.0, 0.0]]);
        assert!(matches!(err, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn ties_broken_by_first_component() {
        let m = SymmetricMatrix::from_diagonal(&[1.0, 0.0, 1.0, 0.0, 2.0]);
        let spec = eig_sym_dense(&m, 5).unwrap();
        for (a, b) in spec.eigenvalues.iter().zip([0.0, 0.0, 1.0, 1.0, 2.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        for i in 0..4 {
            if (spec.eigenvalues[i] - spec.eigenvalues[i + 1]).abs() < 1e-15 {
                assert!(first_nonzero(&spec.eigenvectors[i]) <= first_nonzero(&spec.eigenvectors[i + 1]));
            }
        }
        assert_eq!(spec.degenerate, vec![true, true, true, true, false]);
        let again = eig_sym_dense(&m, 5).unwrap();
        assert_eq!(spec.eigenvectors, again.eigenvectors);
    }

    #[test]
    fn rayleigh_refinement_keeps_accuracy() {
        let m = random_symmetric(20, 3);
        let plain = eig_sym_dense(&m, 5).unwrap();
        let refined = eig_sym_dense_with(&m, 5, &SolverOptions { rayleigh_refine: true }).unwrap();
        for (a, b) in plain.eigenvalues.iter().zip(&refined.eigenvalues) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn eigenvalues_only_agrees() {
        let m = random_symmetric(15, 9);
        let vals = eigenvalues_sym_dense(&m, 4).unwrap();
        let spec = eig_sym_dense(&m, 4).unwrap();
        assert_eq!(vals, spec.eigenvalues);
    }
}
