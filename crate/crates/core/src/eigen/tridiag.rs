//! Lowest eigenpairs of a symmetric tridiagonal matrix.
//!
//! Eigenvalues come from Sturm-count bisection, eigenvectors from inverse
//! iteration with reorthogonalisation inside clusters of close eigenvalues
//! (the scheme used by LAPACK's `dstebz`/`dstein`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MAX_ITS: usize = 5;
const EXTRA_ITS: usize = 2;
const MAX_BISECTIONS: usize = 256;

/// Number of eigenvalues below `x`; a zero pivot counts as negative, so an
/// eigenvalue equal to `x` is included.
pub(crate) fn sturm_count(diag: &[f64], off_sq: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q.abs() <= pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        q = diag[i] - x - off_sq[i - 1] / q;
        if q.abs() <= pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(diag: &[f64], offdiag: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let left = if i > 0 { offdiag[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { offdiag[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    let pad = 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + f64::MIN_POSITIVE;
    (lo - pad, hi + pad)
}

/// The `k` smallest eigenvalues in ascending order.
pub(crate) fn lowest_eigenvalues(diag: &[f64], offdiag: &[f64], k: usize) -> Vec<f64> {
    let off_sq: Vec<f64> = offdiag.iter().map(|e| e * e).collect();
    let max_sq = off_sq.iter().cloned().fold(1.0_f64, f64::max);
    let pivmin = f64::MIN_POSITIVE * max_sq;
    let (glo, ghi) = gershgorin(diag, offdiag);

    // resolve down to one ulp; near zero stop at an absolute floor
    let abs_floor = f64::EPSILON * f64::EPSILON * glo.abs().max(ghi.abs()) + pivmin;
    let mut out = Vec::with_capacity(k);
    let mut lo = glo;
    for j in 0..k {
        // invariant: count(a) <= j < count(b), so λ_j ∈ (a, b]
        let mut a = lo;
        let mut b = ghi;
        for _ in 0..MAX_BISECTIONS {
            let mid = a + 0.5 * (b - a);
            if mid <= a || mid >= b || b - a <= abs_floor {
                break;
            }
            if sturm_count(diag, &off_sq, mid, pivmin) <= j {
                a = mid;
            } else {
                b = mid;
            }
        }
        out.push(b);
        lo = a;
    }
    out
}

/// LU factorisation of `T - shift·I` with partial pivoting.
struct ShiftedLu {
    diag: Vec<f64>,
    sup1: Vec<f64>,
    sup2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn new(diag: &[f64], offdiag: &[f64], shift: f64) -> Self {
        let n = diag.len();
        let mut a: Vec<f64> = diag.iter().map(|d| d - shift).collect();
        let mut b: Vec<f64> = offdiag.to_vec();
        let mut c: Vec<f64> = offdiag.to_vec();
        let mut d = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n];

        // Pivots below `tol` are replaced during elimination, so the
        // multipliers and the back substitution describe the same matrix.
        let mut norm = 0.0_f64;
        for k in 0..n {
            let left = if k > 0 { offdiag[k - 1].abs() } else { 0.0 };
            let right = if k + 1 < n { offdiag[k].abs() } else { 0.0 };
            norm = norm.max(a[k].abs() + left + right);
        }
        let tol = if norm > 0.0 { f64::EPSILON * norm } else { f64::EPSILON };
        let guard = |x: &mut f64| {
            if x.abs() < tol {
                *x = if *x < 0.0 { -tol } else { tol };
            }
        };

        for k in 0..n.saturating_sub(1) {
            let scale1 = a[k].abs() + b[k].abs();
            let scale2 = c[k].abs() + a[k + 1].abs() + if k + 2 < n { b[k + 1].abs() } else { 0.0 };
            let piv1 = if a[k] == 0.0 { 0.0 } else { a[k].abs() / scale1 };
            let piv2 = if c[k] == 0.0 { 0.0 } else { c[k].abs() / scale2 };
            if c[k] == 0.0 || piv2 <= piv1 {
                guard(&mut a[k]);
                if c[k] != 0.0 {
                    c[k] /= a[k];
                    a[k + 1] -= c[k] * b[k];
                }
            } else {
                swapped[k] = true;
                let mult = a[k] / c[k];
                a[k] = c[k];
                let temp = a[k + 1];
                a[k + 1] = b[k] - mult * temp;
                if k + 2 < n {
                    d[k] = b[k + 1];
                    b[k + 1] = -mult * d[k];
                }
                b[k] = temp;
                c[k] = mult;
            }
        }
        if let Some(last) = a.last_mut() {
            guard(last);
        }

        ShiftedLu {
            diag: a,
            sup1: b,
            sup2: d,
            mult: c,
            swapped,
        }
    }

    fn last_pivot(&self) -> f64 {
        *self.diag.last().unwrap()
    }

    /// Solves in place.
    fn solve(&self, y: &mut [f64]) {
        let n = y.len();
        for k in 1..n {
            if self.swapped[k - 1] {
                let temp = y[k - 1];
                y[k - 1] = y[k];
                y[k] = temp - self.mult[k - 1] * y[k];
            } else {
                y[k] -= self.mult[k - 1] * y[k - 1];
            }
        }
        for k in (0..n).rev() {
            let mut temp = y[k];
            if k + 1 < n {
                temp -= self.sup1[k] * y[k + 1];
            }
            if k + 2 < n {
                temp -= self.sup2[k] * y[k + 2];
            }
            y[k] = temp / self.diag[k];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn argmax_abs(a: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in a.iter().enumerate() {
        if x.abs() > a[best].abs() {
            best = i;
        }
    }
    best
}

/// Deterministic start vector for eigenpair `index`.
fn start_vector(n: usize, index: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + index as u64);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Eigenvectors of the tridiagonal matrix for the given ascending
/// eigenvalues. The largest-magnitude component of each vector is positive.
pub(crate) fn inverse_iteration(diag: &[f64], offdiag: &[f64], values: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = diag.len();
    if n == 1 {
        return Ok(values.iter().map(|_| vec![1.0]).collect());
    }
    let mut one_norm = diag[0].abs() + offdiag[0].abs();
    for i in 1..n {
        let right = if i + 1 < n { offdiag[i].abs() } else { 0.0 };
        one_norm = one_norm.max(diag[i].abs() + offdiag[i - 1].abs() + right);
    }
    let ortol = 1e-3 * one_norm;
    let converged_norm = (0.1 / n as f64).sqrt();

    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(values.len());
    let mut cluster_start = 0;
    let mut prev_shift = f64::NAN;

    for (j, &value) in values.iter().enumerate() {
        let mut shift = value;
        if j > 0 {
            let pertol = 10.0 * (f64::EPSILON * shift).abs();
            if shift - prev_shift < pertol {
                shift = prev_shift + pertol;
            }
            if (shift - prev_shift).abs() > ortol {
                cluster_start = j;
            }
        }

        let lu = ShiftedLu::new(diag, offdiag, shift);
        let mut x = start_vector(n, j);
        let mut checks = 0;
        let mut converged = false;
        for _ in 0..MAX_ITS + EXTRA_ITS {
            let asum: f64 = x.iter().map(|v| v.abs()).sum();
            let scl = n as f64 * one_norm * f64::EPSILON.max(lu.last_pivot().abs()) / asum;
            x.iter_mut().for_each(|v| *v *= scl);
            lu.solve(&mut x);
            for z in &vectors[cluster_start..j] {
                let overlap = dot(&x, z);
                x.iter_mut().zip(z).for_each(|(v, zi)| *v -= overlap * zi);
            }
            let nrm = x[argmax_abs(&x)].abs();
            if !nrm.is_finite() {
                return Err(Error::NoConvergence { index: j });
            }
            if nrm < converged_norm {
                continue;
            }
            checks += 1;
            if checks > EXTRA_ITS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence { index: j });
        }
        let mut scl = 1.0 / norm2(&x);
        if x[argmax_abs(&x)] < 0.0 {
            scl = -scl;
        }
        x.iter_mut().for_each(|v| *v *= scl);
        vectors.push(x);
        prev_shift = shift;
    }
    Ok(vectors)
}
