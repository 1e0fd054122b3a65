#![allow(dead_code)]

use rabi_lab::SymmetricMatrix;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
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
                if a[p][q].abs() < 1e-300 {
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
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `a†a + (Δ/2)σx + gσz(a + a†)` with index `2n + (0 if ↑ else 1)`.
pub fn sigma_z_hamiltonian(delta: f64, g: f64, n_trunc: usize) -> Vec<Vec<f64>> {
    let d = 2 * n_trunc;
    let mut h = vec![vec![0.0; d]; d];
    for n in 0..n_trunc {
        let (up, down) = (2 * n, 2 * n + 1);
        h[up][up] = n as f64;
        h[down][down] = n as f64;
        h[up][down] = delta / 2.0;
        h[down][up] = delta / 2.0;
        if n + 1 < n_trunc {
            let x = g * ((n + 1) as f64).sqrt();
            h[up][up + 2] = x;
            h[up + 2][up] = x;
            h[down][down + 2] = -x;
            h[down + 2][down] = -x;
        }
    }
    h
}

/// `Uᵀ H U` with `|s=±⟩ = (|↑⟩ ± |↓⟩)/√2` on every Fock level.
pub fn rotate_to_sigma_x(h: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = h.len();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut u = vec![vec![0.0; d]; d];
    for n in 0..d / 2 {
        let (up, down) = (2 * n, 2 * n + 1);
        u[up][up] = r;
        u[down][up] = r;
        u[up][down] = r;
        u[down][down] = -r;
    }
    let mul = |a: &[Vec<f64>], b: &[Vec<f64>]| -> Vec<Vec<f64>> {
        (0..d)
            .map(|i| (0..d).map(|j| (0..d).map(|k| a[i][k] * b[k][j]).sum()).collect())
            .collect()
    };
    let ut: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| u[j][i]).collect()).collect();
    mul(&mul(&ut, h), &u)
}

pub fn to_rows(m: &SymmetricMatrix) -> Vec<Vec<f64>> {
    (0..m.dim()).map(|i| m.row(i).to_vec()).collect()
}

/// `φ_n(x)` from the physicists' Hermite polynomial and its normalization.
pub fn hermite_function_direct(n: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    let h = match n {
        0 => h0,
        _ => {
            for k in 1..n {
                let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
            h1
        }
    };
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    let norm = (2f64.powi(n as i32) * factorial * std::f64::consts::PI.sqrt()).sqrt();
    h * (-x * x / 2.0).exp() / norm
}
