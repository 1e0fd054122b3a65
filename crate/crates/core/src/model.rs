//! Quantum Rabi Hamiltonian, parity operator and parity-sector blocks.
//!
//! Everything is expressed in units of the mode frequency. The two-level
//! system is represented in the eigenbasis of `σx`, so the full basis index
//! of `|n, s⟩` is `2n` for `s = +1` and `2n + 1` for `s = -1`. In this basis
//! the parity operator `σx·exp(iπ a†a)` is diagonal with entries
//! `s·(-1)^n`, and the Hamiltonian only couples `|n, s⟩ ↔ |n ± 1, -s⟩`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensionless model parameters: level splitting `delta` and coupling `g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub delta: f64,
    pub g: f64,
}

impl ModelParams {
    pub fn new(delta: f64, g: f64) -> Result<Self> {
        let params = ModelParams { delta, g };
        params.validate()?;
        Ok(params)
    }

    /// Parameters with the coupling given in units of [`critical_coupling`].
    pub fn from_ratio(delta: f64, g_over_gc: f64) -> Result<Self> {
        if !g_over_gc.is_finite() || g_over_gc < 0.0 {
            return Err(Error::param("g_over_gc", format!("{g_over_gc} must be finite and >= 0")));
        }
        let gc = critical_coupling(delta)?;
        Self::new(delta, g_over_gc * gc)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delta.is_finite() || self.delta < 0.0 {
            return Err(Error::param("delta", format!("{} must be finite and >= 0", self.delta)));
        }
        if !self.g.is_finite() || self.g < 0.0 {
            return Err(Error::param("g", format!("{} must be finite and >= 0", self.g)));
        }
        Ok(())
    }

    pub fn critical_coupling(&self) -> f64 {
        critical_coupling_unchecked(self.delta)
    }

    pub fn g_over_gc(&self) -> f64 {
        self.g / self.critical_coupling()
    }
}

/// Number of retained Fock states `|0⟩ .. |n_trunc - 1⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Truncation {
    n_trunc: usize,
}

impl Truncation {
    pub fn new(n_trunc: usize) -> Result<Self> {
        if n_trunc < 2 {
            return Err(Error::param("n_trunc", format!("{n_trunc} is below the minimum of 2")));
        }
        Ok(Truncation { n_trunc })
    }

    pub fn n_trunc(&self) -> usize {
        self.n_trunc
    }

    /// Dimension of the full spin ⊗ oscillator space.
    pub fn dim(&self) -> usize {
        2 * self.n_trunc
    }
}

/// Eigenvalue of `σx` labelling the two-level component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Spin {
    Plus,
    Minus,
}

impl Spin {
    pub fn sign(self) -> f64 {
        match self {
            Spin::Plus => 1.0,
            Spin::Minus => -1.0,
        }
    }

    fn slot(self) -> usize {
        match self {
            Spin::Plus => 0,
            Spin::Minus => 1,
        }
    }

    pub fn flipped(self) -> Spin {
        match self {
            Spin::Plus => Spin::Minus,
            Spin::Minus => Spin::Plus,
        }
    }
}

/// Eigenvalue of the parity operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    /// Spin label forced on Fock state `n` inside this parity sector.
    pub fn spin_at(self, n: usize) -> Spin {
        let even_n = n % 2 == 0;
        match (self, even_n) {
            (Parity::Even, true) | (Parity::Odd, false) => Spin::Plus,
            _ => Spin::Minus,
        }
    }
}

impl TryFrom<i32> for Parity {
    type Error = Error;

    fn try_from(value: i32) -> Result<Self> {
        match value {
            1 => Ok(Parity::Even),
            -1 => Ok(Parity::Odd),
            other => Err(Error::param("parity", format!("{other} is not +1 or -1"))),
        }
    }
}

/// Full-basis index of `|n, s⟩`.
pub fn basis_index(n: usize, spin: Spin) -> usize {
    2 * n + spin.slot()
}

/// Inverse of [`basis_index`].
pub fn basis_state(index: usize) -> (usize, Spin) {
    let spin = if index % 2 == 0 { Spin::Plus } else { Spin::Minus };
    (index / 2, spin)
}

/// Parity eigenvalue `s·(-1)^n` of basis state `index`.
pub fn parity_label(index: usize) -> f64 {
    let (n, spin) = basis_state(index);
    let fock_sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    spin.sign() * fock_sign
}

/// Full-basis index of the `n`-th state of a parity sector.
pub fn sector_index(parity: Parity, n: usize) -> usize {
    basis_index(n, parity.spin_at(n))
}

/// Dense real symmetric matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymmetricMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    /// Builds a matrix from rows, rejecting ragged, non-finite or
    /// non-symmetric input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "row of length {} in a {dim}x{dim} matrix",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        let m = SymmetricMatrix { dim, data };
        m.check()?;
        Ok(m)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * m.dim + i] = d;
        }
        m
    }

    /// Dense embedding of a symmetric tridiagonal matrix.
    pub fn from_tridiagonal(tri: &Tridiagonal) -> Self {
        let mut m = Self::from_diagonal(&tri.diag);
        for (i, &e) in tri.offdiag.iter().enumerate() {
            m.set_sym(i, i + 1, e);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    /// Sets both `(row, col)` and `(col, row)`.
    pub fn set_sym(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.dim + col] = value;
        self.data[col * self.dim + row] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Verifies exact symmetry and finiteness.
    pub fn check(&self) -> Result<()> {
        for i in 0..self.dim {
            for j in 0..=i {
                let a = self.get(i, j);
                let b = self.get(j, i);
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                if a != b {
                    return Err(Error::NotSymmetric {
                        row: i,
                        col: j,
                        defect: (a - b).abs(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    /// Largest `|i - j|` with a nonzero entry.
    pub fn half_bandwidth(&self) -> usize {
        let mut bw = 0;
        for i in 0..self.dim {
            let row = self.row(i);
            // only look beyond the current bandwidth
            for j in (i + bw + 1..self.dim).rev() {
                if row[j] != 0.0 {
                    bw = j - i;
                    break;
                }
            }
        }
        bw
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &SymmetricMatrix) -> Vec<f64> {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

/// Real symmetric tridiagonal matrix given by its diagonal and first
/// off-diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::DimensionMismatch("empty tridiagonal matrix".into()));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::DimensionMismatch(format!(
                "offdiag has length {}, expected {}",
                offdiag.len(),
                diag.len() - 1
            )));
        }
        if let Some(i) = diag.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: i, col: i });
        }
        if let Some(i) = offdiag.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: i + 1, col: i });
        }
        Ok(Tridiagonal { diag, offdiag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }
}

/// Rabi Hamiltonian `a†a + (Δ/2)σx + g σz (a + a†)` in the `σx` basis.
///
/// `σz` flips `s`, and `(a + a†)` connects `n` and `n + 1` with amplitude
/// `√(n + 1)`, so the nonzero off-diagonal elements are
/// `⟨n+1, -s| H |n, s⟩ = g √(n+1)`.
pub fn build_hamiltonian(params: &ModelParams, trunc: &Truncation) -> Result<SymmetricMatrix> {
    params.validate()?;
    let n_trunc = trunc.n_trunc();
    let mut h = SymmetricMatrix::zeros(trunc.dim());
    for n in 0..n_trunc {
        for spin in [Spin::Plus, Spin::Minus] {
            let i = basis_index(n, spin);
            h.set_sym(i, i, n as f64 + spin.sign() * params.delta / 2.0);
            if n + 1 < n_trunc {
                let j = basis_index(n + 1, spin.flipped());
                h.set_sym(i, j, params.g * ((n + 1) as f64).sqrt());
            }
        }
    }
    Ok(h)
}

/// Parity operator `σx·exp(iπ a†a)`, diagonal in the `σx` basis.
pub fn build_parity(trunc: &Truncation) -> SymmetricMatrix {
    let diag: Vec<f64> = (0..trunc.dim()).map(parity_label).collect();
    SymmetricMatrix::from_diagonal(&diag)
}

/// Restriction of the Hamiltonian to one parity sector.
///
/// Within sector `p` the spin label is fixed by `s = p·(-1)^n`, leaving a
/// chain with `diag[n] = n + p·(-1)^n·Δ/2` and `offdiag[n] = g√(n+1)`.
pub fn sector_hamiltonian(
    params: &ModelParams,
    trunc: &Truncation,
    parity: Parity,
) -> Result<Tridiagonal> {
    params.validate()?;
    let n_trunc = trunc.n_trunc();
    let diag = (0..n_trunc)
        .map(|n| n as f64 + parity.spin_at(n).sign() * params.delta / 2.0)
        .collect();
    let offdiag = (0..n_trunc - 1)
        .map(|n| params.g * ((n + 1) as f64).sqrt())
        .collect();
    Tridiagonal::new(diag, offdiag)
}

/// Critical coupling `g_c = √(1 + √(1 + Δ²/16))` used to scale the
/// coupling axis.
pub fn critical_coupling(delta: f64) -> Result<f64> {
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::param("delta", format!("{delta} must be finite and >= 0")));
    }
    Ok(critical_coupling_unchecked(delta))
}

fn critical_coupling_unchecked(delta: f64) -> f64 {
    (1.0 + (1.0 + delta * delta / 16.0).sqrt()).sqrt()
}

/// Energy shifted by `g²`, the constant that makes the pairs of levels
/// approach each other at strong coupling.
pub fn shifted_energy(energy: f64, params: &ModelParams) -> f64 {
    energy + params.g * params.g
}
