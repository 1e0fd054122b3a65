//! Eigenstates in the position representation.
//!
//! With `a = (ξ + ∂_ξ)/√2` the Fock states are the normalized oscillator
//! functions `φ_n(ξ)`, generated here by the two-term recurrence
//! `φ_{n+1} = √(2/(n+1))·ξ·φ_n − √(n/(n+1))·φ_{n−1}`. The Gaussian factor
//! is tracked as a separate log-scale so that large `|ξ|` neither underflows
//! at small `n` nor overflows at large `n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{basis_index, ModelParams, Spin, Truncation};

/// Largest allowed step once more than this many oscillator functions
/// are needed.
const COARSE_STEP_LIMIT: f64 = 0.1;
const COARSE_N_LIMIT: usize = 100;
/// Boundary amplitude above which the grid is too small for the state.
pub const BOUNDARY_LIMIT: f64 = 1e-8;

/// Uniform grid symmetric about `ξ = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionGrid {
    xi_max: f64,
    step: f64,
    /// Number of points on each side of the origin.
    half: usize,
}

impl PositionGrid {
    /// Grid `-half·step ..= half·step` with `half = round(xi_max / step)`.
    pub fn new(xi_max: f64, step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidGrid(format!("step {step} must be positive")));
        }
        if !(xi_max.is_finite() && xi_max >= step) {
            return Err(Error::InvalidGrid(format!("xi_max {xi_max} must be at least one step")));
        }
        let half = (xi_max / step).round() as usize;
        Ok(PositionGrid {
            xi_max: half as f64 * step,
            step,
            half,
        })
    }

    /// `ξ_max = max(10, 4g + 8)` with step 0.02; states in the
    /// superradiant regime sit near `ξ ≈ ±√2·g`.
    pub fn for_coupling(g: f64) -> Result<Self> {
        Self::new((4.0 * g + 8.0).max(10.0), 0.02)
    }

    pub fn len(&self) -> usize {
        2 * self.half + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }

    /// Index of `ξ = 0`.
    pub fn center(&self) -> usize {
        self.half
    }

    pub fn xi(&self, i: usize) -> f64 {
        (i as f64 - self.half as f64) * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.xi(i)).collect()
    }

    /// Trapezoid weights.
    fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.len() {
            0.5 * self.step
        } else {
            self.step
        }
    }
}

/// `φ_n(ξ_i)` for `n = 0..=n_max`, stored as one row per `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteBasis {
    n_max: usize,
    points: usize,
    values: Vec<f64>,
}

impl HermiteBasis {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.values[n * self.points..(n + 1) * self.points]
    }
}

pub fn hermite_basis(grid: &PositionGrid, n_max: usize) -> Result<HermiteBasis> {
    if n_max < 1 {
        return Err(Error::param("n_max", "must be at least 1"));
    }
    if n_max > COARSE_N_LIMIT && grid.step() > COARSE_STEP_LIMIT {
        return Err(Error::InvalidGrid(format!(
            "step {} is too coarse for n_max = {n_max} (limit {COARSE_STEP_LIMIT})",
            grid.step()
        )));
    }
    let points = grid.len();
    let mut values = vec![0.0; (n_max + 1) * points];
    const RESCALE: f64 = 1e150;
    let log_norm0 = -0.25 * std::f64::consts::PI.ln();
    for i in 0..points {
        let xi = grid.xi(i);
        // φ_n = mantissa_n · exp(log_scale)
        let mut log_scale = log_norm0 - 0.5 * xi * xi;
        let mut prev = 0.0;
        let mut cur = 1.0;
        values[i] = log_scale.exp();
        for n in 0..n_max {
            let nf = n as f64;
            let next = (2.0 / (nf + 1.0)).sqrt() * xi * cur - (nf / (nf + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
            if cur.abs() > RESCALE {
                cur /= RESCALE;
                prev /= RESCALE;
                log_scale += RESCALE.ln();
            }
            values[(n + 1) * points + i] = cur * log_scale.exp();
        }
    }
    Ok(HermiteBasis {
        n_max,
        points,
        values,
    })
}

/// Which spin basis the two components are expressed in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SpinView {
    /// `σx` eigenstates, `s = ±1`.
    #[default]
    X,
    /// `σz` eigenstates, `ψ_↑ = (ψ₊ + ψ₋)/√2`, `ψ_↓ = (ψ₊ − ψ₋)/√2`.
    Z,
}

/// Two spin components `ψ_s(ξ)` on a grid, in the `σx` basis.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoComponentWavefunction {
    pub grid: PositionGrid,
    pub psi_plus: Vec<f64>,
    pub psi_minus: Vec<f64>,
}

impl TwoComponentWavefunction {
    /// `Σ (|ψ₊|² + |ψ₋|²)·dξ` by the trapezoid rule.
    pub fn norm_sq(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| self.grid.weight(i) * (self.psi_plus[i].powi(2) + self.psi_minus[i].powi(2)))
            .sum()
    }

    pub fn boundary_amplitude(&self) -> f64 {
        let last = self.grid.len() - 1;
        [0, last]
            .iter()
            .flat_map(|&i| [self.psi_plus[i].abs(), self.psi_minus[i].abs()])
            .fold(0.0, f64::max)
    }

    /// The two components in the requested spin basis.
    pub fn components(&self, view: SpinView) -> (Vec<f64>, Vec<f64>) {
        match view {
            SpinView::X => (self.psi_plus.clone(), self.psi_minus.clone()),
            SpinView::Z => {
                let r = std::f64::consts::FRAC_1_SQRT_2;
                let up = self.psi_plus.iter().zip(&self.psi_minus).map(|(p, m)| r * (p + m)).collect();
                let down = self.psi_plus.iter().zip(&self.psi_minus).map(|(p, m)| r * (p - m)).collect();
                (up, down)
            }
        }
    }
}

/// `ψ_s(ξ) = Σ_n c_{n,s} φ_n(ξ)`.
///
/// Fails with [`Error::GridTooSmall`] if the wavefunction has not decayed
/// below [`BOUNDARY_LIMIT`] at the edges of the grid.
pub fn position_wavefunction(
    state: &[f64],
    grid: &PositionGrid,
    trunc: &Truncation,
) -> Result<TwoComponentWavefunction> {
    if state.len() != trunc.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of length {} for a basis of dimension {}",
            state.len(),
            trunc.dim()
        )));
    }
    let norm = state.iter().map(|c| c * c).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Unnormalized { norm });
    }
    let basis = hermite_basis(grid, trunc.n_trunc() - 1)?;
    let wf = expand(state, grid, &basis);
    let amplitude = wf.boundary_amplitude();
    if amplitude > BOUNDARY_LIMIT {
        return Err(Error::GridTooSmall {
            amplitude,
            limit: BOUNDARY_LIMIT,
        });
    }
    Ok(wf)
}

/// Expansion against a precomputed basis, which may be shared between
/// states.
pub fn expand(state: &[f64], grid: &PositionGrid, basis: &HermiteBasis) -> TwoComponentWavefunction {
    let points = grid.len();
    let mut psi_plus = vec![0.0; points];
    let mut psi_minus = vec![0.0; points];
    let n_states = (state.len() / 2).min(basis.n_max() + 1);
    for n in 0..n_states {
        let phi = basis.row(n);
        let cp = state[basis_index(n, Spin::Plus)];
        let cm = state[basis_index(n, Spin::Minus)];
        if cp != 0.0 {
            psi_plus.iter_mut().zip(phi).for_each(|(p, f)| *p += cp * f);
        }
        if cm != 0.0 {
            psi_minus.iter_mut().zip(phi).for_each(|(p, f)| *p += cm * f);
        }
    }
    TwoComponentWavefunction {
        grid: grid.clone(),
        psi_plus,
        psi_minus,
    }
}

/// `1 − |⟨ψ|R|ψ⟩|/⟨ψ|ψ⟩`, where `(Rψ)_s(ξ) = s·ψ_s(−ξ)` is parity acting
/// on the position representation. Zero for a parity eigenstate.
pub fn symmetry_defect(wf: &TwoComponentWavefunction) -> Result<f64> {
    let len = wf.grid.len();
    if wf.psi_plus.len() != len || wf.psi_minus.len() != len {
        return Err(Error::InvalidGrid("component length differs from the grid".into()));
    }
    let overlap = reflection_overlap(wf);
    let norm = wf.norm_sq();
    Ok((1.0 - (overlap / norm).abs()).clamp(0.0, 1.0))
}

/// `⟨ψ|R|ψ⟩` by trapezoid quadrature; negative for odd states.
pub fn reflection_overlap(wf: &TwoComponentWavefunction) -> f64 {
    let len = wf.grid.len();
    (0..len)
        .map(|i| {
            let j = len - 1 - i;
            wf.grid.weight(i) * (wf.psi_plus[i] * wf.psi_plus[j] - wf.psi_minus[i] * wf.psi_minus[j])
        })
        .sum()
}

/// Grid sized for the coupling in `params`.
pub fn default_grid(params: &ModelParams) -> Result<PositionGrid> {
    PositionGrid::for_coupling(params.g)
}
