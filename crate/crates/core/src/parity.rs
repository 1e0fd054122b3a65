//! Parity diagnostics of eigenstates: `⟨P⟩`, level pairs, Fock
//! populations and the coupling where parity turns irregular.
//!
//! Levels are paired as `{E_2k, E_2k+1}` in ascending order. For each pair
//! the parity sum is evaluated as the trace of `P` over the span of the two
//! eigenvectors, which does not depend on how the solver mixes them.

use serde::{Deserialize, Serialize};

use crate::eigen::Spectrum;
use crate::error::{Error, Result};
use crate::model::{critical_coupling, parity_label, shifted_energy, ModelParams, Truncation};
use crate::solve::{solve, Method};

/// Default irregularity threshold on `1 - |⟨P⟩|`.
pub const DEFAULT_EPS_PAR: f64 = 0.1;

const NORM_TOL: f64 = 1e-10;

fn check_state(state: &[f64], trunc: &Truncation) -> Result<()> {
    if state.len() != trunc.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of length {} for a basis of dimension {}",
            state.len(),
            trunc.dim()
        )));
    }
    let norm = state.iter().map(|c| c * c).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::Unnormalized { norm });
    }
    Ok(())
}

/// `⟨ψ|P|ψ⟩ = Σ s·(-1)^n·|c_{n,s}|²`, divided by `‖ψ‖²` so that a state
/// supported on one sector gives exactly ±1.
pub fn parity_expectation(state: &[f64], trunc: &Truncation) -> Result<f64> {
    check_state(state, trunc)?;
    let (mut even, mut odd) = (0.0, 0.0);
    for (i, c) in state.iter().enumerate() {
        if parity_label(i) > 0.0 {
            even += c * c;
        } else {
            odd += c * c;
        }
    }
    Ok(((even - odd) / (even + odd)).clamp(-1.0, 1.0))
}

/// Photon-number statistics of a state with the spin traced out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockPopulations {
    pub p_even: f64,
    pub p_odd: f64,
    /// `P(n) = Σ_s |c_{n,s}|²`.
    pub distribution: Vec<f64>,
}

pub fn fock_populations(state: &[f64], trunc: &Truncation) -> Result<FockPopulations> {
    check_state(state, trunc)?;
    let distribution: Vec<f64> = state.chunks_exact(2).map(|c| c[0] * c[0] + c[1] * c[1]).collect();
    let p_even = distribution.iter().step_by(2).sum();
    let p_odd = distribution.iter().skip(1).step_by(2).sum();
    Ok(FockPopulations {
        p_even,
        p_odd,
        distribution,
    })
}

/// Trace of `P` over the span of `a` and `b`, with the Gram matrix
/// accounted for so small departures from orthonormality do not leak in.
pub fn subspace_parity_trace(a: &[f64], b: &[f64]) -> f64 {
    let pab = |x: &[f64], y: &[f64]| -> f64 {
        x.iter()
            .zip(y)
            .enumerate()
            .map(|(i, (u, v))| parity_label(i) * u * v)
            .sum()
    };
    let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(u, v)| u * v).sum() };
    let (gaa, gab, gbb) = (dot(a, a), dot(a, b), dot(b, b));
    let (paa, pab_, pbb) = (pab(a, a), pab(a, b), pab(b, b));
    let det = gaa * gbb - gab * gab;
    // tr(G⁻¹ Π) for the 2x2 Gram matrix G and projected parity Π
    (gbb * paa - 2.0 * gab * pab_ + gaa * pbb) / det
}

/// Diagnostics for one pair of levels `{E_2k, E_2k+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityReport {
    pub pair_index: usize,
    pub energies: [f64; 2],
    pub shifted_energies: [f64; 2],
    pub parities: [f64; 2],
    pub gap: f64,
    pub gap_shifted: f64,
    /// `⟨P⟩_2k + ⟨P⟩_2k+1`.
    pub parity_sum: f64,
    /// Trace of `P` over the two-dimensional eigenspace.
    pub subspace_trace: f64,
    pub p_even: [f64; 2],
    pub p_odd: [f64; 2],
    /// `min(|⟨P⟩_2k|, |⟨P⟩_2k+1|) >= 1 - eps_par`.
    pub regular: bool,
    /// The solver flagged the two levels as degenerate.
    pub degenerate: bool,
}

/// One report per complete pair in `spectrum`.
pub fn pair_report(
    spectrum: &Spectrum,
    params: &ModelParams,
    trunc: &Truncation,
    eps_par: f64,
) -> Result<Vec<ParityReport>> {
    check_eps(eps_par)?;
    if spectrum.len() < 2 {
        return Err(Error::param(
            "levels",
            format!("{} retained states cannot form a pair", spectrum.len()),
        ));
    }
    let parities = spectrum
        .eigenvectors
        .iter()
        .map(|v| parity_expectation(v, trunc))
        .collect::<Result<Vec<_>>>()?;
    let pops = spectrum
        .eigenvectors
        .iter()
        .map(|v| fock_populations(v, trunc))
        .collect::<Result<Vec<_>>>()?;

    let reports = (0..spectrum.len() / 2)
        .map(|k| {
            let (i, j) = (2 * k, 2 * k + 1);
            let energies = [spectrum.eigenvalues[i], spectrum.eigenvalues[j]];
            let shifted_energies = energies.map(|e| shifted_energy(e, params));
            let pars = [parities[i], parities[j]];
            ParityReport {
                pair_index: k,
                energies,
                shifted_energies,
                parities: pars,
                gap: energies[1] - energies[0],
                gap_shifted: shifted_energies[1] - shifted_energies[0],
                parity_sum: pars[0] + pars[1],
                subspace_trace: subspace_parity_trace(&spectrum.eigenvectors[i], &spectrum.eigenvectors[j]),
                p_even: [pops[i].p_even, pops[j].p_even],
                p_odd: [pops[i].p_odd, pops[j].p_odd],
                regular: pars[0].abs().min(pars[1].abs()) >= 1.0 - eps_par,
                degenerate: spectrum.degenerate[i] && spectrum.degenerate[j],
            }
        })
        .collect();
    Ok(reports)
}

fn check_eps(eps_par: f64) -> Result<()> {
    if !(eps_par > 0.0 && eps_par < 1.0) {
        return Err(Error::param("eps_par", format!("{eps_par} must lie in (0, 1)")));
    }
    Ok(())
}

/// First grid coupling where a pair turns irregular.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Onset {
    pub g: f64,
    pub g_over_gc: f64,
    /// Spacing of the grid around the onset; the onset is only resolved to
    /// this precision.
    pub resolution: f64,
}

/// Smallest `g` in `g_grid` at which
/// `min(|⟨P⟩_2k|, |⟨P⟩_2k+1|) < 1 - eps_par`, scanning upward from the
/// start of the grid with full-matrix eigenvectors.
pub fn onset_coupling(
    delta: f64,
    pair_k: usize,
    g_grid: &[f64],
    eps_par: f64,
    trunc: &Truncation,
) -> Result<Option<Onset>> {
    check_eps(eps_par)?;
    check_grid(g_grid)?;
    let gc = critical_coupling(delta)?;
    let levels = 2 * pair_k + 2;
    for (idx, &g) in g_grid.iter().enumerate() {
        let params = ModelParams::new(delta, g)?;
        let spectrum = solve(&params, trunc, levels, Method::Full)?;
        if !irregular_at(&spectrum, trunc, pair_k, eps_par)? {
            continue;
        }
        let resolution = match idx {
            0 if g_grid.len() > 1 => g_grid[1] - g_grid[0],
            0 => 0.0,
            _ => g - g_grid[idx - 1],
        };
        return Ok(Some(Onset {
            g,
            g_over_gc: g / gc,
            resolution,
        }));
    }
    Ok(None)
}

/// Whether pair `pair_k` of `spectrum` breaks the irregularity threshold.
pub fn irregular_at(spectrum: &Spectrum, trunc: &Truncation, pair_k: usize, eps_par: f64) -> Result<bool> {
    let (i, j) = (2 * pair_k, 2 * pair_k + 1);
    if j >= spectrum.len() {
        return Err(Error::param("pair", format!("pair {pair_k} needs {} states", j + 1)));
    }
    let a = parity_expectation(&spectrum.eigenvectors[i], trunc)?;
    let b = parity_expectation(&spectrum.eigenvectors[j], trunc)?;
    Ok(a.abs().min(b.abs()) < 1.0 - eps_par)
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty coupling grid".into()));
    }
    if grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidGrid("non-finite coupling in grid".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("coupling grid must be strictly increasing".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{basis_index, Spin};

    fn trunc(n: usize) -> Truncation {
        Truncation::new(n).unwrap()
    }

    fn unit(dim: usize, idx: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        v[idx] = 1.0;
        v
    }

    #[test]
    fn basis_state_parities() {
        let t = trunc(5);
        assert_eq!(parity_expectation(&unit(10, basis_index(0, Spin::Minus)), &t).unwrap(), -1.0);
        assert_eq!(parity_expectation(&unit(10, basis_index(0, Spin::Plus)), &t).unwrap(), 1.0);
        assert_eq!(parity_expectation(&unit(10, basis_index(3, Spin::Plus)), &t).unwrap(), -1.0);
    }

    #[test]
    fn mixed_parity_superposition_is_zero() {
        let t = trunc(3);
        let mut v = vec![0.0; 6];
        let h = 0.5_f64.sqrt();
        v[basis_index(0, Spin::Plus)] = h;
        v[basis_index(2, Spin::Minus)] = h;
        assert!(parity_expectation(&v, &t).unwrap().abs() < 1e-16);
        assert!((subspace_parity_trace(&unit(6, 0), &unit(6, 1))).abs() < 1e-16);
    }

    #[test]
    fn rejects_unnormalized_states() {
        let t = trunc(3);
        let v = vec![0.5; 6];
        assert!(matches!(parity_expectation(&v, &t), Err(Error::Unnormalized { .. })));
        assert!(matches!(fock_populations(&v, &t), Err(Error::Unnormalized { .. })));
        assert!(parity_expectation(&[1.0, 0.0], &t).is_err());
    }

    #[test]
    fn populations_of_basis_state() {
        let t = trunc(6);
        for spin in [Spin::Plus, Spin::Minus] {
            let pops = fock_populations(&unit(12, basis_index(3, spin)), &t).unwrap();
            assert_eq!(pops.distribution[3], 1.0);
            assert_eq!(pops.p_odd, 1.0);
            assert_eq!(pops.p_even, 0.0);
        }
    }

    #[test]
    fn decoupled_pair() {
        let params = ModelParams::new(0.5, 0.0).unwrap();
        let t = trunc(10);
        let spec = solve(&params, &t, 4, Method::Full).unwrap();
        let reports = pair_report(&spec, &params, &t, DEFAULT_EPS_PAR).unwrap();
        let r = &reports[0];
        assert_eq!(r.energies, [-0.25, 0.25]);
        assert_eq!(r.parities, [-1.0, 1.0]);
        assert_eq!(r.parity_sum, 0.0);
        assert!(r.regular);
        assert_eq!(reports.len(), 2);
    }

    #[test]
    fn subspace_trace_invariant_under_rotation() {
        let t = trunc(4);
        let e = unit(8, basis_index(0, Spin::Plus));
        let o = unit(8, basis_index(0, Spin::Minus));
        for theta in [0.0, 0.3, 1.1, 2.0] {
            let (c, s) = (f64::cos(theta), f64::sin(theta));
            let a: Vec<f64> = e.iter().zip(&o).map(|(x, y)| c * x + s * y).collect();
            let b: Vec<f64> = e.iter().zip(&o).map(|(x, y)| -s * x + c * y).collect();
            assert!(subspace_parity_trace(&a, &b).abs() < 1e-15);
            let pa = parity_expectation(&a, &t).unwrap();
            assert!((pa - (2.0 * theta).cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn pair_report_needs_two_states() {
        let params = ModelParams::new(0.5, 0.1).unwrap();
        let t = trunc(10);
        let spec = solve(&params, &t, 1, Method::Full).unwrap();
        assert!(pair_report(&spec, &params, &t, 0.1).is_err());
        let spec = solve(&params, &t, 2, Method::Full).unwrap();
        assert!(pair_report(&spec, &params, &t, 1.5).is_err());
    }

    #[test]
    fn onset_validates_inputs() {
        let t = trunc(10);
        assert!(matches!(onset_coupling(1.0, 0, &[], 0.1, &t), Err(Error::InvalidGrid(_))));
        assert!(onset_coupling(1.0, 0, &[0.2, 0.1], 0.1, &t).is_err());
        assert!(onset_coupling(1.0, 0, &[0.1], 0.0, &t).is_err());
    }

    #[test]
    fn no_onset_in_normal_phase() {
        let delta = 50.0;
        let gc = critical_coupling(delta).unwrap();
        let grid: Vec<f64> = (0..=10).map(|i| 0.05 * i as f64 * gc).collect();
        assert_eq!(onset_coupling(delta, 0, &grid, 0.1, &trunc(100)).unwrap(), None);
    }
}
