//! Lowest Rabi eigenstates through either the full matrix or the two
//! parity sectors.

use serde::{Deserialize, Serialize};

use crate::eigen::{self, Spectrum, SolverOptions, SolverPath, SpectrumMeta, DEGENERACY_TOL};
use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, sector_hamiltonian, sector_index, ModelParams, Parity, Truncation};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Diagonalize the full `2N × 2N` Hamiltonian. Near-degenerate pairs
    /// come back in whatever mixture the solver produces.
    #[default]
    Full,
    /// Diagonalize each parity sector separately; every state is a parity
    /// eigenstate by construction.
    #[value(alias = "sector")]
    Sectors,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Method::Full),
            "sectors" | "sector" => Ok(Method::Sectors),
            other => Err(Error::Config(format!("unknown solver method {other:?} (full | sectors)"))),
        }
    }
}

pub fn solve(params: &ModelParams, trunc: &Truncation, levels: usize, method: Method) -> Result<Spectrum> {
    solve_with(params, trunc, levels, method, &SolverOptions::default())
}

pub fn solve_with(
    params: &ModelParams,
    trunc: &Truncation,
    levels: usize,
    method: Method,
    opts: &SolverOptions,
) -> Result<Spectrum> {
    if levels == 0 || levels > trunc.dim() {
        return Err(Error::param("levels", format!("{levels} must lie in 1..={}", trunc.dim())));
    }
    let spectrum = match method {
        Method::Full => {
            let h = build_hamiltonian(params, trunc)?;
            eigen::eig_sym_dense_with(&h, levels, opts)?
        }
        Method::Sectors => solve_sectors(params, trunc, levels, opts)?,
    };
    Ok(spectrum.with_model(*params, *trunc))
}

/// Lowest energies only, via the full matrix.
pub fn energies(params: &ModelParams, trunc: &Truncation, levels: usize) -> Result<Vec<f64>> {
    let h = build_hamiltonian(params, trunc)?;
    eigen::eigenvalues_sym_dense(&h, levels)
}

fn solve_sectors(
    params: &ModelParams,
    trunc: &Truncation,
    levels: usize,
    opts: &SolverOptions,
) -> Result<Spectrum> {
    let per_sector = levels.min(trunc.n_trunc());
    let mut states: Vec<(f64, f64, Vec<f64>)> = Vec::with_capacity(2 * per_sector);
    let mut wall = 0.0;
    let mut scale = 1.0_f64;
    for parity in [Parity::Even, Parity::Odd] {
        let tri = sector_hamiltonian(params, trunc, parity)?;
        let spec = eigen::eig_sym_tridiag_with(&tri.diag, &tri.offdiag, per_sector, opts)?;
        wall += spec.meta.wall_time_s;
        scale = scale.max(spec.scale);
        for ((value, residual), v) in spec
            .eigenvalues
            .into_iter()
            .zip(spec.residual_norms)
            .zip(spec.eigenvectors)
        {
            let mut full = vec![0.0; trunc.dim()];
            for (n, c) in v.into_iter().enumerate() {
                full[sector_index(parity, n)] = c;
            }
            states.push((value, residual, full));
        }
    }
    states.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(first_index(&a.2).cmp(&first_index(&b.2)))
    });
    states.truncate(levels);

    let eigenvalues: Vec<f64> = states.iter().map(|s| s.0).collect();
    let degenerate = (0..eigenvalues.len())
        .map(|i| {
            let close = |j: usize| (eigenvalues[i] - eigenvalues[j]).abs() < DEGENERACY_TOL * scale;
            (i > 0 && close(i - 1)) || (i + 1 < eigenvalues.len() && close(i + 1))
        })
        .collect();
    Ok(Spectrum {
        residual_norms: states.iter().map(|s| s.1).collect(),
        eigenvectors: states.into_iter().map(|s| s.2).collect(),
        eigenvalues,
        degenerate,
        scale,
        meta: SpectrumMeta {
            path: SolverPath::Tridiagonal,
            params: None,
            truncation: None,
            wall_time_s: wall,
        },
    })
}

fn first_index(v: &[f64]) -> usize {
    v.iter().position(|x| *x != 0.0).unwrap_or(v.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::residual_report;

    #[test]
    fn full_and_sector_spectra_agree() {
        let params = ModelParams::new(1.0, 0.5).unwrap();
        let trunc = Truncation::new(60).unwrap();
        let full = solve(&params, &trunc, 12, Method::Full).unwrap();
        let sect = solve(&params, &trunc, 12, Method::Sectors).unwrap();
        for (a, b) in full.eigenvalues.iter().zip(&sect.eigenvalues) {
            assert!((a - b).abs() < 1e-11);
        }
        let h = build_hamiltonian(&params, &trunc).unwrap();
        assert!(residual_report(&h, &sect).unwrap().passed());
        assert!(residual_report(&h, &full).unwrap().passed());
        assert_eq!(sect.meta.params, Some(params));
    }

    #[test]
    fn levels_validated() {
        let params = ModelParams::new(1.0, 0.5).unwrap();
        let trunc = Truncation::new(4).unwrap();
        assert!(solve(&params, &trunc, 0, Method::Full).is_err());
        assert!(solve(&params, &trunc, 9, Method::Sectors).is_err());
        assert_eq!(solve(&params, &trunc, 8, Method::Sectors).unwrap().len(), 8);
    }

    #[test]
    fn method_parses() {
        assert_eq!("full".parse::<Method>().unwrap(), Method::Full);
        assert_eq!("sectors".parse::<Method>().unwrap(), Method::Sectors);
        assert!("lanczos".parse::<Method>().is_err());
    }
}
