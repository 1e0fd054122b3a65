//! Executes a resolved [`RunConfig`] and writes its artifacts.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::config::{Command, RunConfig};
use crate::eigen::{DEGENERACY_TOL, ORTHONORMALITY_TOL, RESIDUAL_TOL};
use crate::error::{Error, Result};
use crate::model::{shifted_energy, ModelParams, Truncation};
use crate::output::{self, PointStatus, RunManifest, Table, Tolerances, STATES_HEADER};
use crate::parity::{fock_populations, parity_expectation};
use crate::position::{default_grid, position_wavefunction, symmetry_defect, PositionGrid};
use crate::solve::solve;
use crate::sweep::{
    convergence_sentinel, convergence_sweep, coupling_sweep, phase_boundary_scan, sentinel_for, SweepManifest,
    SweepSettings, SENTINEL_TAIL_TOL,
};

/// What a finished job wrote.
#[derive(Clone, Debug)]
pub struct JobReport {
    pub manifest: RunManifest,
}

impl JobReport {
    pub fn sentinel_failures(&self) -> usize {
        self.manifest.points.iter().filter(|p| !p.sentinel_passed).count()
    }

    /// `Err(Error::Sentinel)` if any grid point failed its sentinel.
    pub fn status(&self) -> Result<()> {
        match self.sentinel_failures() {
            0 => Ok(()),
            failed => Err(Error::Sentinel {
                failed,
                total: self.manifest.points.len(),
            }),
        }
    }
}

struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
    points: Vec<PointStatus>,
    sweep: Option<SweepManifest>,
}

fn point(coords: &[(&str, f64)], passed: bool, max_tail: f64) -> PointStatus {
    PointStatus {
        coordinates: coords.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        sentinel_passed: passed,
        max_tail,
    }
}

/// Runs the job and writes its data files and manifest into `config.out`.
///
/// Sentinel failures do not prevent writing; check [`JobReport::status`].
pub fn run_job(config: &RunConfig) -> Result<JobReport> {
    let start = Instant::now();
    output::prepare_dir(&config.out)?;
    let settings = SweepSettings {
        eps_par: config.eps_par,
        method: config.method,
        threads: config.threads,
    };
    let trunc = Truncation::new(config.n_trunc)?;
    let ext = config.format.extension();
    let render = |name: &str, table: &Table| (format!("{name}.{ext}"), table.render(config.format).into_bytes());

    let artifacts = match config.command {
        Command::Spectrum | Command::Parity => {
            let g = config.coupling.g_values(config.delta)?;
            let levels = (config.levels + config.levels % 2).min(trunc.dim());
            let result = coupling_sweep(config.delta, &g, levels, &trunc, &settings)?;
            let (name, table) = if config.command == Command::Parity {
                ("parity", output::parity_table(&result))
            } else {
                ("spectrum", output::spectrum_table(&result, config.levels))
            };
            Artifacts {
                files: vec![render(name, &table)],
                points: result
                    .points
                    .iter()
                    .map(|p| point(&[("g", p.g), ("g_over_gc", p.g_over_gc)], p.sentinel.passed, p.sentinel.max_tail))
                    .collect(),
                sweep: Some(result.manifest),
            }
        }
        Command::Wavefunction => {
            let g = config.coupling.g_values(config.delta)?[0];
            let params = ModelParams::new(config.delta, g)?;
            let spectrum = solve(&params, &trunc, config.levels, config.method)?;
            let grid = match (config.xi_max, config.xi_step) {
                (None, None) => default_grid(&params)?,
                (max, step) => {
                    let fallback = default_grid(&params)?;
                    PositionGrid::new(max.unwrap_or(fallback.xi_max()), step.unwrap_or(fallback.step()))?
                }
            };
            let mut files = Vec::new();
            let mut states = Table::new(&STATES_HEADER);
            for (level, v) in spectrum.eigenvectors.iter().enumerate() {
                let wf = position_wavefunction(v, &grid, &trunc)?;
                let pops = fock_populations(v, &trunc)?;
                states.push(vec![
                    level.into(),
                    spectrum.eigenvalues[level].into(),
                    shifted_energy(spectrum.eigenvalues[level], &params).into(),
                    parity_expectation(v, &trunc)?.into(),
                    symmetry_defect(&wf)?.into(),
                    pops.p_even.into(),
                    pops.p_odd.into(),
                ]);
                files.push(render(
                    &format!("wavefunction_{level}"),
                    &output::wavefunction_table(&wf, config.spin_basis),
                ));
            }
            files.insert(0, render("states", &states));
            let sentinel = sentinel_for(&spectrum, &trunc)?;
            Artifacts {
                files,
                points: vec![point(
                    &[("g", g), ("g_over_gc", params.g_over_gc())],
                    sentinel.passed,
                    sentinel.max_tail,
                )],
                sweep: None,
            }
        }
        Command::Converge => {
            let g = config.coupling.g_values(config.delta)?;
            let result = convergence_sweep(
                config.delta,
                &g,
                &config.truncs,
                config.reference,
                config.levels,
                &settings,
            )?;
            Artifacts {
                files: vec![render("converge", &output::convergence_table(&result))],
                points: Vec::new(),
                sweep: Some(result.manifest),
            }
        }
        Command::PhaseDiagram => {
            let ratios = config
                .coupling
                .ratio_values()
                .ok_or_else(|| Error::Config("phase-diagram needs a g/g_c grid".into()))??;
            let result = phase_boundary_scan(&config.deltas, &config.pairs, &ratios, &trunc, &settings)?;
            let top = *ratios.last().expect("grid is non-empty");
            let levels = (2 * config.pairs.iter().max().copied().unwrap_or(0) + 2).min(trunc.dim());
            let mut points = Vec::new();
            for &delta in &config.deltas {
                let params = ModelParams::from_ratio(delta, top)?;
                let s = convergence_sentinel(&params, &trunc, levels)?;
                points.push(point(&[("delta", delta), ("g_over_gc", top)], s.passed, s.max_tail));
            }
            Artifacts {
                files: vec![render("phase_diagram", &output::phase_table(&result))],
                points,
                sweep: Some(result.manifest),
            }
        }
    };

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: config.command.name().to_string(),
        config: serde_json::to_value(config.to_file_config()).expect("config serializes"),
        provenance: config
            .provenance
            .iter()
            .map(|(k, v)| (k.clone(), v.to_string()))
            .collect::<BTreeMap<_, _>>(),
        tolerances: Tolerances {
            residual: RESIDUAL_TOL,
            orthonormality: ORTHONORMALITY_TOL,
            degeneracy: DEGENERACY_TOL,
            sentinel_tail: SENTINEL_TAIL_TOL,
            eps_par: config.eps_par,
        },
        wall_time_s: start.elapsed().as_secs_f64(),
        sweep: artifacts.sweep,
        points: artifacts.points,
        files: Vec::new(),
    };
    let manifest = output::write_artifacts(&config.out, &artifacts.files, manifest)?;
    Ok(JobReport { manifest })
}
