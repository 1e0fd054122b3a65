//! Parameter scans: coupling sweeps, truncation convergence and the
//! parity-onset phase boundary.
//!
//! Grid points are independent; they may be evaluated on a worker pool but
//! results are always merged back in grid order, so the output does not
//! depend on the schedule.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{Spectrum, DEGENERACY_TOL, ORTHONORMALITY_TOL, RESIDUAL_TOL};
use crate::error::{Error, Result};
use crate::model::{critical_coupling, shifted_energy, ModelParams, Truncation};
use crate::parity::{self, check_grid, fock_populations, pair_report, parity_expectation, Onset, ParityReport};
use crate::solve::{energies, solve, Method};

/// Tail population bound of the convergence sentinel.
pub const SENTINEL_TAIL_TOL: f64 = 1e-12;
/// Fraction of the truncation where the sentinel's tail begins.
pub const SENTINEL_TAIL_START: f64 = 0.9;
/// Default coupling step, in units of `g_c`.
pub const DEFAULT_G_STEP_OVER_GC: f64 = 0.005;
pub const DEFAULT_N_TRUNC: usize = 1000;
pub const DEFAULT_REFERENCE_TRUNC: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub eps_par: f64,
    pub method: Method,
    /// Worker count; 0 lets the pool decide.
    pub threads: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            eps_par: parity::DEFAULT_EPS_PAR,
            method: Method::Full,
            threads: 0,
        }
    }
}

/// One axis of a sweep grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, values: Vec<f64>) -> Self {
        Axis {
            name: name.to_string(),
            values,
        }
    }
}

/// `start, start + step, ..` up to `stop` inclusive (with a tolerance of
/// a millionth of a step so that `0:2:0.005` ends at exactly 2).
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Err(Error::InvalidGrid("grid bounds must be finite".into()));
    }
    if step <= 0.0 {
        return Err(Error::InvalidGrid(format!("step {step} must be positive")));
    }
    if stop < start {
        return Err(Error::InvalidGrid(format!("stop {stop} is below start {start}")));
    }
    let count = ((stop - start) / step + 1e-6).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub kind: String,
    pub delta: Vec<f64>,
    pub truncations: Vec<usize>,
    pub levels: usize,
    pub settings: SweepSettings,
    pub residual_tol: f64,
    pub orthonormality_tol: f64,
    pub degeneracy_tol: f64,
    pub sentinel_tail_tol: f64,
    pub version: String,
    pub wall_time_s: f64,
    /// Points whose convergence sentinel failed.
    pub sentinel_failures: usize,
}

impl SweepManifest {
    fn new(kind: &str, delta: Vec<f64>, truncations: Vec<usize>, levels: usize, settings: SweepSettings) -> Self {
        SweepManifest {
            kind: kind.to_string(),
            delta,
            truncations,
            levels,
            settings,
            residual_tol: RESIDUAL_TOL,
            orthonormality_tol: ORTHONORMALITY_TOL,
            degeneracy_tol: DEGENERACY_TOL,
            sentinel_tail_tol: SENTINEL_TAIL_TOL,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: 0.0,
            sentinel_failures: 0,
        }
    }
}

/// Rows of a scan in grid order, plus what is needed to reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult<P> {
    pub axes: Vec<Axis>,
    pub points: Vec<P>,
    pub manifest: SweepManifest,
}

/// Runs `f` over `items`, concurrently when `threads != 1`, returning
/// results in input order.
pub fn map_ordered<T, R, F>(items: &[T], threads: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    if threads == 1 {
        return items.iter().map(&f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect::<Vec<_>>())
        .into_iter()
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentinelStatus {
    pub passed: bool,
    /// Largest tail population over the retained states.
    pub max_tail: f64,
}

/// Tail population `Σ_{n ≥ 0.9·N} P(n)` of every state in `spectrum`.
pub fn sentinel_for(spectrum: &Spectrum, trunc: &Truncation) -> Result<SentinelStatus> {
    let start = (SENTINEL_TAIL_START * trunc.n_trunc() as f64).ceil() as usize;
    let mut max_tail = 0.0_f64;
    for v in &spectrum.eigenvectors {
        let pops = fock_populations(v, trunc)?;
        let tail: f64 = pops.distribution[start.min(pops.distribution.len())..].iter().sum();
        max_tail = max_tail.max(tail);
    }
    Ok(SentinelStatus {
        passed: max_tail < SENTINEL_TAIL_TOL,
        max_tail,
    })
}

/// Certifies that the truncation does not bias the lowest `levels` states.
pub fn convergence_sentinel(params: &ModelParams, trunc: &Truncation, levels: usize) -> Result<SentinelStatus> {
    let spectrum = solve(params, trunc, levels, Method::Sectors)?;
    sentinel_for(&spectrum, trunc)
}

/// Per-coupling output of [`coupling_sweep`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingPoint {
    pub g: f64,
    pub g_over_gc: f64,
    pub energies: Vec<f64>,
    pub shifted_energies: Vec<f64>,
    pub parities: Vec<f64>,
    pub p_even: Vec<f64>,
    pub p_odd: Vec<f64>,
    pub degenerate: Vec<bool>,
    pub residuals: Vec<f64>,
    pub pairs: Vec<ParityReport>,
    pub max_residual: f64,
    pub sentinel: SentinelStatus,
}

impl CouplingPoint {
    fn evaluate(params: &ModelParams, trunc: &Truncation, levels: usize, settings: &SweepSettings) -> Result<Self> {
        let spectrum = solve(params, trunc, levels, settings.method)?;
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
        Ok(CouplingPoint {
            g: params.g,
            g_over_gc: params.g_over_gc(),
            shifted_energies: spectrum.eigenvalues.iter().map(|e| shifted_energy(*e, params)).collect(),
            energies: spectrum.eigenvalues.clone(),
            parities,
            p_even: pops.iter().map(|p| p.p_even).collect(),
            p_odd: pops.iter().map(|p| p.p_odd).collect(),
            degenerate: spectrum.degenerate.clone(),
            residuals: spectrum.residual_norms.clone(),
            pairs: pair_report(&spectrum, params, trunc, settings.eps_par)?,
            max_residual: spectrum.max_residual(),
            sentinel: sentinel_for(&spectrum, trunc)?,
        })
    }
}

/// Lowest `levels` states, their parities and pair diagnostics at every
/// coupling in `g_grid`.
pub fn coupling_sweep(
    delta: f64,
    g_grid: &[f64],
    levels: usize,
    trunc: &Truncation,
    settings: &SweepSettings,
) -> Result<SweepResult<CouplingPoint>> {
    let start = Instant::now();
    if levels == 0 || levels % 2 != 0 {
        return Err(Error::param("levels", format!("{levels} must be a positive even number")));
    }
    check_grid(g_grid)?;
    let params = g_grid
        .iter()
        .map(|&g| ModelParams::new(delta, g))
        .collect::<Result<Vec<_>>>()?;
    let points = map_ordered(&params, settings.threads, |p| CouplingPoint::evaluate(p, trunc, levels, settings))?;

    let mut manifest = SweepManifest::new("coupling", vec![delta], vec![trunc.n_trunc()], levels, *settings);
    manifest.sentinel_failures = points.iter().filter(|p| !p.sentinel.passed).count();
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    Ok(SweepResult {
        axes: vec![Axis::new("g", g_grid.to_vec())],
        points,
        manifest,
    })
}

impl SweepResult<CouplingPoint> {
    /// Whether the sentinel passed at the strongest coupling.
    pub fn truncation_adequate(&self) -> bool {
        self.points.last().is_some_and(|p| p.sentinel.passed)
    }
}

/// `|E_i(N) - E_i(N_ref)|` for one coupling, truncation and level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub g: f64,
    pub g_over_gc: f64,
    pub n_trunc: usize,
    pub level: usize,
    pub energy: f64,
    pub reference_energy: f64,
    pub abs_diff: f64,
}

/// Energies at each truncation in `truncations` compared with
/// `reference`, across `g_grid`.
pub fn convergence_sweep(
    delta: f64,
    g_grid: &[f64],
    truncations: &[usize],
    reference: usize,
    levels: usize,
    settings: &SweepSettings,
) -> Result<SweepResult<ConvergencePoint>> {
    let start = Instant::now();
    check_grid(g_grid)?;
    if truncations.is_empty() {
        return Err(Error::param("truncs", "no truncations given"));
    }
    let largest = *truncations.iter().max().unwrap();
    if reference < largest {
        return Err(Error::param(
            "ref",
            format!("reference truncation {reference} is smaller than candidate {largest}"),
        ));
    }
    let reference = Truncation::new(reference)?;
    let truncs = truncations
        .iter()
        .map(|&n| Truncation::new(n))
        .collect::<Result<Vec<_>>>()?;
    let gc = critical_coupling(delta)?;

    let lowest = |params: &ModelParams, trunc: &Truncation| -> Result<Vec<f64>> {
        match settings.method {
            Method::Full => energies(params, trunc, levels),
            Method::Sectors => Ok(solve(params, trunc, levels, Method::Sectors)?.eigenvalues),
        }
    };
    let per_g = map_ordered(g_grid, settings.threads, |&g| {
        let params = ModelParams::new(delta, g)?;
        let reference_energies = lowest(&params, &reference)?;
        let mut rows = Vec::with_capacity(truncs.len() * levels);
        for trunc in &truncs {
            let energies = if trunc.n_trunc() == reference.n_trunc() {
                reference_energies.clone()
            } else {
                lowest(&params, trunc)?
            };
            for (level, (&e, &r)) in energies.iter().zip(&reference_energies).enumerate() {
                rows.push(ConvergencePoint {
                    g,
                    g_over_gc: g / gc,
                    n_trunc: trunc.n_trunc(),
                    level,
                    energy: e,
                    reference_energy: r,
                    abs_diff: (e - r).abs(),
                });
            }
        }
        Ok(rows)
    })?;

    let mut all_truncs = truncations.to_vec();
    all_truncs.push(reference.n_trunc());
    let mut manifest = SweepManifest::new("convergence", vec![delta], all_truncs, levels, *settings);
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    Ok(SweepResult {
        axes: vec![
            Axis::new("g", g_grid.to_vec()),
            Axis::new("n_trunc", truncations.iter().map(|&n| n as f64).collect()),
        ],
        points: per_g.into_iter().flatten().collect(),
        manifest,
    })
}

/// Whether `diffs` (ordered by increasing truncation) never grows by more
/// than `floor`.
pub fn non_increasing_within(diffs: &[f64], floor: f64) -> bool {
    diffs.windows(2).all(|w| w[1] <= w[0] + floor)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryStatus {
    Found,
    /// The pair stayed regular across the whole grid.
    None,
    /// Levels are exactly degenerate (`Δ = 0`); per-state parities are
    /// solver-arbitrary and no onset is reported.
    Degenerate,
}

impl BoundaryStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryStatus::Found => "found",
            BoundaryStatus::None => "none",
            BoundaryStatus::Degenerate => "degenerate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub delta: f64,
    pub g_c: f64,
    pub pair_index: usize,
    pub status: BoundaryStatus,
    pub onset: Option<Onset>,
    /// The normal/superradiant reference line, `g/g_c = 1`.
    pub transition_g_over_gc: f64,
}

/// Onset of irregular parity for each `Δ` in `delta_grid` and each pair in
/// `pairs`, scanning `g/g_c` over `g_over_gc_grid`.
pub fn phase_boundary_scan(
    delta_grid: &[f64],
    pairs: &[usize],
    g_over_gc_grid: &[f64],
    trunc: &Truncation,
    settings: &SweepSettings,
) -> Result<SweepResult<BoundaryPoint>> {
    let start = Instant::now();
    check_grid(delta_grid)?;
    check_grid(g_over_gc_grid)?;
    if pairs.is_empty() {
        return Err(Error::param("pairs", "no pairs given"));
    }
    if g_over_gc_grid[0] < 0.0 {
        return Err(Error::InvalidGrid("negative coupling in grid".into()));
    }
    let max_pair = *pairs.iter().max().unwrap();
    let levels = 2 * max_pair + 2;
    if levels > trunc.dim() {
        return Err(Error::param("pairs", format!("pair {max_pair} exceeds the truncated basis")));
    }

    let rows = map_ordered(delta_grid, settings.threads, |&delta| {
        let gc = critical_coupling(delta)?;
        if delta < DEGENERACY_TOL {
            return Ok(pairs
                .iter()
                .map(|&k| BoundaryPoint {
                    delta,
                    g_c: gc,
                    pair_index: k,
                    status: BoundaryStatus::Degenerate,
                    onset: None,
                    transition_g_over_gc: 1.0,
                })
                .collect::<Vec<_>>());
        }
        let mut onsets: Vec<Option<Onset>> = vec![None; pairs.len()];
        for (idx, &ratio) in g_over_gc_grid.iter().enumerate() {
            if onsets.iter().all(Option::is_some) {
                break;
            }
            let params = ModelParams::new(delta, ratio * gc)?;
            let spectrum = solve(&params, trunc, levels, Method::Full)?;
            for (slot, &k) in onsets.iter_mut().zip(pairs) {
                if slot.is_none() && parity::irregular_at(&spectrum, trunc, k, settings.eps_par)? {
                    let step = if idx > 0 {
                        ratio - g_over_gc_grid[idx - 1]
                    } else if g_over_gc_grid.len() > 1 {
                        g_over_gc_grid[1] - ratio
                    } else {
                        0.0
                    };
                    *slot = Some(Onset {
                        g: params.g,
                        g_over_gc: ratio,
                        resolution: step * gc,
                    });
                }
            }
        }
        Ok(pairs
            .iter()
            .zip(onsets)
            .map(|(&k, onset)| BoundaryPoint {
                delta,
                g_c: gc,
                pair_index: k,
                status: if onset.is_some() {
                    BoundaryStatus::Found
                } else {
                    BoundaryStatus::None
                },
                onset,
                transition_g_over_gc: 1.0,
            })
            .collect())
    })?;

    let mut manifest = SweepManifest::new("phase_diagram", delta_grid.to_vec(), vec![trunc.n_trunc()], levels, *settings);
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    Ok(SweepResult {
        axes: vec![
            Axis::new("delta", delta_grid.to_vec()),
            Axis::new("g_over_gc", g_over_gc_grid.to_vec()),
        ],
        points: rows.into_iter().flatten().collect(),
        manifest,
    })
}
