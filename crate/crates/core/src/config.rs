//! Command-line flags, config files and their resolution into a
//! [`RunConfig`].
//!
//! A config file is flat TOML (or JSON; a run manifest is also accepted,
//! in which case its `config` object is used). Flags override file values.
//! Supplying two different coupling keys (`g`, `g_over_gc`, `sweep_g`,
//! `sweep_g_over_gc`) is rejected wherever they come from.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::critical_coupling;
use crate::output::Format;
use crate::parity::DEFAULT_EPS_PAR;
use crate::position::SpinView;
use crate::solve::Method;
use crate::sweep::{linspace_step, DEFAULT_N_TRUNC, DEFAULT_REFERENCE_TRUNC};

pub const THREADS_ENV: &str = "RABI_LAB_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Lowest eigenvalues with parities and residuals
    Spectrum,
    /// Per-state parity, pair gaps and pair parity sums
    Parity,
    /// Position-space wavefunctions of the lowest states
    Wavefunction,
    /// Energy differences between truncations
    Converge,
    /// Onset of irregular parity across Δ
    PhaseDiagram,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Parity => "parity",
            Command::Wavefunction => "wavefunction",
            Command::Converge => "converge",
            Command::PhaseDiagram => "phase-diagram",
        }
    }
}

/// Exact diagonalization of the quantum Rabi model.
#[derive(Clone, Debug, Default, Parser)]
#[command(name = "rabi-lab", version, about)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Option<Command>,

    /// Flat TOML or JSON file of settings; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Qubit splitting Δ
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,

    /// Absolute coupling g
    #[arg(long, allow_negative_numbers = true)]
    pub g: Option<f64>,

    /// Coupling in units of the critical coupling
    #[arg(long, allow_negative_numbers = true)]
    pub g_over_gc: Option<f64>,

    /// Absolute coupling grid, start:stop:step
    #[arg(long)]
    pub sweep_g: Option<String>,

    /// Coupling grid in units of g_c, start:stop:step
    #[arg(long)]
    pub sweep_g_over_gc: Option<String>,

    /// Fock truncation N (photon numbers 0..N-1)
    #[arg(long)]
    pub n_trunc: Option<usize>,

    /// Number of lowest states
    #[arg(long)]
    pub levels: Option<usize>,

    /// Candidate truncations for `converge`
    #[arg(long, value_delimiter = ',')]
    pub truncs: Option<Vec<usize>>,

    /// Reference truncation for `converge`
    #[arg(long = "ref")]
    pub reference: Option<usize>,

    /// Δ values for `phase-diagram`
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,

    /// Pair indices for `phase-diagram`
    #[arg(long, value_delimiter = ',')]
    pub pairs: Option<Vec<usize>>,

    /// Irregular-parity threshold on 1 - |<P>|
    #[arg(long)]
    pub eps_par: Option<f64>,

    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub format: Option<Format>,

    #[arg(long, value_enum)]
    pub method: Option<Method>,

    /// Spin basis of wavefunction components
    #[arg(long, value_enum)]
    pub spin_basis: Option<SpinView>,

    /// Worker threads (0 = automatic)
    #[arg(long)]
    pub threads: Option<usize>,

    /// Half-width of the position grid
    #[arg(long)]
    pub xi_max: Option<f64>,

    /// Position grid spacing
    #[arg(long)]
    pub xi_step: Option<f64>,
}

/// Settings as they appear in a config file or a manifest.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_over_gc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_g: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_g_over_gc: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_trunc: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncs: Option<Vec<usize>>,
    #[serde(rename = "ref", skip_serializing_if = "Option::is_none")]
    pub reference: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_par: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spin_basis: Option<SpinView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_step: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
        let parsed = if is_json {
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let value = match value.get("config") {
                Some(inner) if value.get("tool").is_some() => inner.clone(),
                _ => value,
            };
            serde_json::from_value(value).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Flag,
    File,
    Env,
    Default,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Flag => "flag",
            Source::File => "config file",
            Source::Env => "environment",
            Source::Default => "default",
        })
    }
}

/// `start:stop:step`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        linspace_step(self.start, self.stop, self.step)
    }
}

impl std::str::FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!("grid {s:?} is not start:stop:step")));
        }
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("malformed number {t:?} in grid {s:?}")))
        };
        let spec = GridSpec {
            start: num(parts[0])?,
            stop: num(parts[1])?,
            step: num(parts[2])?,
        };
        spec.values()?;
        Ok(spec)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coupling {
    G(f64),
    GOverGc(f64),
    SweepG(GridSpec),
    SweepGOverGc(GridSpec),
}

impl Coupling {
    /// Absolute couplings at `delta`.
    pub fn g_values(&self, delta: f64) -> Result<Vec<f64>> {
        let gc = critical_coupling(delta)?;
        Ok(match self {
            Coupling::G(g) => vec![*g],
            Coupling::GOverGc(r) => vec![r * gc],
            Coupling::SweepG(spec) => spec.values()?,
            Coupling::SweepGOverGc(spec) => spec.values()?.into_iter().map(|r| r * gc).collect(),
        })
    }

    /// Couplings in units of `g_c`, for couplings given that way.
    pub fn ratio_values(&self) -> Option<Result<Vec<f64>>> {
        match self {
            Coupling::GOverGc(r) => Some(Ok(vec![*r])),
            Coupling::SweepGOverGc(spec) => Some(spec.values()),
            _ => None,
        }
    }

    pub fn is_sweep(&self) -> bool {
        matches!(self, Coupling::SweepG(_) | Coupling::SweepGOverGc(_))
    }

    fn key(&self) -> &'static str {
        match self {
            Coupling::G(_) => "g",
            Coupling::GOverGc(_) => "g_over_gc",
            Coupling::SweepG(_) => "sweep_g",
            Coupling::SweepGOverGc(_) => "sweep_g_over_gc",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub delta: f64,
    pub coupling: Coupling,
    pub n_trunc: usize,
    pub levels: usize,
    pub truncs: Vec<usize>,
    pub reference: usize,
    pub deltas: Vec<f64>,
    pub pairs: Vec<usize>,
    pub eps_par: f64,
    pub out: PathBuf,
    pub format: Format,
    pub method: Method,
    pub spin_basis: SpinView,
    pub threads: usize,
    pub xi_max: Option<f64>,
    pub xi_step: Option<f64>,
    /// Where each setting came from.
    pub provenance: BTreeMap<String, Source>,
}

/// Parses `args` (including the program name) and an optional config
/// file; `config_file` takes the place of a `--config` flag.
pub fn parse_config<I, T>(args: I, config_file: Option<&Path>) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Config(e.to_string()))?;
    let path = config_file.map(Path::to_path_buf).or_else(|| cli.config.clone());
    let file = path.as_deref().map(FileConfig::load).transpose()?.unwrap_or_default();
    resolve(&cli, &file, std::env::var(THREADS_ENV).ok().as_deref())
}

struct Resolver<'a> {
    cli: &'a Cli,
    file: &'a FileConfig,
    provenance: BTreeMap<String, Source>,
}

impl Resolver<'_> {
    fn pick<T: Clone>(&mut self, key: &str, flag: &Option<T>, file: &Option<T>) -> Option<T> {
        let (value, source) = match (flag, file) {
            (Some(v), _) => (v.clone(), Source::Flag),
            (None, Some(v)) => (v.clone(), Source::File),
            (None, None) => return None,
        };
        self.provenance.insert(key.to_string(), source);
        Some(value)
    }

    fn or_default<T>(&mut self, key: &str, value: Option<T>, default: T) -> T {
        value.unwrap_or_else(|| {
            self.provenance.insert(key.to_string(), Source::Default);
            default
        })
    }

    fn coupling(&mut self, default: Option<Coupling>) -> Result<Coupling> {
        let (cli, file) = (self.cli, self.file);
        let mut found: Vec<(Coupling, Source)> = Vec::new();
        let mut add = |c: Option<Coupling>, source| {
            if let Some(c) = c {
                found.push((c, source));
            }
        };
        let grid = |s: &Option<String>| s.as_deref().map(str::parse::<GridSpec>).transpose();
        add(cli.g.map(Coupling::G), Source::Flag);
        add(cli.g_over_gc.map(Coupling::GOverGc), Source::Flag);
        add(grid(&cli.sweep_g)?.map(Coupling::SweepG), Source::Flag);
        add(grid(&cli.sweep_g_over_gc)?.map(Coupling::SweepGOverGc), Source::Flag);
        add(file.g.map(Coupling::G), Source::File);
        add(file.g_over_gc.map(Coupling::GOverGc), Source::File);
        add(grid(&file.sweep_g)?.map(Coupling::SweepG), Source::File);
        add(grid(&file.sweep_g_over_gc)?.map(Coupling::SweepGOverGc), Source::File);

        if let Some((a, sa)) = found.first() {
            if let Some((b, sb)) = found.iter().find(|(b, _)| b.key() != a.key()) {
                return Err(Error::Config(format!(
                    "conflicting coupling specifications: {} ({sa}) and {} ({sb})",
                    a.key(),
                    b.key()
                )));
            }
        }
        match found.into_iter().next() {
            Some((c, source)) => {
                self.provenance.insert(c.key().to_string(), source);
                Ok(c)
            }
            None => {
                let c = default.ok_or_else(|| Error::Config("a coupling (--g or --g-over-gc) is required".into()))?;
                self.provenance.insert(c.key().to_string(), Source::Default);
                Ok(c)
            }
        }
    }
}

fn finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Config(format!("{name} must be finite, got {x}")))
    }
}

/// Merges flags over file values over defaults and validates the result.
pub fn resolve(cli: &Cli, file: &FileConfig, env_threads: Option<&str>) -> Result<RunConfig> {
    let mut r = Resolver {
        cli,
        file,
        provenance: BTreeMap::new(),
    };
    let command = r
        .pick("command", &cli.command, &file.command)
        .ok_or_else(|| Error::Config("no subcommand given".into()))?;

    let ratio = |s: &str| Coupling::SweepGOverGc(s.parse().expect("valid default grid"));
    let default_coupling = match command {
        Command::Spectrum | Command::Parity => Some(ratio("0:2:0.005")),
        Command::Converge => Some(ratio("0:6:0.05")),
        Command::PhaseDiagram => Some(ratio("0:3:0.005")),
        Command::Wavefunction => None,
    };
    let default_levels = match command {
        Command::Spectrum | Command::Parity => 8,
        _ => 2,
    };

    let delta = r.pick("delta", &cli.delta, &file.delta);
    let delta = finite("delta", r.or_default("delta", delta, 1.0))?;
    let coupling = r.coupling(default_coupling)?;
    let n_trunc = r.pick("n_trunc", &cli.n_trunc, &file.n_trunc);
    let n_trunc = r.or_default("n_trunc", n_trunc, DEFAULT_N_TRUNC);
    let levels = r.pick("levels", &cli.levels, &file.levels);
    let levels = r.or_default("levels", levels, default_levels);
    let truncs = r.pick("truncs", &cli.truncs, &file.truncs);
    let truncs = r.or_default("truncs", truncs, vec![200, 400, 1000]);
    let reference = r.pick("ref", &cli.reference, &file.reference);
    let reference = r.or_default("ref", reference, DEFAULT_REFERENCE_TRUNC);
    let explicit_delta = cli.delta.or(file.delta);
    let deltas = r.pick("deltas", &cli.deltas, &file.deltas);
    let deltas = match (deltas, explicit_delta) {
        (Some(d), _) => d,
        (None, Some(d)) => vec![d],
        (None, None) => r.or_default("deltas", None, vec![1.0, 2.0, 5.0, 10.0, 25.0, 50.0]),
    };
    let pairs = r.pick("pairs", &cli.pairs, &file.pairs);
    let pairs = r.or_default("pairs", pairs, vec![0, 1, 2, 3]);
    let eps_par = r.pick("eps_par", &cli.eps_par, &file.eps_par);
    let eps_par = finite("eps_par", r.or_default("eps_par", eps_par, DEFAULT_EPS_PAR))?;
    let out = r.pick("out", &cli.out, &file.out);
    let out = r.or_default("out", out, PathBuf::from("rabi-out"));
    let format = r.pick("format", &cli.format, &file.format);
    let format = r.or_default("format", format, Format::Csv);
    let method = r.pick("method", &cli.method, &file.method);
    let method = r.or_default("method", method, Method::Full);
    let spin_basis = r.pick("spin_basis", &cli.spin_basis, &file.spin_basis);
    let spin_basis = r.or_default("spin_basis", spin_basis, SpinView::X);
    let xi_max = r.pick("xi_max", &cli.xi_max, &file.xi_max);
    let xi_step = r.pick("xi_step", &cli.xi_step, &file.xi_step);

    let threads = r.pick("threads", &cli.threads, &file.threads);
    let cap = env_threads
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("{THREADS_ENV}={v:?} is not a worker count")))
        })
        .transpose()?
        .filter(|&n| n > 0);
    let threads = match (threads, cap) {
        (Some(t), Some(c)) if t == 0 || t > c => {
            r.provenance.insert("threads".into(), Source::Env);
            c
        }
        (Some(t), _) => t,
        (None, Some(c)) => {
            r.provenance.insert("threads".into(), Source::Env);
            c
        }
        (None, None) => r.or_default("threads", None, 0),
    };

    let config = RunConfig {
        command,
        delta,
        coupling,
        n_trunc,
        levels,
        truncs,
        reference,
        deltas,
        pairs,
        eps_par,
        out,
        format,
        method,
        spin_basis,
        threads,
        xi_max,
        xi_step,
        provenance: r.provenance,
    };
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.delta < 0.0 {
            return bad(format!("delta must be non-negative, got {}", self.delta));
        }
        match self.coupling {
            Coupling::G(x) | Coupling::GOverGc(x) => {
                finite(self.coupling.key(), x)?;
                if x < 0.0 {
                    return bad(format!("{} must be non-negative, got {x}", self.coupling.key()));
                }
            }
            Coupling::SweepG(spec) | Coupling::SweepGOverGc(spec) => {
                if spec.start < 0.0 {
                    return bad(format!("{} must start at a non-negative coupling", self.coupling.key()));
                }
            }
        }
        if self.n_trunc < 2 {
            return bad(format!("n_trunc must be at least 2, got {}", self.n_trunc));
        }
        if self.levels == 0 || self.levels > 2 * self.n_trunc {
            return bad(format!("levels must lie in 1..={}, got {}", 2 * self.n_trunc, self.levels));
        }
        if !(self.eps_par > 0.0 && self.eps_par < 1.0) {
            return bad(format!("eps_par must lie in (0, 1), got {}", self.eps_par));
        }
        for (name, v) in [("xi_max", self.xi_max), ("xi_step", self.xi_step)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return bad(format!("{name} must be positive, got {v}"));
                }
            }
        }
        match self.command {
            Command::Parity if self.levels % 2 != 0 => bad(format!("parity needs an even number of levels, got {}", self.levels)),
            Command::Wavefunction if self.coupling.is_sweep() => bad("wavefunction takes a single coupling, not a sweep".into()),
            Command::Converge if self.truncs.iter().any(|&n| n > self.reference) => bad(format!(
                "reference truncation {} is smaller than a candidate in {:?}",
                self.reference, self.truncs
            )),
            Command::PhaseDiagram if self.coupling.ratio_values().is_none() => {
                bad("phase-diagram scans g/g_c; use --sweep-g-over-gc".into())
            }
            Command::PhaseDiagram if self.deltas.iter().any(|d| !d.is_finite() || *d < 0.0) => {
                bad(format!("deltas must be finite and non-negative, got {:?}", self.deltas))
            }
            _ => Ok(()),
        }
    }

    /// The resolved settings in config-file form.
    pub fn to_file_config(&self) -> FileConfig {
        let mut f = FileConfig {
            command: Some(self.command),
            delta: Some(self.delta),
            n_trunc: Some(self.n_trunc),
            levels: Some(self.levels),
            eps_par: Some(self.eps_par),
            out: Some(self.out.clone()),
            format: Some(self.format),
            method: Some(self.method),
            threads: Some(self.threads),
            ..Default::default()
        };
        match self.coupling {
            Coupling::G(g) => f.g = Some(g),
            Coupling::GOverGc(r) => f.g_over_gc = Some(r),
            Coupling::SweepG(s) => f.sweep_g = Some(s.to_string()),
            Coupling::SweepGOverGc(s) => f.sweep_g_over_gc = Some(s.to_string()),
        }
        match self.command {
            Command::Converge => {
                f.truncs = Some(self.truncs.clone());
                f.reference = Some(self.reference);
            }
            Command::PhaseDiagram => {
                f.deltas = Some(self.deltas.clone());
                f.pairs = Some(self.pairs.clone());
            }
            Command::Wavefunction => {
                f.spin_basis = Some(self.spin_basis);
                f.xi_max = self.xi_max;
                f.xi_step = self.xi_step;
            }
            _ => {}
        }
        f
    }
}
