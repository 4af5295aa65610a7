//! Run configuration: JSON file, flag overrides, aggregated validation.
//!
//! Precedence is flags over file over defaults. Validation collects every
//! problem it can find before reporting, so a bad config is fixed in one
//! round trip.

use std::path::{Path, PathBuf};

use pfield_core::lattice::{Lattice, ModelParams};
use pfield_core::padic::PrimeConfig;
use pfield_core::radial::KernelSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Largest lattice the CLI will materialize site storage for.
pub const LATTICE_POINT_CAP: u64 = 1_000_000;
/// Largest lattice for dense operator dumps and spectra.
pub const DENSE_POINT_CAP: u64 = 2_048;
/// Largest lattice for Monte Carlo estimator commands, whose per-draw cost
/// grows with the square of the site count.
pub const ESTIMATOR_POINT_CAP: u64 = 4_096;

/// Optional fields as found in the JSON config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub p: Option<u64>,
    pub dim: Option<u32>,
    pub level: Option<u32>,
    pub kernel: Option<KernelSection>,
    pub gamma: Option<f64>,
    pub alpha2: Option<f64>,
    pub alpha4: Option<f64>,
    pub coefficients: Option<Vec<f64>>,
    pub mc: Option<McSection>,
    pub gl: Option<GlSection>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub delta: Option<f64>,
    pub scale: Option<f64>,
    /// Preset: `delta = beta + N` with the matching scale.
    pub taibleson_beta: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub draws: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlSection {
    pub t: Option<f64>,
    pub tc: Option<f64>,
    pub grid: Option<Vec<f64>>,
    pub constraint: Option<f64>,
    pub noise: Option<f64>,
}

/// Command-line overrides; every field beats the config file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// JSON config file; flags override its values
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Odd prime base of the lattice
    #[arg(long, global = true)]
    pub p: Option<u64>,
    /// Number of coordinates N
    #[arg(long, global = true)]
    pub dim: Option<u32>,
    /// Lattice level l (resolution p^-l, extent p^l)
    #[arg(long, global = true)]
    pub level: Option<u32>,
    /// Kernel exponent delta (> N)
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Kernel scale c (> 0)
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub scale: Option<f64>,
    /// Taibleson preset: sets delta = beta + N and the matching scale
    #[arg(long, global = true, value_name = "BETA", allow_negative_numbers = true, conflicts_with_all = ["delta", "scale"])]
    pub taibleson_beta: Option<f64>,
    /// Kinetic coupling gamma (> 0)
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Quadratic coupling alpha2
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha2: Option<f64>,
    /// Quartic coupling alpha4 (>= 0)
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha4: Option<f64>,
    /// Interaction polynomial coefficients "a3,a4,..." (defaults to pure x^4)
    #[arg(long, global = true, value_name = "LIST", allow_hyphen_values = true)]
    pub coefficients: Option<String>,
    /// Monte Carlo draw count
    #[arg(long, global = true)]
    pub draws: Option<u64>,
    /// Random seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Temperature for minimize (alpha2 = T - Tc)
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub t: Option<f64>,
    /// Critical temperature
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tc: Option<f64>,
    /// Temperature grid "t1,t2,..." for sweep
    #[arg(long, global = true, value_name = "LIST", allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Constrain the field integral to this value during minimize
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub constraint: Option<f64>,
    /// Scale of the random initial field for minimize
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub noise: Option<f64>,
    /// Output CSV path (default pfield_<command>.csv)
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Manifest JSON path (default <output>.manifest.json)
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
    /// Machine-readable stdout
    #[arg(long, global = true)]
    pub json: bool,
}

/// Fully resolved configuration used by every subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub p: u64,
    pub dim: u32,
    pub level: u32,
    pub delta: f64,
    pub scale: f64,
    pub taibleson_beta: Option<f64>,
    pub gamma: f64,
    pub alpha2: f64,
    pub alpha4: f64,
    pub coefficients: Vec<f64>,
    pub draws: u64,
    pub seed: u64,
    pub t: f64,
    pub tc: f64,
    pub grid: Vec<f64>,
    pub constraint: Option<f64>,
    pub noise: f64,
    pub output: PathBuf,
    pub manifest: PathBuf,
    #[serde(skip)]
    pub json: bool,
}

fn parse_list(raw: &str, what: &str, issues: &mut Vec<String>) -> Vec<f64> {
    let mut out = Vec::new();
    for part in raw.split(',') {
        match part.trim().parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) => issues.push(format!("{what}: '{part}' is not a number")),
        }
    }
    out
}

impl RunConfig {
    /// Merges defaults, file values, and flags; reports every validation
    /// problem at once.
    pub fn resolve(over: &Overrides, command: &str) -> Result<Self, CliError> {
        let mut issues = Vec::new();
        let file = match &over.config {
            Some(path) => read_file_config(path)?,
            None => FileConfig::default(),
        };
        let kernel = file.kernel.unwrap_or_default();
        let mc = file.mc.unwrap_or_default();
        let gl = file.gl.unwrap_or_default();

        let taibleson_beta = over.taibleson_beta.or(kernel.taibleson_beta);
        if taibleson_beta.is_some()
            && (over.delta.is_some()
                || over.scale.is_some()
                || kernel.delta.is_some()
                || kernel.scale.is_some())
        {
            issues.push("kernel: taibleson_beta excludes explicit delta/scale".into());
        }
        let coefficients = match &over.coefficients {
            Some(raw) => parse_list(raw, "coefficients", &mut issues),
            None => file.coefficients.unwrap_or_else(|| vec![0.0, 1.0]),
        };
        let grid = match &over.grid {
            Some(raw) => parse_list(raw, "grid", &mut issues),
            None => gl.grid.unwrap_or_else(|| vec![-1.0, -0.5, 0.5, 1.0]),
        };

        let output = over
            .output
            .clone()
            .or(file.output)
            .unwrap_or_else(|| PathBuf::from(format!("pfield_{command}.csv")));
        let manifest = over.manifest.clone().unwrap_or_else(|| {
            let mut os = output.clone().into_os_string();
            os.push(".manifest.json");
            PathBuf::from(os)
        });

        let cfg = Self {
            p: over.p.or(file.p).unwrap_or(3),
            dim: over.dim.or(file.dim).unwrap_or(1),
            level: over.level.or(file.level).unwrap_or(1),
            delta: over.delta.or(kernel.delta).unwrap_or(2.0),
            scale: over.scale.or(kernel.scale).unwrap_or(1.0),
            taibleson_beta,
            gamma: over.gamma.or(file.gamma).unwrap_or(1.0),
            alpha2: over.alpha2.or(file.alpha2).unwrap_or(1.0),
            alpha4: over.alpha4.or(file.alpha4).unwrap_or(0.0),
            coefficients,
            draws: over.draws.or(mc.draws).unwrap_or(10_000),
            seed: over.seed.or(mc.seed).unwrap_or(1),
            t: over.t.or(gl.t).unwrap_or(1.0),
            tc: over.tc.or(gl.tc).unwrap_or(0.0),
            grid,
            constraint: over.constraint.or(gl.constraint),
            noise: over.noise.or(gl.noise).unwrap_or(0.1),
            output,
            manifest,
            json: over.json,
        };
        cfg.validate(&mut issues);
        if issues.is_empty() {
            Ok(cfg)
        } else {
            Err(CliError::Config(issues))
        }
    }

    /// Checks every module precondition the config can violate.
    fn validate(&self, issues: &mut Vec<String>) {
        let prime = match PrimeConfig::new(self.p, self.dim, self.level) {
            Ok(c) => Some(c),
            Err(e) => {
                issues.push(format!("p/dim/level: {e}"));
                None
            }
        };
        if let Some(c) = &prime {
            if let Err(e) = self.kernel_for(c) {
                issues.push(format!("kernel: {e}"));
            }
        }
        for (name, v) in [
            ("gamma", self.gamma),
            ("alpha2", self.alpha2),
            ("alpha4", self.alpha4),
            ("t", self.t),
            ("tc", self.tc),
            ("noise", self.noise),
        ] {
            if !v.is_finite() {
                issues.push(format!("{name}: must be finite, got {v}"));
            }
        }
        if self.gamma <= 0.0 {
            issues.push(format!("gamma: must be positive, got {}", self.gamma));
        }
        if self.alpha4 < 0.0 {
            issues.push(format!("alpha4: must be non-negative, got {}", self.alpha4));
        }
        if self.noise < 0.0 {
            issues.push(format!("noise: must be non-negative, got {}", self.noise));
        }
        if let Some(c) = self.constraint {
            if !c.is_finite() {
                issues.push(format!("constraint: must be finite, got {c}"));
            }
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            issues.push("grid: every temperature must be finite".into());
        }
        if self.coefficients.iter().any(|v| !v.is_finite()) {
            issues.push("coefficients: every entry must be finite".into());
        }
    }

    pub fn prime(&self) -> Result<PrimeConfig, CliError> {
        Ok(PrimeConfig::new(self.p, self.dim, self.level)?)
    }

    fn kernel_for(&self, cfg: &PrimeConfig) -> pfield_core::Result<KernelSpec> {
        match self.taibleson_beta {
            Some(beta) => KernelSpec::taibleson(beta, cfg),
            None => KernelSpec::new(self.delta, self.scale, cfg),
        }
    }

    pub fn kernel(&self, cfg: &PrimeConfig) -> Result<KernelSpec, CliError> {
        Ok(self.kernel_for(cfg)?)
    }

    /// Lattice capped at `max_points`; exceeding it is a capacity error.
    pub fn lattice(&self, max_points: u64) -> Result<Lattice, CliError> {
        let cfg = self.prime()?;
        Ok(Lattice::build_capped(cfg, max_points)?)
    }

    /// Couplings for the measure-backed commands (`alpha2` used directly).
    pub fn model_params(&self, cfg: &PrimeConfig) -> Result<ModelParams, CliError> {
        let kernel = self.kernel(cfg)?;
        Ok(ModelParams::new(self.gamma, self.alpha2, self.alpha4, kernel)?)
    }
}

fn read_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(vec![format!("{}: {e}", path.display())]))
}
