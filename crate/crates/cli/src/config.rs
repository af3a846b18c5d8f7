//! Run configuration: command-line flags merged over an optional JSON
//! config file merged over defaults.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use dephasing::control::PulseSequence;
use dephasing::noise::NoiseModel;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// Comma-separated values with a `# config` header line.
    Csv,
    /// One JSON document holding the config and the rows.
    Json,
}

/// Parameters shared by all commands. Every field is optional so that
/// flags can be layered over a config file.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// JSON config file; its keys are the long flag names.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Noise model as a JSON file or inline JSON `{"kind", "params"}`.
    #[arg(long, global = true, value_parser = parse_json_value)]
    pub noise: Option<serde_json::Value>,
    /// Probe numbers: `100,1000` or `log:1e2:1e4:9` or `lin:a:b:count`.
    #[arg(long = "N", global = true, value_parser = parse_grid_value)]
    #[serde(rename = "N")]
    pub probes: Option<Grid>,
    /// Total runtime `T`.
    #[arg(long = "T", global = true)]
    #[serde(rename = "T")]
    pub total: Option<f64>,
    /// Short-time exponent of `chi(t) = (chi0 wc t)^n`.
    #[arg(long, global = true)]
    pub n: Option<u32>,
    /// Noise strength `chi0`.
    #[arg(long, global = true)]
    pub chi0: Option<f64>,
    /// Frequency scale `wc`.
    #[arg(long = "omega-c", global = true)]
    #[serde(rename = "omega-c")]
    pub omega_c: Option<f64>,
    /// Pulse sequence as a JSON file or inline JSON.
    #[arg(long, global = true, value_parser = parse_json_value)]
    pub pulses: Option<serde_json::Value>,
    /// Time grid, same syntax as `--N`.
    #[arg(long, global = true, value_parser = parse_grid_value)]
    pub t: Option<Grid>,
    /// Segment numbers `Q'`, same syntax as `--N`.
    #[arg(long = "Q", global = true, value_parser = parse_grid_value)]
    #[serde(rename = "Q")]
    pub segments: Option<Grid>,
    /// Spectral exponents `s` of the Gaussian-cutoff spectrum.
    #[arg(long, global = true, value_parser = parse_grid_value)]
    pub s: Option<Grid>,
    /// Gaussian-cutoff amplitude `alpha`.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Twist strength `mu`.
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// Rotation angle `beta`.
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Monte Carlo trajectory count.
    #[arg(long, global = true)]
    pub count: Option<usize>,
    /// Random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Reduced sample counts.
    #[arg(long, global = true)]
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub quick: bool,
}

/// A sorted list of values, given explicitly or as a spacing rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    /// Explicit values.
    List(Vec<f64>),
    /// `log:a:b:count` or `lin:a:b:count`.
    Rule(String),
}

impl Grid {
    /// Expands the grid and checks that it is nonempty, finite and
    /// strictly increasing.
    pub fn values(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let v = match self {
            Grid::List(v) => v.clone(),
            Grid::Rule(s) => expand_rule(s).map_err(|e| CliError::Input(format!("--{name}: {e}")))?,
        };
        if v.is_empty() {
            return Err(CliError::Input(format!("--{name}: grid is empty")));
        }
        if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Input(format!("--{name}: grid must be finite and strictly increasing, got {v:?}")));
        }
        Ok(v)
    }
}

fn expand_rule(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if let [kind @ ("log" | "lin"), a, b, count] = parts.as_slice() {
        let a: f64 = a.parse().map_err(|_| format!("bad start {a:?}"))?;
        let b: f64 = b.parse().map_err(|_| format!("bad end {b:?}"))?;
        let count: usize = count.parse().map_err(|_| format!("bad count {count:?}"))?;
        if count == 0 {
            return Ok(Vec::new());
        }
        if count == 1 {
            return Ok(vec![a]);
        }
        let frac = |k: usize| k as f64 / (count - 1) as f64;
        return match *kind {
            "log" if a > 0.0 && b > 0.0 => Ok((0..count).map(|k| a * (b / a).powf(frac(k))).collect()),
            "log" => Err("log grids need positive ends".into()),
            _ => Ok((0..count).map(|k| a + (b - a) * frac(k)).collect()),
        };
    }
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("cannot parse {x:?} as a number")))
        .collect()
}

fn parse_grid_value(s: &str) -> Result<Grid, String> {
    let g = if s.starts_with("log:") || s.starts_with("lin:") { Grid::Rule(s.into()) } else { Grid::List(expand_rule(s)?) };
    Ok(g)
}

/// Inline JSON, or the contents of a JSON file.
fn parse_json_value(s: &str) -> Result<serde_json::Value, String> {
    let trimmed = s.trim_start();
    let text = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        s.to_string()
    } else {
        std::fs::read_to_string(s).map_err(|e| format!("cannot read {s}: {e}"))?
    };
    serde_json::from_str(&text).map_err(|e| format!("invalid JSON: {e}"))
}

impl Params {
    /// Loads the config file named by `--config` (if any) and lays the
    /// flags over it.
    pub fn resolve(self) -> Result<Params, CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let file: Params =
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("invalid config {}: {e}", path.display())))?;
        Ok(self.over(file))
    }

    /// Fields of `self` where present, otherwise those of `base`.
    fn over(self, base: Params) -> Params {
        Params {
            config: self.config,
            noise: self.noise.or(base.noise),
            probes: self.probes.or(base.probes),
            total: self.total.or(base.total),
            n: self.n.or(base.n),
            chi0: self.chi0.or(base.chi0),
            omega_c: self.omega_c.or(base.omega_c),
            pulses: self.pulses.or(base.pulses),
            t: self.t.or(base.t),
            segments: self.segments.or(base.segments),
            s: self.s.or(base.s),
            alpha: self.alpha.or(base.alpha),
            mu: self.mu.or(base.mu),
            beta: self.beta.or(base.beta),
            count: self.count.or(base.count),
            seed: self.seed.or(base.seed),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            quick: self.quick || base.quick,
        }
    }

    /// The noise model, if one was given.
    pub fn noise_model(&self) -> Result<Option<NoiseModel>, CliError> {
        self.noise
            .as_ref()
            .map(|v| serde_json::from_value(v.clone()).map_err(|e| CliError::Input(format!("--noise: {e}"))))
            .transpose()
    }

    /// The noise model, required.
    pub fn require_noise(&self) -> Result<NoiseModel, CliError> {
        self.noise_model()?.ok_or_else(|| CliError::Input("--noise is required for this command".into()))
    }

    /// The pulse sequence, required.
    pub fn require_pulses(&self) -> Result<PulseSequence, CliError> {
        let v = self.pulses.as_ref().ok_or_else(|| CliError::Input("--pulses is required for this command".into()))?;
        let seq: PulseSequence = serde_json::from_value(v.clone()).map_err(|e| CliError::Input(format!("--pulses: {e}")))?;
        seq.validate().map_err(|e| CliError::Input(format!("--pulses: {e}")))?;
        Ok(seq)
    }

    /// Grid `name` or the default.
    pub fn grid(&self, grid: &Option<Grid>, name: &str, default: Vec<f64>) -> Result<Vec<f64>, CliError> {
        match grid {
            Some(g) => g.values(name),
            None => Grid::List(default).values(name),
        }
    }

    /// Total runtime, default 1.
    pub fn total_time(&self) -> Result<f64, CliError> {
        positive("T", self.total.unwrap_or(1.0))
    }

    /// Output format, default CSV.
    pub fn output_format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }

    /// Checks that the output location can be written.
    pub fn check_output(&self) -> Result<(), CliError> {
        if let Some(path) = &self.out {
            let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            if !dir.is_dir() {
                return Err(CliError::Input(format!("output directory {} does not exist", dir.display())));
            }
            let meta = std::fs::metadata(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
            if meta.permissions().readonly() {
                return Err(CliError::Input(format!("output directory {} is not writable", dir.display())));
            }
        }
        Ok(())
    }
}

/// Checks `value > 0`.
pub fn positive(name: &str, value: f64) -> Result<f64, CliError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::Input(format!("--{name} must be positive, got {value}")))
    }
}

/// `count` log-spaced values from `a` to `b`.
pub fn log_spaced(a: f64, b: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| a * (b / a).powf(k as f64 / (count - 1) as f64)).collect()
}
