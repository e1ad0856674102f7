//! Experiment configuration: `key = value` files, flag overrides and the
//! small grammars used on the command line (lists, sweeps, grids).

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use nsp_core::SparsenessMeasure;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MatrixSource {
    GaussianIid,
    HaarNullspace,
    File,
}

impl FromStr for MatrixSource {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "gaussian_iid" | "gaussian-iid" => Ok(MatrixSource::GaussianIid),
            "haar_nullspace" | "haar-nullspace" => Ok(MatrixSource::HaarNullspace),
            "file" => Ok(MatrixSource::File),
            _ => Err(CliError::usage(format!("unknown matrix_source `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::usage(format!("unknown format `{s}`"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Parses a `key = value` file. Blank lines and `#` comments are skipped;
/// later keys win.
pub fn parse_config(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("config line {}: expected key = value", i + 1)))?;
        let key = k.trim().replace('-', "_");
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(CliError::usage(format!("config line {}: bad key `{}`", i + 1, k.trim())));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

fn parse_real(s: &str) -> CliResult<f64> {
    let v: f64 = s.trim().parse().map_err(|_| CliError::usage(format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(CliError::usage(format!("`{s}` is not finite")));
    }
    Ok(v)
}

/// Comma-separated reals, e.g. `1e-3, 0.1`.
pub fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    let s = s.trim().trim_start_matches('[').trim_end_matches(']');
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_real).collect()
}

/// `start:stop:step` inclusive of `stop` up to rounding.
pub fn parse_sweep(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::usage(format!("sweep `{s}` must be start:stop:step")));
    }
    let (a, b, h) = (parse_real(parts[0])?, parse_real(parts[1])?, parse_real(parts[2])?);
    if !(h > 0.0) || b < a {
        return Err(CliError::usage(format!("sweep `{s}` needs step > 0 and stop ≥ start")));
    }
    if h <= 1e-12 * (a.abs() + b.abs()) {
        return Err(CliError::usage(format!("sweep `{s}`: step is below the resolution of the range")));
    }
    let count = ((b - a) / h + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(CliError::usage(format!("sweep `{s}` has too many points")));
    }
    Ok((0..count).map(|i| a + h * i as f64).collect())
}

/// `ROWSxCOLS`, e.g. `200x200`.
pub fn parse_grid(s: &str) -> CliResult<(usize, usize)> {
    let (r, c) = s
        .trim()
        .split_once(['x', 'X'])
        .ok_or_else(|| CliError::usage(format!("grid `{s}` must look like 200x200")))?;
    let parse = |t: &str| -> CliResult<usize> {
        let v: usize = t.trim().parse().map_err(|_| CliError::usage(format!("grid `{s}`: `{t}` is not a count")))?;
        if v < 2 || v > 10_000 {
            return Err(CliError::usage(format!("grid `{s}`: each side must be in 2..=10000")));
        }
        Ok(v)
    };
    Ok((parse(r)?, parse(c)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub measure: String,
    pub trials: usize,
    pub d_grid: Vec<f64>,
    pub seed: u64,
    pub matrix_source: MatrixSource,
    pub matrix_file: Option<PathBuf>,
    /// Search budget per `rrc_probe` call.
    pub budget: usize,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub format: Format,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 5,
            m: 3,
            k: 1,
            measure: "l1".into(),
            trials: 200,
            d_grid: vec![1e-3],
            seed: 0,
            matrix_source: MatrixSource::GaussianIid,
            matrix_file: None,
            budget: 4000,
            output: None,
            format: Format::Json,
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "n", "m", "k", "measure", "trials", "d_grid", "seed", "matrix_source", "matrix_file", "budget", "output", "format",
];

impl ExperimentConfig {
    /// Applies `key = value` pairs over the current values.
    pub fn apply(&mut self, pairs: &BTreeMap<String, String>) -> CliResult<()> {
        let count = |k: &str, v: &str| -> CliResult<usize> {
            v.parse().map_err(|_| CliError::usage(format!("{k}: `{v}` is not a non-negative integer")))
        };
        for (k, v) in pairs {
            match k.as_str() {
                "n" => self.n = count(k, v)?,
                "m" => self.m = count(k, v)?,
                "k" => self.k = count(k, v)?,
                "trials" => self.trials = count(k, v)?,
                "budget" => self.budget = count(k, v)?,
                "measure" => self.measure = v.clone(),
                "d_grid" => self.d_grid = parse_list(v)?,
                "seed" => self.seed = v.parse().map_err(|_| CliError::usage(format!("seed: `{v}` is not a u64")))?,
                "matrix_source" => self.matrix_source = v.parse()?,
                "matrix_file" => self.matrix_file = Some(PathBuf::from(v)),
                "output" => self.output = Some(PathBuf::from(v)),
                "format" => self.format = v.parse()?,
                other => {
                    return Err(CliError::usage(format!("unknown config key `{other}` (known: {})", KNOWN_KEYS.join(", "))));
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.m == 0 || self.m >= self.n {
            return Err(CliError::usage(format!("need 1 ≤ m < n, got m={}, n={}", self.m, self.n)));
        }
        if self.k >= self.n {
            return Err(CliError::usage(format!("need k < n, got k={}, n={}", self.k, self.n)));
        }
        if self.trials == 0 {
            return Err(CliError::usage("trials must be at least 1"));
        }
        if let Some(d) = self.d_grid.iter().find(|d| !(**d > 0.0)) {
            return Err(CliError::usage(format!("d_grid entries must be positive, got {d}")));
        }
        if self.budget == 0 {
            return Err(CliError::usage("budget must be at least 1"));
        }
        if self.matrix_source == MatrixSource::File && self.matrix_file.is_none() {
            return Err(CliError::usage("matrix_source = file needs matrix_file"));
        }
        SparsenessMeasure::parse(&self.measure)?;
        Ok(())
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON of the
    /// experiment fields (output path and format excluded).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(canonical.as_bytes())[..8])
    }
}
