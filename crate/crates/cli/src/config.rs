//! Run configuration: command-line flags over `QVERIFY_PRECISION_BITS` over
//! an optional JSON config file over built-in defaults.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const DEFAULT_BITS: u32 = 192;
pub const DEFAULT_SAMPLES: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Json,
    Csv,
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub ids: Option<Ids>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub precision_bits: Option<u32>,
    pub tolerance: Option<String>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
}

/// `"all"` or a list of identifiers.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Ids {
    One(String),
    Many(Vec<String>),
}

impl Ids {
    fn into_vec(self) -> Vec<String> {
        match self {
            Ids::One(s) => vec![s],
            Ids::Many(v) => v,
        }
    }
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::usage(format!("bad config {}: {e}", path.display())))
    }
}

/// Flags shared by the evaluating commands.
#[derive(Debug, Clone, Args, Default)]
pub struct RunFlags {
    /// Points per identity.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "QVERIFY_PRECISION_BITS")]
    pub precision_bits: Option<u32>,
    /// Relative tolerance, e.g. 1e-30. Defaults to each identity's own.
    #[arg(long)]
    pub tolerance: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Worker threads; 0 uses one per core.
    #[arg(long)]
    pub workers: Option<usize>,
}

/// The resolved configuration of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub ids: Vec<String>,
    pub samples: usize,
    pub seed: u64,
    pub precision_bits: u32,
    pub tolerance: Option<String>,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub workers: usize,
}

impl RunConfig {
    pub fn resolve(ids: Vec<String>, flags: RunFlags, file: FileConfig) -> Result<Self, Failure> {
        let ids = if ids.is_empty() {
            file.ids.map(Ids::into_vec).unwrap_or_default()
        } else {
            ids
        };
        let cfg = RunConfig {
            ids,
            samples: flags.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            precision_bits: flags
                .precision_bits
                .or(file.precision_bits)
                .unwrap_or(DEFAULT_BITS),
            tolerance: flags.tolerance.or(file.tolerance),
            format: flags.format.or(file.format).unwrap_or_default(),
            output: flags.output.or(file.output),
            workers: flags.workers.or(file.workers).unwrap_or(0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), Failure> {
        if self.samples < 1 {
            return Err(Failure::usage("samples must be at least 1"));
        }
        if self.precision_bits < 64 {
            return Err(Failure::usage("precision bits must be at least 64"));
        }
        self.tolerance_value()?;
        Ok(())
    }

    pub fn tolerance_value(&self) -> Result<Option<f64>, Failure> {
        match &self.tolerance {
            None => Ok(None),
            Some(t) => parse_tolerance(t).map(Some),
        }
    }

    /// Whether the id list selects every registry entry.
    pub fn all(&self) -> bool {
        self.ids.iter().any(|i| i.eq_ignore_ascii_case("all"))
    }
}

pub fn parse_tolerance(text: &str) -> Result<f64, Failure> {
    match text.trim().parse::<f64>() {
        Ok(t) if t > 0.0 && t < 1.0 => Ok(t),
        _ => Err(Failure::usage(format!(
            "tolerance `{text}` is not a real number in (0, 1)"
        ))),
    }
}
