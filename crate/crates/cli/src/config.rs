//! JSON run configuration. Every key is optional in the file; command-line
//! flags are parsed into the same structure and override the file.

use std::path::{Path, PathBuf};

use reserve_core::dist::{ContinuousDist, GeneratorSpec};
use reserve_core::Mechanism;
use serde::{Deserialize, Deserializer, Serialize};

use crate::logio::LogFormat;
use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Lazy,
    Monopoly,
    EagerExact,
    EagerLocal,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Lazy => "lazy",
            Self::Monopoly => "monopoly",
            Self::EagerExact => "eager-exact",
            Self::EagerLocal => "eager-local",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MechanismChoice {
    Lazy,
    Eager,
    Both,
}

impl MechanismChoice {
    pub fn mechanisms(self) -> Vec<Mechanism> {
        match self {
            Self::Lazy => vec![Mechanism::Lazy],
            Self::Eager => vec![Mechanism::Eager],
            Self::Both => Mechanism::BOTH.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    Theoretical,
    Empirical,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<PathBuf>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(PathBuf),
        Many(Vec<PathBuf>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(p) => vec![p],
        OneOrMany::Many(v) => v,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Log files; several are allowed for lift tables (one row each).
    #[serde(default, deserialize_with = "one_or_many", skip_serializing_if = "Vec::is_empty")]
    pub input: Vec<PathBuf>,
    pub format: Option<LogFormat>,
    /// Generator name, e.g. `high-low`; combined with `params`.
    pub generator: Option<String>,
    pub params: Option<serde_json::Value>,
    pub count: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub mechanism: Option<MechanismChoice>,
    pub task: Option<Task>,
    pub trials: Option<u64>,
    pub max_product_size: Option<u64>,
    pub max_rounds: Option<usize>,
    pub mode: Option<SweepMode>,
    pub dist: Option<ContinuousDist>,
    pub n: Option<usize>,
    pub fractions: Option<Vec<f64>>,
    pub reserves: Option<PathBuf>,
    pub assignments: Option<u64>,
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_MAX_PRODUCT_SIZE: u64 = 10_000_000;
pub const DEFAULT_MAX_ROUNDS: usize = 100;
pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_ASSIGNMENTS: u64 = 20;
pub const DEFAULT_FRACTIONS: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

/// Where the bid log comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    Files(Vec<(PathBuf, LogFormat)>),
    Generator {
        spec: GeneratorSpec,
        count: usize,
        seed: u64,
    },
}

impl RunConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Keys set in `flags` replace those of `self`.
    pub fn overlay(self, flags: RunConfig) -> Self {
        Self {
            input: if flags.input.is_empty() {
                self.input
            } else {
                flags.input
            },
            format: flags.format.or(self.format),
            generator: flags.generator.or(self.generator),
            params: flags.params.or(self.params),
            count: flags.count.or(self.count),
            seed: flags.seed.or(self.seed),
            out: flags.out.or(self.out),
            mechanism: flags.mechanism.or(self.mechanism),
            task: flags.task.or(self.task),
            trials: flags.trials.or(self.trials),
            max_product_size: flags.max_product_size.or(self.max_product_size),
            max_rounds: flags.max_rounds.or(self.max_rounds),
            mode: flags.mode.or(self.mode),
            dist: flags.dist.or(self.dist),
            n: flags.n.or(self.n),
            fractions: flags.fractions.or(self.fractions),
            reserves: flags.reserves.or(self.reserves),
            assignments: flags.assignments.or(self.assignments),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn generator_spec(&self) -> CliResult<Option<GeneratorSpec>> {
        let Some(name) = &self.generator else {
            return Ok(None);
        };
        let mut params = match self.params.clone().unwrap_or_else(|| serde_json::json!({})) {
            serde_json::Value::Object(m) => m,
            other => {
                return Err(CliError::Config(format!(
                    "generator params must be a JSON object, got {other}"
                )))
            }
        };
        params.insert("name".into(), serde_json::Value::String(name.clone()));
        let spec: GeneratorSpec = serde_json::from_value(serde_json::Value::Object(params))
            .map_err(|e| CliError::Config(format!("generator {name}: {e}")))?;
        Ok(Some(spec))
    }

    /// Exactly one of input files or a generator must be given, and files
    /// must exist.
    pub fn input_source(&self) -> CliResult<InputSource> {
        let spec = self.generator_spec()?;
        match (self.input.is_empty(), spec) {
            (false, Some(_)) => Err(CliError::Config(
                "give either input files or a generator, not both".into(),
            )),
            (true, None) => Err(CliError::Config("no input: pass --input or --generator".into())),
            (false, None) => {
                let mut files = Vec::with_capacity(self.input.len());
                for p in &self.input {
                    if !p.exists() {
                        return Err(CliError::Config(format!("input {} does not exist", p.display())));
                    }
                    files.push((p.clone(), self.format.unwrap_or_else(|| LogFormat::from_path(p))));
                }
                Ok(InputSource::Files(files))
            }
            (true, Some(spec)) => {
                let count = self
                    .count
                    .ok_or_else(|| CliError::Config("a generator needs --count".into()))?;
                Ok(InputSource::Generator {
                    spec,
                    count,
                    seed: self.seed(),
                })
            }
        }
    }
}
