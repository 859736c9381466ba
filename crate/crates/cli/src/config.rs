//! Pipeline configuration file and command-line overrides.

use std::path::{Path, PathBuf};

use retail_rules_core::preprocess::Method;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema_file::WeightSource;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("{name} = {value} must lie in (0, 1]")]
    Threshold { name: &'static str, value: f64 },
    #[error("{name} = \"enumerate\" is only accepted by the cluster command")]
    Enumerate { name: &'static str },
    #[error("{what} {path} does not exist")]
    MissingFile { what: &'static str, path: String },
    #[error("max_itemset_len must be at least 1")]
    MaxLen,
    #[error("location label must be non-empty and use only letters, digits, '-', '_' or '.'")]
    Location,
}

/// A cut level, or a request to list every distinct level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threshold {
    Level(f64),
    Enumerate(EnumerateTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnumerateTag {
    Enumerate,
}

impl Threshold {
    pub const ENUMERATE: Threshold = Threshold::Enumerate(EnumerateTag::Enumerate);

    pub fn level(self) -> Option<f64> {
        match self {
            Threshold::Level(x) => Some(x),
            Threshold::Enumerate(_) => None,
        }
    }
}

impl std::str::FromStr for Threshold {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "enumerate" {
            return Ok(Threshold::ENUMERATE);
        }
        s.parse::<f64>()
            .map(Threshold::Level)
            .map_err(|_| format!("expected a number or \"enumerate\", got {s:?}"))
    }
}

fn default_location() -> String {
    "default".into()
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema: PathBuf,
    pub data: PathBuf,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_location")]
    pub location: String,
    #[serde(default)]
    pub standardization: Method,
    #[serde(default)]
    pub weights: WeightSource,
    pub alpha: Threshold,
    pub beta: Threshold,
    pub minsup: f64,
    pub minconf: f64,
    #[serde(default)]
    pub max_itemset_len: Option<usize>,
    #[serde(default)]
    pub dump_intermediates: bool,
}

/// Values given on the command line take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub alpha: Option<Threshold>,
    pub beta: Option<Threshold>,
    pub minsup: Option<f64>,
    pub minconf: Option<f64>,
    pub location: Option<String>,
    pub weights: Option<WeightSource>,
    pub dump_intermediates: bool,
}

/// The parameters that determine a run's output, without file paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub location: String,
    pub standardization: Method,
    pub weights: WeightSource,
    pub alpha: f64,
    pub beta: f64,
    pub minsup: f64,
    pub minconf: f64,
    #[serde(default)]
    pub max_itemset_len: Option<usize>,
}

fn check_level(name: &'static str, value: f64) -> Result<(), ConfigError> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(ConfigError::Threshold { name, value })
    }
}

fn check_threshold(name: &'static str, t: Threshold) -> Result<(), ConfigError> {
    match t {
        Threshold::Level(x) => check_level(name, x),
        Threshold::Enumerate(_) => Ok(()),
    }
}

impl PipelineConfig {
    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config: PipelineConfig =
            serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
                path: path.display().to_string(),
                source,
            })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.schema, &mut config.data, &mut config.output_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(a) = o.alpha {
            self.alpha = a;
        }
        if let Some(b) = o.beta {
            self.beta = b;
        }
        if let Some(s) = o.minsup {
            self.minsup = s;
        }
        if let Some(c) = o.minconf {
            self.minconf = c;
        }
        if let Some(l) = &o.location {
            self.location = l.clone();
        }
        if let Some(w) = o.weights {
            self.weights = w;
        }
        self.dump_intermediates |= o.dump_intermediates;
    }

    /// Range and existence checks done before any work starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_threshold("alpha", self.alpha)?;
        check_threshold("beta", self.beta)?;
        check_level("minsup", self.minsup)?;
        check_level("minconf", self.minconf)?;
        if self.max_itemset_len == Some(0) {
            return Err(ConfigError::MaxLen);
        }
        if self.location.is_empty()
            || !self
                .location
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        {
            return Err(ConfigError::Location);
        }
        for (what, p) in [("schema file", &self.schema), ("data file", &self.data)] {
            if !p.is_file() {
                return Err(ConfigError::MissingFile {
                    what,
                    path: p.display().to_string(),
                });
            }
        }
        Ok(())
    }

    /// Settings for a full run; both cut levels must be numbers.
    pub fn settings(&self) -> Result<Settings, ConfigError> {
        self.validate()?;
        let alpha = self
            .alpha
            .level()
            .ok_or(ConfigError::Enumerate { name: "alpha" })?;
        let beta = self
            .beta
            .level()
            .ok_or(ConfigError::Enumerate { name: "beta" })?;
        Ok(Settings {
            location: self.location.clone(),
            standardization: self.standardization,
            weights: self.weights,
            alpha,
            beta,
            minsup: self.minsup,
            minconf: self.minconf,
            max_itemset_len: self.max_itemset_len,
        })
    }

    pub fn kb_path(&self) -> PathBuf {
        self.output_dir
            .join(format!("knowledge_base_{}.json", self.location))
    }
}
