//! Run configuration files.
//!
//! A configuration is a JSON object with the keys `application`, `params`,
//! `solver`, `run_kind`, `sweep_values`, `output_dir` and `oracle`. Only
//! `application`, `params` and `run_kind` are required. Unknown keys are
//! rejected at every level.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::fbs::FbsConfig;
use crate::inventory::{InventoryModel, InventoryParams};
use crate::oracle::{enumeration_size, OracleConfig, MAX_CANDIDATES};
use crate::queue::{QueueModel, QueueParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("empty horizon: T = {0} must be positive")]
    EmptyHorizon(f64),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Application {
    Inventory,
    Queue,
}

impl fmt::Display for Application {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Application::Inventory => "inventory",
            Application::Queue => "queue",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Solve,
    SweepSigma,
    Pareto,
    OracleCompare,
    DnCompare,
}

/// Model parameters; serialized without a tag since `application` names the
/// variant.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum AppParams {
    Inventory(InventoryParams),
    Queue(QueueParams),
}

impl AppParams {
    pub fn application(&self) -> Application {
        match self {
            AppParams::Inventory(_) => Application::Inventory,
            AppParams::Queue(_) => Application::Queue,
        }
    }

    pub fn horizon(&self) -> f64 {
        match self {
            AppParams::Inventory(p) => p.horizon,
            AppParams::Queue(p) => p.horizon,
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            AppParams::Inventory(p) => p.sigma,
            AppParams::Queue(p) => p.sigma,
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    application: Application,
    params: Value,
    #[serde(default)]
    solver: FbsConfig,
    run_kind: RunKind,
    #[serde(default)]
    sweep_values: Vec<f64>,
    #[serde(default = "default_output_dir")]
    output_dir: PathBuf,
    #[serde(default)]
    oracle: OracleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub application: Application,
    pub params: AppParams,
    pub solver: FbsConfig,
    pub run_kind: RunKind,
    pub sweep_values: Vec<f64>,
    pub output_dir: PathBuf,
    pub oracle: OracleConfig,
}

fn field_error<E: fmt::Display>(prefix: &str, e: serde_path_to_error::Error<E>) -> ConfigError {
    let path = e.path().to_string();
    let path = match (prefix, path.as_str()) {
        ("", p) => p.to_string(),
        (pre, ".") => pre.to_string(),
        (pre, p) => format!("{pre}.{p}"),
    };
    ConfigError::Field {
        path,
        message: e.into_inner().to_string(),
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let inner = e.inner();
        if inner.is_syntax() || inner.is_eof() {
            ConfigError::Syntax {
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        } else {
            let (line, column) = (inner.line(), inner.column());
            let path = e.path().to_string();
            ConfigError::Field {
                path,
                message: format!("{} (line {line}, column {column})", strip_position(&e.into_inner().to_string())),
            }
        }
    })?;
    de.end().map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let params = match raw.application {
        Application::Inventory => {
            AppParams::Inventory(serde_path_to_error::deserialize(raw.params).map_err(|e| field_error("params", e))?)
        }
        Application::Queue => {
            AppParams::Queue(serde_path_to_error::deserialize(raw.params).map_err(|e| field_error("params", e))?)
        }
    };
    let cfg = RunConfig {
        application: raw.application,
        params,
        solver: raw.solver,
        run_kind: raw.run_kind,
        sweep_values: raw.sweep_values,
        output_dir: raw.output_dir,
        oracle: raw.oracle,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// serde_json appends " at line L column C" to data errors; the position is
/// reported separately.
fn strip_position(message: &str) -> &str {
    match message.rfind(" at line ") {
        Some(i) => &message[..i],
        None => message,
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Validated model for a configuration.
#[derive(Debug, Clone)]
pub enum Model {
    Inventory(InventoryModel),
    Queue(QueueModel),
}

impl RunConfig {
    /// Defaults for an application: its first shipped case with one solve.
    pub fn defaults(application: Application) -> Self {
        let params = match application {
            Application::Inventory => AppParams::Inventory(InventoryParams::case_study_1()),
            Application::Queue => AppParams::Queue(QueueParams::base().with_weights(0.17, 286.0)),
        };
        Self {
            application,
            params,
            solver: FbsConfig::default(),
            run_kind: RunKind::Solve,
            sweep_values: Vec::new(),
            output_dir: default_output_dir(),
            oracle: OracleConfig::default(),
        }
        .effective()
    }

    /// Copy with every implicit value written out.
    pub fn effective(&self) -> Self {
        let mut out = self.clone();
        match &mut out.params {
            AppParams::Inventory(p) => p.y0 = Some(p.y0.unwrap_or(p.x0)),
            AppParams::Queue(p) => p.y0 = Some(p.y0.unwrap_or(p.x0)),
        }
        out
    }

    pub fn model(&self) -> Result<Model, ConfigError> {
        let horizon = self.params.horizon();
        if horizon.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(ConfigError::EmptyHorizon(horizon));
        }
        match &self.params {
            AppParams::Inventory(p) => InventoryModel::new(p.clone())
                .map(Model::Inventory)
                .map_err(|e| ConfigError::Invalid(format!("params: {e}"))),
            AppParams::Queue(p) => QueueModel::new(p.clone())
                .map(Model::Queue)
                .map_err(|e| ConfigError::Invalid(format!("params: {e}"))),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.params.application() != self.application {
            return Err(ConfigError::Invalid(format!(
                "params are for {} but application is {}",
                self.params.application(),
                self.application
            )));
        }
        self.model()?;
        self.solver.validate().map_err(|e| ConfigError::Invalid(format!("solver: {e}")))?;
        if let Some(v) = self.sweep_values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(ConfigError::Invalid(format!("sweep_values must be finite and nonnegative, got {v}")));
        }
        match self.run_kind {
            RunKind::SweepSigma | RunKind::Pareto if self.sweep_values.is_empty() => {
                return Err(ConfigError::Invalid(format!("{:?} needs non-empty sweep_values", self.run_kind)));
            }
            RunKind::Pareto if self.application != Application::Queue => {
                return Err(ConfigError::Invalid("pareto runs need the queue application".into()));
            }
            RunKind::OracleCompare => {
                let o = &self.oracle;
                if o.n_levels < 2 || o.n_segments == 0 || o.n_steps == 0 {
                    return Err(ConfigError::Invalid(
                        "oracle needs n_levels >= 2, n_segments >= 1 and n_steps >= 1".into(),
                    ));
                }
                let size = enumeration_size(o, 1);
                if size > MAX_CANDIDATES as f64 {
                    return Err(ConfigError::Invalid(format!(
                        "oracle enumeration of {size} candidates exceeds {MAX_CANDIDATES}"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Pretty JSON that [`parse_config`] accepts.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }
}
