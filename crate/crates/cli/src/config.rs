//! Experiment configuration: a TOML file with `[model]`, `[data]`, `[context]`,
//! `[output]` and `[evaluation]` tables. Every field has a default, so an empty file is
//! valid. Relative paths in a file are resolved against the file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use socialpose_core::data::{ms_to_frame, Split, DEFAULT_FRAME_RATE};
use socialpose_core::eval::{Baseline, MetricKind, DEFAULT_HORIZONS_MS};
use socialpose_core::model::ModelConfig;

use crate::error::{CliError, CliResult};

/// Method name that stands for the checkpoint(s) passed to `evaluate`.
pub const MODEL_METHOD: &str = "model";
pub const SPLIT_FILE: &str = "split.txt";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub data: DataConfig,
    pub context: ContextConfig,
    pub output: OutputConfig,
    pub evaluation: EvaluationConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Directory of canonical scene files.
    pub dir: PathBuf,
    /// Split manifest; `<dir>/split.txt` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            dir: PathBuf::from("data"),
            split: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextConfig {
    /// `zero`, `scene`, or a path to a feature file.
    pub provider: String,
}

impl Default for ContextConfig {
    fn default() -> Self {
        ContextConfig { provider: "zero".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("runs/default"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub horizons_ms: Vec<f64>,
    /// Baseline names (`zpzm`, `zpcm`, `cpcm`) and `model`.
    pub methods: Vec<String>,
    pub metric: MetricKind,
    /// Split scored by `evaluate`.
    pub split: String,
    pub workers: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            horizons_ms: DEFAULT_HORIZONS_MS.to_vec(),
            methods: Baseline::ALL
                .iter()
                .map(|b| b.name().to_string())
                .chain([MODEL_METHOD.to_string()])
                .collect(),
            metric: MetricKind::StackedL2,
            split: Split::Test.as_str().into(),
            workers: 1,
        }
    }
}

impl ExperimentConfig {
    /// Parses TOML after applying `key.path=value` overrides. Values are read as TOML
    /// literals and fall back to plain strings.
    pub fn from_toml(text: &str, overrides: &[String]) -> CliResult<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        table
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Usage(format!("config: {e}")))
    }

    /// Reads `path` (or defaults when `None`) and resolves relative paths against the
    /// file's directory.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let Some(path) = path else {
            return Self::from_toml("", overrides);
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text, overrides)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.data.dir = base.join(&cfg.data.dir);
        cfg.data.split = cfg.data.split.map(|s| base.join(s));
        cfg.output.dir = base.join(&cfg.output.dir);
        if !matches!(cfg.context.provider.as_str(), "zero" | "scene") {
            cfg.context.provider = base.join(&cfg.context.provider).display().to_string();
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn split_path(&self) -> PathBuf {
        self.data.split.clone().unwrap_or_else(|| self.data.dir.join(SPLIT_FILE))
    }

    pub fn eval_split(&self) -> CliResult<Split> {
        self.evaluation
            .split
            .parse()
            .map_err(|e: socialpose_core::Error| CliError::Usage(e.to_string()))
    }

    /// Checks values that do not touch the file system.
    pub fn validate_values(&self) -> CliResult<()> {
        self.model.validate()?;
        let ev = &self.evaluation;
        if ev.horizons_ms.is_empty() {
            return Err(CliError::Usage("evaluation.horizons_ms is empty".into()));
        }
        for &h in &ev.horizons_ms {
            let f = ms_to_frame(h, DEFAULT_FRAME_RATE).map_err(|e| CliError::Usage(e.to_string()))?;
            if f > self.model.pred_frames {
                return Err(CliError::Usage(format!(
                    "horizon {h} ms is frame {f} at {DEFAULT_FRAME_RATE} fps, beyond the {}-frame prediction window",
                    self.model.pred_frames
                )));
            }
        }
        if ev.methods.is_empty() {
            return Err(CliError::Usage("evaluation.methods is empty".into()));
        }
        for (i, m) in ev.methods.iter().enumerate() {
            if m != MODEL_METHOD && m.parse::<Baseline>().is_err() {
                return Err(CliError::Usage(format!(
                    "unknown method {m:?} (expected zpzm, zpcm, cpcm or {MODEL_METHOD})"
                )));
            }
            if ev.methods[..i].contains(m) {
                return Err(CliError::Usage(format!("method {m:?} listed twice")));
            }
        }
        if ev.workers == 0 {
            return Err(CliError::Usage("evaluation.workers must be at least 1".into()));
        }
        self.eval_split()?;
        Ok(())
    }

    /// [`validate_values`](Self::validate_values) plus existence of every input path.
    pub fn validate(&self) -> CliResult<()> {
        self.validate_values()?;
        if !self.data.dir.is_dir() {
            return Err(CliError::Usage(format!("data directory {} does not exist", self.data.dir.display())));
        }
        let split = self.split_path();
        if !split.is_file() {
            return Err(CliError::Usage(format!("split manifest {} does not exist", split.display())));
        }
        let p = &self.context.provider;
        if !matches!(p.as_str(), "zero" | "scene") && !Path::new(p).is_file() {
            return Err(CliError::Usage(format!("context feature file {p} does not exist")));
        }
        Ok(())
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> CliResult<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override {spec:?} is not key=value")))?;
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, path) = parts.split_last().expect("split yields at least one part");
    let mut cur = table;
    for p in path {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Usage(format!("override {key}: {p} is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
