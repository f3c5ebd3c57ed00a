//! Experiment configuration files: one `key = value` pair per line, `#`
//! comments, unknown keys rejected.

use std::path::PathBuf;

use pertcrf_core::corpus::DEFAULT_SEED;
use pertcrf_core::tasks::Task;
use pertcrf_core::{TemplateId, TrainConfig};

use super::{line_error, FormatError};

/// Where POS-with-ezafe-input experiments get their ezafe flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EzafeSource {
    /// Gold flags from the corpus.
    Gold,
    /// Flags decoded by a trained ezafe model.
    Predicted,
}

impl EzafeSource {
    /// `gold` or `predicted`.
    pub fn as_str(self) -> &'static str {
        match self {
            EzafeSource::Gold => "gold",
            EzafeSource::Predicted => "predicted",
        }
    }
}

impl std::str::FromStr for EzafeSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gold" => Ok(EzafeSource::Gold),
            "predicted" => Ok(EzafeSource::Predicted),
            _ => Err(format!("ezafe mode must be gold or predicted, got {s:?}")),
        }
    }
}

/// A parsed experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Which experiment.
    pub task: Task,
    /// Base feature template.
    pub template: TemplateId,
    /// L1 coefficient.
    pub l1: f64,
    /// L2 coefficient.
    pub l2: f64,
    /// Iteration cap.
    pub max_iter: usize,
    /// Split seed, used when only `train` is given.
    pub seed: u64,
    /// Training corpus, or the whole corpus when `valid`/`test` are absent.
    pub train: PathBuf,
    /// Validation corpus.
    pub valid: Option<PathBuf>,
    /// Test corpus.
    pub test: Option<PathBuf>,
    /// Ezafe model feeding a `pos-ez-input` experiment.
    pub ezafe_model: Option<PathBuf>,
    /// Flag source for `pos-ez-input`.
    pub ezafe_mode: EzafeSource,
    /// Output directory.
    pub out: PathBuf,
}

impl ExperimentConfig {
    /// Optimizer settings with the configured coefficients.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { l1: self.l1, l2: self.l2, max_iterations: self.max_iter, ..TrainConfig::default() }
    }

    /// Every setting as `(key, value)`, for report headers.
    pub fn entries(&self) -> Vec<(String, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map_or("-".to_string(), |p| p.display().to_string());
        vec![
            ("task".into(), self.task.to_string()),
            ("template".into(), self.template.to_string()),
            ("l1".into(), format!("{:?}", self.l1)),
            ("l2".into(), format!("{:?}", self.l2)),
            ("max_iter".into(), self.max_iter.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("train".into(), self.train.display().to_string()),
            ("valid".into(), path(&self.valid)),
            ("test".into(), path(&self.test)),
            ("ezafe_model".into(), path(&self.ezafe_model)),
            ("ezafe_mode".into(), self.ezafe_mode.as_str().into()),
            ("out".into(), self.out.display().to_string()),
        ]
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T, FormatError> {
    value.parse().map_err(|_| line_error(line, format!("invalid value {value:?} for {key}")))
}

/// Parses a configuration file.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, FormatError> {
    let defaults = TrainConfig::default();
    let mut task = None;
    let mut template = TemplateId::Crf1;
    let (mut l1, mut l2, mut max_iter) = (defaults.l1, defaults.l2, defaults.max_iterations);
    let mut seed = DEFAULT_SEED;
    let (mut train, mut valid, mut test, mut ezafe_model, mut out) = (None, None, None, None, None);
    let mut ezafe_mode = None;
    let mut seen: Vec<String> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let number = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| line_error(number, "expected `key = value`"))?;
        if seen.iter().any(|k| k == key) {
            return Err(line_error(number, format!("duplicate key {key}")));
        }
        seen.push(key.to_string());
        if value.is_empty() {
            return Err(line_error(number, format!("empty value for {key}")));
        }
        match key {
            "task" => task = Some(value.parse::<Task>().map_err(|e| line_error(number, e.to_string()))?),
            "template" => template = value.parse().map_err(|e: pertcrf_core::Error| line_error(number, e.to_string()))?,
            "l1" => l1 = parse_value(key, value, number)?,
            "l2" => l2 = parse_value(key, value, number)?,
            "max_iter" => max_iter = parse_value(key, value, number)?,
            "seed" => seed = parse_value(key, value, number)?,
            "train" => train = Some(PathBuf::from(value)),
            "valid" => valid = Some(PathBuf::from(value)),
            "test" => test = Some(PathBuf::from(value)),
            "ezafe_model" => ezafe_model = Some(PathBuf::from(value)),
            "ezafe_mode" => ezafe_mode = Some(value.parse().map_err(|e: String| line_error(number, e))?),
            "out" => out = Some(PathBuf::from(value)),
            _ => return Err(line_error(number, format!("unknown key {key:?}"))),
        }
    }
    let missing = |k: &str| FormatError::Truncated(format!("missing key {k}"));
    let task = task.ok_or_else(|| missing("task"))?;
    let ezafe_mode = ezafe_mode.unwrap_or(EzafeSource::Predicted);
    if task == Task::PosEzInput && ezafe_mode == EzafeSource::Predicted && ezafe_model.is_none() {
        return Err(FormatError::Truncated("task pos-ez-input requires ezafe_model".into()));
    }
    if valid.is_some() != test.is_some() {
        return Err(FormatError::Truncated("give both valid and test, or neither".into()));
    }
    Ok(ExperimentConfig {
        task,
        template,
        l1,
        l2,
        max_iter,
        seed,
        train: train.ok_or_else(|| missing("train"))?,
        valid,
        test,
        ezafe_model,
        ezafe_mode,
        out: out.ok_or_else(|| missing("out"))?,
    })
}
