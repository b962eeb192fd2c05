//! Flat `key = value` configuration files: parsing, override application,
//! and the canonical serialization used inside checkpoints.

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::train::TrainConfig;

/// Input-side knobs that belong to neither the model nor the trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Sentences are truncated to this many tokens.
    pub max_len: usize,
    /// Minimum corpus frequency for a token to enter the vocabulary.
    pub min_count: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            max_len: 200,
            min_count: 1,
        }
    }
}

/// Everything a run needs, with config-file keys spanning all three parts.
/// `dropout_rate` and `l2_cap` deliberately exist on both the model and the
/// trainer; setting either key updates both.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FullConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub pipeline: PipelineConfig,
}

impl FullConfig {
    /// Applies every line of a config file. Unknown keys are errors.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (key, value) in parse_kv(text)? {
            self.apply(&key, &value)?;
        }
        Ok(())
    }

    /// Applies one `key = value` override (config file line or CLI `--set`).
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let in_model = apply_model_key(&mut self.model, key, value)?;
        let in_train = apply_train_key(&mut self.train, key, value)?;
        let in_pipeline = apply_pipeline_key(&mut self.pipeline, key, value)?;
        if in_model || in_train || in_pipeline {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("unknown config key `{key}`")))
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        if self.pipeline.max_len < 1 || self.pipeline.min_count < 1 {
            return Err(Error::InvalidConfig("max_len and min_count must be ≥ 1".into()));
        }
        if self.pipeline.max_len < self.model.min_sentence_len() {
            return Err(Error::InvalidConfig(format!(
                "max_len {} is shorter than the largest filter region {}",
                self.pipeline.max_len,
                self.model.min_sentence_len()
            )));
        }
        Ok(())
    }
}

/// Splits flat `key = value` text into pairs. `#` starts a comment; blank
/// lines are skipped.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(Error::Parse {
            line: i + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn bad(key: &str, value: &str, expected: &str) -> Error {
    Error::InvalidConfig(format!("key `{key}`: cannot parse `{value}` as {expected}"))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value.parse().map_err(|_| bad(key, value, "an integer"))
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value.parse().map_err(|_| bad(key, value, "an integer"))
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value.parse().map_err(|_| bad(key, value, "a number"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(key, value, "true or false")),
    }
}

fn parse_regions(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|p| p.trim().parse().map_err(|_| bad(key, value, "a comma-separated integer list")))
        .collect()
}

fn apply_model_key(cfg: &mut ModelConfig, key: &str, value: &str) -> Result<bool> {
    match key {
        "d" => cfg.d = parse_usize(key, value)?,
        "region_sizes" => cfg.region_sizes = parse_regions(key, value)?,
        "feature_maps" => cfg.feature_maps = parse_usize(key, value)?,
        "hidden_units" => cfg.hidden_units = parse_usize(key, value)?,
        "num_classes" => cfg.num_classes = parse_usize(key, value)?,
        "conv_activation" => cfg.conv_activation = value.parse()?,
        "hidden_activation" => cfg.hidden_activation = value.parse()?,
        "dropout_rate" => cfg.dropout_rate = parse_f64(key, value)?,
        "l2_cap" => cfg.l2_cap = parse_f64(key, value)?,
        "dropout_pooled" => cfg.dropout_pooled = parse_bool(key, value)?,
        "dropout_hidden" => cfg.dropout_hidden = parse_bool(key, value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn apply_train_key(cfg: &mut TrainConfig, key: &str, value: &str) -> Result<bool> {
    match key {
        "batch_size" => cfg.batch_size = parse_usize(key, value)?,
        "epochs" => cfg.epochs = parse_usize(key, value)?,
        "rho" => cfg.rho = parse_f64(key, value)?,
        "epsilon" => cfg.epsilon = parse_f64(key, value)?,
        "dropout_rate" => cfg.dropout_rate = parse_f64(key, value)?,
        "l2_cap" => cfg.l2_cap = parse_f64(key, value)?,
        "seed" => cfg.seed = parse_u64(key, value)?,
        "folds" => cfg.folds = parse_usize(key, value)?,
        "repetitions" => cfg.repetitions = parse_usize(key, value)?,
        "test_fraction" => cfg.test_fraction = parse_f64(key, value)?,
        "disjoint_folds" => cfg.disjoint_folds = parse_bool(key, value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn apply_pipeline_key(cfg: &mut PipelineConfig, key: &str, value: &str) -> Result<bool> {
    match key {
        "max_len" => cfg.max_len = parse_usize(key, value)?,
        "min_count" => cfg.min_count = parse_usize(key, value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

/// Canonical `key = value` form of a model config, fixed key order, used as
/// the checkpoint's embedded config block. Float values round-trip through
/// their shortest decimal representation.
pub fn model_config_to_kv(cfg: &ModelConfig) -> String {
    let regions: Vec<String> = cfg.region_sizes.iter().map(|r| r.to_string()).collect();
    format!(
        "d = {}\nregion_sizes = {}\nfeature_maps = {}\nhidden_units = {}\nnum_classes = {}\nconv_activation = {}\nhidden_activation = {}\ndropout_rate = {}\nl2_cap = {}\ndropout_pooled = {}\ndropout_hidden = {}\n",
        cfg.d,
        regions.join(","),
        cfg.feature_maps,
        cfg.hidden_units,
        cfg.num_classes,
        cfg.conv_activation,
        cfg.hidden_activation,
        cfg.dropout_rate,
        cfg.l2_cap,
        cfg.dropout_pooled,
        cfg.dropout_hidden,
    )
}

/// Strict inverse of `model_config_to_kv`: every key must be a model key.
pub fn model_config_from_kv(text: &str) -> Result<ModelConfig> {
    let mut cfg = ModelConfig::default();
    for (key, value) in parse_kv(text)? {
        if !apply_model_key(&mut cfg, &key, &value)? {
            return Err(Error::InvalidConfig(format!("unknown model config key `{key}`")));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}
