use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sleepstack::train::TrainConfig;

use crate::error::{usage_error, Classify, Outcome};

pub const ENV_PREFIX: &str = "SLEEPSTACK_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TaskArg {
    Rs,
    Sc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SplitSide {
    Train,
    Test,
}

/// Settings of one run. Every field is optional while layers are merged;
/// the merged value is echoed to `run_config.json` and can be passed back
/// with `--config` to repeat the run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub store: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitSide>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dry_run: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
}

impl RunConfig {
    /// Fills every unset field of `self` from `lower`.
    pub fn or(self, lower: RunConfig) -> RunConfig {
        RunConfig {
            command: self.command.or(lower.command),
            data_dir: self.data_dir.or(lower.data_dir),
            manifest: self.manifest.or(lower.manifest),
            store: self.store.or(lower.store),
            checkpoint: self.checkpoint.or(lower.checkpoint),
            scheme: self.scheme.or(lower.scheme),
            task: self.task.or(lower.task),
            seed: self.seed.or(lower.seed),
            threads: self.threads.or(lower.threads),
            out: self.out.or(lower.out),
            channel: self.channel.or(lower.channel),
            split: self.split.or(lower.split),
            dry_run: self.dry_run.or(lower.dry_run),
            train: self.train.or(lower.train),
        }
    }

    pub fn load(path: &Path) -> Outcome<RunConfig> {
        let text = std::fs::read_to_string(path).usage(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).usage(|| format!("parsing config {}", path.display()))
    }

    /// Settings from `SLEEPSTACK_*` variables.
    pub fn from_env(vars: impl Iterator<Item = (String, String)>) -> Outcome<RunConfig> {
        let mut c = RunConfig::default();
        for (key, value) in vars {
            let Some(name) = key.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let bad = |e: &dyn std::fmt::Display| usage_error(format!("{key}={value:?}: {e}"));
            match name {
                "DATA_DIR" => c.data_dir = Some(value.into()),
                "MANIFEST" => c.manifest = Some(value.into()),
                "STORE" => c.store = Some(value.into()),
                "CHECKPOINT" => c.checkpoint = Some(value.into()),
                "OUT" => c.out = Some(value.into()),
                "CHANNEL" => c.channel = Some(value),
                "SCHEME" => c.scheme = Some(value.parse().map_err(|e| bad(&e))?),
                "SEED" => c.seed = Some(value.parse().map_err(|e| bad(&e))?),
                "THREADS" => c.threads = Some(value.parse().map_err(|e| bad(&e))?),
                "TASK" => c.task = Some(TaskArg::from_str(&value, true).map_err(|e| bad(&e))?),
                "SPLIT" => c.split = Some(SplitSide::from_str(&value, true).map_err(|e| bad(&e))?),
                _ => {}
            }
        }
        Ok(c)
    }

    pub fn require<'a, T>(field: &'a Option<T>, flag: &str) -> Outcome<&'a T> {
        field.as_ref().ok_or_else(|| usage_error(format!("--{flag} is required")))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn write(&self, dir: &Path) -> Outcome<()> {
        let path = dir.join("run_config.json");
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(&path, text).internal(|| format!("writing {}", path.display()))
    }
}
