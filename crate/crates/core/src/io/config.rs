use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::sequence::load_sequence;
use super::IoError;
use crate::eval::SequenceInput;
use crate::synth::{generate, preset, Preset};
use crate::trackers::TrackerConfig;

/// Prefix selecting a built-in synthetic scenario instead of a directory.
pub const SYNTH_PREFIX: &str = "synth:";

fn default_runs() -> usize {
    10
}

/// Benchmark configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub trackers: Vec<TrackerConfig>,
    /// Sequence directories, relative to the config file, or `synth:<preset>`.
    pub sequences: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub output_directory: Option<PathBuf>,
}

fn config_err(file: &Path, reason: impl Into<String>) -> IoError {
    IoError::Config {
        file: file.to_path_buf(),
        reason: reason.into(),
    }
}

impl BenchConfig {
    pub fn from_json(text: &str, file: &Path) -> Result<Self, IoError> {
        let cfg: BenchConfig = serde_json::from_str(text).map_err(|e| config_err(file, e.to_string()))?;
        cfg.validate(file)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn validate(&self, file: &Path) -> Result<(), IoError> {
        if self.trackers.is_empty() {
            return Err(config_err(file, "trackers must not be empty"));
        }
        if self.sequences.is_empty() {
            return Err(config_err(file, "sequences must not be empty"));
        }
        if self.runs < 2 {
            return Err(config_err(file, format!("runs must be at least 2, got {}", self.runs)));
        }
        let mut labels = std::collections::HashSet::new();
        for (i, t) in self.trackers.iter().enumerate() {
            t.validate().map_err(|e| config_err(file, format!("trackers[{i}]: {e}")))?;
            if !labels.insert(t.label().to_string()) {
                return Err(config_err(file, format!("trackers[{i}]: duplicate label '{}'", t.label())));
            }
        }
        for s in &self.sequences {
            if let Some(name) = s.strip_prefix(SYNTH_PREFIX) {
                name.parse::<Preset>().map_err(|e| config_err(file, e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Loads every sequence. Directories resolve against `base`; synthetic
    /// presets are rendered with the config seed.
    pub fn load_sequences(&self, base: &Path) -> Result<Vec<SequenceInput>, IoError> {
        self.sequences
            .iter()
            .map(|s| {
                let (frames, ground_truth) = if let Some(name) = s.strip_prefix(SYNTH_PREFIX) {
                    let p: Preset = name.parse().map_err(|e: crate::synth::SynthError| config_err(base, e.to_string()))?;
                    generate(&preset(p), self.seed).map_err(|e| config_err(base, e.to_string()))?
                } else {
                    load_sequence(&base.join(s))?
                };
                Ok(SequenceInput {
                    name: sequence_name(s),
                    frames,
                    ground_truth,
                })
            })
            .collect()
    }
}

/// Display name of a sequence entry: the preset name or the last path component.
pub fn sequence_name(entry: &str) -> String {
    if let Some(name) = entry.strip_prefix(SYNTH_PREFIX) {
        return name.to_string();
    }
    Path::new(entry.trim_end_matches(['/', '\\']))
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| entry.to_string())
}
