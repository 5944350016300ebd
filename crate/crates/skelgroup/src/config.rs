//! Merged run configuration: one JSON document covering data generation,
//! model shape, training, and pseudo-labeling. Unknown keys anywhere are
//! rejected, and every section is validated before any work starts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::synthetic::SyntheticConfig;
use crate::model::ModelConfig;
use crate::pseudo::PseudoConfig;
use crate::train::{LabelSource, TrainConfig, TrainMode};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: SyntheticConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub pseudo: PseudoConfig,
}

impl Default for RunConfig {
    /// Defaults are coherent: the model geometry is derived from the default
    /// data section, so an empty config file is runnable. A file overriding
    /// data geometry must override the matching model fields too.
    fn default() -> Self {
        let data = SyntheticConfig::default();
        let model = ModelConfig {
            actors: data.actors,
            frames: data.frames,
            joints: data.layout.n_joints,
            group_classes: data.group_classes,
            action_classes: data.action_classes,
            ..ModelConfig::default()
        };
        RunConfig {
            data,
            model,
            train: TrainConfig::default(),
            pseudo: PseudoConfig::default(),
        }
    }
}

impl RunConfig {
    /// Section-level checks plus cross-section coherence: the model must fit
    /// the data geometry, and its action head must match the label source.
    pub fn validate(&self) -> Result<()> {
        self.data.validate()?;
        self.model.validate()?;
        self.train.validate()?;
        self.pseudo.validate()?;
        let mismatch = |what: &str, model: usize, data: usize| {
            Err(Error::Config(format!(
                "model.{what} = {model} but the data section implies {data}"
            )))
        };
        if self.model.actors != self.data.actors {
            return mismatch("actors", self.model.actors, self.data.actors);
        }
        if self.model.frames != self.data.frames {
            return mismatch("frames", self.model.frames, self.data.frames);
        }
        if self.model.joints != self.data.layout.n_joints {
            return mismatch("joints", self.model.joints, self.data.layout.n_joints);
        }
        if self.model.group_classes != self.data.group_classes {
            return mismatch("group_classes", self.model.group_classes, self.data.group_classes);
        }
        let wants_actions =
            self.train.mode != TrainMode::GroupOnly && self.train.label_source == LabelSource::GroundTruth;
        if wants_actions && self.model.action_classes != self.data.action_classes {
            return mismatch("action_classes", self.model.action_classes, self.data.action_classes);
        }
        Ok(())
    }

    /// Model shape actually trained: pseudo-label runs resize the action
    /// head to the cluster count.
    pub fn effective_model(&self) -> ModelConfig {
        let mut m = self.model.clone();
        if self.train.label_source == LabelSource::Pseudo && self.train.mode != TrainMode::GroupOnly
        {
            m.action_classes = self.pseudo.k;
        }
        m
    }
}

/// Reads and validates a config file. A missing file is an I/O error;
/// malformed JSON or an unknown key is a config error naming the problem.
pub fn load_run_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn save_run_config(path: impl AsRef<Path>, cfg: &RunConfig) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(cfg)
        .map_err(|e| Error::Config(format!("config serialization failed: {e}")))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_coherent_and_round_trip_through_json() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        save_run_config(&path, &cfg).unwrap();
        let loaded = load_run_config(&path).unwrap();
        assert_eq!(loaded, cfg);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, "{\"train\": {\"epochs\": 7}}").unwrap();
        let cfg = load_run_config(&path).unwrap();
        assert_eq!(cfg.train.epochs, 7);
        assert_eq!(cfg.pseudo, PseudoConfig::default());
        assert_eq!(cfg.model, RunConfig::default().model);
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, "{\"train\": {\"epocs\": 7}}").unwrap();
        match load_run_config(&path) {
            Err(Error::Config(msg)) => assert!(msg.contains("epocs"), "message was: {msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
        std::fs::write(&path, "{\"colour\": 3}").unwrap();
        match load_run_config(&path) {
            Err(Error::Config(msg)) => assert!(msg.contains("colour"), "message was: {msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_run_config("/nonexistent/run.json"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn geometry_mismatch_is_named() {
        let mut cfg = RunConfig::default();
        cfg.model.joints = 11;
        match cfg.validate() {
            Err(Error::Config(msg)) => assert!(msg.contains("joints"), "message was: {msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn pseudo_runs_resize_the_action_head() {
        let mut cfg = RunConfig::default();
        cfg.pseudo.k = 13;
        assert_eq!(cfg.effective_model().action_classes, cfg.model.action_classes);
        cfg.train.label_source = LabelSource::Pseudo;
        assert_eq!(cfg.effective_model().action_classes, 13);
        // Action-class coherence is not required when labels come from
        // clustering.
        cfg.model.action_classes = 99;
        cfg.validate().unwrap();
        cfg.train.label_source = LabelSource::GroundTruth;
        assert!(cfg.validate().is_err());
    }
}
