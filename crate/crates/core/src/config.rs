// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{IntegratorConfig, NoiseRates};
use crate::error::{Error, Result};
use crate::hilbert::{adaptive_fock_cutoff, DickeParams, Model, RabiParams, CUTOFF_TOLERANCE};
use crate::reward::RewardConfig;
use crate::rl::{Algorithm, EnvMode, PpoConfig, TaskSpec, TrainOptions};
use crate::schedule::{ActionBounds, ControlKind};

/// Default output directory when neither the config nor a flag sets one.
pub const OUTPUT_DIR_ENV: &str = "CRITICAL_PREP_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Rabi,
    Dicke,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CutoffSetting {
    Fixed(usize),
    /// Only "auto" is accepted.
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    #[serde(default = "one")]
    pub omega: f64,
    #[serde(rename = "Omega")]
    pub big_omega: f64,
    #[serde(default)]
    pub n_spins: Option<usize>,
    pub g0: f64,
    pub gc: f64,
    pub fock_cutoff: CutoffSetting,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    pub steps: usize,
    /// Control field names, e.g. "quadrature_squared".
    pub fields: Vec<String>,
    pub free_ramp: bool,
    pub fixed_duration: Option<f64>,
    pub bounds: ActionBounds,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self {
            steps: 20,
            fields: vec![ControlKind::QuadratureSquared.name().to_string()],
            free_ramp: true,
            fixed_duration: None,
            bounds: ActionBounds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub mode: EnvMode,
    pub algorithm: Algorithm,
    pub episodes: usize,
    pub seed: u64,
    pub workers: usize,
    pub open_system: bool,
    pub noise: NoiseRates,
    pub output_dir: Option<PathBuf>,
    pub run_id: String,
}

impl Default for RunSection {
    fn default() -> Self {
        let t = TrainOptions::default();
        Self {
            mode: t.mode,
            algorithm: t.algorithm,
            episodes: t.episodes,
            seed: t.seed,
            workers: t.workers,
            open_system: false,
            noise: NoiseRates::default(),
            output_dir: None,
            run_id: "run".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub reward: RewardConfig,
    #[serde(default)]
    pub ppo: PpoConfig,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub integrator: IntegratorConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.model()?;
        if let CutoffSetting::Named(s) = &self.model.fock_cutoff {
            if s != "auto" {
                return Err(Error::Config(format!("model.fock_cutoff must be an integer or \"auto\", got \"{s}\"")));
            }
        }
        if !self.run.run_id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) || self.run.run_id.is_empty() {
            return Err(Error::Config(format!("run.run_id `{}` must be a plain file-name stem", self.run.run_id)));
        }
        self.ppo.validate()?;
        self.run.noise.validate()?;
        self.field_mask()?;
        Ok(())
    }

    pub fn model(&self) -> Result<Model> {
        let m = &self.model;
        match (m.kind, m.n_spins) {
            (ModelKind::Rabi, None) => Ok(Model::Rabi(RabiParams::new(m.omega, m.big_omega)?)),
            (ModelKind::Rabi, Some(_)) => Err(Error::Config("model.n_spins applies to the dicke model only".into())),
            (ModelKind::Dicke, n) => Ok(Model::Dicke(DickeParams::new(m.omega, m.big_omega, n.unwrap_or(1))?)),
        }
    }

    pub fn fock_cutoff(&self) -> Result<usize> {
        match &self.model.fock_cutoff {
            CutoffSetting::Fixed(n) => Ok(*n),
            CutoffSetting::Named(_) => {
                adaptive_fock_cutoff(&self.model()?, self.model.gc.max(self.model.g0), CUTOFF_TOLERANCE)
            }
        }
    }

    pub fn field_mask(&self) -> Result<[bool; 5]> {
        let mut mask = [false; 5];
        for name in &self.schedule.fields {
            let k = ControlKind::from_name(name).map_err(|_| {
                Error::Config(format!("schedule.fields: unknown control field `{name}`"))
            })?;
            mask[k.index() - 1] = true;
        }
        Ok(mask)
    }

    pub fn noise(&self) -> Option<NoiseRates> {
        self.run.open_system.then_some(self.run.noise)
    }

    pub fn task(&self) -> Result<TaskSpec> {
        let task = TaskSpec {
            model: self.model()?,
            fock_cutoff: self.fock_cutoff()?,
            g0: self.model.g0,
            gc: self.model.gc,
            steps: self.schedule.steps,
            bounds: self.schedule.bounds,
            field_mask: self.field_mask()?,
            free_ramp: self.schedule.free_ramp,
            fixed_duration: self.schedule.fixed_duration,
            reward: self.reward,
            integrator: self.integrator,
            noise: self.noise(),
        };
        task.validate()?;
        Ok(task)
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            episodes: self.run.episodes,
            seed: self.run.seed,
            mode: self.run.mode,
            algorithm: self.run.algorithm,
            workers: self.run.workers,
        }
    }

    /// Flag, then config, then the environment variable, then `runs/<run_id>`.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        if let Some(p) = &self.run.output_dir {
            return p.clone();
        }
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(p) => PathBuf::from(p),
            None => PathBuf::from("runs").join(&self.run.run_id),
        }
    }
}
