// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

use crate::error::{check_dim, Error, Result};
use crate::hilbert::{fidelity_amplitude, DensityMatrix, StateVector};

#[derive(Debug, Clone, PartialEq)]
pub enum StateSeries {
    Pure(Vec<StateVector>),
    Mixed(Vec<DensityMatrix>),
}

/// States sampled on the schedule grid t₀…t_K.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: StateSeries,
    /// Set by [`with_target`](Self::with_target).
    pub final_fidelity: Option<f64>,
    pub target: Option<StateVector>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: StateSeries) -> Self {
        Self {
            times,
            states,
            final_fidelity: None,
            target: None,
        }
    }

    /// Records the target and the final fidelity to it.
    pub fn with_target(mut self, target: &StateVector) -> Result<Self> {
        self.final_fidelity = Some(final_fidelity(&self, target)?);
        self.target = Some(target.clone());
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0) - self.times.first().copied().unwrap_or(0.0)
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.states, StateSeries::Pure(_))
    }

    pub fn pure_states(&self) -> Option<&[StateVector]> {
        match &self.states {
            StateSeries::Pure(v) => Some(v),
            StateSeries::Mixed(_) => None,
        }
    }

    pub fn mixed_states(&self) -> Option<&[DensityMatrix]> {
        match &self.states {
            StateSeries::Mixed(v) => Some(v),
            StateSeries::Pure(_) => None,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.states {
            StateSeries::Pure(v) => v.first().map_or(0, |s| s.dim()),
            StateSeries::Mixed(v) => v.first().map_or(0, |s| s.dim()),
        }
    }

    /// ‖ψ‖ or Tr ρ at each grid point.
    pub fn norms(&self) -> Vec<f64> {
        match &self.states {
            StateSeries::Pure(v) => v.iter().map(|s| s.norm()).collect(),
            StateSeries::Mixed(v) => v.iter().map(|r| r.trace().re).collect(),
        }
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.norms().iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
    }

    /// |⟨target|ψ_k⟩| or √⟨target|ρ_k|target⟩ at grid point k.
    pub fn fidelity_at(&self, k: usize, target: &StateVector) -> Result<f64> {
        check_dim(self.dim(), target.dim())?;
        if k >= self.len() {
            return Err(Error::invalid("k", format!("{k} beyond trajectory of {}", self.len())));
        }
        match &self.states {
            StateSeries::Pure(v) => fidelity_amplitude(target, &v[k]),
            StateSeries::Mixed(v) => Ok(v[k].overlap(target)?.clamp(0.0, 1.0).sqrt()),
        }
    }

    pub fn fidelities(&self, target: &StateVector) -> Result<Vec<f64>> {
        (0..self.len()).map(|k| self.fidelity_at(k, target)).collect()
    }
}

/// Fidelity of the last state to `target`.
pub fn final_fidelity(traj: &Trajectory, target: &StateVector) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::invalid("trajectory", "empty"));
    }
    traj.fidelity_at(traj.len() - 1, target)
}
