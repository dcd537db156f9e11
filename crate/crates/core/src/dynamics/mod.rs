// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Time evolution under H_model[g(t)] + Σᵢ Λᵢ(t) cos(ω_d t + φᵢ) Hᵢᶜ.
//!
//! Closed systems use a fixed-substep Magnus integrator by default (second
//! order, midpoint Hamiltonian). Open systems integrate the master equation
//! in matrix form with an adaptive Dormand–Prince scheme.

mod export;
mod generator;
mod lindblad;
mod propagator;
mod trajectory;

use serde::{Deserialize, Serialize};

pub use export::{trajectory_json, write_trajectory_csv, write_trajectory_json};
pub use propagator::Propagator;
pub use trajectory::{final_fidelity, StateSeries, Trajectory};

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, Model, OperatorMatrix, SpaceSpec, StateVector};
use crate::schedule::PulseSchedule;

/// Closed-system integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Midpoint exponential, second order.
    Magnus2,
    /// Two-exponential commutator-free scheme on Gauss nodes, fourth order.
    Magnus4,
    /// Adaptive Dormand–Prince on the state vector.
    Rk45,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Substeps satisfy max(ω_d, ω, Ω)·Δτ ≤ this value.
    pub max_phase_step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_rk_steps: usize,
    /// Population allowed in the top 10% of Fock levels.
    pub leak_threshold: f64,
    pub check_leak: bool,
    pub check_positivity: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Magnus2,
            max_phase_step: 0.1,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_rk_steps: 5_000_000,
            leak_threshold: 1e-6,
            check_leak: true,
            check_positivity: true,
        }
    }
}

impl IntegratorConfig {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_phase_step > 0.0 && self.max_phase_step.is_finite()) {
            return Err(Error::invalid("integrator.max_phase_step", "must be > 0"));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::invalid("integrator tolerances", "must be > 0"));
        }
        if !(self.leak_threshold > 0.0) {
            return Err(Error::invalid("integrator.leak_threshold", "must be > 0"));
        }
        Ok(())
    }
}

/// How a rate enters its jump operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpConvention {
    /// L = √κ · op, κ is a rate.
    #[default]
    Sqrt,
    /// L = κ · op.
    Literal,
}

/// Photon loss κ₁, emitter relaxation κ₂ and emitter dephasing κ₃, in units of ω.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseRates {
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub convention: JumpConvention,
}

impl NoiseRates {
    pub fn new(kappa1: f64, kappa2: f64, kappa3: f64) -> Result<Self> {
        let r = Self {
            kappa1,
            kappa2,
            kappa3,
            convention: JumpConvention::Sqrt,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, k) in [("kappa1", self.kappa1), ("kappa2", self.kappa2), ("kappa3", self.kappa3)] {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(Error::invalid(name, format!("{k} must be >= 0")));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.kappa1 == 0.0 && self.kappa2 == 0.0 && self.kappa3 == 0.0
    }

    /// Prefactor of the jump operator for rate κ.
    pub fn amplitude(&self, kappa: f64) -> f64 {
        match self.convention {
            JumpConvention::Sqrt => kappa.sqrt(),
            JumpConvention::Literal => kappa,
        }
    }
}

/// Dense H_tot(t) = H_model[g(t)] + Σᵢ Λᵢ(t) cos(ω_d t + φᵢ) Hᵢᶜ.
pub fn total_hamiltonian(
    model: &Model,
    schedule: &PulseSchedule,
    t: f64,
    space: &SpaceSpec,
) -> Result<OperatorMatrix> {
    let g = schedule.ramp.eval(t)?;
    let mut h = model.hamiltonian(g, space)?;
    for field in &schedule.fields {
        let drive = crate::schedule::drive_value(field, schedule, t)?;
        if drive != 0.0 {
            h = h.add_scaled(&model.control_operator(field.kind, space)?, drive)?;
        }
    }
    Ok(h)
}

pub fn evolve_pure(
    model: &Model,
    schedule: &PulseSchedule,
    psi0: &StateVector,
    space: &SpaceSpec,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    Propagator::new(*model, *space, *cfg)?.evolve_pure(schedule, psi0)
}

pub fn segment_propagator(
    model: &Model,
    schedule: &PulseSchedule,
    k: usize,
    space: &SpaceSpec,
    cfg: &IntegratorConfig,
) -> Result<OperatorMatrix> {
    Propagator::new(*model, *space, *cfg)?.segment_propagator(schedule, k)
}

pub fn evolve_lindblad(
    model: &Model,
    schedule: &PulseSchedule,
    rho0: &DensityMatrix,
    rates: &NoiseRates,
    space: &SpaceSpec,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    Propagator::new(*model, *space, *cfg)?.evolve_lindblad(schedule, rho0, rates)
}
