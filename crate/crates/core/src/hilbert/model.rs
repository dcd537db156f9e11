// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::operator::*;
use super::{OperatorMatrix, SpaceSpec};
use crate::error::{check_dim, Error, Result};
use crate::schedule::ControlKind;

/// Quantum Rabi model: cavity frequency ω and emitter splitting Ω (ħ = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiParams {
    pub omega: f64,
    #[serde(rename = "Omega")]
    pub big_omega: f64,
}

impl RabiParams {
    pub fn new(omega: f64, big_omega: f64) -> Result<Self> {
        let p = Self { omega, big_omega };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::invalid("omega", format!("{} must be > 0", self.omega)));
        }
        if !(self.big_omega > 0.0 && self.big_omega.is_finite()) {
            return Err(Error::invalid("Omega", format!("{} must be > 0", self.big_omega)));
        }
        Ok(())
    }

    pub fn ratio(&self) -> f64 {
        self.big_omega / self.omega
    }
}

/// Dicke model parameters ω′, Ω′ and the number of emitters N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DickeParams {
    pub omega: f64,
    #[serde(rename = "Omega")]
    pub big_omega: f64,
    pub n_spins: usize,
}

impl DickeParams {
    pub fn new(omega: f64, big_omega: f64, n_spins: usize) -> Result<Self> {
        RabiParams::new(omega, big_omega)?;
        if n_spins == 0 {
            return Err(Error::invalid("n_spins", "must be at least 1"));
        }
        Ok(Self {
            omega,
            big_omega,
            n_spins,
        })
    }
}

/// H = ω a†a + (Ω/2) σ_z + (g√(ωΩ)/2)(a + a†) σ_x
pub fn rabi_hamiltonian(params: &RabiParams, g: f64, space: &SpaceSpec) -> Result<OperatorMatrix> {
    Model::Rabi(*params).hamiltonian(g, space)
}

/// H = ω′ a†a + Ω′ J_z + (g√(ω′Ω′)/√N)(a + a†) J_x
pub fn dicke_hamiltonian(
    params: &DickeParams,
    g: f64,
    space: &SpaceSpec,
) -> Result<OperatorMatrix> {
    Model::Dicke(*params).hamiltonian(g, space)
}

/// A light–matter model whose Hamiltonian is affine in the coupling g:
/// H(g) = H_free + g · H_coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Rabi(RabiParams),
    Dicke(DickeParams),
}

impl Model {
    pub fn omega(&self) -> f64 {
        match self {
            Model::Rabi(p) => p.omega,
            Model::Dicke(p) => p.omega,
        }
    }

    pub fn big_omega(&self) -> f64 {
        match self {
            Model::Rabi(p) => p.big_omega,
            Model::Dicke(p) => p.big_omega,
        }
    }

    /// Emitter levels the model needs (2 for Rabi, N+1 for Dicke).
    pub fn emitter_levels(&self) -> usize {
        match self {
            Model::Rabi(_) => 2,
            Model::Dicke(p) => p.n_spins + 1,
        }
    }

    pub fn space(&self, fock_cutoff: usize) -> Result<SpaceSpec> {
        SpaceSpec::new(fock_cutoff, self.emitter_levels())
    }

    fn check_space(&self, space: &SpaceSpec) -> Result<()> {
        check_dim(self.emitter_levels(), space.qubit_levels())
    }

    pub fn free_hamiltonian(&self, space: &SpaceSpec) -> Result<OperatorMatrix> {
        self.check_space(space)?;
        let cavity = number_op(space).scale(self.omega());
        match self {
            Model::Rabi(p) => cavity.add_scaled(&sigma_z_op(space), p.big_omega / 2.0),
            Model::Dicke(p) => cavity.add_scaled(&spin_jz_op(space), p.big_omega),
        }
    }

    /// Operator multiplying g.
    pub fn coupling_operator(&self, space: &SpaceSpec) -> Result<OperatorMatrix> {
        self.check_space(space)?;
        let x = quadrature_op(space);
        match self {
            Model::Rabi(p) => {
                let pref = (p.omega * p.big_omega).sqrt() / 2.0;
                Ok(x.matmul(&sigma_x_op(space))?.scale(pref))
            }
            Model::Dicke(p) => {
                let pref = (p.omega * p.big_omega).sqrt() / (p.n_spins as f64).sqrt();
                Ok(x.matmul(&spin_jx_op(space))?.scale(pref))
            }
        }
        .and_then(|op| OperatorMatrix::hermitian(op.into_entries()))
    }

    pub fn hamiltonian(&self, g: f64, space: &SpaceSpec) -> Result<OperatorMatrix> {
        if !g.is_finite() {
            return Err(Error::invalid("g", format!("{g} is not finite")));
        }
        self.free_hamiltonian(space)?
            .add_scaled(&self.coupling_operator(space)?, g)
    }

    /// Control operator H_i^c. For collective spins the emitter controls are
    /// 2J_z and 2J_x so that N = 1 reproduces σ_z and σ_x.
    pub fn control_operator(&self, kind: ControlKind, space: &SpaceSpec) -> Result<OperatorMatrix> {
        self.check_space(space)?;
        Ok(match (kind, self) {
            (ControlKind::Displacement, _) => quadrature_op(space),
            (ControlKind::QuadratureSquared, _) => quadrature_squared_op(space),
            (ControlKind::PhotonNumber, _) => number_op(space),
            (ControlKind::QubitZ, Model::Rabi(_)) => sigma_z_op(space),
            (ControlKind::QubitX, Model::Rabi(_)) => sigma_x_op(space),
            (ControlKind::QubitZ, Model::Dicke(_)) => spin_jz_op(space).scale(2.0),
            (ControlKind::QubitX, Model::Dicke(_)) => spin_jx_op(space).scale(2.0),
        })
    }

    /// Emitter lowering operator used as the relaxation jump operator.
    pub fn emitter_lowering(&self, space: &SpaceSpec) -> Result<OperatorMatrix> {
        self.check_space(space)?;
        match self {
            Model::Rabi(_) => Ok(sigma_minus_op(space)),
            Model::Dicke(_) => {
                let jx = spin_jx_op(space);
                let j = space.qubit_levels();
                // J₋ = J_x − iJ_y has only the real sub-diagonal of 2J_x's lower triangle
                let lower = nalgebra::DMatrix::from_fn(space.total_dim(), space.total_dim(), |r, c| {
                    if c == r + 1 && (c % j) != 0 {
                        jx.get(r, c) * 2.0
                    } else {
                        num_complex::Complex64::new(0.0, 0.0)
                    }
                });
                OperatorMatrix::new(lower)
            }
        }
    }

    /// Emitter dephasing operator (σ_z, or 2J_z for collective spins).
    pub fn emitter_dephasing(&self, space: &SpaceSpec) -> Result<OperatorMatrix> {
        self.control_operator(ControlKind::QubitZ, space)
    }

    /// Fastest intrinsic frequency, used to size integrator substeps.
    pub fn max_frequency(&self) -> f64 {
        self.omega().max(self.big_omega())
    }
}
