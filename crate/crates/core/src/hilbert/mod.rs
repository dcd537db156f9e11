// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Truncated cavity ⊗ emitter Hilbert space.
//!
//! Basis ordering is cavity-major: the basis vector `|n⟩ ⊗ |s⟩` sits at index
//! `n * qubit_levels + s`. For a two-level emitter `s = 0` is `|↓⟩` (σ_z = −1)
//! and `s = 1` is `|↑⟩`. For a collective spin of `N` emitters `s` runs over
//! `m = −N/2 ..= N/2` in ascending order.

mod eigen;
mod model;
mod operator;
mod squeeze;
mod state;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use eigen::{
    adaptive_fock_cutoff, eigh, ground_state_numeric, spectrum, Eigensystem, CUTOFF_TOLERANCE,
};
pub use model::{dicke_hamiltonian, rabi_hamiltonian, DickeParams, Model, RabiParams};
pub use operator::{
    annihilation_op, cavity_op, creation_op, emitter_op, identity_op, number_op,
    quadrature_op, quadrature_squared_op, sigma_minus_op, sigma_x_op, sigma_z_op, spin_jx_op,
    spin_jz_op, OperatorMatrix,
};
pub use squeeze::{
    analytic_ground_state, squeeze_operator, squeeze_parameter, squeezed_vacuum_amplitudes,
    squeezed_vacuum_tail, SQUEEZE_TOLERANCE,
};
pub use state::{fidelity_amplitude, DensityMatrix, StateVector};
pub(crate) use squeeze::suggested_cutoff;

/// Dimensions of the truncated product space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceSpec {
    fock_cutoff: usize,
    qubit_levels: usize,
}

impl SpaceSpec {
    /// Cavity with `fock_cutoff` Fock levels coupled to one two-level emitter.
    pub fn rabi(fock_cutoff: usize) -> Result<Self> {
        Self::new(fock_cutoff, 2)
    }

    /// Cavity coupled to the symmetric (spin-N/2) sector of `n_spins` emitters.
    pub fn dicke(fock_cutoff: usize, n_spins: usize) -> Result<Self> {
        if n_spins == 0 {
            return Err(Error::invalid("n_spins", "must be at least 1"));
        }
        Self::new(fock_cutoff, n_spins + 1)
    }

    /// Cavity alone, e.g. the reduced state after tracing out the emitter.
    pub fn cavity(fock_cutoff: usize) -> Result<Self> {
        Self::new(fock_cutoff, 1)
    }

    pub fn new(fock_cutoff: usize, qubit_levels: usize) -> Result<Self> {
        if fock_cutoff < 2 {
            return Err(Error::invalid("fock_cutoff", format!("{fock_cutoff} < 2")));
        }
        if qubit_levels == 0 {
            return Err(Error::invalid("qubit_levels", "must be at least 1"));
        }
        Ok(Self {
            fock_cutoff,
            qubit_levels,
        })
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    pub fn qubit_levels(&self) -> usize {
        self.qubit_levels
    }

    pub fn total_dim(&self) -> usize {
        self.fock_cutoff * self.qubit_levels
    }

    pub fn index(&self, fock: usize, level: usize) -> usize {
        debug_assert!(fock < self.fock_cutoff && level < self.qubit_levels);
        fock * self.qubit_levels + level
    }

    /// Same emitter, different cavity truncation.
    pub fn with_cutoff(&self, fock_cutoff: usize) -> Result<Self> {
        Self::new(fock_cutoff, self.qubit_levels)
    }

    /// Number of Fock levels in the "top decile" used by the truncation-leak
    /// monitor.
    pub fn top_decile_levels(&self) -> usize {
        self.fock_cutoff.div_ceil(10).max(1)
    }
}
