// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Populations of the instantaneous eigenstates of the bare model
//! Hamiltonian H[g(t)] along a trajectory.

use serde::{Deserialize, Serialize};

use crate::dynamics::{StateSeries, Trajectory};
use crate::error::{check_dim, Error, Result};
use crate::hilbert::{eigh, Model, SpaceSpec};
use crate::schedule::PulseSchedule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationResult {
    pub times: Vec<f64>,
    pub g: Vec<f64>,
    /// populations[k][n] = |⟨E_n(t_k)|Φ(t_k)⟩|².
    pub populations: Vec<Vec<f64>>,
}

/// Projects every sampled state onto the lowest `m` eigenstates of H[g(t_k)]
/// (controls excluded).
pub fn instantaneous_populations(
    model: &Model,
    space: &SpaceSpec,
    schedule: &PulseSchedule,
    traj: &Trajectory,
    m: usize,
) -> Result<PopulationResult> {
    let dim = space.total_dim();
    if m == 0 || m > dim {
        return Err(Error::invalid("m", format!("{m} not in 1..={dim}")));
    }
    check_dim(dim, traj.dim())?;
    let g: Vec<f64> = traj.times.iter().map(|&t| schedule.ramp.value(t)).collect();
    let populations = g
        .iter()
        .enumerate()
        .map(|(k, &gk)| {
            let eig = eigh(&model.hamiltonian(gk, space)?)?;
            (0..m)
                .map(|n| {
                    let e = eig.vectors.column(n);
                    Ok(match &traj.states {
                        StateSeries::Pure(s) => e.dotc(s[k].amplitudes()).norm_sqr(),
                        StateSeries::Mixed(r) => e.dotc(&(r[k].entries() * e)).re,
                    })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(PopulationResult {
        times: traj.times.clone(),
        g,
        populations,
    })
}
