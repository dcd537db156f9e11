// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{adaptive_fock_cutoff, spectrum, Model, CUTOFF_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub g: Vec<f64>,
    pub fock_cutoff: usize,
    /// gaps[k][n] = E_n(g_k) − E_0(g_k), n = 0..m (the first column is 0).
    pub gaps: Vec<Vec<f64>>,
}

impl SpectrumResult {
    /// E₁ − E₀ along the grid.
    pub fn first_gap(&self) -> Vec<f64> {
        self.gaps.iter().map(|row| row.get(1).copied().unwrap_or(f64::NAN)).collect()
    }
}

/// `n` equally spaced couplings from `start` to `end` inclusive.
pub fn coupling_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && start.is_finite() && end.is_finite() && end >= start) {
        return Err(Error::invalid("g grid", "need start <= end and step > 0"));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

/// Lowest `m` excitation energies over `g_grid`; `fock_cutoff` None picks
/// one by doubling until the ground state at the largest g converges.
pub fn spectrum_sweep(model: &Model, g_grid: &[f64], m: usize, fock_cutoff: Option<usize>) -> Result<SpectrumResult> {
    if g_grid.is_empty() {
        return Err(Error::invalid("g grid", "empty"));
    }
    let g_max = g_grid.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    let cutoff = match fock_cutoff {
        Some(n) => n,
        None => adaptive_fock_cutoff(model, g_max, CUTOFF_TOLERANCE)?,
    };
    let space = model.space(cutoff)?;
    Ok(SpectrumResult {
        g: g_grid.to_vec(),
        fock_cutoff: cutoff,
        gaps: spectrum(model, g_grid, m, &space)?,
    })
}
