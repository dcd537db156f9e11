// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Pure-state quantum Fisher information by finite differences,
//! I_g = 4(⟨∂Φ|∂Φ⟩ − |⟨Φ|∂Φ⟩|²).

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::Propagator;
use crate::error::{check_dim, Error, Result};
use crate::hilbert::{squeeze_parameter, squeezed_vacuum_amplitudes, suggested_cutoff, StateVector};
use crate::schedule::PulseSchedule;

/// δ used when none is given.
pub const DEFAULT_DELTA: f64 = 1e-5;

/// Largest coupling at which the analytic bound is evaluated along a ramp.
pub const BOUND_G_MAX: f64 = 0.9999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiniteDifference {
    /// (Φ(g+δ) − Φ(g))/δ
    Forward,
    /// (Φ(g+δ) − Φ(g−δ))/2δ
    #[default]
    Central,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QfiResult {
    pub times: Vec<f64>,
    pub qfi_values: Vec<f64>,
    pub delta: f64,
    pub method: FiniteDifference,
    /// I_s(g(t)) with g capped at [`BOUND_G_MAX`].
    pub bound_values: Vec<f64>,
}

/// I_s = g²/[2(1 − g²)²].
pub fn analytic_qfi_bound(g: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&g) {
        return Err(Error::CouplingDomain(g));
    }
    let d = 1.0 - g * g;
    Ok(g * g / (2.0 * d * d))
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid("delta", format!("{delta} must be > 0")));
    }
    Ok(())
}

/// QFI from the state at g and its finite-difference derivative `d`.
fn qfi_from_derivative(psi: &DVector<Complex64>, d: &DVector<Complex64>) -> f64 {
    let overlap = psi.dotc(d);
    4.0 * (d.norm_squared() - overlap.norm_sqr())
}

/// QFI at one point from states at g, g+δ and (for the central rule) g−δ.
pub fn qfi_from_states(
    at: &StateVector,
    plus: &StateVector,
    minus: Option<&StateVector>,
    delta: f64,
    method: FiniteDifference,
) -> Result<f64> {
    check_delta(delta)?;
    check_dim(at.dim(), plus.dim())?;
    let d = match (method, minus) {
        (FiniteDifference::Forward, _) => (plus.amplitudes() - at.amplitudes()) / Complex64::new(delta, 0.0),
        (FiniteDifference::Central, Some(m)) => {
            check_dim(at.dim(), m.dim())?;
            (plus.amplitudes() - m.amplitudes()) / Complex64::new(2.0 * delta, 0.0)
        }
        (FiniteDifference::Central, None) => {
            return Err(Error::invalid("minus", "central differences need the state at g − δ"))
        }
    };
    Ok(qfi_from_derivative(at.amplitudes(), &d))
}

/// Squeezed vacuum S[r(g)]|0⟩ on enough Fock levels for all of `gs`.
fn static_states(gs: &[f64]) -> Result<Vec<StateVector>> {
    let r_max = gs
        .iter()
        .map(|&g| squeeze_parameter(g))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let levels = suggested_cutoff(r_max, 1e-16);
    gs.iter()
        .map(|&g| {
            let amps = squeezed_vacuum_amplitudes(squeeze_parameter(g)?, levels);
            StateVector::new(DVector::from_iterator(levels, amps.into_iter().map(|a| Complex64::new(a, 0.0))))
        })
        .collect()
}

/// Finite-difference QFI of the analytic family g ↦ S[r(g)]|0⟩.
pub fn qfi_static(g: f64, delta: f64, method: FiniteDifference) -> Result<f64> {
    check_delta(delta)?;
    let gs: Vec<f64> = match method {
        FiniteDifference::Forward => vec![g, g + delta],
        FiniteDifference::Central => vec![g, g + delta, g - delta],
    };
    let st = static_states(&gs)?;
    qfi_from_states(&st[0], &st[1], st.get(2), delta, method)
}

/// Static-family QFI and the analytic bound on a list of couplings.
pub fn qfi_static_sweep(g_values: &[f64], delta: f64, method: FiniteDifference) -> Result<QfiResult> {
    Ok(QfiResult {
        times: g_values.to_vec(),
        qfi_values: g_values
            .iter()
            .map(|&g| qfi_static(g, delta, method))
            .collect::<Result<_>>()?,
        delta,
        method,
        bound_values: g_values
            .iter()
            .map(|&g| analytic_qfi_bound(g))
            .collect::<Result<_>>()?,
    })
}

/// QFI along a trajectory with respect to the ramp endpoint g_c. The shifted
/// runs differ from the nominal one only in g_c; controls and integrator
/// settings are shared.
pub fn qfi_finite_difference(
    prop: &Propagator,
    schedule: &PulseSchedule,
    psi0: &StateVector,
    delta: f64,
    method: FiniteDifference,
) -> Result<QfiResult> {
    check_delta(delta)?;
    let shifted = |dg: f64| -> Result<PulseSchedule> {
        let mut s = schedule.clone();
        s.ramp = schedule.ramp.with_endpoint(schedule.ramp.gc + dg)?;
        Ok(s)
    };
    let base = prop.evolve_pure(schedule, psi0)?;
    let plus = prop.evolve_pure(&shifted(delta)?, psi0)?;
    let minus = match method {
        FiniteDifference::Central => Some(prop.evolve_pure(&shifted(-delta)?, psi0)?),
        FiniteDifference::Forward => None,
    };
    let b = base.pure_states().expect("pure evolution");
    let p = plus.pure_states().expect("pure evolution");
    let m = minus.as_ref().map(|t| t.pure_states().expect("pure evolution"));
    let qfi_values = (0..b.len())
        .map(|k| qfi_from_states(&b[k], &p[k], m.map(|m| &m[k]), delta, method))
        .collect::<Result<_>>()?;
    let bound_values = base
        .times
        .iter()
        .map(|&t| analytic_qfi_bound(schedule.ramp.value(t).abs().min(BOUND_G_MAX)))
        .collect::<Result<_>>()?;
    Ok(QfiResult {
        times: base.times,
        qfi_values,
        delta,
        method,
        bound_values,
    })
}
