// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Shaped training reward
//! R = [a + bF⁴]·[−log₁₀(1 − F)] − ζ_amp P_amp − ζ_freq P_freq − ζ_smooth P_smooth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::PulseSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    pub a: f64,
    pub b: f64,
    pub zeta_amp: f64,
    pub zeta_freq: f64,
    pub zeta_smooth: f64,
    /// F is capped here before the logarithm.
    pub f_clamp: f64,
    /// Penalize exp(|Λ|) rather than exp(Λ).
    pub abs_amp: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 4.0,
            zeta_amp: 1e-3,
            zeta_freq: 1e-2,
            zeta_smooth: 1e-3,
            f_clamp: 1.0 - 1e-10,
            abs_amp: true,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.b > 0.0) {
            return Err(Error::invalid("reward.a/b", "must be > 0"));
        }
        for (name, z) in [
            ("reward.zeta_amp", self.zeta_amp),
            ("reward.zeta_freq", self.zeta_freq),
            ("reward.zeta_smooth", self.zeta_smooth),
        ] {
            if !(z >= 0.0 && z.is_finite()) {
                return Err(Error::invalid(name, format!("{z} must be >= 0")));
            }
        }
        if !(self.f_clamp > 0.0 && self.f_clamp < 1.0) {
            return Err(Error::invalid("reward.f_clamp", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_fid: f64,
    pub p_amp: f64,
    pub p_freq: f64,
    pub p_smooth: f64,
    pub total: f64,
}

/// [a + bF⁴]·[−log₁₀(1 − F)] with F capped at `f_clamp`.
pub fn fidelity_reward(f: f64, cfg: &RewardConfig) -> Result<f64> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::invalid("F", format!("{f} outside [0, 1]")));
    }
    let f = f.min(cfg.f_clamp);
    let r = (cfg.a + cfg.b * f.powi(4)) * -(1.0 - f).log10();
    // −log10(1) is −0.0
    Ok(r + 0.0)
}

/// Σᵢ (1/n) Σ_k exp(Λ_{k,i}) over all K steps of the n fields.
pub fn amp_penalty(schedule: &PulseSchedule, cfg: &RewardConfig) -> f64 {
    let n = schedule.fields.len();
    if n == 0 {
        return 0.0;
    }
    let per_field: f64 = schedule
        .fields
        .iter()
        .map(|f| {
            f.amplitudes
                .iter()
                .map(|&l| if cfg.abs_amp { l.abs().exp() } else { l.exp() })
                .sum::<f64>()
        })
        .sum();
    per_field / n as f64
}

pub fn freq_penalty(omega_d: f64) -> f64 {
    omega_d.exp()
}

/// Σᵢ [Σ_k (ΔΛ)² + 2 Σ_k (Δ²Λ)²] with first differences up to K−1 and
/// second differences up to K−2.
pub fn smooth_penalty(schedule: &PulseSchedule) -> f64 {
    schedule
        .fields
        .iter()
        .map(|f| {
            let (first, second) = smoothness_terms(&f.amplitudes);
            first + 2.0 * second
        })
        .sum()
}

/// (Σ (ΔΛ)², Σ (Δ²Λ)²) for one amplitude sequence.
pub fn smoothness_terms(l: &[f64]) -> (f64, f64) {
    let first = l.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    let second = l.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]).powi(2)).sum();
    (first, second)
}

pub fn total_reward(f: f64, schedule: &PulseSchedule, cfg: &RewardConfig) -> Result<RewardBreakdown> {
    let r_fid = fidelity_reward(f, cfg)?;
    let p_amp = amp_penalty(schedule, cfg);
    let p_freq = freq_penalty(schedule.drive_freq);
    let p_smooth = smooth_penalty(schedule);
    Ok(RewardBreakdown {
        r_fid,
        p_amp,
        p_freq,
        p_smooth,
        total: r_fid - cfg.zeta_amp * p_amp - cfg.zeta_freq * p_freq - cfg.zeta_smooth * p_smooth,
    })
}
