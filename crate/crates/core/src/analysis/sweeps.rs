// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Monte Carlo parameter robustness and dissipation-rate sweeps.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::NoiseRates;
use crate::error::{Error, Result};
use crate::rl::Environment;
use crate::schedule::{ControlKind, PulseSchedule};

/// Parameter χ perturbed as χ + βε.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Perturbation {
    DriveFreq,
    Phase(ControlKind),
    Amplitude(ControlKind),
}

impl fmt::Display for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Perturbation::DriveFreq => write!(f, "omega_d"),
            Perturbation::Phase(k) => write!(f, "phi{}", k.index()),
            Perturbation::Amplitude(k) => write!(f, "lambda{}", k.index()),
        }
    }
}

impl FromStr for Perturbation {
    type Err = Error;

    /// `omega_d`, `phi<i>` or `lambda<i>` with the field index i = 1..=5.
    fn from_str(s: &str) -> Result<Self> {
        let field = |rest: &str| -> Result<ControlKind> {
            rest.parse::<usize>()
                .ok()
                .and_then(|i| ControlKind::ALL.iter().copied().find(|k| k.index() == i))
                .ok_or_else(|| Error::invalid("chi", format!("unknown field index in `{s}`")))
        };
        if s == "omega_d" {
            Ok(Perturbation::DriveFreq)
        } else if let Some(rest) = s.strip_prefix("phi") {
            Ok(Perturbation::Phase(field(rest)?))
        } else if let Some(rest) = s.strip_prefix("lambda") {
            Ok(Perturbation::Amplitude(field(rest)?))
        } else {
            Err(Error::invalid("chi", format!("`{s}` is not omega_d, phi<i> or lambda<i>")))
        }
    }
}

impl From<Perturbation> for String {
    fn from(p: Perturbation) -> Self {
        p.to_string()
    }
}

impl TryFrom<String> for Perturbation {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeMode {
    /// Λ → (1 + βε)Λ with one ε per realization.
    #[default]
    Multiplicative,
    /// Λ_k → Λ_k + βε_k, independently per interior amplitude.
    Additive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessResult {
    pub parameter: Perturbation,
    pub amplitude_mode: AmplitudeMode,
    pub beta_grid: Vec<f64>,
    pub mean_fidelity: Vec<f64>,
    pub std_fidelity: Vec<f64>,
    /// Realizations whose propagation failed (counted as F = 0).
    pub failures: Vec<usize>,
    pub realizations: usize,
    pub unperturbed_fidelity: f64,
    pub seed: u64,
}

fn perturb(
    schedule: &PulseSchedule,
    chi: Perturbation,
    mode: AmplitudeMode,
    beta: f64,
    eps: &[f64],
) -> Result<PulseSchedule> {
    let mut s = schedule.clone();
    let missing = |k: ControlKind| Error::invalid("chi", format!("schedule has no {} field", k.name()));
    match chi {
        Perturbation::DriveFreq => s.drive_freq += beta * eps[0],
        Perturbation::Phase(k) => s.field_mut(k).ok_or_else(|| missing(k))?.phase += beta * eps[0],
        Perturbation::Amplitude(k) => {
            let f = s.field_mut(k).ok_or_else(|| missing(k))?;
            let n = f.amplitudes.len();
            match mode {
                AmplitudeMode::Multiplicative => f.amplitudes.iter_mut().for_each(|a| *a *= 1.0 + beta * eps[0]),
                AmplitudeMode::Additive => {
                    for (a, e) in f.amplitudes[1..n - 1].iter_mut().zip(eps) {
                        *a += beta * e;
                    }
                }
            }
        }
    }
    Ok(s)
}

/// Mean and standard deviation of the final fidelity over `n_realizations`
/// perturbations per β. The same ε draws are reused for every β.
pub fn robustness_sweep(
    env: &Environment,
    schedule: &PulseSchedule,
    chi: Perturbation,
    mode: AmplitudeMode,
    beta_grid: &[f64],
    n_realizations: usize,
    seed: u64,
) -> Result<RobustnessResult> {
    if n_realizations == 0 {
        return Err(Error::invalid("realizations", "must be at least 1"));
    }
    if beta_grid.iter().any(|b| !b.is_finite()) {
        return Err(Error::invalid("beta", "values must be finite"));
    }
    // validates that the field exists
    perturb(schedule, chi, mode, 0.0, &[0.0])?;
    let n_eps = match (chi, mode) {
        (Perturbation::Amplitude(_), AmplitudeMode::Additive) => schedule.steps.saturating_sub(2).max(1),
        _ => 1,
    };
    let draws: Vec<Vec<f64>> = (0..n_realizations)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            (0..n_eps).map(|_| rng.sample(StandardNormal)).collect()
        })
        .collect();
    let unperturbed = env.fidelity(schedule)?;
    let mut result = RobustnessResult {
        parameter: chi,
        amplitude_mode: mode,
        beta_grid: beta_grid.to_vec(),
        mean_fidelity: Vec::new(),
        std_fidelity: Vec::new(),
        failures: Vec::new(),
        realizations: n_realizations,
        unperturbed_fidelity: unperturbed,
        seed,
    };
    for &beta in beta_grid {
        let fids: Vec<Option<f64>> = draws
            .par_iter()
            .map(|eps| perturb(schedule, chi, mode, beta, eps).and_then(|s| env.fidelity(&s)).ok())
            .collect();
        // shifted by the unperturbed value: exact at β = 0 and better conditioned
        let dev: Vec<f64> = fids.iter().map(|f| f.unwrap_or(0.0) - unperturbed).collect();
        let n = dev.len() as f64;
        let mean_dev = dev.iter().sum::<f64>() / n;
        let var = dev.iter().map(|v| (v - mean_dev).powi(2)).sum::<f64>() / n;
        result.mean_fidelity.push(unperturbed + mean_dev);
        result.std_fidelity.push(var.sqrt());
        result.failures.push(fids.iter().filter(|f| f.is_none()).count());
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseChannel {
    Kappa1,
    Kappa2,
    Kappa3,
}

impl FromStr for NoiseChannel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kappa1" => Ok(NoiseChannel::Kappa1),
            "kappa2" => Ok(NoiseChannel::Kappa2),
            "kappa3" => Ok(NoiseChannel::Kappa3),
            _ => Err(Error::invalid("channel", format!("`{s}` is not kappa1, kappa2 or kappa3"))),
        }
    }
}

impl NoiseChannel {
    fn set(self, rates: &mut NoiseRates, kappa: f64) {
        match self {
            NoiseChannel::Kappa1 => rates.kappa1 = kappa,
            NoiseChannel::Kappa2 => rates.kappa2 = kappa,
            NoiseChannel::Kappa3 => rates.kappa3 = kappa,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationResult {
    pub channel: NoiseChannel,
    pub fixed: NoiseRates,
    pub kappa_grid: Vec<f64>,
    pub fidelity: Vec<Option<f64>>,
    pub errors: Vec<Option<String>>,
    pub closed_fidelity: f64,
}

/// Open-system final fidelity with `channel` swept over `kappa_grid` and the
/// other rates taken from `fixed`.
pub fn dissipation_sweep(
    env: &Environment,
    schedule: &PulseSchedule,
    channel: NoiseChannel,
    kappa_grid: &[f64],
    fixed: NoiseRates,
) -> Result<DissipationResult> {
    fixed.validate()?;
    let closed = env.fidelity_with(schedule, None)?;
    let runs: Vec<Result<f64>> = kappa_grid
        .par_iter()
        .map(|&k| {
            let mut rates = fixed;
            channel.set(&mut rates, k);
            rates.validate()?;
            env.fidelity_with(schedule, Some(&rates))
        })
        .collect();
    let (fidelity, errors) = runs
        .into_iter()
        .map(|r| match r {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        })
        .unzip();
    Ok(DissipationResult {
        channel,
        fixed,
        kappa_grid: kappa_grid.to_vec(),
        fidelity,
        errors,
        closed_fidelity: closed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{Model, RabiParams};
    use crate::rl::{EnvMode, TaskSpec};

    fn setup() -> (Environment, PulseSchedule) {
        let task = TaskSpec {
            model: Model::Rabi(RabiParams {
                omega: 1.0,
                big_omega: 8.0,
            }),
            fock_cutoff: 30,
            steps: 6,
            ..TaskSpec::desk_scale()
        };
        let env = Environment::new(task, EnvMode::Episodic).unwrap();
        let raw: Vec<f64> = (0..env.action_dim()).map(|i| 0.1 * (i as f64 * 0.9).cos()).collect();
        let sched = env.action_space().decode(&raw).unwrap();
        (env, sched)
    }

    #[test]
    fn parameter_names_round_trip() {
        for p in [
            Perturbation::DriveFreq,
            Perturbation::Phase(ControlKind::QuadratureSquared),
            Perturbation::Amplitude(ControlKind::QubitX),
        ] {
            assert_eq!(p.to_string().parse::<Perturbation>().unwrap(), p);
        }
        assert_eq!("phi2".parse::<Perturbation>().unwrap(), Perturbation::Phase(ControlKind::QuadratureSquared));
        assert!("phi9".parse::<Perturbation>().is_err());
    }

    #[test]
    fn zero_beta_is_exact() {
        let (env, sched) = setup();
        let r = robustness_sweep(&env, &sched, Perturbation::DriveFreq, AmplitudeMode::Multiplicative, &[0.0, 0.05], 6, 1)
            .unwrap();
        assert_eq!(r.mean_fidelity[0], r.unperturbed_fidelity);
        assert_eq!(r.std_fidelity[0], 0.0);
        assert!(r.std_fidelity[1] > 0.0);
    }

    #[test]
    fn tiny_phase_noise_is_continuous() {
        let (env, sched) = setup();
        let chi = Perturbation::Phase(ControlKind::QuadratureSquared);
        let r = robustness_sweep(&env, &sched, chi, AmplitudeMode::Multiplicative, &[1e-6], 5, 3).unwrap();
        assert!((r.mean_fidelity[0] - r.unperturbed_fidelity).abs() < 1e-4);
    }

    #[test]
    fn reproducible_and_additive_mode() {
        let (env, sched) = setup();
        let chi = Perturbation::Amplitude(ControlKind::QuadratureSquared);
        for mode in [AmplitudeMode::Multiplicative, AmplitudeMode::Additive] {
            let a = robustness_sweep(&env, &sched, chi, mode, &[0.0, 0.1], 4, 9).unwrap();
            let b = robustness_sweep(&env, &sched, chi, mode, &[0.0, 0.1], 4, 9).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.mean_fidelity[0], a.unperturbed_fidelity);
        }
        let missing = Perturbation::Amplitude(ControlKind::QubitZ);
        assert!(robustness_sweep(&env, &sched, missing, AmplitudeMode::Multiplicative, &[0.1], 2, 0).is_err());
    }

    #[test]
    fn zero_rates_match_closed_system() {
        let (env, sched) = setup();
        let d = dissipation_sweep(&env, &sched, NoiseChannel::Kappa1, &[0.0, 0.05], NoiseRates::default()).unwrap();
        assert!((d.fidelity[0].unwrap() - d.closed_fidelity).abs() < 1e-6);
        assert!(d.fidelity[1].unwrap() < d.closed_fidelity);
    }
}
