// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Diagonal Gaussian policy squashed into [−1, 1] by tanh.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::nn::{Mlp, MlpCache};
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const LN_2: f64 = std::f64::consts::LN_2;

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// log(1 − tanh²u), stable for large |u|.
pub fn log_squash_jacobian(u: f64) -> f64 {
    2.0 * (LN_2 - u - softplus(-2.0 * u))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPolicy {
    pub net: Mlp,
    /// State-independent log standard deviation of the pre-squash Gaussian.
    pub log_std: Vec<f64>,
}

/// A sampled action together with its pre-squash value u (a = tanh u).
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySample {
    pub action: Vec<f64>,
    pub pre_squash: Vec<f64>,
    pub log_prob: f64,
}

impl GaussianPolicy {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        act_dim: usize,
        hidden: &[usize],
        init_log_std: f64,
        rng: &mut R,
    ) -> Self {
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(act_dim);
        Self {
            net: Mlp::new(&sizes, 0.01, rng),
            log_std: vec![init_log_std; act_dim],
        }
    }

    pub fn act_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn mean(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let mu = self.net.forward(obs);
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("policy mean for observation {obs:?}")));
        }
        Ok(mu)
    }

    /// Log density of the squashed action whose pre-image is `u`, given the
    /// Gaussian mean `mu`.
    pub fn log_prob_given_mean(&self, mu: &[f64], u: &[f64]) -> f64 {
        mu.iter()
            .zip(u)
            .zip(&self.log_std)
            .map(|((m, u), ls)| {
                let z = (u - m) / ls.exp();
                -0.5 * z * z - ls - 0.5 * LN_2PI - log_squash_jacobian(*u)
            })
            .sum()
    }

    pub fn log_prob(&self, obs: &[f64], u: &[f64]) -> Result<f64> {
        Ok(self.log_prob_given_mean(&self.mean(obs)?, u))
    }

    /// Differential entropy of the pre-squash Gaussian.
    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|ls| ls + 0.5 * (LN_2PI + 1.0)).sum()
    }

    /// Samples u ~ 𝒩(μ, σ²) and returns tanh u; the deterministic mode
    /// returns tanh μ.
    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], stochastic: bool, rng: &mut R) -> Result<PolicySample> {
        let mu = self.mean(obs)?;
        let u: Vec<f64> = if stochastic {
            mu.iter()
                .zip(&self.log_std)
                .map(|(m, ls)| m + ls.exp() * rng.sample::<f64, _>(StandardNormal))
                .collect()
        } else {
            mu.clone()
        };
        Ok(PolicySample {
            action: u.iter().map(|v| v.tanh()).collect(),
            log_prob: self.log_prob_given_mean(&mu, &u),
            pre_squash: u,
        })
    }

    pub(crate) fn forward_cached(&self, obs: &[f64]) -> MlpCache {
        self.net.forward_cached(obs)
    }
}

/// Samples an action; see [`GaussianPolicy::sample`].
pub fn policy_sample<R: Rng + ?Sized>(
    obs: &[f64],
    policy: &GaussianPolicy,
    stochastic: bool,
    rng: &mut R,
) -> Result<PolicySample> {
    policy.sample(obs, stochastic, rng)
}
