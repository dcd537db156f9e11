// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Clipped-surrogate policy optimization with a separate value network.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nn::{Adam, Mlp};
use super::policy::GaussianPolicy;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    pub learning_rate: f64,
    pub epochs_per_update: usize,
    pub minibatch_size: usize,
    pub rollout_episodes: usize,
    pub policy_hidden_sizes: Vec<usize>,
    pub value_hidden_sizes: Vec<usize>,
    pub entropy_coeff: f64,
    pub max_grad_norm: f64,
    pub value_coeff: f64,
    pub init_log_std: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            learning_rate: 3e-4,
            epochs_per_update: 10,
            minibatch_size: 64,
            rollout_episodes: 32,
            policy_hidden_sizes: vec![64, 64],
            value_hidden_sizes: vec![64, 64],
            entropy_coeff: 1e-3,
            max_grad_norm: 0.5,
            value_coeff: 0.5,
            init_log_std: -0.5,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, why: &str| Err(Error::invalid(format!("ppo.{name}"), why));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma", "must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda", "must lie in [0, 1]");
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return bad("clip_epsilon", "must lie in (0, 1)");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate", "must be > 0");
        }
        if self.epochs_per_update == 0 || self.minibatch_size == 0 || self.rollout_episodes == 0 {
            return bad("epochs/minibatch/rollout", "must be positive");
        }
        if self.policy_hidden_sizes.contains(&0) || self.value_hidden_sizes.contains(&0) {
            return bad("hidden_sizes", "layers must be non-empty");
        }
        if !(self.entropy_coeff >= 0.0 && self.max_grad_norm > 0.0 && self.value_coeff >= 0.0) {
            return bad("coefficients", "entropy/value >= 0 and max_grad_norm > 0 required");
        }
        Ok(())
    }
}

/// One decision: observation, pre-squash action, behaviour log-probability,
/// advantage estimate and return target.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub pre_squash: Vec<f64>,
    pub log_prob: f64,
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
}

/// Multiplier chosen by min(ρÂ, clip(ρ, 1−ε, 1+ε)Â).
pub fn clipped_factor(ratio: f64, advantage: f64, eps: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
    if ratio * advantage <= clipped * advantage {
        ratio
    } else {
        clipped
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpoAgent {
    pub policy: GaussianPolicy,
    pub value: Mlp,
    pub cfg: PpoConfig,
    adam: Adam,
}

impl PpoAgent {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, act_dim: usize, cfg: PpoConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let policy = GaussianPolicy::new(obs_dim, act_dim, &cfg.policy_hidden_sizes, cfg.init_log_std, rng);
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(&cfg.value_hidden_sizes);
        sizes.push(1);
        let value = Mlp::new(&sizes, 1.0, rng);
        Ok(Self::from_parts(policy, value, cfg))
    }

    pub fn from_parts(policy: GaussianPolicy, value: Mlp, cfg: PpoConfig) -> Self {
        let n = policy.net.n_params() + policy.log_std.len() + value.n_params();
        let adam = Adam::new(n, cfg.learning_rate);
        Self {
            policy,
            value,
            cfg,
            adam,
        }
    }

    pub fn n_params(&self) -> usize {
        self.policy.net.n_params() + self.policy.log_std.len() + self.value.n_params()
    }

    /// Flat parameter vector: policy network, log σ, value network.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.policy.net.params().to_vec();
        p.extend_from_slice(&self.policy.log_std);
        p.extend_from_slice(self.value.params());
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.n_params());
        let n1 = self.policy.net.n_params();
        let n2 = n1 + self.policy.log_std.len();
        self.policy.net.params_mut().copy_from_slice(&p[..n1]);
        self.policy.log_std.copy_from_slice(&p[n1..n2]);
        self.value.params_mut().copy_from_slice(&p[n2..]);
    }

    pub fn value_of(&self, obs: &[f64]) -> f64 {
        self.value.forward(obs)[0]
    }

    /// Total loss −surrogate + c_v·MSE − c_H·entropy on a minibatch (whose
    /// advantages are used as given) and its gradient.
    pub fn loss_and_gradient(&self, batch: &[&Transition]) -> (UpdateStats, Vec<f64>) {
        let n1 = self.policy.net.n_params();
        let n_ls = self.policy.log_std.len();
        let mut grad = vec![0.0; self.n_params()];
        let (g_net, rest) = grad.split_at_mut(n1);
        let (g_ls, g_val) = rest.split_at_mut(n_ls);
        let inv = 1.0 / batch.len() as f64;
        let eps = self.cfg.clip_epsilon;
        let mut stats = UpdateStats::default();
        let sigma: Vec<f64> = self.policy.log_std.iter().map(|l| l.exp()).collect();
        for tr in batch {
            let cache = self.policy.forward_cached(&tr.obs);
            let mu = cache.output();
            let logp = self.policy.log_prob_given_mean(mu, &tr.pre_squash);
            let ratio = (logp - tr.log_prob).exp();
            let factor = clipped_factor(ratio, tr.advantage, eps);
            stats.policy_loss -= factor * tr.advantage * inv;
            stats.approx_kl += (tr.log_prob - logp) * inv;
            if (ratio - 1.0).abs() > eps {
                stats.clip_fraction += inv;
            }
            // ∂(−surrogate)/∂log π, zero on the clipped branch
            let d_logp = if factor == ratio { -ratio * tr.advantage * inv } else { 0.0 };
            if d_logp != 0.0 {
                let mut d_mu = vec![0.0; mu.len()];
                for j in 0..mu.len() {
                    let z = (tr.pre_squash[j] - mu[j]) / sigma[j];
                    d_mu[j] = d_logp * z / sigma[j];
                    g_ls[j] += d_logp * (z * z - 1.0);
                }
                self.policy.net.backward(&cache, &d_mu, g_net);
            }
            let vcache = self.value.forward_cached(&tr.obs);
            let v = vcache.output()[0];
            stats.value_loss += (v - tr.ret).powi(2) * inv;
            let d_v = self.cfg.value_coeff * 2.0 * (v - tr.ret) * inv;
            self.value.backward(&vcache, &[d_v], g_val);
        }
        stats.entropy = self.policy.entropy();
        for g in g_ls.iter_mut() {
            *g -= self.cfg.entropy_coeff;
        }
        stats.grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        (stats, grad)
    }

    /// Scalar objective minimized by [`update`](Self::update).
    pub fn total_loss(stats: &UpdateStats, cfg: &PpoConfig) -> f64 {
        stats.policy_loss + cfg.value_coeff * stats.value_loss - cfg.entropy_coeff * stats.entropy
    }

    /// Normalizes advantages over the batch, then runs the configured number
    /// of epochs of shuffled minibatch steps.
    pub fn update<R: Rng + ?Sized>(&mut self, batch: &mut [Transition], rng: &mut R) -> Result<UpdateStats> {
        if batch.is_empty() {
            return Err(Error::invalid("batch", "empty"));
        }
        let n = batch.len() as f64;
        let mean = batch.iter().map(|t| t.advantage).sum::<f64>() / n;
        let std = (batch.iter().map(|t| (t.advantage - mean).powi(2)).sum::<f64>() / n).sqrt();
        for t in batch.iter_mut() {
            t.advantage = if std > 1e-12 { (t.advantage - mean) / std } else { t.advantage - mean };
        }
        let mut order: Vec<usize> = (0..batch.len()).collect();
        let mut last = UpdateStats::default();
        for _ in 0..self.cfg.epochs_per_update {
            order.shuffle(rng);
            for chunk in order.chunks(self.cfg.minibatch_size) {
                let mb: Vec<&Transition> = chunk.iter().map(|&i| &batch[i]).collect();
                let (stats, mut grad) = self.loss_and_gradient(&mb);
                let loss = Self::total_loss(&stats, &self.cfg);
                if !loss.is_finite() || !stats.grad_norm.is_finite() {
                    return Err(Error::NonFinite(format!("policy update (loss {loss}, stats {stats:?})")));
                }
                if stats.grad_norm > self.cfg.max_grad_norm {
                    let s = self.cfg.max_grad_norm / stats.grad_norm;
                    grad.iter_mut().for_each(|g| *g *= s);
                }
                let mut p = self.params();
                self.adam.step(&mut p, &grad);
                self.set_params(&p);
                last = stats;
            }
        }
        Ok(last)
    }
}

/// One PPO update of `agent` on `batch`; see [`PpoAgent::update`].
pub fn ppo_update<R: Rng + ?Sized>(agent: &mut PpoAgent, batch: &mut [Transition], rng: &mut R) -> Result<UpdateStats> {
    agent.update(batch, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn clip_definition() {
        assert_eq!(clipped_factor(1.5, 1.0, 0.2), 1.2);
        assert_eq!(clipped_factor(0.5, -1.0, 0.2), 0.8);
        assert_eq!(clipped_factor(0.5, 1.0, 0.2), 0.5);
        assert_eq!(clipped_factor(1.5, -1.0, 0.2), 1.5);
        assert_eq!(clipped_factor(1.1, 2.0, 0.2), 1.1);
    }

    fn toy() -> (PpoAgent, Vec<Transition>) {
        // 2 policy parameters: one output weight-free bias plus log σ
        let cfg = PpoConfig {
            policy_hidden_sizes: vec![],
            value_hidden_sizes: vec![],
            entropy_coeff: 0.01,
            ..Default::default()
        };
        let policy = GaussianPolicy {
            net: Mlp::from_params(&[1, 1], vec![0.0, 0.15]).unwrap(),
            log_std: vec![-0.2],
        };
        let value = Mlp::from_params(&[1, 1], vec![0.0, 0.0]).unwrap();
        let agent = PpoAgent::from_parts(policy, value, cfg);
        let batch = [(0.4, 1.0), (-0.3, -0.5), (0.9, 0.7), (0.05, -1.2)]
            .iter()
            .map(|&(u, adv)| Transition {
                obs: vec![0.0],
                pre_squash: vec![u],
                log_prob: agent.policy.log_prob(&[0.0], &[u]).unwrap() - 0.05,
                advantage: adv,
                ret: 0.3,
            })
            .collect();
        (agent, batch)
    }

    #[test]
    fn surrogate_gradient_matches_finite_differences() {
        let (agent, batch) = toy();
        let refs: Vec<&Transition> = batch.iter().collect();
        let (_, grad) = agent.loss_and_gradient(&refs);
        let p0 = agent.params();
        // bias of the mean and log σ
        for idx in [1usize, 2] {
            let h = 1e-6;
            let eval = |delta: f64| {
                let mut a = agent.clone();
                let mut p = p0.clone();
                p[idx] += delta;
                a.set_params(&p);
                let (s, _) = a.loss_and_gradient(&refs);
                PpoAgent::total_loss(&s, &a.cfg)
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            let rel = (fd - grad[idx]).abs() / fd.abs().max(1e-12);
            assert!(rel < 1e-4, "param {idx}: fd {fd} analytic {}", grad[idx]);
        }
    }

    #[test]
    fn one_update_lowers_the_surrogate_loss() {
        let (mut agent, mut batch) = toy();
        agent.cfg.epochs_per_update = 1;
        agent.cfg.value_coeff = 0.0;
        let mut normalized = batch.clone();
        let n = normalized.len() as f64;
        let mean = normalized.iter().map(|t| t.advantage).sum::<f64>() / n;
        let std = (normalized.iter().map(|t| (t.advantage - mean).powi(2)).sum::<f64>() / n).sqrt();
        normalized.iter_mut().for_each(|t| t.advantage = (t.advantage - mean) / std);
        let refs: Vec<&Transition> = normalized.iter().collect();
        let before = agent.loss_and_gradient(&refs).0.policy_loss;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        agent.update(&mut batch, &mut rng).unwrap();
        let after = agent.loss_and_gradient(&refs).0.policy_loss;
        assert!(after < before, "{after} >= {before}");
    }
}
