// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

/// Â_k = Σ_{j≥k} (γλ)^{j−k} δ_j with δ_j = r_j + γV_{j+1} − V_j.
/// `values` has one more entry than `rewards` (the terminal value).
pub fn gae_advantages(rewards: &[f64], values: &[f64], gamma: f64, lambda: f64) -> Vec<f64> {
    assert_eq!(values.len(), rewards.len() + 1, "values must include the terminal value");
    let mut adv = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for k in (0..rewards.len()).rev() {
        let delta = rewards[k] + gamma * values[k + 1] - values[k];
        acc = delta + gamma * lambda * acc;
        adv[k] = acc;
    }
    adv
}
