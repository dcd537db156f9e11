// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Reward components for a few fidelities and pulse shapes.
//!
//!     cargo run --example reward

use critical_prep::reward::{fidelity_reward, total_reward, RewardConfig};
use critical_prep::schedule::{ControlField, ControlKind, CouplingRamp, PulseSchedule};

fn main() -> critical_prep::Result<()> {
    let cfg = RewardConfig::default();
    for f in [0.0, 0.5, 0.9, 0.99, 0.999] {
        println!("r_fid({f}) = {:.5}", fidelity_reward(f, &cfg)?);
    }

    let ramp = CouplingRamp::linear(0.01, 1.0, 3.0)?;
    let mut smooth = ControlField::zero(ControlKind::QuadratureSquared, 20);
    let mut jagged = smooth.clone();
    for k in 1..19 {
        smooth.amplitudes[k] = 0.5 * (std::f64::consts::PI * k as f64 / 19.0).sin();
        jagged.amplitudes[k] = if k % 2 == 0 { 0.5 } else { -0.5 };
    }
    for (name, field) in [("smooth", smooth), ("jagged", jagged)] {
        let s = PulseSchedule::new(3.0, 20, 1.0, ramp, vec![field])?;
        let b = total_reward(0.95, &s, &cfg)?;
        println!(
            "{name}: total {:.4} = r_fid {:.4} - amp {:.4} - freq {:.4} - smooth {:.4}",
            b.total,
            b.r_fid,
            cfg.zeta_amp * b.p_amp,
            cfg.zeta_freq * b.p_freq,
            cfg.zeta_smooth * b.p_smooth
        );
    }
    Ok(())
}
