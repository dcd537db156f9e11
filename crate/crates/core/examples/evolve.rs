// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Linear ramp with one squeezing pulse, closed and open system.
//!
//!     cargo run --release --example evolve

use critical_prep::dynamics::{final_fidelity, IntegratorConfig, NoiseRates, Propagator};
use critical_prep::hilbert::{ground_state_numeric, DensityMatrix, Model, RabiParams};
use critical_prep::schedule::{ControlField, ControlKind, CouplingRamp, PulseSchedule};

fn main() -> critical_prep::Result<()> {
    let model = Model::Rabi(RabiParams::new(1.0, 50.0)?);
    let space = model.space(40)?;
    let prop = Propagator::new(model, space, IntegratorConfig::default())?;
    let (_, psi0) = ground_state_numeric(&model.hamiltonian(0.01, &space)?)?;
    let (_, target) = ground_state_numeric(&model.hamiltonian(1.0, &space)?)?;

    let (steps, duration) = (20, 3.0);
    let mut squeeze = ControlField::zero(ControlKind::QuadratureSquared, steps);
    for (k, a) in squeeze.amplitudes.iter_mut().enumerate().take(steps - 1).skip(1) {
        *a = 0.15 * (std::f64::consts::PI * k as f64 / (steps - 1) as f64).sin();
    }
    let ramp = CouplingRamp::linear(0.01, 1.0, duration)?;
    let bare = PulseSchedule::bare(ramp, steps)?;
    let driven = PulseSchedule::new(duration, steps, 2.0, ramp, vec![squeeze])?;

    for (name, s) in [("bare ramp", &bare), ("with squeezing", &driven)] {
        let traj = prop.evolve_pure(s, &psi0)?;
        println!(
            "{name:>15}: F = {:.6}, norm drift {:.1e}",
            final_fidelity(&traj, &target)?,
            traj.max_norm_drift()
        );
    }

    let rho0 = DensityMatrix::from_pure(&psi0);
    for kappa in [0.0, 0.01, 0.05] {
        let rates = NoiseRates::new(kappa, kappa, kappa)?;
        let traj = prop.evolve_lindblad(&driven, &rho0, &rates)?;
        println!("   kappa = {kappa:<5}: F = {:.6}", final_fidelity(&traj, &target)?);
    }
    Ok(())
}
