// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Numeric Rabi ground states against the squeezed-vacuum limit.
//!
//!     cargo run --release --example ground_state

use critical_prep::hilbert::{
    adaptive_fock_cutoff, analytic_ground_state, fidelity_amplitude, ground_state_numeric,
    squeeze_parameter, Model, RabiParams, CUTOFF_TOLERANCE,
};

fn main() -> critical_prep::Result<()> {
    let model = Model::Rabi(RabiParams::new(1.0, 1e3)?);
    let cutoff = adaptive_fock_cutoff(&model, 0.9, CUTOFF_TOLERANCE)?;
    let space = model.space(cutoff)?;
    println!("Omega/omega = 1000, fock_cutoff = {cutoff}");
    println!("{:>5} {:>10} {:>14} {:>12}", "g", "r", "E0", "F");
    for i in 0..10 {
        let g = i as f64 / 10.0;
        let (e0, psi) = ground_state_numeric(&model.hamiltonian(g, &space)?)?;
        let f = fidelity_amplitude(&psi, &analytic_ground_state(g, &space)?)?;
        println!("{g:>5.1} {:>10.5} {e0:>14.6} {f:>12.8}", squeeze_parameter(g)?);
    }
    Ok(())
}
