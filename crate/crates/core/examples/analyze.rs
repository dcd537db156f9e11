// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! QFI of the static family, the closing gap, and a squeezed Wigner function.
//!
//!     cargo run --release --example analyze

use critical_prep::analysis::{
    analytic_qfi_bound, coupling_grid, qfi_static, spectrum_sweep, wigner_function, FiniteDifference,
    PhaseGrid, DEFAULT_DELTA,
};
use critical_prep::hilbert::{analytic_ground_state, DensityMatrix, Model, RabiParams};

fn main() -> critical_prep::Result<()> {
    for g in [0.3, 0.6, 0.9, 0.99, 0.9999] {
        let i = qfi_static(g, DEFAULT_DELTA, FiniteDifference::Central)?;
        println!("g = {g:<7} I = {i:<14.6e} bound {:.6e}", analytic_qfi_bound(g)?);
    }

    let model = Model::Rabi(RabiParams::new(1.0, 1e3)?);
    let r = spectrum_sweep(&model, &coupling_grid(0.0, 1.0, 0.1)?, 3, None)?;
    for (g, gaps) in r.g.iter().zip(&r.gaps) {
        println!("g = {g:.1}: E1-E0 = {:.5}, E2-E0 = {:.5}", gaps[1], gaps[2]);
    }

    let space = model.space(60)?;
    let rho = DensityMatrix::from_pure(&analytic_ground_state(0.9, &space)?).partial_trace_emitter(&space)?;
    let w = wigner_function(&rho, &PhaseGrid::default())?;
    let (x2, p2) = w.second_moments();
    println!("g = 0.9 squeezed vacuum: integral {:.6}, <x^2> {x2:.4}, <p^2> {p2:.4}", w.integral());
    Ok(())
}
