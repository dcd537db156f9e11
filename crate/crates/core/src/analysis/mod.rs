// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Post-hoc diagnostics of prepared states and trained schedules.

mod export;
mod populations;
mod qfi;
mod spectrum;
mod sweeps;
mod wigner;

pub use export::{
    output_path, write_dissipation_csv, write_json, write_populations_csv, write_qfi_csv, write_robustness_csv,
    write_spectrum_csv, write_wigner_csv,
};
pub use populations::{instantaneous_populations, PopulationResult};
pub use qfi::{
    analytic_qfi_bound, qfi_finite_difference, qfi_from_states, qfi_static, qfi_static_sweep, FiniteDifference,
    QfiResult, BOUND_G_MAX, DEFAULT_DELTA,
};
pub use spectrum::{coupling_grid, spectrum_sweep, SpectrumResult};
pub use sweeps::{
    dissipation_sweep, robustness_sweep, AmplitudeMode, DissipationResult, NoiseChannel, Perturbation,
    RobustnessResult,
};
pub use wigner::{wigner_function, PhaseGrid, WignerGrid};
