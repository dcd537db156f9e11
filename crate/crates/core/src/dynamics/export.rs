// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use serde_json::{json, Value};

use super::trajectory::{StateSeries, Trajectory};
use crate::error::{Error, Result};
use crate::hilbert::StateVector;

/// CSV with columns `time,fidelity_to_target,norm`. The fidelity column is
/// empty when no target is given.
pub fn write_trajectory_csv(traj: &Trajectory, target: Option<&StateVector>, path: &Path) -> Result<()> {
    let fids = target.map(|t| traj.fidelities(t)).transpose()?;
    let norms = traj.norms();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time", "fidelity_to_target", "norm"])?;
    for (k, t) in traj.times.iter().enumerate() {
        let f = fids.as_ref().map_or(String::new(), |f| format!("{:.12e}", f[k]));
        w.write_record([format!("{t:.12e}"), f, format!("{:.15e}", norms[k])])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-state dump: real and imaginary parts of every amplitude (pure) or
/// every density-matrix entry in column-major order (mixed).
pub fn trajectory_json(traj: &Trajectory) -> Value {
    let states: Vec<Value> = match &traj.states {
        StateSeries::Pure(v) => v
            .iter()
            .map(|s| {
                let a = s.amplitudes();
                json!({
                    "re": a.iter().map(|z| z.re).collect::<Vec<_>>(),
                    "im": a.iter().map(|z| z.im).collect::<Vec<_>>(),
                })
            })
            .collect(),
        StateSeries::Mixed(v) => v
            .iter()
            .map(|r| {
                let e = r.entries();
                json!({
                    "dim": r.dim(),
                    "re": e.iter().map(|z| z.re).collect::<Vec<_>>(),
                    "im": e.iter().map(|z| z.im).collect::<Vec<_>>(),
                })
            })
            .collect(),
    };
    json!({
        "kind": if traj.is_pure() { "pure" } else { "mixed" },
        "times": traj.times,
        "final_fidelity": traj.final_fidelity,
        "states": states,
    })
}

pub fn write_trajectory_json(traj: &Trajectory, path: &Path) -> Result<()> {
    let text = serde_json::to_string(&trajectory_json(traj))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
