// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! CSV/JSON writers. Files are named `<run_id>_<analysis>.<ext>`.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{DissipationResult, PopulationResult, QfiResult, RobustnessResult, SpectrumResult, WignerGrid};
use crate::error::{Error, Result};

pub fn output_path(dir: &Path, run_id: &str, analysis: &str, ext: &str) -> PathBuf {
    dir.join(format!("{run_id}_{analysis}.{ext}"))
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn write_rows(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn strs(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// `time,qfi,bound`
pub fn write_qfi_csv(r: &QfiResult, path: &Path) -> Result<()> {
    write_rows(
        path,
        &strs(&["time", "qfi", "bound"]),
        (0..r.times.len()).map(|k| vec![num(r.times[k]), num(r.qfi_values[k]), num(r.bound_values[k])]),
    )
}

/// `time,g,P0..P{m-1}`
pub fn write_populations_csv(r: &PopulationResult, path: &Path) -> Result<()> {
    let m = r.populations.first().map_or(0, |c| c.len());
    let mut header = strs(&["time", "g"]);
    header.extend((0..m).map(|n| format!("P{n}")));
    write_rows(
        path,
        &header,
        (0..r.times.len()).map(|k| {
            let mut row = vec![num(r.times[k]), num(r.g[k])];
            row.extend(r.populations[k].iter().map(|&p| num(p)));
            row
        }),
    )
}

/// `x,p,w`, one row per grid point with p varying fastest.
pub fn write_wigner_csv(r: &WignerGrid, path: &Path) -> Result<()> {
    write_rows(
        path,
        &strs(&["x", "p", "w"]),
        r.x.iter().enumerate().flat_map(|(i, &x)| {
            r.p.iter()
                .enumerate()
                .map(move |(j, &p)| vec![num(x), num(p), num(r.values[i][j])])
        }),
    )
}

/// `beta,mean_fidelity,std_fidelity,failures`
pub fn write_robustness_csv(r: &RobustnessResult, path: &Path) -> Result<()> {
    write_rows(
        path,
        &strs(&["beta", "mean_fidelity", "std_fidelity", "failures"]),
        (0..r.beta_grid.len()).map(|k| {
            vec![
                num(r.beta_grid[k]),
                num(r.mean_fidelity[k]),
                num(r.std_fidelity[k]),
                r.failures[k].to_string(),
            ]
        }),
    )
}

/// `kappa,fidelity,error`
pub fn write_dissipation_csv(r: &DissipationResult, path: &Path) -> Result<()> {
    write_rows(
        path,
        &strs(&["kappa", "fidelity", "error"]),
        (0..r.kappa_grid.len()).map(|k| {
            vec![
                num(r.kappa_grid[k]),
                r.fidelity[k].map_or(String::new(), num),
                r.errors[k].clone().unwrap_or_default(),
            ]
        }),
    )
}

/// `g,gap1..gap{m-1}` (excitation energies E_n − E₀, n ≥ 1)
pub fn write_spectrum_csv(r: &SpectrumResult, path: &Path) -> Result<()> {
    let m = r.gaps.first().map_or(0, |c| c.len());
    let mut header = strs(&["g"]);
    header.extend((1..m).map(|n| format!("gap{n}")));
    write_rows(
        path,
        &header,
        (0..r.g.len()).map(|k| {
            let mut row = vec![num(r.g[k])];
            row.extend(r.gaps[k][1..].iter().map(|&e| num(e)));
            row
        }),
    )
}
