// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("coupling g = {0} is outside the supported domain [0, 1)")]
    CouplingDomain(f64),

    #[error("truncation error {estimate:.3e} exceeds tolerance {tolerance:.1e}; use fock_cutoff >= {suggested}")]
    Truncation {
        estimate: f64,
        tolerance: f64,
        suggested: usize,
    },

    #[error("population {population:.3e} leaked into the top Fock levels at t = {time:.4}; increase fock_cutoff (suggested {suggested})")]
    TruncationLeak {
        population: f64,
        time: f64,
        suggested: usize,
    },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("positivity violated: smallest eigenvalue {0:.3e}")]
    Positivity(f64),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
