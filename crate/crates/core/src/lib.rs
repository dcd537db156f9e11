// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

pub mod analysis;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod prune;
pub mod reward;
pub mod rl;
pub mod schedule;
mod sparse;

pub use error::{Error, Result};
