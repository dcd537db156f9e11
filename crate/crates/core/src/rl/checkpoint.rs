// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Agent checkpoints: one JSON header line, then the flat parameter vector
//! as little-endian f64.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::nn::Mlp;
use super::policy::GaussianPolicy;
use super::ppo::{PpoAgent, PpoConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub format: String,
    pub policy_sizes: Vec<usize>,
    pub value_sizes: Vec<usize>,
    pub n_params: usize,
    pub ppo: PpoConfig,
}

const FORMAT: &str = "critical-prep-agent/1";

pub fn save_checkpoint(agent: &PpoAgent, path: &Path) -> Result<()> {
    let header = CheckpointHeader {
        format: FORMAT.into(),
        policy_sizes: agent.policy.net.sizes().to_vec(),
        value_sizes: agent.value.sizes().to_vec(),
        n_params: agent.n_params(),
        ppo: agent.cfg.clone(),
    };
    let mut buf = serde_json::to_vec(&header)?;
    buf.push(b'\n');
    for p in agent.params() {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    // write-then-rename so a crash never leaves a truncated checkpoint
    let tmp = path.with_extension("tmp");
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(&buf).map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<PpoAgent> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut line = String::new();
    r.read_line(&mut line).map_err(|e| Error::io(path, e))?;
    let header: CheckpointHeader = serde_json::from_str(&line)?;
    if header.format != FORMAT {
        return Err(Error::Config(format!("unknown checkpoint format `{}`", header.format)));
    }
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    if bytes.len() != 8 * header.n_params {
        return Err(Error::DimensionMismatch {
            expected: 8 * header.n_params,
            found: bytes.len(),
        });
    }
    let params: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let act_dim = *header.policy_sizes.last().ok_or_else(|| Error::Config("empty policy shape".into()))?;
    let shape_err = || Error::Config("checkpoint shape does not match its parameter count".into());
    let n_pol = Mlp::zeros(&header.policy_sizes).n_params();
    if params.len() < n_pol + act_dim {
        return Err(shape_err());
    }
    let net = Mlp::from_params(&header.policy_sizes, params[..n_pol].to_vec()).ok_or_else(shape_err)?;
    let log_std = params[n_pol..n_pol + act_dim].to_vec();
    let value = Mlp::from_params(&header.value_sizes, params[n_pol + act_dim..].to_vec()).ok_or_else(shape_err)?;
    header.ppo.validate()?;
    Ok(PpoAgent::from_parts(GaussianPolicy { net, log_std }, value, header.ppo))
}
