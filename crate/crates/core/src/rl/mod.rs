// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Training environment and a small self-contained PPO.

mod checkpoint;
mod env;
mod gae;
mod nn;
mod policy;
mod ppo;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader};
pub use env::{
    env_reset, EnvMode, Environment, Episode, EpisodeContext, EvalOutcome, StepResult, TaskSpec, FAILURE_REWARD,
};
pub use gae::gae_advantages;
pub use nn::{Adam, Mlp, MlpCache};
pub use policy::{log_squash_jacobian, policy_sample, GaussianPolicy, PolicySample};
pub use ppo::{clipped_factor, ppo_update, PpoAgent, PpoConfig, Transition, UpdateStats};
pub use train::{
    random_search, train, train_agent, write_summary, Algorithm, EpisodeRecord, FileSink, NullSink, TrainConfigSnapshot,
    TrainLog, TrainOptions, TrainSink, TrainSummary,
};
