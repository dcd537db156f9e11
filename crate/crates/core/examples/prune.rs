// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Two-stage design: train with all five fields, rank them, retrain on the
//! leading one.
//!
//!     cargo run --release --example prune -- [episodes]

use critical_prep::prune::prune_and_retrain;
use critical_prep::rl::{train, NullSink, PpoConfig, TaskSpec, TrainOptions};
use critical_prep::schedule::ControlKind;

fn main() -> critical_prep::Result<()> {
    let episodes = std::env::args().nth(1).map_or(300, |a| a.parse().expect("episodes"));
    let task = TaskSpec::desk_scale().with_fields(&ControlKind::ALL);
    let options = TrainOptions {
        episodes,
        ..Default::default()
    };
    let ppo = PpoConfig::default();
    let stage1 = train(&task, &ppo, &options, &mut NullSink)?;
    let outcome = prune_and_retrain(&stage1, 1, &ppo, &options, &mut NullSink)?;
    print!("{}", outcome.report.table());
    println!(
        "stage 1 {:?}: F = {:.5}",
        outcome.stage1.fields, outcome.stage1.best_fidelity
    );
    println!(
        "stage 2 {:?}: F = {:.5}",
        outcome.stage2.fields, outcome.stage2.best_fidelity
    );
    Ok(())
}
