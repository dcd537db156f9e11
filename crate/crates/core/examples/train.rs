// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! PPO against random search on the desk-scale task.
//!
//!     cargo run --release --example train -- [episodes] [seed]

use critical_prep::rl::{random_search, train, Algorithm, NullSink, PpoConfig, TaskSpec, TrainOptions};

fn main() -> critical_prep::Result<()> {
    let mut args = std::env::args().skip(1);
    let episodes = args.next().map_or(500, |a| a.parse().expect("episodes"));
    let seed = args.next().map_or(0, |a| a.parse().expect("seed"));
    let task = TaskSpec::desk_scale();
    let options = TrainOptions {
        episodes,
        seed,
        ..Default::default()
    };

    let ppo = train(&task, &PpoConfig::default(), &options, &mut NullSink)?;
    let rs = random_search(
        &task,
        &TrainOptions {
            algorithm: Algorithm::RandomSearch,
            ..options
        },
        &mut NullSink,
    )?;
    for (name, log) in [("ppo", &ppo), ("random", &rs)] {
        let s = log.summary();
        println!(
            "{name:>6}: best F {:.5} at episode {:?}, wT = {:?}, {} failed episodes",
            s.best_fidelity, s.best_episode, s.best_duration, s.failures
        );
    }
    for n in [episodes / 10, episodes / 2, episodes] {
        if n > 0 {
            println!("best after {n:>5}: ppo {:.5}  random {:.5}", ppo.best_so_far[n - 1], rs.best_so_far[n - 1]);
        }
    }
    Ok(())
}
