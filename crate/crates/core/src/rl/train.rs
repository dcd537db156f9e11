// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Training loop, random-search baseline and run artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checkpoint::save_checkpoint;
use super::env::{EnvMode, Environment, EpisodeContext, EvalOutcome, TaskSpec};
use super::gae::gae_advantages;
use super::ppo::{PpoAgent, PpoConfig, Transition, UpdateStats};
use crate::error::{Error, Result};
use crate::reward::RewardBreakdown;
use crate::schedule::PulseSchedule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub schedule: Option<PulseSchedule>,
    pub fidelity: f64,
    pub reward: f64,
    pub breakdown: Option<RewardBreakdown>,
    pub error: Option<String>,
    /// Seconds spent on this episode (rollouts are parallel, so these do not
    /// add up to the run time).
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    Ppo,
    RandomSearch,
}

/// Run parameters outside the task and the optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainOptions {
    pub episodes: usize,
    pub seed: u64,
    pub mode: EnvMode,
    pub algorithm: Algorithm,
    /// Rollout threads; 0 uses the rayon default.
    pub workers: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            episodes: 5000,
            seed: 0,
            mode: EnvMode::Episodic,
            algorithm: Algorithm::Ppo,
            workers: 1,
        }
    }
}

/// Snapshot of everything needed to rerun the training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfigSnapshot {
    pub task: TaskSpec,
    pub ppo: PpoConfig,
    pub options: TrainOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<EpisodeRecord>,
    /// Index into `records` of the best episode.
    pub best: Option<usize>,
    /// Best fidelity after each episode.
    pub best_so_far: Vec<f64>,
    pub updates: Vec<UpdateStats>,
    pub config: TrainConfigSnapshot,
    pub seed: u64,
}

impl TrainLog {
    pub fn best_record(&self) -> Option<&EpisodeRecord> {
        self.best.map(|i| &self.records[i])
    }

    pub fn best_fidelity(&self) -> f64 {
        self.best_record().map_or(0.0, |r| r.fidelity)
    }

    pub fn best_schedule(&self) -> Option<&PulseSchedule> {
        self.best_record().and_then(|r| r.schedule.as_ref())
    }

    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }

    /// Deterministic digest of the run (no timing information).
    pub fn summary(&self) -> TrainSummary {
        let best = self.best_record();
        TrainSummary {
            seed: self.seed,
            algorithm: self.config.options.algorithm,
            mode: self.config.options.mode,
            episodes: self.records.len(),
            failures: self.failures(),
            best_episode: best.map(|r| r.episode),
            best_fidelity: self.best_fidelity(),
            best_reward: best.map(|r| r.reward),
            best_duration: best.and_then(|r| r.schedule.as_ref()).map(|s| s.duration),
            best_schedule: self.best_schedule().cloned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub seed: u64,
    pub algorithm: Algorithm,
    pub mode: EnvMode,
    pub episodes: usize,
    pub failures: usize,
    pub best_episode: Option<usize>,
    pub best_fidelity: f64,
    pub best_reward: Option<f64>,
    pub best_duration: Option<f64>,
    pub best_schedule: Option<PulseSchedule>,
}

/// Receives training events as they happen.
pub trait TrainSink {
    fn episode(&mut self, _record: &EpisodeRecord) -> Result<()> {
        Ok(())
    }
    fn improved(&mut self, _record: &EpisodeRecord) -> Result<()> {
        Ok(())
    }
    fn updated(&mut self, _agent: &PpoAgent, _stats: &UpdateStats) -> Result<()> {
        Ok(())
    }
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl TrainSink for NullSink {}

/// Writes `episodes.jsonl`, `best_schedule.json` on every improvement and a
/// policy checkpoint after every update.
#[derive(Debug)]
pub struct FileSink {
    dir: PathBuf,
    episodes: BufWriter<File>,
}

impl FileSink {
    pub const EPISODES: &'static str = "episodes.jsonl";
    pub const BEST: &'static str = "best_schedule.json";
    pub const CHECKPOINT: &'static str = "policy.ckpt";

    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(Self::EPISODES);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            episodes: BufWriter::new(file),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl TrainSink for FileSink {
    fn episode(&mut self, record: &EpisodeRecord) -> Result<()> {
        let line = serde_json::to_string(record)?;
        writeln!(self.episodes, "{line}").map_err(|e| Error::io(self.dir.join(Self::EPISODES), e))
    }

    fn improved(&mut self, record: &EpisodeRecord) -> Result<()> {
        self.episodes
            .flush()
            .map_err(|e| Error::io(self.dir.join(Self::EPISODES), e))?;
        match &record.schedule {
            Some(s) => s.save(&self.dir.join(Self::BEST)),
            None => Ok(()),
        }
    }

    fn updated(&mut self, agent: &PpoAgent, _stats: &UpdateStats) -> Result<()> {
        save_checkpoint(agent, &self.dir.join(Self::CHECKPOINT))
    }
}

impl Drop for FileSink {
    fn drop(&mut self) {
        let _ = self.episodes.flush();
    }
}

fn episode_rng(seed: u64, episode: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 + episode as u64);
    rng
}

fn record_from(episode: usize, schedule: Option<PulseSchedule>, out: EvalOutcome, started: Instant) -> EpisodeRecord {
    EpisodeRecord {
        episode,
        schedule,
        fidelity: out.fidelity.clamp(0.0, 1.0),
        reward: out.reward,
        breakdown: out.breakdown,
        error: out.error,
        wall_time: started.elapsed().as_secs_f64(),
    }
}

struct Rollout {
    record: EpisodeRecord,
    transitions: Vec<Transition>,
    /// Flat action of the episode, fed back into the next observation.
    flat_action: Vec<f64>,
}

fn run_episode(env: &Environment, agent: &PpoAgent, ctx: &EpisodeContext, index: usize, seed: u64) -> Result<Rollout> {
    let started = Instant::now();
    let mut rng = episode_rng(seed, index);
    let (mut ep, mut obs) = env.reset(ctx)?;
    let mut steps = Vec::new();
    let mut rewards = Vec::new();
    let mut values = Vec::new();
    let mut last = None;
    while !ep.is_done() {
        let s = agent.policy.sample(&obs, true, &mut rng)?;
        values.push(agent.value_of(&obs));
        let r = ep.step(&s.action)?;
        rewards.push(r.reward);
        steps.push((std::mem::take(&mut obs), s));
        obs = r.obs;
        if r.done {
            last = Some((r.schedule, r.outcome.expect("terminal step carries an outcome")));
        }
    }
    values.push(0.0);
    let adv = gae_advantages(&rewards, &values, agent.cfg.gamma, agent.cfg.gae_lambda);
    let transitions = steps
        .into_iter()
        .zip(adv)
        .zip(&values)
        .map(|(((obs, s), a), v)| Transition {
            obs,
            pre_squash: s.pre_squash,
            log_prob: s.log_prob,
            advantage: a,
            ret: a + v,
        })
        .collect();
    let (schedule, outcome) = last.expect("episode terminates");
    Ok(Rollout {
        record: record_from(index, schedule, outcome, started),
        transitions,
        flat_action: ep.flat_action().to_vec(),
    })
}

struct Tracker<'s> {
    log: TrainLog,
    sink: &'s mut dyn TrainSink,
}

impl Tracker<'_> {
    fn push(&mut self, record: EpisodeRecord) -> Result<()> {
        self.sink.episode(&record)?;
        let prev = self.log.best_fidelity();
        let improved = record.error.is_none() && (self.log.best.is_none() || record.fidelity > prev);
        self.log.best_so_far.push(if improved { record.fidelity } else { prev });
        self.log.records.push(record);
        if improved {
            self.log.best = Some(self.log.records.len() - 1);
            self.sink.improved(self.log.records.last().expect("just pushed"))?;
        }
        Ok(())
    }
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if workers > 0 {
        b = b.num_threads(workers);
    }
    let pool = b.build().map_err(|e| Error::invalid("workers", e.to_string()))?;
    Ok(pool.install(f))
}

/// Trains a fresh agent and returns the log. Reproducible from
/// `options.seed` regardless of the worker count.
pub fn train(task: &TaskSpec, ppo: &PpoConfig, options: &TrainOptions, sink: &mut dyn TrainSink) -> Result<TrainLog> {
    train_agent(task, ppo, options, sink).map(|(log, _)| log)
}

/// As [`train`], also returning the final agent.
pub fn train_agent(
    task: &TaskSpec,
    ppo: &PpoConfig,
    options: &TrainOptions,
    sink: &mut dyn TrainSink,
) -> Result<(TrainLog, Option<PpoAgent>)> {
    if options.episodes == 0 {
        return Err(Error::invalid("episodes", "budget must be positive"));
    }
    ppo.validate()?;
    let env = Environment::new(task.clone(), options.mode)?;
    let mut tracker = Tracker {
        log: TrainLog {
            records: Vec::with_capacity(options.episodes),
            best: None,
            best_so_far: Vec::with_capacity(options.episodes),
            updates: Vec::new(),
            config: TrainConfigSnapshot {
                task: task.clone(),
                ppo: ppo.clone(),
                options: options.clone(),
            },
            seed: options.seed,
        },
        sink,
    };
    let agent = match options.algorithm {
        Algorithm::Ppo => Some(ppo_loop(&env, ppo, options, &mut tracker)?),
        Algorithm::RandomSearch => {
            random_loop(&env, options, &mut tracker)?;
            None
        }
    };
    Ok((tracker.log, agent))
}

fn ppo_loop(env: &Environment, ppo: &PpoConfig, options: &TrainOptions, tracker: &mut Tracker<'_>) -> Result<PpoAgent> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    rng.set_stream(0);
    let mut agent = PpoAgent::new(env.obs_dim(), env.action_dim(), ppo.clone(), &mut rng)?;
    let mut ctx = EpisodeContext::initial(env.action_space().dim());
    let budget = options.episodes;
    let mut done = 0;
    while done < budget {
        let n = ppo.rollout_episodes.min(budget - done);
        ctx.progress = done as f64 / budget as f64;
        let rollouts: Vec<Result<Rollout>> = with_pool(options.workers, || {
            (done..done + n)
                .into_par_iter()
                .map(|i| run_episode(env, &agent, &ctx, i, options.seed))
                .collect()
        })?;
        let mut batch = Vec::new();
        for r in rollouts {
            let r = r?;
            ctx.prev_action = r.flat_action;
            ctx.prev_fidelity = r.record.fidelity;
            batch.extend(r.transitions);
            tracker.push(r.record)?;
        }
        done += n;
        let stats = agent.update(&mut batch, &mut rng)?;
        tracker.log.updates.push(stats);
        tracker.sink.updated(&agent, &stats)?;
    }
    Ok(agent)
}

fn random_loop(env: &Environment, options: &TrainOptions, tracker: &mut Tracker<'_>) -> Result<()> {
    let dim = env.action_space().dim();
    const CHUNK: usize = 64;
    let mut done = 0;
    while done < options.episodes {
        let n = CHUNK.min(options.episodes - done);
        let records: Vec<Result<EpisodeRecord>> = with_pool(options.workers, || {
            (done..done + n)
                .into_par_iter()
                .map(|i| {
                    let started = Instant::now();
                    let mut rng = episode_rng(options.seed, i);
                    let raw: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
                    let (schedule, out) = env.evaluate_action(&raw)?;
                    Ok(record_from(i, Some(schedule), out, started))
                })
                .collect()
        })?;
        for r in records {
            tracker.push(r?)?;
        }
        done += n;
    }
    Ok(())
}

/// Uniform random sampling of the flat action space with the same budget
/// and bookkeeping as [`train`].
pub fn random_search(task: &TaskSpec, options: &TrainOptions, sink: &mut dyn TrainSink) -> Result<TrainLog> {
    let opts = TrainOptions {
        algorithm: Algorithm::RandomSearch,
        mode: EnvMode::Episodic,
        ..options.clone()
    };
    train(task, &PpoConfig::default(), &opts, sink)
}

/// Writes the summary JSON for a log.
pub fn write_summary(summary: &TrainSummary, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(summary)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{Model, RabiParams};

    fn tiny_task() -> TaskSpec {
        TaskSpec {
            model: Model::Rabi(RabiParams {
                omega: 1.0,
                big_omega: 6.0,
            }),
            fock_cutoff: 16,
            steps: 5,
            ..TaskSpec::desk_scale()
        }
    }

    fn tiny_ppo() -> PpoConfig {
        PpoConfig {
            rollout_episodes: 8,
            minibatch_size: 8,
            epochs_per_update: 2,
            policy_hidden_sizes: vec![8],
            value_hidden_sizes: vec![8],
            ..PpoConfig::default()
        }
    }

    fn opts(seed: u64, workers: usize) -> TrainOptions {
        TrainOptions {
            episodes: 24,
            seed,
            workers,
            ..TrainOptions::default()
        }
    }

    #[test]
    fn best_so_far_is_monotone() {
        let log = train(&tiny_task(), &tiny_ppo(), &opts(3, 1), &mut NullSink).unwrap();
        assert_eq!(log.records.len(), 24);
        assert_eq!(log.updates.len(), 3);
        assert!(log.best_so_far.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(*log.best_so_far.last().unwrap(), log.best_fidelity());
        assert!(log.records.iter().all(|r| (0.0..=1.0).contains(&r.fidelity)));
    }

    #[test]
    fn reproducible_across_worker_counts() {
        let a = train(&tiny_task(), &tiny_ppo(), &opts(7, 1), &mut NullSink).unwrap();
        let b = train(&tiny_task(), &tiny_ppo(), &opts(7, 3), &mut NullSink).unwrap();
        assert_eq!(a.summary(), b.summary());
        let fa: Vec<f64> = a.records.iter().map(|r| r.reward).collect();
        let fb: Vec<f64> = b.records.iter().map(|r| r.reward).collect();
        assert_eq!(fa, fb);
        let c = train(&tiny_task(), &tiny_ppo(), &opts(8, 1), &mut NullSink).unwrap();
        assert_ne!(a.summary(), c.summary());
    }

    #[test]
    fn segmented_training_runs() {
        let o = TrainOptions {
            mode: EnvMode::Segmented,
            ..opts(1, 1)
        };
        let log = train(&tiny_task(), &tiny_ppo(), &o, &mut NullSink).unwrap();
        assert_eq!(log.records.len(), 24);
        assert!(log.best_fidelity() > 0.0);
    }

    #[test]
    fn random_search_is_deterministic() {
        let a = random_search(&tiny_task(), &opts(5, 1), &mut NullSink).unwrap();
        let b = random_search(&tiny_task(), &opts(5, 2), &mut NullSink).unwrap();
        assert_eq!(a.summary(), b.summary());
        assert_eq!(a.best_so_far, b.best_so_far);
    }

    #[test]
    fn file_sink_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let log = {
            let mut sink = FileSink::create(dir.path()).unwrap();
            train(&tiny_task(), &tiny_ppo(), &opts(2, 1), &mut sink).unwrap()
        };
        let lines = std::fs::read_to_string(dir.path().join(FileSink::EPISODES)).unwrap();
        assert_eq!(lines.lines().count(), 24);
        let best = PulseSchedule::load(&dir.path().join(FileSink::BEST)).unwrap();
        assert_eq!(Some(&best), log.best_schedule());
        assert!(dir.path().join(FileSink::CHECKPOINT).exists());
    }
}
