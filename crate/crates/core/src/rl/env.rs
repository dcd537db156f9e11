// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! The preparation task as a decision process.
//!
//! Episodic mode: one action is the whole flat parameter vector and the
//! episode ends after a single step. Segmented mode: K steps, the first
//! fixing the global parameters (T, ω_d, ramp slope, phases) and each step
//! supplying the amplitudes of the segment it propagates.

use serde::{Deserialize, Serialize};

use crate::dynamics::{final_fidelity, IntegratorConfig, NoiseRates, Propagator};
use crate::error::{Error, Result};
use crate::hilbert::{fidelity_amplitude, ground_state_numeric, DensityMatrix, Model, RabiParams, SpaceSpec, StateVector};
use crate::reward::{total_reward, RewardBreakdown, RewardConfig};
use crate::schedule::{ActionBounds, ActionSpace, ControlKind, PulseSchedule};

/// Reward assigned to episodes whose propagation fails.
pub const FAILURE_REWARD: f64 = -100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvMode {
    #[default]
    Episodic,
    Segmented,
}

/// Everything that defines one preparation problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub model: Model,
    pub fock_cutoff: usize,
    pub g0: f64,
    pub gc: f64,
    pub steps: usize,
    pub bounds: ActionBounds,
    pub field_mask: [bool; 5],
    pub free_ramp: bool,
    pub fixed_duration: Option<f64>,
    pub reward: RewardConfig,
    pub integrator: IntegratorConfig,
    /// Present for open-system training.
    pub noise: Option<NoiseRates>,
}

impl TaskSpec {
    /// ω = 1, Ω = 50ω, g: 0.01 → 1, K = 20, a single (a + a†)² field.
    pub fn desk_scale() -> Self {
        Self {
            model: Model::Rabi(RabiParams {
                omega: 1.0,
                big_omega: 50.0,
            }),
            fock_cutoff: 40,
            g0: 0.01,
            gc: 1.0,
            steps: 20,
            bounds: ActionBounds::default(),
            field_mask: [false, true, false, false, false],
            free_ramp: true,
            fixed_duration: None,
            reward: RewardConfig::default(),
            integrator: IntegratorConfig::default(),
            noise: None,
        }
    }

    pub fn with_fields(&self, kinds: &[ControlKind]) -> Self {
        let mut t = self.clone();
        t.field_mask = [false; 5];
        for k in kinds {
            t.field_mask[k.slot()] = true;
        }
        t
    }

    pub fn active_kinds(&self) -> Vec<ControlKind> {
        self.action_space().active_kinds()
    }

    pub fn action_space(&self) -> ActionSpace {
        ActionSpace {
            bounds: self.bounds,
            steps: self.steps,
            field_mask: self.field_mask,
            g0: self.g0,
            gc: self.gc,
            fixed_duration: self.fixed_duration,
            free_ramp: self.free_ramp,
        }
    }

    pub fn space(&self) -> Result<SpaceSpec> {
        self.model.space(self.fock_cutoff)
    }

    pub fn validate(&self) -> Result<()> {
        self.action_space().validate()?;
        self.reward.validate()?;
        self.integrator.validate()?;
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        if !(self.g0.is_finite() && self.gc.is_finite() && self.g0 >= 0.0 && self.gc > self.g0) {
            return Err(Error::invalid("g0/gc", format!("need 0 <= g0 < gc, got {} and {}", self.g0, self.gc)));
        }
        if self.field_mask.iter().all(|m| !m) {
            return Err(Error::invalid("field_mask", "no control field enabled"));
        }
        Ok(())
    }
}

/// Result of evaluating one schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub fidelity: f64,
    pub reward: f64,
    pub breakdown: Option<RewardBreakdown>,
    pub error: Option<String>,
}

impl EvalOutcome {
    fn failure(err: &Error) -> Self {
        Self {
            fidelity: 0.0,
            reward: FAILURE_REWARD,
            breakdown: None,
            error: Some(err.to_string()),
        }
    }

    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Information carried from earlier episodes into the episodic observation.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeContext {
    pub prev_action: Vec<f64>,
    pub prev_fidelity: f64,
    /// Fraction of the episode budget already used.
    pub progress: f64,
}

impl EpisodeContext {
    pub fn initial(action_dim: usize) -> Self {
        Self {
            prev_action: vec![0.0; action_dim],
            prev_fidelity: 0.0,
            progress: 0.0,
        }
    }
}

/// Shared, immutable environment data; episodes borrow it.
#[derive(Debug, Clone)]
pub struct Environment {
    task: TaskSpec,
    mode: EnvMode,
    propagator: Propagator,
    psi0: StateVector,
    target: StateVector,
    actions: ActionSpace,
}

impl Environment {
    pub fn new(task: TaskSpec, mode: EnvMode) -> Result<Self> {
        task.validate()?;
        if mode == EnvMode::Segmented && task.noise.is_some() {
            return Err(Error::invalid("mode", "segmented episodes support closed systems only"));
        }
        let space = task.space()?;
        let (_, psi0) = ground_state_numeric(&task.model.hamiltonian(task.g0, &space)?)?;
        let (_, target) = ground_state_numeric(&task.model.hamiltonian(task.gc, &space)?)?;
        let propagator = Propagator::new(task.model, space, task.integrator)?;
        let actions = task.action_space();
        Ok(Self {
            task,
            mode,
            propagator,
            psi0,
            target,
            actions,
        })
    }

    pub fn task(&self) -> &TaskSpec {
        &self.task
    }

    pub fn mode(&self) -> EnvMode {
        self.mode
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn action_space(&self) -> &ActionSpace {
        &self.actions
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.psi0
    }

    pub fn target(&self) -> &StateVector {
        &self.target
    }

    /// Policy output dimension in the current mode.
    pub fn action_dim(&self) -> usize {
        match self.mode {
            EnvMode::Episodic => self.actions.dim(),
            EnvMode::Segmented => self.actions.n_global() + self.actions.n_active(),
        }
    }

    pub fn obs_dim(&self) -> usize {
        match self.mode {
            EnvMode::Episodic => self.actions.dim() + 2,
            EnvMode::Segmented => 3 + self.actions.n_active(),
        }
    }

    /// Final fidelity of a schedule (closed or open, per the task).
    pub fn fidelity(&self, schedule: &PulseSchedule) -> Result<f64> {
        self.fidelity_with(schedule, self.task.noise.as_ref())
    }

    /// Final fidelity under explicit noise rates (None: closed system).
    pub fn fidelity_with(&self, schedule: &PulseSchedule, noise: Option<&NoiseRates>) -> Result<f64> {
        match noise {
            None => {
                let traj = self.propagator.evolve_pure(schedule, &self.psi0)?;
                final_fidelity(&traj, &self.target)
            }
            Some(rates) => {
                let rho0 = DensityMatrix::from_pure(&self.psi0);
                let traj = self.propagator.evolve_lindblad(schedule, &rho0, rates)?;
                final_fidelity(&traj, &self.target)
            }
        }
    }

    /// Fidelity and shaped reward; propagation errors become a failure
    /// outcome with reward [`FAILURE_REWARD`].
    pub fn evaluate(&self, schedule: &PulseSchedule) -> EvalOutcome {
        match self.fidelity(schedule).and_then(|f| Ok((f, total_reward(f, schedule, &self.task.reward)?))) {
            Ok((fidelity, b)) => EvalOutcome {
                fidelity,
                reward: b.total,
                breakdown: Some(b),
                error: None,
            },
            Err(e) => EvalOutcome::failure(&e),
        }
    }

    /// Decodes a full flat action and evaluates it.
    pub fn evaluate_action(&self, raw: &[f64]) -> Result<(PulseSchedule, EvalOutcome)> {
        let schedule = self.actions.decode(raw)?;
        let outcome = self.evaluate(&schedule);
        Ok((schedule, outcome))
    }

    fn ramp_scale(&self) -> f64 {
        self.task.gc.abs().max(self.task.g0.abs()).max(1e-12)
    }

    /// Starts an episode with the system in the ground state at g₀.
    pub fn reset(&self, ctx: &EpisodeContext) -> Result<(Episode<'_>, Vec<f64>)> {
        let obs = match self.mode {
            EnvMode::Episodic => {
                if ctx.prev_action.len() != self.actions.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: self.actions.dim(),
                        found: ctx.prev_action.len(),
                    });
                }
                let mut o = ctx.prev_action.clone();
                o.push(2.0 * ctx.prev_fidelity - 1.0);
                o.push(2.0 * ctx.progress - 1.0);
                o
            }
            EnvMode::Segmented => {
                let mut o = vec![0.0, fidelity_amplitude(&self.target, &self.psi0)?, self.task.g0 / self.ramp_scale()];
                o.extend(std::iter::repeat_n(0.0, self.actions.n_active()));
                o
            }
        };
        let episode = Episode {
            env: self,
            step: 0,
            psi: self.psi0.clone(),
            raw: vec![0.0; self.actions.dim()],
            schedule: None,
            done: false,
        };
        Ok((episode, obs))
    }
}

/// Outcome of [`Episode::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// Set on the terminal step.
    pub outcome: Option<EvalOutcome>,
    pub schedule: Option<PulseSchedule>,
}

/// Mutable per-episode state.
#[derive(Debug, Clone)]
pub struct Episode<'a> {
    env: &'a Environment,
    step: usize,
    psi: StateVector,
    /// Flat action assembled so far (segmented mode).
    raw: Vec<f64>,
    schedule: Option<PulseSchedule>,
    done: bool,
}

impl Episode<'_> {
    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Full flat action equivalent to what has been played so far.
    pub fn flat_action(&self) -> &[f64] {
        &self.raw
    }

    fn finish(&mut self, obs: Vec<f64>, schedule: Option<PulseSchedule>, outcome: EvalOutcome) -> StepResult {
        self.done = true;
        StepResult {
            obs,
            reward: outcome.reward,
            done: true,
            outcome: Some(outcome),
            schedule,
        }
    }

    pub fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        if self.done {
            return Err(Error::invalid("episode", "already finished"));
        }
        let env = self.env;
        if action.len() != env.action_dim() {
            return Err(Error::DimensionMismatch {
                expected: env.action_dim(),
                found: action.len(),
            });
        }
        if action.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("action".into()));
        }
        match env.mode {
            EnvMode::Episodic => {
                self.raw.copy_from_slice(action);
                let schedule = env.actions.decode(action)?;
                let outcome = env.evaluate(&schedule);
                Ok(self.finish(Vec::new(), Some(schedule), outcome))
            }
            EnvMode::Segmented => self.segment_step(action),
        }
    }

    fn segment_step(&mut self, action: &[f64]) -> Result<StepResult> {
        let env = self.env;
        let sp = &env.actions;
        let k_total = sp.steps;
        let n_global = sp.n_global();
        let j = self.step;
        if j == 0 {
            self.raw[..n_global].copy_from_slice(&action[..n_global]);
        }
        if (1..k_total - 1).contains(&j) {
            for f in 0..sp.n_active() {
                self.raw[sp.amplitude_offset(f) + j - 1] = action[n_global + f];
            }
        }
        let schedule = sp.decode(&self.raw)?;
        self.step += 1;
        match env.propagator.propagate_segment(&schedule, j + 1, &self.psi) {
            Ok(psi) => self.psi = psi,
            Err(e) => return Ok(self.finish(Vec::new(), Some(schedule), EvalOutcome::failure(&e))),
        }
        let fid = fidelity_amplitude(&env.target, &self.psi)?;
        if self.step == k_total {
            let outcome = match total_reward(fid, &schedule, &env.task.reward) {
                Ok(b) => EvalOutcome {
                    fidelity: fid,
                    reward: b.total,
                    breakdown: Some(b),
                    error: None,
                },
                Err(e) => EvalOutcome::failure(&e),
            };
            self.schedule = Some(schedule.clone());
            return Ok(self.finish(Vec::new(), Some(schedule), outcome));
        }
        let (_, t_end) = schedule.segment_bounds(j + 1);
        let mut obs = vec![
            self.step as f64 / k_total as f64,
            fid,
            schedule.ramp.value(t_end) / env.ramp_scale(),
        ];
        let lmax = sp.bounds.amplitude_max;
        obs.extend(schedule.fields.iter().map(|f| f.amplitudes[j] / lmax));
        Ok(StepResult {
            obs,
            reward: 0.0,
            done: false,
            outcome: None,
            schedule: None,
        })
    }
}

/// Starts an episode; see [`Environment::reset`].
pub fn env_reset<'a>(env: &'a Environment, ctx: &EpisodeContext) -> Result<(Episode<'a>, Vec<f64>)> {
    env.reset(ctx)
}
