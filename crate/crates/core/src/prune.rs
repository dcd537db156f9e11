// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Control-field ranking by trajectory similarity and two-stage retraining.
//!
//! Δᵢ = ∫₀ᵀ |⟨Φᵢ(t)|Φ(t)⟩|² dt, where Φ evolves under the full schedule and
//! Φᵢ under field i alone.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{Propagator, Trajectory};
use crate::error::{check_dim, Error, Result};
use crate::hilbert::StateVector;
use crate::rl::{train, Environment, EnvMode, PpoConfig, TaskSpec, TrainLog, TrainOptions, TrainSink};
use crate::schedule::{ControlKind, PulseSchedule};

/// Trapezoid rule for ∫|⟨test(t)|reference(t)⟩|² dt on the shared grid.
pub fn trajectory_similarity(test: &Trajectory, reference: &Trajectory) -> Result<f64> {
    if test.times != reference.times {
        return Err(Error::GridMismatch(format!(
            "{} vs {} sample times",
            test.times.len(),
            reference.times.len()
        )));
    }
    let (Some(a), Some(b)) = (test.pure_states(), reference.pure_states()) else {
        return Err(Error::invalid("trajectory", "similarity needs pure-state trajectories"));
    };
    check_dim(reference.dim(), test.dim())?;
    let overlap: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x.inner(y).map(|z| z.norm_sqr()))
        .collect::<Result<_>>()?;
    Ok(trapezoid(&test.times, &overlap))
}

pub(crate) fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2)
        .zip(y.windows(2))
        .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSimilarity {
    pub kind: ControlKind,
    pub delta: Option<f64>,
    /// Δᵢ/T.
    pub normalized: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    /// Short SHA-256 digest of the reference schedule JSON.
    pub reference_id: String,
    pub duration: f64,
    /// In field order of the schedule.
    pub fields: Vec<FieldSimilarity>,
    /// Valid fields by Δ descending (ties: lower field index first), then
    /// invalid ones.
    pub ranking: Vec<ControlKind>,
}

impl SimilarityReport {
    pub fn get(&self, kind: ControlKind) -> Option<&FieldSimilarity> {
        self.fields.iter().find(|f| f.kind == kind)
    }

    pub fn top(&self, n: usize) -> Vec<ControlKind> {
        self.ranking.iter().take(n).copied().collect()
    }

    /// Plain-text table, best first.
    pub fn table(&self) -> String {
        let mut out = format!("reference {}  T = {:.6}\nrank  field                 delta        delta/T\n", self.reference_id, self.duration);
        for (i, kind) in self.ranking.iter().enumerate() {
            let f = self.get(*kind).expect("ranked field exists");
            match (f.delta, f.normalized) {
                (Some(d), Some(n)) => out += &format!("{:>4}  {:<20}  {:<11.6}  {:.6}\n", i + 1, kind.name(), d, n),
                _ => out += &format!("{:>4}  {:<20}  invalid: {}\n", i + 1, kind.name(), f.error.as_deref().unwrap_or("")),
            }
        }
        out
    }
}

pub fn schedule_id(schedule: &PulseSchedule) -> Result<String> {
    let digest = Sha256::digest(schedule.to_json()?.as_bytes());
    Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
}

/// Ranks every field of `schedule` by Δᵢ. A failed single-field
/// propagation marks that field invalid; a failed reference is an error.
pub fn rank_fields(prop: &Propagator, schedule: &PulseSchedule, psi0: &StateVector) -> Result<SimilarityReport> {
    if schedule.fields.is_empty() {
        return Err(Error::invalid("schedule", "has no control fields"));
    }
    let reference = prop.evolve_pure(schedule, psi0)?;
    let fields: Vec<FieldSimilarity> = schedule
        .fields
        .par_iter()
        .map(|f| {
            let test = prop
                .evolve_pure(&schedule.only_field(f.kind), psi0)
                .and_then(|t| trajectory_similarity(&t, &reference));
            match test {
                Ok(d) => FieldSimilarity {
                    kind: f.kind,
                    delta: Some(d),
                    normalized: Some(d / schedule.duration),
                    error: None,
                },
                Err(e) => FieldSimilarity {
                    kind: f.kind,
                    delta: None,
                    normalized: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let mut order: Vec<&FieldSimilarity> = fields.iter().collect();
    order.sort_by(|a, b| match (a.delta, b.delta) {
        (Some(x), Some(y)) => y.total_cmp(&x).then(a.kind.cmp(&b.kind)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.kind.cmp(&b.kind),
    });
    Ok(SimilarityReport {
        reference_id: schedule_id(schedule)?,
        duration: schedule.duration,
        ranking: order.iter().map(|f| f.kind).collect(),
        fields,
    })
}

/// Ranks the fields of the best schedule of a training run, evolving from
/// the run's initial state.
pub fn rank_trained(log: &TrainLog) -> Result<SimilarityReport> {
    let best = log
        .best_schedule()
        .ok_or_else(|| Error::invalid("stage-1 log", "no successful episode"))?;
    let env = Environment::new(log.config.task.clone(), EnvMode::Episodic)?;
    rank_fields(env.propagator(), best, env.initial_state())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub fields: Vec<ControlKind>,
    pub best_fidelity: f64,
    pub best_duration: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneOutcome {
    pub report: SimilarityReport,
    pub stage1: StageSummary,
    pub stage2: StageSummary,
    #[serde(skip)]
    pub stage2_log: Option<TrainLog>,
}

/// `task` restricted to the `keep_top` highest-ranked fields of `report`.
pub fn pruned_task(task: &TaskSpec, report: &SimilarityReport, keep_top: usize) -> Result<TaskSpec> {
    if keep_top == 0 || keep_top > report.ranking.len() {
        return Err(Error::invalid(
            "keep_top",
            format!("{keep_top} outside 1..={}", report.ranking.len()),
        ));
    }
    Ok(task.with_fields(&report.top(keep_top)))
}

/// Keeps the `keep_top` highest-ranked fields of the stage-1 best schedule
/// and trains again on that reduced field set.
pub fn prune_and_retrain(
    stage1: &TrainLog,
    keep_top: usize,
    ppo: &PpoConfig,
    options: &TrainOptions,
    sink: &mut dyn TrainSink,
) -> Result<PruneOutcome> {
    let report = rank_trained(stage1)?;
    let task = pruned_task(&stage1.config.task, &report, keep_top)?;
    let log = train(&task, ppo, options, sink)?;
    let s1 = stage1.summary();
    let s2 = log.summary();
    Ok(PruneOutcome {
        stage1: StageSummary {
            fields: stage1.config.task.active_kinds(),
            best_fidelity: s1.best_fidelity,
            best_duration: s1.best_duration,
        },
        stage2: StageSummary {
            fields: task.active_kinds(),
            best_fidelity: s2.best_fidelity,
            best_duration: s2.best_duration,
        },
        report,
        stage2_log: Some(log),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{IntegratorConfig, StateSeries};
    use crate::hilbert::{ground_state_numeric, Model, RabiParams};
    use crate::rl::NullSink;
    use crate::schedule::{ControlField, CouplingRamp};
    use nalgebra::DVector;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn constant(times: Vec<f64>, state: StateVector) -> Trajectory {
        let n = times.len();
        Trajectory::new(times, StateSeries::Pure(vec![state; n]))
    }

    #[test]
    fn identical_trajectories_integrate_to_duration() {
        let times: Vec<f64> = (0..=20).map(|k| 0.2 * k as f64).collect();
        let t = constant(times, StateVector::basis(4, 1).unwrap());
        assert!((trajectory_similarity(&t, &t).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_trajectories_give_zero() {
        let times: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let a = constant(times.clone(), StateVector::basis(3, 0).unwrap());
        let b = constant(times, StateVector::basis(3, 2).unwrap());
        assert_eq!(trajectory_similarity(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn quarter_overlap_over_four_units() {
        let times: Vec<f64> = (0..=8).map(|k| 0.5 * k as f64).collect();
        let a = constant(times.clone(), StateVector::basis(2, 0).unwrap());
        // |⟨0|ψ⟩|² = 0.25
        let psi = StateVector::new(DVector::from_vec(vec![
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 0.75f64.sqrt()),
        ]))
        .unwrap();
        let b = constant(times, psi);
        assert!((trajectory_similarity(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let a = constant(vec![0.0, 1.0], StateVector::basis(2, 0).unwrap());
        let b = constant(vec![0.0, 1.5], StateVector::basis(2, 0).unwrap());
        assert!(matches!(trajectory_similarity(&a, &b), Err(Error::GridMismatch(_))));
    }

    proptest! {
        #[test]
        fn global_phases_do_not_matter(phases in proptest::collection::vec(0.0f64..6.3, 5)) {
            let times: Vec<f64> = (0..5).map(|k| k as f64 * 0.3).collect();
            let base: Vec<StateVector> = (0..5)
                .map(|k| StateVector::new(DVector::from_fn(3, |i, _| Complex64::new(1.0 + (i * k) as f64, 0.5 * i as f64))).unwrap())
                .collect();
            let rotated: Vec<StateVector> = base
                .iter()
                .zip(&phases)
                .map(|(s, p)| StateVector::new(s.amplitudes() * Complex64::from_polar(1.0, *p)).unwrap())
                .collect();
            let reference = Trajectory::new(times.clone(), StateSeries::Pure(vec![StateVector::basis(3, 1).unwrap(); 5]));
            let a = trajectory_similarity(&Trajectory::new(times.clone(), StateSeries::Pure(base)), &reference).unwrap();
            let b = trajectory_similarity(&Trajectory::new(times, StateSeries::Pure(rotated)), &reference).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    fn setup() -> (Propagator, StateVector, PulseSchedule) {
        let model = Model::Rabi(RabiParams {
            omega: 1.0,
            big_omega: 10.0,
        });
        let space = model.space(20).unwrap();
        let prop = Propagator::new(model, space, IntegratorConfig::default()).unwrap();
        let (_, psi0) = ground_state_numeric(&model.hamiltonian(0.01, &space).unwrap()).unwrap();
        let ramp = CouplingRamp::linear(0.01, 0.9, 2.0).unwrap();
        let fields = ControlKind::ALL.iter().map(|&k| ControlField::zero(k, 8)).collect();
        let sched = PulseSchedule::new(2.0, 8, 1.3, ramp, fields).unwrap();
        (prop, psi0, sched)
    }

    #[test]
    fn single_active_field_matches_reference() {
        let (prop, psi0, mut sched) = setup();
        let f = sched.field_mut(ControlKind::QuadratureSquared).unwrap();
        f.amplitudes = vec![0.0, 0.3, -0.2, 0.5, 0.1, 0.4, -0.3, 0.0];
        f.phase = 0.7;
        let report = rank_fields(&prop, &sched, &psi0).unwrap();
        let q2 = report.get(ControlKind::QuadratureSquared).unwrap();
        assert!((q2.delta.unwrap() - 2.0).abs() < 1e-3 * 2.0);
        assert_eq!(report.ranking[0], ControlKind::QuadratureSquared);
    }

    #[test]
    fn all_zero_fields_tie_in_index_order() {
        let (prop, psi0, sched) = setup();
        let report = rank_fields(&prop, &sched, &psi0).unwrap();
        let d: Vec<f64> = report.fields.iter().map(|f| f.delta.unwrap()).collect();
        assert!(d.iter().all(|x| *x == d[0]));
        assert_eq!(report.ranking, ControlKind::ALL.to_vec());
        assert_eq!(report, rank_fields(&prop, &sched, &psi0).unwrap());
    }

    #[test]
    fn keep_all_fields_reuses_the_search_space() {
        let task = TaskSpec {
            model: Model::Rabi(RabiParams {
                omega: 1.0,
                big_omega: 6.0,
            }),
            fock_cutoff: 16,
            steps: 4,
            ..TaskSpec::desk_scale()
        }
        .with_fields(&ControlKind::ALL);
        let ppo = PpoConfig {
            rollout_episodes: 4,
            minibatch_size: 4,
            epochs_per_update: 1,
            policy_hidden_sizes: vec![4],
            value_hidden_sizes: vec![4],
            ..PpoConfig::default()
        };
        let opts = TrainOptions {
            episodes: 8,
            ..TrainOptions::default()
        };
        let stage1 = train(&task, &ppo, &opts, &mut NullSink).unwrap();
        let out = prune_and_retrain(&stage1, 5, &ppo, &opts, &mut NullSink).unwrap();
        let log2 = out.stage2_log.unwrap();
        assert_eq!(log2.config.task.field_mask, task.field_mask);
        assert_eq!(out.stage1.fields, out.stage2.fields);
        let one = prune_and_retrain(&stage1, 1, &ppo, &opts, &mut NullSink).unwrap();
        assert_eq!(one.stage2.fields, vec![one.report.ranking[0]]);
        assert!(prune_and_retrain(&stage1, 6, &ppo, &opts, &mut NullSink).is_err());
    }
}
