// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::generator::Generator;
use super::trajectory::{StateSeries, Trajectory};
use super::{IntegratorConfig, Method};
use crate::error::{check_dim, Error, Result};
use crate::hilbert::{Model, OperatorMatrix, SpaceSpec, StateVector};
use crate::linalg::expm;
use crate::schedule::{ControlKind, PulseSchedule};
use crate::sparse::{dopri45, expmv, Csr, ExpmvWork, RkTolerance};

type C = Complex64;

const SQRT3: f64 = 1.732_050_807_568_877_2;
/// Gauss–Legendre nodes on [0, 1].
const GAUSS: [f64; 2] = [0.5 - SQRT3 / 6.0, 0.5 + SQRT3 / 6.0];
const CF4_A1: f64 = (3.0 - 2.0 * SQRT3) / 12.0;
const CF4_A2: f64 = (3.0 + 2.0 * SQRT3) / 12.0;

fn real_part(op: &OperatorMatrix, what: &str) -> Result<DMatrix<f64>> {
    op.as_real()
        .ok_or_else(|| Error::invalid(what, "operator must be real"))
}

/// Cached model operators for repeated propagation on one Hilbert space.
#[derive(Debug, Clone)]
pub struct Propagator {
    model: Model,
    space: SpaceSpec,
    cfg: IntegratorConfig,
    pub(crate) free: DMatrix<f64>,
    pub(crate) coupling: DMatrix<f64>,
    pub(crate) controls: [DMatrix<f64>; 5],
}

impl Propagator {
    pub fn new(model: Model, space: SpaceSpec, cfg: IntegratorConfig) -> Result<Self> {
        cfg.validate()?;
        let free = real_part(&model.free_hamiltonian(&space)?, "free Hamiltonian")?;
        let coupling = real_part(&model.coupling_operator(&space)?, "coupling")?;
        let mut controls: [DMatrix<f64>; 5] = Default::default();
        for kind in ControlKind::ALL {
            controls[kind.slot()] = real_part(&model.control_operator(kind, &space)?, kind.name())?;
        }
        Ok(Self {
            model,
            space,
            cfg,
            free,
            coupling,
            controls,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.cfg
    }

    pub fn with_config(&self, cfg: IntegratorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, ..self.clone() })
    }

    pub(crate) fn generator<'a>(&self, schedule: &'a PulseSchedule) -> Generator<'a> {
        Generator::new(
            schedule,
            &self.free,
            &self.coupling,
            &self.controls,
            self.model.max_frequency(),
        )
    }

    /// Fails when more than the configured population sits in the top
    /// decile of Fock levels.
    pub(crate) fn check_leak(&self, diagonal: impl Fn(usize) -> f64, t: f64) -> Result<()> {
        if !self.cfg.check_leak {
            return Ok(());
        }
        let nf = self.space.fock_cutoff();
        let q = self.space.qubit_levels();
        let first = nf - self.space.top_decile_levels();
        let population: f64 = (first * q..nf * q).map(diagonal).sum();
        if population > self.cfg.leak_threshold {
            return Err(Error::TruncationLeak {
                population,
                time: t,
                suggested: 2 * nf,
            });
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn advance_segment(
        &self,
        gen: &mut Generator,
        k: usize,
        (part, parts): (usize, usize),
        psi: &mut [C],
        h: &mut Csr,
        work: &mut ExpmvWork,
        rk_step: &mut f64,
    ) -> Result<()> {
        let (a, b, n) = gen.substeps(k, part, parts, self.cfg.max_phase_step);
        let dt = (b - a) / n as f64;
        match self.cfg.method {
            Method::Magnus2 => {
                for j in 0..n {
                    gen.at(k, a + (j as f64 + 0.5) * dt, h);
                    expmv(h, dt, psi, work)?;
                }
            }
            Method::Magnus4 => {
                for j in 0..n {
                    let t0 = a + j as f64 * dt;
                    let (t1, t2) = (t0 + GAUSS[0] * dt, t0 + GAUSS[1] * dt);
                    gen.blend(k, &[(CF4_A2, t1), (CF4_A1, t2)], h);
                    expmv(h, dt, psi, work)?;
                    gen.blend(k, &[(CF4_A1, t1), (CF4_A2, t2)], h);
                    expmv(h, dt, psi, work)?;
                }
            }
            Method::Rk45 => {
                let tol = RkTolerance {
                    rel: self.cfg.rel_tol,
                    abs: self.cfg.abs_tol,
                    max_steps: self.cfg.max_rk_steps,
                };
                let rhs = |t: f64, y: &[C], dy: &mut [C]| {
                    gen.at(k, t, h);
                    h.matvec(y, dy);
                    for z in dy.iter_mut() {
                        *z = C::new(z.im, -z.re);
                    }
                };
                dopri45(rhs, a, b, psi, rk_step, tol)?;
            }
        }
        Ok(())
    }

    /// Pure-state trajectory sampled at every grid point t_k.
    pub fn evolve_pure(&self, schedule: &PulseSchedule, psi0: &StateVector) -> Result<Trajectory> {
        self.evolve_pure_sampled(schedule, psi0, 1)
    }

    /// Pure-state trajectory sampled `per_segment` times per segment, at
    /// equally spaced points.
    pub fn evolve_pure_sampled(
        &self,
        schedule: &PulseSchedule,
        psi0: &StateVector,
        per_segment: usize,
    ) -> Result<Trajectory> {
        check_dim(self.space.total_dim(), psi0.dim())?;
        schedule.validate()?;
        if per_segment == 0 {
            return Err(Error::invalid("per_segment", "must be at least 1"));
        }
        let mut gen = self.generator(schedule);
        let mut h = gen.template();
        let mut work = ExpmvWork::new(psi0.dim());
        let mut psi: Vec<C> = psi0.amplitudes().as_slice().to_vec();
        let n_samples = schedule.steps * per_segment + 1;
        let mut times = Vec::with_capacity(n_samples);
        let mut states = Vec::with_capacity(n_samples);
        self.check_leak(|i| psi[i].norm_sqr(), 0.0)?;
        times.push(0.0);
        states.push(psi0.clone());
        for k in 1..=schedule.steps {
            let mut rk_step = 0.0;
            for part in 0..per_segment {
                self.advance_segment(&mut gen, k, (part, per_segment), &mut psi, &mut h, &mut work, &mut rk_step)?;
                if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::NonFinite("state propagation".into()));
                }
                let t = gen.substeps(k, part, per_segment, 1.0).1;
                self.check_leak(|i| psi[i].norm_sqr(), t)?;
                times.push(t);
                states.push(StateVector::from_amplitudes_unchecked(DVector::from_column_slice(&psi)));
            }
        }
        Ok(Trajectory::new(times, StateSeries::Pure(states)))
    }

    /// Advances ψ across segment k alone, with the same arithmetic as the
    /// corresponding step of [`evolve_pure`](Self::evolve_pure).
    pub fn propagate_segment(&self, schedule: &PulseSchedule, k: usize, psi: &StateVector) -> Result<StateVector> {
        check_dim(self.space.total_dim(), psi.dim())?;
        if !(1..=schedule.steps).contains(&k) {
            return Err(Error::invalid("k", format!("{k} outside 1..={}", schedule.steps)));
        }
        let mut gen = self.generator(schedule);
        let mut h = gen.template();
        let mut work = ExpmvWork::new(psi.dim());
        let mut amps: Vec<C> = psi.amplitudes().as_slice().to_vec();
        let mut rk_step = 0.0;
        self.advance_segment(&mut gen, k, (0, 1), &mut amps, &mut h, &mut work, &mut rk_step)?;
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("state propagation".into()));
        }
        self.check_leak(|i| amps[i].norm_sqr(), schedule.segment_bounds(k).1)?;
        Ok(StateVector::from_amplitudes_unchecked(DVector::from_column_slice(&amps)))
    }

    /// Final state only; same arithmetic as [`evolve_pure`](Self::evolve_pure).
    pub fn final_state(&self, schedule: &PulseSchedule, psi0: &StateVector) -> Result<StateVector> {
        let traj = self.evolve_pure(schedule, psi0)?;
        Ok(traj.pure_states().unwrap().last().unwrap().clone())
    }

    /// Dense evolution operator over segment k, built from dense matrix
    /// exponentials (Magnus methods) or by integrating every basis vector.
    pub fn segment_propagator(&self, schedule: &PulseSchedule, k: usize) -> Result<OperatorMatrix> {
        schedule.validate()?;
        if !(1..=schedule.steps).contains(&k) {
            return Err(Error::invalid("k", format!("{k} outside 1..={}", schedule.steps)));
        }
        let d = self.space.total_dim();
        let mut gen = self.generator(schedule);
        let mut h = gen.template();
        let (a, b, n) = gen.substeps(k, 0, 1, self.cfg.max_phase_step);
        let dt = (b - a) / n as f64;
        let exp_step = |h: &Csr| expm(&h.to_dense().map(|v| C::new(0.0, -dt * v)));
        let mut u = DMatrix::<C>::identity(d, d);
        match self.cfg.method {
            Method::Magnus2 => {
                for j in 0..n {
                    gen.at(k, a + (j as f64 + 0.5) * dt, &mut h);
                    u = exp_step(&h) * u;
                }
            }
            Method::Magnus4 => {
                for j in 0..n {
                    let t0 = a + j as f64 * dt;
                    let (t1, t2) = (t0 + GAUSS[0] * dt, t0 + GAUSS[1] * dt);
                    gen.blend(k, &[(CF4_A2, t1), (CF4_A1, t2)], &mut h);
                    u = exp_step(&h) * u;
                    gen.blend(k, &[(CF4_A1, t1), (CF4_A2, t2)], &mut h);
                    u = exp_step(&h) * u;
                }
            }
            Method::Rk45 => {
                let mut work = ExpmvWork::new(d);
                for col in 0..d {
                    let mut psi = vec![C::new(0.0, 0.0); d];
                    psi[col] = C::new(1.0, 0.0);
                    let mut step = 0.0;
                    self.advance_segment(&mut gen, k, (0, 1), &mut psi, &mut h, &mut work, &mut step)?;
                    u.column_mut(col).copy_from_slice(&psi);
                }
            }
        }
        OperatorMatrix::new(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{fidelity_amplitude, ground_state_numeric, RabiParams};
    use crate::schedule::{ControlField, CouplingRamp};

    fn rabi(ratio: f64) -> Model {
        Model::Rabi(RabiParams::new(1.0, ratio).unwrap())
    }

    fn driven(steps: usize, duration: f64, drive_freq: f64) -> PulseSchedule {
        let ramp = CouplingRamp::linear(0.1, 0.8, duration).unwrap();
        let amp = |i: usize| {
            if i == 0 || i == steps - 1 {
                0.0
            } else {
                0.3 * ((i as f64) * 0.7).sin()
            }
        };
        let fields = vec![
            ControlField {
                kind: ControlKind::QuadratureSquared,
                phase: 0.4,
                amplitudes: (0..steps).map(amp).collect(),
            },
            ControlField {
                kind: ControlKind::QubitX,
                phase: 1.1,
                amplitudes: (0..steps).map(|i| 0.5 * amp(i)).collect(),
            },
        ];
        PulseSchedule::new(duration, steps, drive_freq, ramp, fields).unwrap()
    }

    #[test]
    fn magnus2_is_second_order() {
        let model = rabi(4.0);
        let space = model.space(24).unwrap();
        let s = driven(6, 2.0, 1.5);
        let psi0 = StateVector::basis(space.total_dim(), 0).unwrap();
        let reference = Propagator::new(model, space, IntegratorConfig::with_method(Method::Magnus4))
            .unwrap()
            .with_config(IntegratorConfig {
                method: Method::Magnus4,
                max_phase_step: 0.01,
                ..Default::default()
            })
            .unwrap()
            .final_state(&s, &psi0)
            .unwrap();
        let err = |step: f64| {
            let cfg = IntegratorConfig {
                max_phase_step: step,
                ..Default::default()
            };
            let psi = Propagator::new(model, space, cfg).unwrap().final_state(&s, &psi0).unwrap();
            (psi.amplitudes() - reference.amplitudes()).norm()
        };
        let (e1, e2) = (err(0.2), err(0.1));
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}, errors {e1:e} {e2:e}");
    }

    #[test]
    fn magnus4_is_fourth_order() {
        let model = rabi(4.0);
        let space = model.space(24).unwrap();
        let s = driven(6, 2.0, 1.5);
        let psi0 = StateVector::basis(space.total_dim(), 0).unwrap();
        let run = |method, step| {
            let cfg = IntegratorConfig {
                method,
                max_phase_step: step,
                rel_tol: 1e-12,
                abs_tol: 1e-14,
                ..Default::default()
            };
            Propagator::new(model, space, cfg).unwrap().final_state(&s, &psi0).unwrap()
        };
        let reference = run(Method::Rk45, 0.1);
        // segment phase 4/3: exactly 4 and 8 substeps
        let e1 = (run(Method::Magnus4, 1.0 / 3.0 + 1e-9).amplitudes() - reference.amplitudes()).norm();
        let e2 = (run(Method::Magnus4, 1.0 / 6.0 + 1e-9).amplitudes() - reference.amplitudes()).norm();
        let ratio = e1 / e2;
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}, errors {e1:e} {e2:e}");
    }

    #[test]
    fn stationary_ground_state() {
        let model = rabi(20.0);
        let space = model.space(30).unwrap();
        let ramp = CouplingRamp::linear(0.01, 0.01, 3.0).unwrap();
        let s = PulseSchedule::bare(ramp, 10).unwrap();
        let (_, psi0) = ground_state_numeric(&model.hamiltonian(0.01, &space).unwrap()).unwrap();
        let traj = Propagator::new(model, space, IntegratorConfig::default())
            .unwrap()
            .evolve_pure(&s, &psi0)
            .unwrap();
        let last = traj.pure_states().unwrap().last().unwrap();
        assert!(fidelity_amplitude(last, &psi0).unwrap() >= 1.0 - 1e-6);
    }

    #[test]
    fn leak_is_reported() {
        // an inverted oscillator pumps photons up to the cutoff
        let model = rabi(2.0);
        let space = model.space(12).unwrap();
        let ramp = CouplingRamp::linear(0.0, 0.0, 4.0).unwrap();
        let mut amps = vec![-2.0; 4];
        amps[0] = 0.0;
        amps[3] = 0.0;
        let s = PulseSchedule::new(
            4.0,
            4,
            0.0,
            ramp,
            vec![ControlField {
                kind: ControlKind::QuadratureSquared,
                phase: 0.0,
                amplitudes: amps,
            }],
        )
        .unwrap();
        let psi0 = StateVector::basis(space.total_dim(), 0).unwrap();
        let err = Propagator::new(model, space, IntegratorConfig::default())
            .unwrap()
            .evolve_pure(&s, &psi0)
            .unwrap_err();
        assert!(matches!(err, Error::TruncationLeak { suggested: 24, .. }), "{err}");
    }
}
