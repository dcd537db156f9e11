// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::propagator::Propagator;
use super::trajectory::{StateSeries, Trajectory};
use super::NoiseRates;
use crate::error::{check_dim, Error, Result};
use crate::hilbert::DensityMatrix;
use crate::schedule::PulseSchedule;
use crate::sparse::{dopri45, Csr, RkTolerance};

type C = Complex64;

struct Jump {
    l: Csr,
    /// L†L
    ldl: Csr,
}

impl Jump {
    fn new(op: DMatrix<f64>) -> Self {
        let ldl = op.transpose() * &op;
        Self {
            l: Csr::from_dense(&op),
            ldl: Csr::from_dense(&ldl),
        }
    }
}

/// Writes out[i, j] = x[i, j] + s · conj(x[j, i]) for column-major d×d data.
fn add_adjoint(x: &[C], s: f64, d: usize, out: &mut [C]) {
    for j in 0..d {
        for i in 0..d {
            out[i + d * j] = x[i + d * j] + x[j + d * i].conj() * s;
        }
    }
}

impl Propagator {
    fn jump_operators(&self, rates: &NoiseRates) -> Result<Vec<Jump>> {
        rates.validate()?;
        let space = self.space();
        let model = self.model();
        let real = |op: crate::hilbert::OperatorMatrix| {
            op.as_real().ok_or_else(|| Error::invalid("jump operator", "must be real"))
        };
        let mut jumps = Vec::new();
        if rates.kappa1 > 0.0 {
            let a = real(crate::hilbert::annihilation_op(space))?;
            jumps.push(Jump::new(a * rates.amplitude(rates.kappa1)));
        }
        if rates.kappa2 > 0.0 {
            let s = real(model.emitter_lowering(space)?)?;
            jumps.push(Jump::new(s * rates.amplitude(rates.kappa2)));
        }
        if rates.kappa3 > 0.0 {
            let z = real(model.emitter_dephasing(space)?)?;
            jumps.push(Jump::new(z * rates.amplitude(rates.kappa3)));
        }
        Ok(jumps)
    }

    /// Master-equation trajectory
    /// dρ/dt = −i[H, ρ] + Σ (LρL† − ½{L†L, ρ}) sampled on the grid.
    pub fn evolve_lindblad(
        &self,
        schedule: &PulseSchedule,
        rho0: &DensityMatrix,
        rates: &NoiseRates,
    ) -> Result<Trajectory> {
        let d = self.space().total_dim();
        check_dim(d, rho0.dim())?;
        rho0.validate()?;
        schedule.validate()?;
        let jumps = self.jump_operators(rates)?;
        let cfg = *self.config();
        let tol = RkTolerance {
            rel: cfg.rel_tol,
            abs: cfg.abs_tol,
            max_steps: cfg.max_rk_steps,
        };
        let mut gen = self.generator(schedule);
        let mut h = gen.template();
        let zero = C::new(0.0, 0.0);
        let (mut a, mut b, mut c) = (vec![zero; d * d], vec![zero; d * d], vec![zero; d * d]);
        let mut y: Vec<C> = rho0.entries().as_slice().to_vec();
        let times = schedule.grid();
        let mut states = Vec::with_capacity(times.len());
        let diag = |y: &[C], i: usize| y[i + d * i].re;
        self.check_leak(|i| diag(&y, i), 0.0)?;
        states.push(rho0.clone());
        let mut step = schedule.segment_duration() / 20.0;
        for k in 1..=schedule.steps {
            let (t0, t1) = schedule.segment_bounds(k);
            let rhs = |t: f64, rho: &[C], drho: &mut [C]| {
                gen.at(k, t, &mut h);
                h.mul_cols(rho, d, &mut a);
                // −i(Hρ − ρH) with ρH = (Hρ)†
                add_adjoint(&a, -1.0, d, drho);
                for z in drho.iter_mut() {
                    *z = C::new(z.im, -z.re);
                }
                for jump in &jumps {
                    jump.l.mul_cols(rho, d, &mut a);
                    for j in 0..d {
                        for i in 0..d {
                            b[i + d * j] = a[j + d * i].conj();
                        }
                    }
                    jump.l.mul_cols(&b, d, &mut c);
                    jump.ldl.mul_cols(rho, d, &mut a);
                    add_adjoint(&a, 1.0, d, &mut b);
                    for ((z, lrl), anti) in drho.iter_mut().zip(&c).zip(&b) {
                        *z += lrl - anti * 0.5;
                    }
                }
            };
            dopri45(rhs, t0, t1, &mut y, &mut step, tol)?;
            self.check_leak(|i| diag(&y, i), times[k])?;
            let rho = DensityMatrix::from_entries_unchecked(DMatrix::from_column_slice(d, d, &y));
            if cfg.check_positivity {
                let min_eig = rho.min_eigenvalue();
                if min_eig < -DensityMatrix::POSITIVITY_TOL {
                    return Err(Error::Positivity(min_eig));
                }
            }
            states.push(rho);
        }
        Ok(Trajectory::new(times, StateSeries::Mixed(states)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{IntegratorConfig, Method};
    use crate::hilbert::{number_op, sigma_x_op, Model, RabiParams, SpaceSpec, StateVector};
    use crate::schedule::{ControlField, ControlKind, CouplingRamp};

    fn frozen(g: f64, duration: f64, steps: usize) -> PulseSchedule {
        PulseSchedule::bare(CouplingRamp::linear(g, g, duration).unwrap(), steps).unwrap()
    }

    #[test]
    fn damped_cavity_photon_number() {
        let model = Model::Rabi(RabiParams::new(1.0, 3.0).unwrap());
        let space = model.space(6).unwrap();
        let s = frozen(0.0, 10.0, 20);
        let rho0 = DensityMatrix::from_pure(&StateVector::basis(space.total_dim(), space.index(1, 0)).unwrap());
        let rates = NoiseRates::new(0.05, 0.0, 0.0).unwrap();
        let traj = Propagator::new(model, space, IntegratorConfig::default())
            .unwrap()
            .evolve_lindblad(&s, &rho0, &rates)
            .unwrap();
        let n = number_op(&space);
        for (t, rho) in traj.times.iter().zip(traj.mixed_states().unwrap()) {
            let expected = (-0.05 * t).exp();
            assert!((rho.expectation(&n).unwrap().re - expected).abs() < 1e-6, "t = {t}");
        }
        let last = traj.mixed_states().unwrap().last().unwrap();
        assert!((last.expectation(&n).unwrap().re - 0.60653).abs() < 5e-6);
        assert!(traj.max_norm_drift() < 1e-8);
    }

    #[test]
    fn dephasing_decays_coherence() {
        let model = Model::Rabi(RabiParams::new(1.0, 2.0).unwrap());
        let space = SpaceSpec::rabi(3).unwrap();
        let s = frozen(0.0, 4.0, 8);
        let amp = std::f64::consts::FRAC_1_SQRT_2;
        let psi = StateVector::basis(space.total_dim(), 0).unwrap();
        let plus = crate::hilbert::OperatorMatrix::hermitian(
            (sigma_x_op(&space).entries() + nalgebra::DMatrix::identity(6, 6)) * C::new(amp, 0.0),
        )
        .unwrap()
        .apply(&psi)
        .unwrap();
        let rates = NoiseRates::new(0.0, 0.0, 0.1).unwrap();
        let traj = Propagator::new(model, space, IntegratorConfig::default())
            .unwrap()
            .evolve_lindblad(&s, &DensityMatrix::from_pure(&plus), &rates)
            .unwrap();
        for (t, rho) in traj.times.iter().zip(traj.mixed_states().unwrap()) {
            let coherence = rho.entries()[(0, 1)].norm();
            assert!((coherence - 0.5 * (-0.2 * t).exp()).abs() < 1e-8, "t = {t}");
            assert!((rho.entries()[(0, 0)].re - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_limit_matches_pure() {
        let model = Model::Rabi(RabiParams::new(1.0, 3.0).unwrap());
        let space = model.space(16).unwrap();
        let ramp = CouplingRamp::linear(0.1, 0.7, 2.0).unwrap();
        let s = PulseSchedule::new(
            2.0,
            5,
            1.3,
            ramp,
            vec![ControlField {
                kind: ControlKind::QuadratureSquared,
                phase: 0.2,
                amplitudes: vec![0.0, 0.2, -0.3, 0.1, 0.0],
            }],
        )
        .unwrap();
        let psi0 = StateVector::basis(space.total_dim(), 0).unwrap();
        let cfg = IntegratorConfig {
            method: Method::Magnus4,
            max_phase_step: 0.02,
            rel_tol: 1e-11,
            abs_tol: 1e-13,
            ..Default::default()
        };
        let p = Propagator::new(model, space, cfg).unwrap();
        let pure = p.evolve_pure(&s, &psi0).unwrap();
        let open = p
            .evolve_lindblad(&s, &DensityMatrix::from_pure(&psi0), &NoiseRates::default())
            .unwrap();
        for (psi, rho) in pure.pure_states().unwrap().iter().zip(open.mixed_states().unwrap()) {
            let diff = DensityMatrix::from_pure(psi).entries() - rho.entries();
            assert!(diff.norm() < 1e-7, "{}", diff.norm());
        }
    }

    #[test]
    fn literal_convention_squares_the_rate() {
        let model = Model::Rabi(RabiParams::new(1.0, 3.0).unwrap());
        let space = model.space(5).unwrap();
        let s = frozen(0.0, 2.0, 4);
        let rho0 = DensityMatrix::from_pure(&StateVector::basis(space.total_dim(), space.index(1, 0)).unwrap());
        let mut rates = NoiseRates::new(0.3, 0.0, 0.0).unwrap();
        rates.convention = crate::dynamics::JumpConvention::Literal;
        let traj = Propagator::new(model, space, IntegratorConfig::default())
            .unwrap()
            .evolve_lindblad(&s, &rho0, &rates)
            .unwrap();
        let n = number_op(&space);
        let last = traj.mixed_states().unwrap().last().unwrap();
        assert!((last.expectation(&n).unwrap().re - (-0.09f64 * 2.0).exp()).abs() < 1e-7);
    }
}
