// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Squeezed vacuum and the thermodynamic-limit Rabi ground state
//! |Φ(g)⟩ = S[r(g)]|0⟩|↓⟩ with S[r] = exp[r/2 (a†² − a²)].

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{cavity_op, OperatorMatrix, SpaceSpec, StateVector};
use crate::error::{Error, Result};
use crate::linalg::expm;

/// Largest tolerated squeezed-vacuum population beyond the Fock cutoff.
pub const SQUEEZE_TOLERANCE: f64 = 1e-10;

/// r(g) = −¼ ln(1 − g²), defined for 0 ≤ g < 1.
pub fn squeeze_parameter(g: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&g) {
        return Err(Error::CouplingDomain(g));
    }
    Ok(-0.25 * (1.0 - g * g).ln())
}

/// Even-photon amplitude ratio c_{2n+2} / c_{2n}.
fn step_ratio(t: f64, n: usize) -> f64 {
    let k = 2.0 * n as f64;
    t * ((k + 1.0) / (k + 2.0)).sqrt()
}

/// Fock amplitudes ⟨k|S(r)|0⟩ for k < `levels` (closed form, untruncated
/// normalization):
/// c_{2n} = (tanh r)^n √((2n)!) / (2ⁿ n! √cosh r), odd amplitudes vanish.
pub fn squeezed_vacuum_amplitudes(r: f64, levels: usize) -> Vec<f64> {
    let t = r.tanh();
    let mut out = vec![0.0; levels];
    let mut c = 1.0 / r.cosh().sqrt();
    let mut n = 0;
    while 2 * n < levels {
        out[2 * n] = c;
        c *= step_ratio(t, n);
        n += 1;
    }
    out
}

/// Population of S(r)|0⟩ on Fock levels ≥ `cutoff`.
pub fn squeezed_vacuum_tail(r: f64, cutoff: usize) -> f64 {
    let t = r.tanh();
    let mut c = 1.0 / r.cosh().sqrt();
    let mut tail = 0.0;
    let mut n = 0usize;
    loop {
        let p = c * c;
        if 2 * n >= cutoff {
            tail += p;
            if p < 1e-18 * tail.max(1e-300) || p < 1e-300 {
                break;
            }
        }
        c *= step_ratio(t, n);
        n += 1;
        if n > 10_000_000 {
            break;
        }
    }
    tail
}

/// Smallest cutoff whose squeezed-vacuum tail is below `tol`.
pub(crate) fn suggested_cutoff(r: f64, tol: f64) -> usize {
    let mut cutoff = 2;
    while squeezed_vacuum_tail(r, cutoff) > tol {
        cutoff = (cutoff as f64 * 1.25).ceil() as usize + 2;
    }
    cutoff
}

fn check_truncation(r: f64, space: &SpaceSpec) -> Result<()> {
    let estimate = squeezed_vacuum_tail(r, space.fock_cutoff());
    if estimate > SQUEEZE_TOLERANCE {
        return Err(Error::Truncation {
            estimate,
            tolerance: SQUEEZE_TOLERANCE,
            suggested: suggested_cutoff(r, SQUEEZE_TOLERANCE),
        });
    }
    Ok(())
}

/// Dense S(r) ⊗ 1 from the exponential of the truncated generator.
///
/// Fails when the squeezed vacuum would place more than
/// [`SQUEEZE_TOLERANCE`] of its population beyond the cutoff.
pub fn squeeze_operator(r: f64, space: &SpaceSpec) -> Result<OperatorMatrix> {
    if !r.is_finite() {
        return Err(Error::invalid("r", "not finite"));
    }
    check_truncation(r, space)?;
    let nf = space.fock_cutoff();
    // r/2 (a†² − a²): ⟨n+2|a†²|n⟩ = √((n+1)(n+2))
    let generator = DMatrix::from_fn(nf, nf, |i, j| {
        let v = if i == j + 2 {
            ((j + 1) as f64 * (j + 2) as f64).sqrt()
        } else if j == i + 2 {
            -((i + 1) as f64 * (i + 2) as f64).sqrt()
        } else {
            0.0
        };
        Complex64::new(0.5 * r * v, 0.0)
    });
    cavity_op(space, expm(&generator))
}

/// S[r(g)]|0⟩|↓⟩, the ground state of the Rabi model in the ω/Ω → 0 limit.
pub fn analytic_ground_state(g: f64, space: &SpaceSpec) -> Result<StateVector> {
    let r = squeeze_parameter(g)?;
    check_truncation(r, space)?;
    let cavity: Vec<Complex64> = squeezed_vacuum_amplitudes(r, space.fock_cutoff())
        .into_iter()
        .map(|c| Complex64::new(c, 0.0))
        .collect();
    StateVector::product(space, &cavity, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{fidelity_amplitude, number_op};

    #[test]
    fn zero_squeezing_is_identity() {
        let space = SpaceSpec::rabi(8).unwrap();
        let s = squeeze_operator(0.0, &space).unwrap();
        assert!((s.entries() - DMatrix::<Complex64>::identity(16, 16)).norm() < 1e-14);
    }

    #[test]
    fn r_of_g() {
        assert_eq!(squeeze_parameter(0.0).unwrap(), 0.0);
        assert!((squeeze_parameter(0.6).unwrap() - 0.111_572).abs() < 1e-6);
        assert!(matches!(squeeze_parameter(1.0), Err(Error::CouplingDomain(_))));
        assert!(squeeze_parameter(0.999_999).unwrap() > 3.0);
    }

    #[test]
    fn vacuum_overlap_matches_sech_root() {
        let r = 0.11157;
        let space = SpaceSpec::rabi(30).unwrap();
        let s = squeeze_operator(r, &space).unwrap();
        let v0 = s.get(space.index(0, 0), space.index(0, 0)).norm();
        assert!((v0 - 1.0 / r.cosh().sqrt()).abs() < 1e-12);
        assert!((v0 - 0.99690).abs() < 5e-6);
    }

    #[test]
    fn photon_number_is_sinh_squared() {
        let r = 0.11157;
        let space = SpaceSpec::rabi(30).unwrap();
        let s = squeeze_operator(r, &space).unwrap();
        let vac = StateVector::basis(space.total_dim(), 0).unwrap();
        let sq = s.apply(&vac).unwrap();
        let n = number_op(&space).expectation(&sq).unwrap().re;
        assert!((n - r.sinh().powi(2)).abs() < 1e-12);
        assert!((n - 0.01250).abs() < 5e-6);
    }

    #[test]
    fn squeeze_operator_is_unitary() {
        let space = SpaceSpec::rabi(80).unwrap();
        let s = squeeze_operator(0.8, &space).unwrap();
        assert!(s.unitarity_error() < 1e-8);
    }

    #[test]
    fn closed_form_matches_matrix_exponential() {
        // two independent routes to S(r)|0⟩
        let space = SpaceSpec::rabi(60).unwrap();
        for g in [0.3, 0.6, 0.9] {
            let r = squeeze_parameter(g).unwrap();
            let analytic = analytic_ground_state(g, &space).unwrap();
            let vac = StateVector::basis(space.total_dim(), 0).unwrap();
            let numeric = squeeze_operator(r, &space).unwrap().apply(&vac).unwrap();
            assert!((analytic.amplitudes() - numeric.amplitudes()).norm() < 1e-9);
        }
    }

    #[test]
    fn analytic_ground_state_limits() {
        let space = SpaceSpec::rabi(20).unwrap();
        let psi = analytic_ground_state(0.0, &space).unwrap();
        assert_eq!(psi, StateVector::basis(space.total_dim(), 0).unwrap());
        assert!(analytic_ground_state(1.0, &space).is_err());
        let vac = StateVector::basis(space.total_dim(), 0).unwrap();
        let sq = analytic_ground_state(0.6, &space).unwrap();
        assert!((fidelity_amplitude(&vac, &sq).unwrap() - 0.99690).abs() < 5e-6);
    }

    #[test]
    fn insufficient_cutoff_suggests_larger() {
        let space = SpaceSpec::rabi(10).unwrap();
        match analytic_ground_state(0.99, &space) {
            Err(Error::Truncation { suggested, .. }) => {
                assert!(suggested > 10);
                let big = SpaceSpec::rabi(suggested).unwrap();
                analytic_ground_state(0.99, &big).unwrap();
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn tail_is_complement_of_head() {
        let r = 1.2;
        let head: f64 = squeezed_vacuum_amplitudes(r, 40).iter().map(|c| c * c).sum();
        assert!((head + squeezed_vacuum_tail(r, 40) - 1.0).abs() < 1e-13);
    }
}
