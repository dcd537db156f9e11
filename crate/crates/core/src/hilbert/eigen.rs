// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{fidelity_amplitude, squeeze_parameter, Model, OperatorMatrix, SpaceSpec, StateVector};
use crate::error::{Error, Result};

/// Convergence threshold used by [`adaptive_fock_cutoff`].
pub const CUTOFF_TOLERANCE: f64 = 1e-6;

/// Largest Hilbert-space dimension handled by dense diagonalization.
const MAX_DENSE_DIM: usize = 2000;

const RESIDUAL_TOL: f64 = 1e-8;

/// Eigenvalues in ascending order with matching eigenvector columns. Each
/// eigenvector has its first non-negligible amplitude real and positive.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl Eigensystem {
    pub fn vector(&self, n: usize) -> StateVector {
        StateVector::from_amplitudes_unchecked(self.vectors.column(n).into_owned()).canonical_phase()
    }
}

fn require_hermitian(h: &OperatorMatrix) -> Result<()> {
    if !h.is_hermitian() && h.hermiticity_error() >= 1e-12 {
        return Err(Error::invalid("H", "eigensolver requires a Hermitian operator"));
    }
    if h.dim() > MAX_DENSE_DIM {
        return Err(Error::Eigensolver(format!(
            "dimension {} exceeds the dense limit {MAX_DENSE_DIM}",
            h.dim()
        )));
    }
    Ok(())
}

/// Full dense Hermitian diagonalization. Real symmetric inputs take a real
/// arithmetic path.
pub fn eigh(h: &OperatorMatrix) -> Result<Eigensystem> {
    require_hermitian(h)?;
    let n = h.dim();
    let (values, vectors) = if let Some(real) = h.as_real() {
        let eig = SymmetricEigen::try_new(real, f64::EPSILON, 0)
            .ok_or_else(|| Error::Eigensolver("no convergence".into()))?;
        (eig.eigenvalues, eig.eigenvectors.map(|x| Complex64::new(x, 0.0)))
    } else {
        let eig = SymmetricEigen::try_new(h.entries().clone(), f64::EPSILON, 0)
            .ok_or_else(|| Error::Eigensolver("no convergence".into()))?;
        (eig.eigenvalues, eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut sorted = DMatrix::<Complex64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = StateVector::from_amplitudes_unchecked(vectors.column(src).into_owned())
            .canonical_phase()
            .into_amplitudes();
        sorted.set_column(dst, &col);
    }
    if sorted_values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver("non-finite eigenvalue".into()));
    }
    Ok(Eigensystem {
        values: sorted_values,
        vectors: sorted,
    })
}

fn eigenvalues(h: &OperatorMatrix) -> Result<Vec<f64>> {
    require_hermitian(h)?;
    let mut vals: Vec<f64> = match h.as_real() {
        Some(real) => real.symmetric_eigenvalues().iter().copied().collect(),
        None => h.entries().symmetric_eigenvalues().iter().copied().collect(),
    };
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver("non-finite eigenvalue".into()));
    }
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Lowest eigenpair (E₀, |E₀⟩).
pub fn ground_state_numeric(h: &OperatorMatrix) -> Result<(f64, StateVector)> {
    let eig = eigh(h)?;
    let e0 = eig.values[0];
    let psi = eig.vector(0);
    let residual = (h.entries() * psi.amplitudes() - psi.amplitudes() * Complex64::new(e0, 0.0)).norm();
    if residual >= RESIDUAL_TOL {
        return Err(Error::Eigensolver(format!(
            "ground-state residual {residual:.3e} above {RESIDUAL_TOL:.0e}"
        )));
    }
    Ok((e0, psi))
}

/// Excitation energies E_n − E₀ for the lowest `m` levels at each coupling.
pub fn spectrum(model: &Model, g_grid: &[f64], m: usize, space: &SpaceSpec) -> Result<Vec<Vec<f64>>> {
    if m == 0 || m > space.total_dim() {
        return Err(Error::invalid("m", format!("{m} not in 1..={}", space.total_dim())));
    }
    g_grid
        .iter()
        .map(|&g| {
            let vals = eigenvalues(&model.hamiltonian(g, space)?)?;
            Ok(vals[..m].iter().map(|e| e - vals[0]).collect())
        })
        .collect()
}

/// Initial cutoff guess: ten times the squeezed-vacuum quadrature stretch
/// e^{2r}. Near and beyond g = 1 the finite-Ω/ω ground state saturates at
/// r ≈ ln(Ω/ω)/6, which caps the guess.
fn initial_cutoff_guess(model: &Model, g_max: f64) -> usize {
    let r_cap = (model.big_omega() / model.omega()).max(1.0).ln() / 6.0;
    let r = squeeze_parameter(g_max.abs().min(0.999_999))
        .unwrap_or(r_cap)
        .min(r_cap);
    ((10.0 * (2.0 * r).exp()).ceil() as usize).max(30)
}

/// Fock cutoff for which doubling changes the ground-state energy and
/// fidelity at `g_max` by less than `tol`.
pub fn adaptive_fock_cutoff(model: &Model, g_max: f64, tol: f64) -> Result<usize> {
    let mut cutoff = initial_cutoff_guess(model, g_max);
    let ground = |n: usize| -> Result<(SpaceSpec, f64, StateVector)> {
        let space = model.space(n)?;
        let (e, psi) = ground_state_numeric(&model.hamiltonian(g_max, &space)?)?;
        Ok((space, e, psi))
    };
    let (mut space, mut e, mut psi) = ground(cutoff)?;
    loop {
        if 2 * cutoff * model.emitter_levels() > MAX_DENSE_DIM {
            return Err(Error::Truncation {
                estimate: f64::NAN,
                tolerance: tol,
                suggested: 2 * cutoff,
            });
        }
        let (space2, e2, psi2) = ground(2 * cutoff)?;
        let fid = fidelity_amplitude(&psi.embed(&space, &space2)?, &psi2)?;
        if (e - e2).abs() < tol && 1.0 - fid < tol {
            return Ok(cutoff);
        }
        cutoff *= 2;
        (space, e, psi) = (space2, e2, psi2);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{analytic_ground_state, number_op, RabiParams};
    use proptest::prelude::*;

    fn rabi(ratio: f64) -> Model {
        Model::Rabi(RabiParams::new(1.0, ratio).unwrap())
    }

    #[test]
    fn decoupled_ground_state() {
        let space = SpaceSpec::rabi(10).unwrap();
        let h = rabi(100.0).hamiltonian(0.0, &space).unwrap();
        let (e0, psi) = ground_state_numeric(&h).unwrap();
        assert!((e0 + 50.0).abs() < 1e-12);
        assert!((psi.amplitudes()[0].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bare_cavity_ground_energy_is_zero() {
        let space = SpaceSpec::cavity(8).unwrap();
        let (e0, _) = ground_state_numeric(&number_op(&space)).unwrap();
        assert!(e0.abs() < 1e-14);
    }

    #[test]
    fn numeric_approaches_analytic_at_large_ratio() {
        let space = SpaceSpec::rabi(40).unwrap();
        let h = rabi(1e3).hamiltonian(0.5, &space).unwrap();
        let (_, psi) = ground_state_numeric(&h).unwrap();
        let f = fidelity_amplitude(&psi, &analytic_ground_state(0.5, &space).unwrap()).unwrap();
        assert!(f >= 0.999, "fidelity {f}");
    }

    #[test]
    fn decoupled_gap_is_cavity_frequency() {
        let space = SpaceSpec::rabi(12).unwrap();
        let s = spectrum(&rabi(1e3), &[0.0], 3, &space).unwrap();
        assert_eq!(s[0][0], 0.0);
        assert!((s[0][1] - 1.0).abs() < 1e-9);
        assert!((s[0][2] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn spectrum_is_even_in_g() {
        // σ_x → −σ_x is implemented by the unitary 1 ⊗ σ_z
        let space = SpaceSpec::rabi(25).unwrap();
        let model = rabi(50.0);
        let plus = spectrum(&model, &[0.4, 0.8], 8, &space).unwrap();
        let minus = spectrum(&model, &[-0.4, -0.8], 8, &space).unwrap();
        for (a, b) in plus.iter().flatten().zip(minus.iter().flatten()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn gap_decreases_towards_criticality() {
        let space = SpaceSpec::rabi(60).unwrap();
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let s = spectrum(&rabi(1e3), &grid, 2, &space).unwrap();
        for w in s.windows(2) {
            assert!(w[1][1] < w[0][1]);
        }
    }

    #[test]
    fn complex_path_matches_real_path() {
        let space = SpaceSpec::rabi(6).unwrap();
        let h = rabi(5.0).hamiltonian(0.7, &space).unwrap();
        // conjugating by a diagonal phase makes the matrix complex without
        // changing its spectrum
        let phases = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_fn(12, |i, _| {
            Complex64::from_polar(1.0, 0.3 * i as f64)
        }));
        let rotated = OperatorMatrix::hermitian(&phases * h.entries() * phases.adjoint()).unwrap();
        let a = eigh(&h).unwrap();
        let b = eigh(&rotated).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn adaptive_cutoff_is_converged() {
        let model = rabi(50.0);
        let n = adaptive_fock_cutoff(&model, 1.0, CUTOFF_TOLERANCE).unwrap();
        let gs = |n| {
            let s = model.space(n).unwrap();
            let (e, psi) = ground_state_numeric(&model.hamiltonian(1.0, &s).unwrap()).unwrap();
            (s, e, psi)
        };
        let (s1, e1, p1) = gs(n);
        let (s2, e2, p2) = gs(2 * n);
        assert!((e1 - e2).abs() < 1e-6);
        assert!(1.0 - fidelity_amplitude(&p1.embed(&s1, &s2).unwrap(), &p2).unwrap() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn ground_energy_is_variational_lower_bound(
            g in 0.0f64..1.2,
            re in proptest::collection::vec(-1.0f64..1.0, 24),
            im in proptest::collection::vec(-1.0f64..1.0, 24),
        ) {
            let space = SpaceSpec::rabi(12).unwrap();
            let h = rabi(20.0).hamiltonian(g, &space).unwrap();
            let (e0, _) = ground_state_numeric(&h).unwrap();
            let v = nalgebra::DVector::from_iterator(24, re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)));
            prop_assume!(v.norm() > 1e-3);
            let psi = StateVector::new(v).unwrap();
            prop_assert!(h.expectation(&psi).unwrap().re >= e0 - 1e-8);
        }
    }
}
