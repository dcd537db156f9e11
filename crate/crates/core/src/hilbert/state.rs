// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{OperatorMatrix, SpaceSpec};
use crate::error::{check_dim, Error, Result};

/// Pure state |ψ⟩ as a dense amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    /// Normalizes the given amplitudes.
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::invalid("state", format!("cannot normalize (norm {norm})")));
        }
        Ok(Self {
            amplitudes: amplitudes / Complex64::new(norm, 0.0),
        })
    }

    pub(crate) fn from_amplitudes_unchecked(amplitudes: DVector<Complex64>) -> Self {
        Self { amplitudes }
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::invalid("index", format!("{index} >= dim {dim}")));
        }
        let mut v = DVector::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes: v })
    }

    /// |cavity⟩ ⊗ |level⟩ for a cavity amplitude vector of length `fock_cutoff`.
    pub fn product(space: &SpaceSpec, cavity: &[Complex64], level: usize) -> Result<Self> {
        check_dim(space.fock_cutoff(), cavity.len())?;
        if level >= space.qubit_levels() {
            return Err(Error::invalid("level", format!("{level} out of range")));
        }
        let mut v = DVector::zeros(space.total_dim());
        for (n, &c) in cavity.iter().enumerate() {
            v[space.index(n, level)] = c;
        }
        Self::new(v)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Multiplies by a phase so that the first non-negligible amplitude is
    /// real and positive.
    pub fn canonical_phase(mut self) -> Self {
        let scale = self.amplitudes.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if let Some(first) = self
            .amplitudes
            .iter()
            .find(|z| z.norm() > 1e-10 * scale.max(f64::MIN_POSITIVE))
        {
            let phase = first.conj() / first.norm();
            self.amplitudes *= phase;
        }
        self
    }

    /// Population of each cavity Fock level, summed over emitter levels.
    pub fn fock_populations(&self, space: &SpaceSpec) -> Result<Vec<f64>> {
        check_dim(space.total_dim(), self.dim())?;
        let q = space.qubit_levels();
        Ok((0..space.fock_cutoff())
            .map(|n| (0..q).map(|s| self.amplitudes[n * q + s].norm_sqr()).sum())
            .collect())
    }

    /// Copies the state into a space with a larger (or equal) cavity cutoff.
    pub fn embed(&self, from: &SpaceSpec, to: &SpaceSpec) -> Result<Self> {
        check_dim(from.total_dim(), self.dim())?;
        check_dim(from.qubit_levels(), to.qubit_levels())?;
        if to.fock_cutoff() < from.fock_cutoff() {
            return Err(Error::invalid("fock_cutoff", "embedding target is smaller"));
        }
        let mut v = DVector::zeros(to.total_dim());
        v.rows_mut(0, self.dim()).copy_from(&self.amplitudes);
        Ok(Self { amplitudes: v })
    }
}

/// |⟨ψ|φ⟩|, insensitive to global phases.
pub fn fidelity_amplitude(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    Ok(psi.inner(phi)?.norm().min(1.0))
}

/// Mixed state ρ.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub const TRACE_TOL: f64 = 1e-8;
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const POSITIVITY_TOL: f64 = 1e-8;

    /// Validates trace, Hermiticity and positivity.
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        check_dim(entries.nrows(), entries.ncols())?;
        let rho = Self { entries };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_entries_unchecked(entries: DMatrix<Complex64>) -> Self {
        Self { entries }
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let v = psi.amplitudes();
        Self {
            entries: v * v.adjoint(),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            entries: DMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.entries - self.entries.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() >= Self::TRACE_TOL {
            return Err(Error::invalid("density matrix", format!("trace {tr}")));
        }
        let herm = self.hermiticity_error();
        if herm >= Self::HERMITIAN_TOL {
            return Err(Error::invalid(
                "density matrix",
                format!("not Hermitian ({herm:.3e})"),
            ));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig <= -Self::POSITIVITY_TOL {
            return Err(Error::Positivity(min_eig));
        }
        Ok(())
    }

    /// ⟨ψ|ρ|ψ⟩
    pub fn overlap(&self, psi: &StateVector) -> Result<f64> {
        check_dim(self.dim(), psi.dim())?;
        let v = psi.amplitudes();
        Ok(v.dotc(&(&self.entries * v)).re)
    }

    pub fn expectation(&self, op: &OperatorMatrix) -> Result<Complex64> {
        check_dim(self.dim(), op.dim())?;
        Ok((op.entries() * &self.entries).trace())
    }

    pub fn fock_populations(&self, space: &SpaceSpec) -> Result<Vec<f64>> {
        check_dim(space.total_dim(), self.dim())?;
        let q = space.qubit_levels();
        Ok((0..space.fock_cutoff())
            .map(|n| (0..q).map(|s| self.entries[(n * q + s, n * q + s)].re).sum())
            .collect())
    }

    /// Reduced cavity state Tr_emitter ρ.
    pub fn partial_trace_emitter(&self, space: &SpaceSpec) -> Result<DensityMatrix> {
        check_dim(space.total_dim(), self.dim())?;
        let nf = space.fock_cutoff();
        let q = space.qubit_levels();
        let reduced = DMatrix::from_fn(nf, nf, |m, n| {
            (0..q)
                .map(|s| self.entries[(m * q + s, n * q + s)])
                .sum::<Complex64>()
        });
        Ok(Self { entries: reduced })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn self_fidelity_is_one_and_orthogonal_is_zero() {
        let a = StateVector::basis(4, 1).unwrap();
        let b = StateVector::basis(4, 2).unwrap();
        assert!((fidelity_amplitude(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(fidelity_amplitude(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn fidelity_ignores_global_phase() {
        let v = DVector::from_vec(vec![c(0.3, 0.1), c(-0.2, 0.5), c(0.7, 0.0)]);
        let psi = StateVector::new(v.clone()).unwrap();
        let phi = StateVector::new(v * c(0.0, 1.0).exp()).unwrap();
        assert!((fidelity_amplitude(&psi, &phi).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn maximally_mixed_overlap() {
        let rho = DensityMatrix::maximally_mixed(8);
        let psi = StateVector::basis(8, 3).unwrap();
        assert!((rho.overlap(&psi).unwrap().sqrt() - 1.0 / 8f64.sqrt()).abs() < 1e-15);
        rho.validate().unwrap();
    }

    #[test]
    fn canonical_phase_makes_first_amplitude_positive() {
        let v = DVector::from_vec(vec![c(0.0, 0.0), c(0.0, -0.6), c(0.8, 0.0)]);
        let psi = StateVector::new(v).unwrap().canonical_phase();
        let first = psi.amplitudes()[1];
        assert!(first.im.abs() < 1e-15 && first.re > 0.0);
    }

    #[test]
    fn invalid_density_matrices_are_rejected() {
        let mut m = DMatrix::<Complex64>::identity(2, 2) * c(0.5, 0.0);
        m[(0, 0)] = c(0.7, 0.0);
        assert!(DensityMatrix::new(m).is_err());
        let neg = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.1, 0.0), c(-0.1, 0.0)]));
        assert!(matches!(DensityMatrix::new(neg), Err(Error::Positivity(_))));
    }

    proptest! {
        #[test]
        fn partial_trace_preserves_trace_and_hermiticity(
            re in proptest::collection::vec(-1.0f64..1.0, 12),
            im in proptest::collection::vec(-1.0f64..1.0, 12),
        ) {
            let space = SpaceSpec::rabi(6).unwrap();
            let amps = DVector::from_iterator(12, re.iter().zip(&im).map(|(&r, &i)| c(r, i)));
            prop_assume!(amps.norm() > 1e-3);
            let psi = StateVector::new(amps).unwrap();
            let rho = DensityMatrix::from_pure(&psi);
            let red = rho.partial_trace_emitter(&space).unwrap();
            prop_assert!((red.trace() - c(1.0, 0.0)).norm() < 1e-10);
            prop_assert!(red.hermiticity_error() < 1e-10);
            prop_assert!(red.min_eigenvalue() > -1e-10);
        }
    }
}
