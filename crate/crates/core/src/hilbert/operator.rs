// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{SpaceSpec, StateVector};
use crate::error::{check_dim, Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;

/// Dense complex operator on a truncated space.
///
/// The `hermitian` flag is only ever set after the entries have been checked
/// against their adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    entries: DMatrix<Complex64>,
    hermitian: bool,
}

impl OperatorMatrix {
    /// Wraps a square matrix without any Hermiticity claim.
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        check_dim(entries.nrows(), entries.ncols())?;
        Ok(Self {
            entries,
            hermitian: false,
        })
    }

    /// Wraps a square matrix and certifies it Hermitian.
    pub fn hermitian(entries: DMatrix<Complex64>) -> Result<Self> {
        let mut op = Self::new(entries)?;
        let dev = op.hermiticity_error();
        if dev >= HERMITIAN_TOL {
            return Err(Error::invalid(
                "operator",
                format!("not Hermitian (max |M - M†| = {dev:.3e})"),
            ));
        }
        op.hermitian = true;
        Ok(op)
    }

    pub fn from_real(entries: DMatrix<f64>) -> Result<Self> {
        Self::new(entries.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: DMatrix::zeros(dim, dim),
            hermitian: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    /// max |M − M†| over all entries.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.entries[(i, j)] - self.entries[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Largest |Im| over all entries.
    pub fn max_imag(&self) -> f64 {
        self.entries.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Real part, if the imaginary part vanishes identically.
    pub fn as_real(&self) -> Option<DMatrix<f64>> {
        (self.max_imag() == 0.0).then(|| self.entries.map(|z| z.re))
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            hermitian: self.hermitian,
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            entries: &self.entries * Complex64::new(factor, 0.0),
            hermitian: self.hermitian,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            entries: &self.entries + &other.entries,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    /// self + factor · other, with a real factor.
    pub fn add_scaled(&self, other: &Self, factor: f64) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            entries: &self.entries + &other.entries * Complex64::new(factor, 0.0),
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            entries: &self.entries * &other.entries,
            hermitian: false,
        })
    }

    /// Kronecker product self ⊗ other.
    pub fn kron(&self, other: &Self) -> Self {
        Self {
            entries: self.entries.kronecker(&other.entries),
            hermitian: self.hermitian && other.hermitian,
        }
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        check_dim(self.dim(), psi.dim())?;
        Ok(StateVector::from_amplitudes_unchecked(
            &self.entries * psi.amplitudes(),
        ))
    }

    /// ⟨ψ|M|ψ⟩
    pub fn expectation(&self, psi: &StateVector) -> Result<Complex64> {
        let m_psi = self.apply(psi)?;
        Ok(psi.amplitudes().dotc(m_psi.amplitudes()))
    }

    /// max |M†M − I| entrywise.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.dim();
        let prod = self.entries.adjoint() * &self.entries;
        (prod - DMatrix::<Complex64>::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

fn real_matrix(dim: usize, f: impl Fn(usize, usize) -> f64) -> DMatrix<Complex64> {
    DMatrix::from_fn(dim, dim, |i, j| Complex64::new(f(i, j), 0.0))
}

fn cavity_annihilation(n: usize) -> DMatrix<Complex64> {
    real_matrix(n, |i, j| if j == i + 1 { (j as f64).sqrt() } else { 0.0 })
}

/// Embeds a cavity-factor matrix as `A ⊗ 1`.
pub fn cavity_op(space: &SpaceSpec, factor: DMatrix<Complex64>) -> Result<OperatorMatrix> {
    check_dim(space.fock_cutoff(), factor.nrows())?;
    let id = DMatrix::<Complex64>::identity(space.qubit_levels(), space.qubit_levels());
    OperatorMatrix::new(factor.kronecker(&id))
}

/// Embeds an emitter-factor matrix as `1 ⊗ B`.
pub fn emitter_op(space: &SpaceSpec, factor: DMatrix<Complex64>) -> Result<OperatorMatrix> {
    check_dim(space.qubit_levels(), factor.nrows())?;
    let id = DMatrix::<Complex64>::identity(space.fock_cutoff(), space.fock_cutoff());
    OperatorMatrix::new(id.kronecker(&factor))
}

fn certified(op: Result<OperatorMatrix>) -> OperatorMatrix {
    let op = op.expect("factor dimensions come from the same SpaceSpec");
    let entries = op.into_entries();
    OperatorMatrix::hermitian(entries).expect("built from a Hermitian factor")
}

pub fn identity_op(space: &SpaceSpec) -> OperatorMatrix {
    let n = space.total_dim();
    OperatorMatrix {
        entries: DMatrix::identity(n, n),
        hermitian: true,
    }
}

/// Cavity annihilation operator `a ⊗ 1`; the cavity factor has ⟨n−1|a|n⟩ = √n.
pub fn annihilation_op(space: &SpaceSpec) -> OperatorMatrix {
    cavity_op(space, cavity_annihilation(space.fock_cutoff())).expect("sized from space")
}

pub fn creation_op(space: &SpaceSpec) -> OperatorMatrix {
    annihilation_op(space).adjoint()
}

/// `a†a ⊗ 1`
pub fn number_op(space: &SpaceSpec) -> OperatorMatrix {
    let n = space.fock_cutoff();
    certified(cavity_op(
        space,
        real_matrix(n, |i, j| if i == j { i as f64 } else { 0.0 }),
    ))
}

/// `(a + a†) ⊗ 1`
pub fn quadrature_op(space: &SpaceSpec) -> OperatorMatrix {
    let a = cavity_annihilation(space.fock_cutoff());
    certified(cavity_op(space, &a + a.adjoint()))
}

/// `(a + a†)² ⊗ 1`, squared within the truncated cavity space.
pub fn quadrature_squared_op(space: &SpaceSpec) -> OperatorMatrix {
    let a = cavity_annihilation(space.fock_cutoff());
    let x = &a + a.adjoint();
    certified(cavity_op(space, &x * &x))
}

fn require_two_level(space: &SpaceSpec) {
    assert_eq!(
        space.qubit_levels(),
        2,
        "Pauli operators need a two-level emitter"
    );
}

/// `1 ⊗ σ_z` with σ_z|↓⟩ = −|↓⟩.
pub fn sigma_z_op(space: &SpaceSpec) -> OperatorMatrix {
    require_two_level(space);
    certified(emitter_op(
        space,
        real_matrix(2, |i, j| match (i, j) {
            (0, 0) => -1.0,
            (1, 1) => 1.0,
            _ => 0.0,
        }),
    ))
}

/// `1 ⊗ σ_x`
pub fn sigma_x_op(space: &SpaceSpec) -> OperatorMatrix {
    require_two_level(space);
    certified(emitter_op(
        space,
        real_matrix(2, |i, j| if i != j { 1.0 } else { 0.0 }),
    ))
}

/// `1 ⊗ σ₋` with σ₋|↑⟩ = |↓⟩.
pub fn sigma_minus_op(space: &SpaceSpec) -> OperatorMatrix {
    require_two_level(space);
    emitter_op(
        space,
        real_matrix(2, |i, j| if (i, j) == (0, 1) { 1.0 } else { 0.0 }),
    )
    .expect("sized from space")
}

fn spin_j(space: &SpaceSpec) -> f64 {
    (space.qubit_levels() as f64 - 1.0) / 2.0
}

/// Collective `1 ⊗ J_z` on the spin-(L−1)/2 representation.
pub fn spin_jz_op(space: &SpaceSpec) -> OperatorMatrix {
    let j = spin_j(space);
    let l = space.qubit_levels();
    certified(emitter_op(
        space,
        real_matrix(l, |r, c| if r == c { r as f64 - j } else { 0.0 }),
    ))
}

/// Collective `1 ⊗ J_x = (J₊ + J₋)/2`.
pub fn spin_jx_op(space: &SpaceSpec) -> OperatorMatrix {
    let j = spin_j(space);
    let l = space.qubit_levels();
    // ⟨m+1|J₊|m⟩ = √(j(j+1) − m(m+1))
    let jplus = |r: usize, c: usize| {
        if r == c + 1 {
            let m = c as f64 - j;
            (j * (j + 1.0) - m * (m + 1.0)).sqrt()
        } else {
            0.0
        }
    };
    certified(emitter_op(
        space,
        real_matrix(l, |r, c| 0.5 * (jplus(r, c) + jplus(c, r))),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_level_cavity_factor_is_raising_pattern() {
        let space = SpaceSpec::cavity(2).unwrap();
        let a = annihilation_op(&space);
        assert_eq!(a.get(0, 1).re, 1.0);
        assert_eq!(a.get(1, 0).re, 0.0);
        assert_eq!(a.get(0, 0).re, 0.0);
        assert_eq!(a.get(1, 1).re, 0.0);
    }

    #[test]
    fn annihilation_entry_is_sqrt_n() {
        let space = SpaceSpec::rabi(4).unwrap();
        let a = annihilation_op(&space);
        // cavity entry (2,3) with the emitter index held at |↓⟩
        let v = a.get(space.index(2, 0), space.index(3, 0)).re;
        assert!((v - 1.732_050_8).abs() < 1e-7);
        assert_eq!(a.get(space.index(2, 0), space.index(3, 1)).re, 0.0);
    }

    #[test]
    fn number_operator_counts_photons() {
        let space = SpaceSpec::rabi(6).unwrap();
        let n = number_op(&space);
        let fock3 = StateVector::basis(space.total_dim(), space.index(3, 1)).unwrap();
        let out = n.apply(&fock3).unwrap();
        assert!((out.amplitudes()[space.index(3, 1)].re - 3.0).abs() < 1e-14);
        // a†a built by multiplication agrees
        let a = annihilation_op(&space);
        let ada = a.adjoint().matmul(&a).unwrap();
        assert!((ada.entries() - n.entries()).norm() < 1e-12);
    }

    #[test]
    fn builders_are_hermitian() {
        let space = SpaceSpec::rabi(9).unwrap();
        for op in [
            number_op(&space),
            quadrature_op(&space),
            quadrature_squared_op(&space),
            sigma_z_op(&space),
            sigma_x_op(&space),
        ] {
            assert!(op.is_hermitian());
            assert!(op.hermiticity_error() < 1e-12);
        }
        assert!(!annihilation_op(&space).is_hermitian());
    }

    #[test]
    fn spin_two_jz_spectrum() {
        let space = SpaceSpec::dicke(2, 4).unwrap();
        let jz = spin_jz_op(&space);
        let mut diag: Vec<f64> = (0..5).map(|s| jz.get(s, s).re).collect();
        diag.sort_by(f64::total_cmp);
        assert_eq!(diag, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn spin_half_collective_ops_are_half_paulis() {
        let dicke = SpaceSpec::dicke(3, 1).unwrap();
        let rabi = SpaceSpec::rabi(3).unwrap();
        let jx2 = spin_jx_op(&dicke).scale(2.0);
        let jz2 = spin_jz_op(&dicke).scale(2.0);
        assert!((jx2.entries() - sigma_x_op(&rabi).entries()).norm() < 1e-14);
        assert!((jz2.entries() - sigma_z_op(&rabi).entries()).norm() < 1e-14);
    }

    #[test]
    fn spin_casimir_on_top_state() {
        let space = SpaceSpec::dicke(2, 3).unwrap();
        let jx = spin_jx_op(&space);
        let jz = spin_jz_op(&space);
        let casimir_part = jx.matmul(&jx).unwrap().add(&jz.matmul(&jz).unwrap()).unwrap();
        // ⟨m=j|J_x² + J_z²|m=j⟩ = j/2 + j² for j = 3/2
        let top = space.index(0, 3);
        let want = 1.5 / 2.0 + 1.5 * 1.5;
        assert!((casimir_part.get(top, top).re - want).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = identity_op(&SpaceSpec::rabi(3).unwrap());
        let b = identity_op(&SpaceSpec::rabi(4).unwrap());
        assert!(matches!(
            a.add(&b),
            Err(Error::DimensionMismatch {
                expected: 6,
                found: 8
            })
        ));
    }

    #[test]
    fn non_hermitian_matrix_is_rejected() {
        let space = SpaceSpec::rabi(3).unwrap();
        let a = annihilation_op(&space);
        assert!(OperatorMatrix::hermitian(a.into_entries()).is_err());
    }
}
