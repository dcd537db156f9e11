// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Cavity Wigner function in quadrature coordinates, α = (x + ip)/√2,
//! normalized so that ∫W dx dp = 1 (vacuum: W(0, 0) = 1/π).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::DensityMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseGrid {
    pub x: (f64, f64),
    pub p: (f64, f64),
    pub nx: usize,
    pub np: usize,
}

impl Default for PhaseGrid {
    fn default() -> Self {
        Self {
            x: (-4.0, 4.0),
            p: (-4.0, 4.0),
            nx: 81,
            np: 81,
        }
    }
}

fn linspace((a, b): (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

impl PhaseGrid {
    pub fn xs(&self) -> Vec<f64> {
        linspace(self.x, self.nx)
    }

    pub fn ps(&self) -> Vec<f64> {
        linspace(self.p, self.np)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.np == 0 {
            return Err(Error::invalid("grid", "needs at least one point per axis"));
        }
        if ![self.x.0, self.x.1, self.p.0, self.p.1].iter().all(|v| v.is_finite()) || self.x.0 > self.x.1 || self.p.0 > self.p.1 {
            return Err(Error::invalid("grid", "bounds must be finite and ordered"));
        }
        Ok(())
    }

    /// Largest |α|² on the grid.
    pub fn max_alpha_sqr(&self) -> f64 {
        let x = self.x.0.abs().max(self.x.1.abs());
        let p = self.p.0.abs().max(self.p.1.abs());
        0.5 * (x * x + p * p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    /// values[i][j] = W(x_i, p_j).
    pub values: Vec<Vec<f64>>,
}

impl WignerGrid {
    /// Riemann sum of W over the grid.
    pub fn integral(&self) -> f64 {
        let dx = if self.x.len() > 1 { self.x[1] - self.x[0] } else { 1.0 };
        let dp = if self.p.len() > 1 { self.p[1] - self.p[0] } else { 1.0 };
        self.values.iter().flatten().sum::<f64>() * dx * dp
    }

    /// (⟨x²⟩, ⟨p²⟩) from the grid, normalized by the grid integral.
    pub fn second_moments(&self) -> (f64, f64) {
        let (mut sx, mut sp, mut z) = (0.0, 0.0, 0.0);
        for (i, row) in self.values.iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                sx += w * self.x[i] * self.x[i];
                sp += w * self.p[j] * self.p[j];
                z += w;
            }
        }
        (sx / z, sp / z)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }
}

/// W on the grid for a cavity density matrix, by the Laguerre-polynomial
/// recursion over Fock matrix elements.
pub fn wigner_function(rho: &DensityMatrix, grid: &PhaseGrid) -> Result<WignerGrid> {
    grid.validate()?;
    let n = rho.dim();
    if grid.max_alpha_sqr() > 2.0 * n as f64 {
        return Err(Error::invalid(
            "grid",
            format!("|α|² up to {:.1} exceeds twice the cutoff {n}", grid.max_alpha_sqr()),
        ));
    }
    let r = rho.entries();
    let (xs, ps) = (grid.xs(), grid.ps());
    let mut w_list = vec![Complex64::new(0.0, 0.0); n];
    let sqrt: Vec<f64> = (0..=n).map(|k| (k as f64).sqrt()).collect();
    let values = xs
        .iter()
        .map(|&x| {
            ps.iter()
                .map(|&p| {
                    let a = Complex64::new(x, p) * std::f64::consts::FRAC_1_SQRT_2;
                    w_list[0] = Complex64::new((-2.0 * a.norm_sqr()).exp() / std::f64::consts::PI, 0.0);
                    let mut w = r[(0, 0)].re * w_list[0].re;
                    for k in 1..n {
                        w_list[k] = 2.0 * a * w_list[k - 1] / sqrt[k];
                        w += 2.0 * (r[(0, k)] * w_list[k]).re;
                    }
                    for m in 1..n {
                        let mut temp = w_list[m];
                        w_list[m] = (2.0 * a.conj() * temp - sqrt[m] * w_list[m - 1]) / sqrt[m];
                        w += (r[(m, m)] * w_list[m]).re;
                        for k in m + 1..n {
                            let next = (2.0 * a * w_list[k - 1] - sqrt[m] * temp) / sqrt[k];
                            temp = w_list[k];
                            w_list[k] = next;
                            w += 2.0 * (r[(m, k)] * w_list[k]).re;
                        }
                    }
                    w
                })
                .collect()
        })
        .collect();
    Ok(WignerGrid { x: xs, p: ps, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{squeezed_vacuum_amplitudes, StateVector};
    use crate::linalg::expm;
    use nalgebra::{DMatrix, DVector};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pure(amps: Vec<Complex64>) -> DensityMatrix {
        DensityMatrix::from_pure(&StateVector::new(DVector::from_vec(amps)).unwrap())
    }

    /// (1/π)Tr[ρ D(α) Π D†(α)] with D from a dense exponential on a larger
    /// space, used only as an oracle.
    fn displaced_parity(rho: &DensityMatrix, x: f64, p: f64) -> f64 {
        let n = rho.dim();
        let big = n + 60;
        let alpha = c(x, p) / 2f64.sqrt();
        let gen = DMatrix::from_fn(big, big, |i, j| {
            if i == j + 1 {
                alpha * (i as f64).sqrt()
            } else if j == i + 1 {
                -alpha.conj() * (j as f64).sqrt()
            } else {
                c(0.0, 0.0)
            }
        });
        let d = expm(&gen);
        let mut rho_big = DMatrix::zeros(big, big);
        rho_big.view_mut((0, 0), (n, n)).copy_from(rho.entries());
        let shifted = d.adjoint() * rho_big * &d;
        let parity: Complex64 = (0..big).map(|k| if k % 2 == 0 { shifted[(k, k)] } else { -shifted[(k, k)] }).sum();
        parity.re / std::f64::consts::PI
    }

    #[test]
    fn vacuum_at_origin() {
        let mut amps = vec![c(0.0, 0.0); 10];
        amps[0] = c(1.0, 0.0);
        let grid = PhaseGrid::default();
        let w = wigner_function(&pure(amps), &grid).unwrap();
        assert!((w.values[40][40] - 1.0 / std::f64::consts::PI).abs() < 1e-14);
        assert!(w.min_value() > 0.0);
        assert!((w.integral() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn matches_displaced_parity_oracle() {
        let amps = vec![c(0.5, 0.1), c(-0.3, 0.4), c(0.2, -0.2), c(0.0, 0.3), c(0.25, 0.0)];
        let rho = pure(amps);
        let grid = PhaseGrid {
            x: (-1.5, 1.0),
            p: (-0.5, 2.0),
            nx: 3,
            np: 4,
        };
        let w = wigner_function(&rho, &grid).unwrap();
        for (i, &x) in w.x.iter().enumerate() {
            for (j, &p) in w.p.iter().enumerate() {
                let o = displaced_parity(&rho, x, p);
                assert!((w.values[i][j] - o).abs() < 1e-10, "({x},{p}): {} vs {o}", w.values[i][j]);
            }
        }
    }

    #[test]
    fn squeezed_vacuum_anisotropy() {
        let r = 0.4;
        let amps: Vec<Complex64> = squeezed_vacuum_amplitudes(r, 40).into_iter().map(|a| c(a, 0.0)).collect();
        let grid = PhaseGrid {
            x: (-6.0, 6.0),
            p: (-6.0, 6.0),
            nx: 121,
            np: 121,
        };
        let w = wigner_function(&pure(amps), &grid).unwrap();
        let (x2, p2) = w.second_moments();
        let ratio = (x2 / p2).sqrt();
        assert!((ratio - (2.0 * r).exp()).abs() / (2.0 * r).exp() < 1e-3, "{ratio}");
        assert!((w.integral() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn oversized_grid_is_rejected() {
        let mut amps = vec![c(0.0, 0.0); 4];
        amps[0] = c(1.0, 0.0);
        assert!(wigner_function(&pure(amps), &PhaseGrid::default()).is_err());
    }
}
