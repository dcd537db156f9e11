// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Real CSR matrices acting on complex vectors, the exponential action
//! exp(−iτA)ψ and an adaptive Dormand–Prince stepper.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Real matrix in compressed-sparse-row form.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Csr {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        OperatorSum::new(&[m]).combine(&[1.0])
    }

    #[cfg(test)]
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Largest absolute row sum; bounds the spectral radius.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.vals[self.row_ptr[r]..self.row_ptr[r + 1]].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    #[inline]
    pub fn matvec(&self, x: &[C], y: &mut [C]) {
        for r in 0..self.dim {
            let mut acc = ZERO;
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += x[self.cols[idx]] * self.vals[idx];
            }
            y[r] = acc;
        }
    }

    /// A·X where X is `ncols` column-major columns of length `dim`.
    pub fn mul_cols(&self, x: &[C], ncols: usize, out: &mut [C]) {
        let d = self.dim;
        for j in 0..ncols {
            self.matvec(&x[j * d..(j + 1) * d], &mut out[j * d..(j + 1) * d]);
        }
    }

    #[cfg(test)]
    pub fn transpose(&self) -> Self {
        let mut dense = DMatrix::<f64>::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                dense[(self.cols[idx], r)] = self.vals[idx];
            }
        }
        Self::from_dense(&dense)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut dense = DMatrix::<f64>::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                dense[(r, self.cols[idx])] = self.vals[idx];
            }
        }
        dense
    }
}

/// Linear combination Σ cᵢ Aᵢ of fixed real matrices on their union pattern.
#[derive(Debug, Clone)]
pub(crate) struct OperatorSum {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    terms: Vec<Vec<f64>>,
}

impl OperatorSum {
    pub fn new(terms: &[&DMatrix<f64>]) -> Self {
        let dim = terms.first().map_or(0, |m| m.nrows());
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for r in 0..dim {
            for c in 0..dim {
                if terms.iter().any(|m| m[(r, c)] != 0.0) {
                    cols.push(c);
                }
            }
            row_ptr.push(cols.len());
        }
        let values = terms
            .iter()
            .map(|m| {
                (0..dim)
                    .flat_map(|r| (row_ptr[r]..row_ptr[r + 1]).map(move |i| (r, i)))
                    .map(|(r, i)| m[(r, cols[i])])
                    .collect()
            })
            .collect();
        Self {
            dim,
            row_ptr,
            cols,
            terms: values,
        }
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn combine(&self, coeffs: &[f64]) -> Csr {
        let mut out = Csr {
            dim: self.dim,
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            vals: vec![0.0; self.cols.len()],
        };
        self.combine_into(coeffs, &mut out);
        out
    }

    /// Overwrites the values of `out`, which must share this pattern.
    pub fn combine_into(&self, coeffs: &[f64], out: &mut Csr) {
        debug_assert_eq!(coeffs.len(), self.terms.len());
        out.vals.iter_mut().for_each(|v| *v = 0.0);
        for (c, term) in coeffs.iter().zip(&self.terms) {
            if *c != 0.0 {
                for (v, t) in out.vals.iter_mut().zip(term) {
                    *v += c * t;
                }
            }
        }
    }
}

fn max_abs(x: &[C]) -> f64 {
    x.iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max)
}

/// Reusable buffers for [`expmv`].
#[derive(Debug, Clone)]
pub(crate) struct ExpmvWork {
    term: Vec<C>,
    next: Vec<C>,
}

impl ExpmvWork {
    pub fn new(dim: usize) -> Self {
        Self {
            term: vec![ZERO; dim],
            next: vec![ZERO; dim],
        }
    }
}

const TAYLOR_RADIUS: f64 = 2.0;
const TAYLOR_MAX_TERMS: usize = 60;

/// ψ ← exp(−iτA)ψ by a truncated Taylor series with norm-based splitting.
pub(crate) fn expmv(a: &Csr, tau: f64, psi: &mut [C], work: &mut ExpmvWork) -> Result<()> {
    let norm = a.norm_inf() * tau.abs();
    if norm == 0.0 {
        return Ok(());
    }
    let pieces = (norm / TAYLOR_RADIUS).ceil().max(1.0) as usize;
    let h = tau / pieces as f64;
    let tol = f64::EPSILON / 2.0;
    for _ in 0..pieces {
        work.term.copy_from_slice(psi);
        let mut small_run = 0;
        let mut converged = false;
        for k in 1..=TAYLOR_MAX_TERMS {
            a.matvec(&work.term, &mut work.next);
            let f = C::new(0.0, -h / k as f64);
            for z in work.next.iter_mut() {
                *z *= f;
            }
            std::mem::swap(&mut work.term, &mut work.next);
            for (p, t) in psi.iter_mut().zip(&work.term) {
                *p += t;
            }
            if max_abs(&work.term) <= tol * max_abs(psi) {
                small_run += 1;
                if small_run == 2 {
                    converged = true;
                    break;
                }
            } else {
                small_run = 0;
            }
        }
        if !converged {
            return Err(Error::Integrator("Taylor series did not converge".into()));
        }
        if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("state propagation".into()));
        }
    }
    Ok(())
}

/// Step-size controls for [`dopri45`].
#[derive(Debug, Clone, Copy)]
pub(crate) struct RkTolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_steps: usize,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const C_NODES: [f64; 5] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0];

/// Integrates y' = f(t, y) from t0 to t1 with the Dormand–Prince 5(4) pair.
/// `h` carries the step-size guess in and the last accepted step out.
pub(crate) fn dopri45<F>(mut f: F, t0: f64, t1: f64, y: &mut [C], h: &mut f64, tol: RkTolerance) -> Result<()>
where
    F: FnMut(f64, &[C], &mut [C]),
{
    let n = y.len();
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok(());
    }
    let mut k: [Vec<C>; 7] = std::array::from_fn(|_| vec![ZERO; n]);
    let mut tmp = vec![ZERO; n];
    let mut y_new = vec![ZERO; n];
    let mut t = t0;
    if !(*h > 0.0) || *h > span {
        *h = span;
    }
    f(t, y, &mut k[0]);
    let mut steps = 0;
    while t < t1 {
        steps += 1;
        if steps > tol.max_steps {
            return Err(Error::Integrator(format!("exceeded {} steps", tol.max_steps)));
        }
        let last = t + *h >= t1 - 1e-14 * span;
        let step = if last { t1 - t } else { *h };
        let stages: [(&[f64], usize); 5] = [
            (&[A21], 1),
            (&[A31, A32], 2),
            (&[A41, A42, A43], 3),
            (&[A51, A52, A53, A54], 4),
            (&[A61, A62, A63, A64, A65], 5),
        ];
        for (s, (coeffs, idx)) in stages.iter().enumerate() {
            for i in 0..n {
                let mut acc = ZERO;
                for (j, c) in coeffs.iter().enumerate() {
                    acc += k[j][i] * *c;
                }
                tmp[i] = y[i] + acc * step;
            }
            f(t + C_NODES[s] * step, &tmp, &mut k[*idx]);
        }
        for i in 0..n {
            y_new[i] = y[i] + (k[0][i] * B1 + k[2][i] * B3 + k[3][i] * B4 + k[4][i] * B5 + k[5][i] * B6) * step;
        }
        f(t + step, &y_new, &mut k[6]);
        let mut err = 0.0;
        for i in 0..n {
            let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7) * step;
            let scale = tol.abs + tol.rel * y[i].norm().max(y_new[i].norm());
            err += (e.norm() / scale).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::NonFinite("Runge-Kutta step".into()));
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        if err <= 1.0 {
            t = if last { t1 } else { t + step };
            y.copy_from_slice(&y_new);
            k.swap(0, 6);
            if !last {
                *h = step * factor;
            }
        } else {
            *h = step * factor.min(1.0);
            if *h < 1e-14 * span {
                return Err(Error::Integrator("step size underflow".into()));
            }
        }
    }
    Ok(())
}
