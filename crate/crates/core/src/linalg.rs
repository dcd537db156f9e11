// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense matrix exponential (scaling and squaring with a [13/13] Padé
//! approximant, Higham 2005).

use nalgebra::DMatrix;
use num_complex::Complex64;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// exp(A) for a dense complex square matrix.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    let norm = one_norm(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scale = Complex64::new(2f64.powi(-squarings), 0.0);
    let a = a * scale;
    let ident = DMatrix::<Complex64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |i: usize| Complex64::new(PADE13[i], 0.0);

    let u_inner = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    let u = &a * (&a6 * u_inner + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &ident * b(1));
    let v_inner = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    let v = &a6 * v_inner + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &ident * b(0);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular for scaled arguments");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}
