// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::DMatrix;

use crate::schedule::PulseSchedule;
use crate::sparse::{Csr, OperatorSum};

/// H(t) on one schedule as a coefficient vector over fixed sparse terms:
/// [H_free, H_coupling, Hᵢᶜ for every field with a non-zero amplitude].
pub(crate) struct Generator<'a> {
    schedule: &'a PulseSchedule,
    sum: OperatorSum,
    fields: Vec<usize>,
    coeffs: Vec<f64>,
    pub max_freq: f64,
}

impl<'a> Generator<'a> {
    pub fn new(
        schedule: &'a PulseSchedule,
        free: &DMatrix<f64>,
        coupling: &DMatrix<f64>,
        controls: &[DMatrix<f64>; 5],
        model_freq: f64,
    ) -> Self {
        let fields: Vec<usize> = schedule
            .fields
            .iter()
            .enumerate()
            .filter(|(_, f)| f.amplitudes.iter().any(|&a| a != 0.0))
            .map(|(i, _)| i)
            .collect();
        let mut terms = vec![free, coupling];
        terms.extend(fields.iter().map(|&i| &controls[schedule.fields[i].kind.slot()]));
        let n_terms = terms.len();
        Self {
            schedule,
            sum: OperatorSum::new(&terms),
            fields,
            coeffs: vec![0.0; n_terms],
            max_freq: model_freq.max(schedule.drive_freq.abs()),
        }
    }

    pub fn template(&self) -> Csr {
        self.sum.combine(&vec![0.0; self.sum.n_terms()])
    }

    fn fill(&mut self, k: usize, t: f64) {
        self.coeffs[0] = 1.0;
        self.coeffs[1] = self.schedule.ramp.value(t);
        for (j, &i) in self.fields.iter().enumerate() {
            self.coeffs[2 + j] = self.schedule.drive_in_segment(&self.schedule.fields[i], k, t);
        }
    }

    /// H(t) inside 1-based segment k.
    pub fn at(&mut self, k: usize, t: f64, out: &mut Csr) {
        self.fill(k, t);
        self.sum.combine_into(&self.coeffs, out);
    }

    /// Weighted combination Σ_j w_j H(t_j) within segment k.
    pub fn blend(&mut self, k: usize, points: &[(f64, f64)], out: &mut Csr) {
        let mut total = vec![0.0; self.coeffs.len()];
        for &(w, t) in points {
            self.fill(k, t);
            for (acc, c) in total.iter_mut().zip(&self.coeffs) {
                *acc += w * c;
            }
        }
        self.sum.combine_into(&total, out);
    }

    /// (start, end, substeps) for part `part` of `parts` equal pieces of segment k.
    pub fn substeps(&self, k: usize, part: usize, parts: usize, max_phase_step: f64) -> (f64, f64, usize) {
        let (t0, t1) = self.schedule.segment_bounds(k);
        let len = (t1 - t0) / parts as f64;
        let a = t0 + part as f64 * len;
        let b = if part + 1 == parts { t1 } else { a + len };
        let n = ((b - a) * self.max_freq / max_phase_step).ceil().max(1.0) as usize;
        (a, b, n)
    }
}
