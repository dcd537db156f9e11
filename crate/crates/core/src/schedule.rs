// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Coupling ramp, control fields and the pulse schedule, plus the affine
//! encoding between policy actions in [−1, 1]^d and physical parameters.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on time arguments slightly outside [0, T] due to rounding.
const TIME_SLACK: f64 = 1e-12;

/// g(t) = a₀ + a₁t + a₂t² with g(0) = g₀ and g(T) = g_c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingRamp {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub duration: f64,
    pub g0: f64,
    pub gc: f64,
}

/// Builds the quadratic ramp through (0, g0) and (T, gc) with linear
/// coefficient `a1`.
pub fn make_ramp(g0: f64, gc: f64, duration: f64, a1: f64) -> Result<CouplingRamp> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::invalid("duration", format!("{duration} must be > 0")));
    }
    if !(g0.is_finite() && gc.is_finite() && a1.is_finite()) {
        return Err(Error::invalid("ramp", "non-finite coefficient"));
    }
    let a2 = (gc - g0 - a1 * duration) / (duration * duration);
    Ok(CouplingRamp {
        a0: g0,
        a1,
        a2,
        duration,
        g0,
        gc,
    })
}

/// g(t) with a range check on t.
pub fn eval_ramp(ramp: &CouplingRamp, t: f64) -> Result<f64> {
    ramp.eval(t)
}

impl CouplingRamp {
    /// The linear ramp, a₂ = 0.
    pub fn linear(g0: f64, gc: f64, duration: f64) -> Result<Self> {
        make_ramp(g0, gc, duration, (gc - g0) / duration)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(-TIME_SLACK * self.duration..=self.duration * (1.0 + TIME_SLACK)).contains(&t) {
            return Err(Error::invalid(
                "t",
                format!("{t} outside [0, {}]", self.duration),
            ));
        }
        Ok(self.value(t))
    }

    /// g(t) without a range check.
    pub fn value(&self, t: f64) -> f64 {
        self.a0 + t * (self.a1 + t * self.a2)
    }

    /// Same a₁ and duration, different endpoint.
    pub fn with_endpoint(&self, gc: f64) -> Result<Self> {
        make_ramp(self.g0, gc, self.duration, self.a1)
    }
}

/// The five control operators, in their canonical order i = 1..=5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlKind {
    /// (a + a†)
    Displacement,
    /// (a + a†)²
    QuadratureSquared,
    /// a†a
    PhotonNumber,
    /// σ_z
    QubitZ,
    /// σ_x
    QubitX,
}

impl ControlKind {
    pub const ALL: [ControlKind; 5] = [
        ControlKind::Displacement,
        ControlKind::QuadratureSquared,
        ControlKind::PhotonNumber,
        ControlKind::QubitZ,
        ControlKind::QubitX,
    ];

    /// 1-based index.
    pub fn index(self) -> usize {
        self.slot() + 1
    }

    pub(crate) fn slot(self) -> usize {
        ControlKind::ALL.iter().position(|&k| k == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        match self {
            ControlKind::Displacement => "displacement",
            ControlKind::QuadratureSquared => "quadrature_squared",
            ControlKind::PhotonNumber => "photon_number",
            ControlKind::QubitZ => "qubit_z",
            ControlKind::QubitX => "qubit_x",
        }
    }

    pub fn operator_label(self) -> &'static str {
        match self {
            ControlKind::Displacement => "(a+a†)",
            ControlKind::QuadratureSquared => "(a+a†)²",
            ControlKind::PhotonNumber => "a†a",
            ControlKind::QubitZ => "σz",
            ControlKind::QubitX => "σx",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        ControlKind::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::invalid("control kind", format!("unknown `{name}`")))
    }
}

/// One control field Λᵢ(t) cos(ω_d t + φᵢ) Hᵢᶜ with a zero-order-hold
/// amplitude sequence of length K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlField {
    pub kind: ControlKind,
    pub phase: f64,
    pub amplitudes: Vec<f64>,
}

impl ControlField {
    pub fn zero(kind: ControlKind, steps: usize) -> Self {
        Self {
            kind,
            phase: 0.0,
            amplitudes: vec![0.0; steps],
        }
    }

    pub fn max_abs_amplitude(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.abs()).fold(0.0, f64::max)
    }
}

/// Complete control protocol on the grid t_k = kT/K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleDoc", into = "ScheduleDoc")]
pub struct PulseSchedule {
    pub duration: f64,
    pub steps: usize,
    pub drive_freq: f64,
    pub ramp: CouplingRamp,
    pub fields: Vec<ControlField>,
}

impl PulseSchedule {
    pub fn new(
        duration: f64,
        steps: usize,
        drive_freq: f64,
        ramp: CouplingRamp,
        fields: Vec<ControlField>,
    ) -> Result<Self> {
        let s = Self {
            duration,
            steps,
            drive_freq,
            ramp,
            fields,
        };
        s.validate()?;
        Ok(s)
    }

    /// Ramp only, no control fields.
    pub fn bare(ramp: CouplingRamp, steps: usize) -> Result<Self> {
        Self::new(ramp.duration, steps, 0.0, ramp, Vec::new())
    }

    /// Structural checks: shared K, clamped endpoints, consistent ramp.
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid("duration", format!("{} must be > 0", self.duration)));
        }
        if self.steps < 2 {
            return Err(Error::invalid("steps", format!("{} < 2", self.steps)));
        }
        if !(self.drive_freq.is_finite()) {
            return Err(Error::invalid("drive_freq", "not finite"));
        }
        if (self.ramp.duration - self.duration).abs() > 1e-12 * self.duration {
            return Err(Error::invalid("ramp", "duration differs from schedule"));
        }
        if (self.ramp.a0 - self.ramp.g0).abs() > 1e-12 {
            return Err(Error::invalid("ramp.a0", "g(0) must equal g0"));
        }
        let end = self.ramp.value(self.duration);
        if (end - self.ramp.gc).abs() > 1e-9 * self.ramp.gc.abs().max(1.0) {
            return Err(Error::invalid("ramp", format!("g(T) = {end} but gc = {}", self.ramp.gc)));
        }
        let mut seen = [false; 5];
        for f in &self.fields {
            if std::mem::replace(&mut seen[f.kind.slot()], true) {
                return Err(Error::invalid("fields", format!("duplicate `{}`", f.kind.name())));
            }
            if f.amplitudes.len() != self.steps {
                return Err(Error::invalid(
                    "amplitudes",
                    format!("`{}` has {} entries, expected {}", f.kind.name(), f.amplitudes.len(), self.steps),
                ));
            }
            if f.amplitudes[0] != 0.0 || f.amplitudes[self.steps - 1] != 0.0 {
                return Err(Error::invalid(
                    "amplitudes",
                    format!("`{}` must vanish at the first and last step", f.kind.name()),
                ));
            }
            if f.amplitudes.iter().any(|a| !a.is_finite()) || !f.phase.is_finite() {
                return Err(Error::invalid("fields", format!("`{}` is not finite", f.kind.name())));
            }
        }
        Ok(())
    }

    /// Additionally enforces |Λ| ≤ `amplitude_max`.
    pub fn validate_bounded(&self, amplitude_max: f64) -> Result<()> {
        self.validate()?;
        for f in &self.fields {
            if f.max_abs_amplitude() > amplitude_max * (1.0 + 1e-12) {
                return Err(Error::invalid(
                    "amplitudes",
                    format!("`{}` exceeds Λ_max = {amplitude_max}", f.kind.name()),
                ));
            }
        }
        Ok(())
    }

    pub fn segment_duration(&self) -> f64 {
        self.duration / self.steps as f64
    }

    /// t_k for k = 0..=K.
    pub fn grid(&self) -> Vec<f64> {
        let dt = self.segment_duration();
        (0..=self.steps)
            .map(|k| if k == self.steps { self.duration } else { k as f64 * dt })
            .collect()
    }

    /// [t_{k−1}, t_k] for the 1-based segment index k.
    pub fn segment_bounds(&self, k: usize) -> (f64, f64) {
        let dt = self.segment_duration();
        let end = if k == self.steps { self.duration } else { k as f64 * dt };
        ((k - 1) as f64 * dt, end)
    }

    /// 1-based segment containing t (t = t_k belongs to segment k).
    pub fn segment_of(&self, t: f64) -> usize {
        let k = (t / self.segment_duration() - 1e-12).ceil() as isize;
        k.clamp(1, self.steps as isize) as usize
    }

    pub fn field(&self, kind: ControlKind) -> Option<&ControlField> {
        self.fields.iter().find(|f| f.kind == kind)
    }

    pub fn field_mut(&mut self, kind: ControlKind) -> Option<&mut ControlField> {
        self.fields.iter_mut().find(|f| f.kind == kind)
    }

    /// Λᵢ(t_k) cos(ω_d t + φᵢ) inside the given 1-based segment.
    pub fn drive_in_segment(&self, field: &ControlField, k: usize, t: f64) -> f64 {
        field.amplitudes[k - 1] * (self.drive_freq * t + field.phase).cos()
    }

    /// Copy with every field other than `kind` removed.
    pub fn only_field(&self, kind: ControlKind) -> Self {
        let mut s = self.clone();
        s.fields.retain(|f| f.kind == kind);
        s
    }

    pub fn active_kinds(&self) -> Vec<ControlKind> {
        self.fields.iter().map(|f| f.kind).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parse errors name the JSON path of the offending value.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                Error::Json(inner)
            } else {
                Error::invalid(path, inner.to_string())
            }
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Λᵢ(t_k) cos(ω_d t + φᵢ) for the segment containing t.
pub fn drive_value(field: &ControlField, schedule: &PulseSchedule, t: f64) -> Result<f64> {
    if !(-TIME_SLACK * schedule.duration..=schedule.duration * (1.0 + TIME_SLACK)).contains(&t) {
        return Err(Error::invalid("t", format!("{t} outside [0, {}]", schedule.duration)));
    }
    Ok(schedule.drive_in_segment(field, schedule.segment_of(t), t))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RampDoc {
    a0: f64,
    a1: f64,
    a2: f64,
    g0: f64,
    gc: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleDoc {
    duration: f64,
    steps: usize,
    drive_freq: f64,
    ramp: RampDoc,
    fields: Vec<ControlField>,
}

impl TryFrom<ScheduleDoc> for PulseSchedule {
    type Error = Error;

    fn try_from(doc: ScheduleDoc) -> Result<Self> {
        let ramp = CouplingRamp {
            a0: doc.ramp.a0,
            a1: doc.ramp.a1,
            a2: doc.ramp.a2,
            duration: doc.duration,
            g0: doc.ramp.g0,
            gc: doc.ramp.gc,
        };
        PulseSchedule::new(doc.duration, doc.steps, doc.drive_freq, ramp, doc.fields)
    }
}

impl From<PulseSchedule> for ScheduleDoc {
    fn from(s: PulseSchedule) -> Self {
        ScheduleDoc {
            duration: s.duration,
            steps: s.steps,
            drive_freq: s.drive_freq,
            ramp: RampDoc {
                a0: s.ramp.a0,
                a1: s.ramp.a1,
                a2: s.ramp.a2,
                g0: s.ramp.g0,
                gc: s.ramp.gc,
            },
            fields: s.fields,
        }
    }
}

/// Closed parameter intervals for the action encoding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActionBounds {
    /// ωT range (units 1/ω).
    pub duration: (f64, f64),
    pub drive_freq: (f64, f64),
    pub phase: (f64, f64),
    /// Λ ∈ [−amplitude_max, amplitude_max].
    pub amplitude_max: f64,
    /// a₁ in units of (g_c − g₀)/T; 1 is the linear ramp.
    pub ramp_slope: (f64, f64),
}

impl Default for ActionBounds {
    fn default() -> Self {
        Self {
            duration: (1.0, 6.0),
            drive_freq: (0.0, 5.0),
            phase: (0.0, TAU),
            amplitude_max: 2.0,
            ramp_slope: (0.0, 2.0),
        }
    }
}

impl ActionBounds {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("duration", self.duration),
            ("drive_freq", self.drive_freq),
            ("phase", self.phase),
            ("ramp_slope", self.ramp_slope),
            ("amplitude", (-self.amplitude_max, self.amplitude_max)),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(
                    format!("bounds.{name}"),
                    format!("need finite min < max, got ({lo}, {hi})"),
                ));
            }
        }
        if self.duration.0 <= 0.0 {
            return Err(Error::invalid("bounds.duration", "minimum must be > 0"));
        }
        Ok(())
    }
}

fn to_range(raw: f64, (lo, hi): (f64, f64)) -> f64 {
    lo + (raw + 1.0) * 0.5 * (hi - lo)
}

fn from_range(value: f64, (lo, hi): (f64, f64)) -> f64 {
    2.0 * (value - lo) / (hi - lo) - 1.0
}

/// Layout of the flat action vector:
/// `[T?, ω_d, slope?, φ per active field, interior Λ per active field]`.
/// T is present unless the duration is fixed; the ramp slope is present when
/// the ramp is free. Amplitudes exclude the clamped first and last step.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpace {
    pub bounds: ActionBounds,
    pub steps: usize,
    pub field_mask: [bool; 5],
    pub g0: f64,
    pub gc: f64,
    pub fixed_duration: Option<f64>,
    pub free_ramp: bool,
}

impl ActionSpace {
    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        if self.steps < 3 {
            return Err(Error::invalid("steps", format!("{} < 3", self.steps)));
        }
        if let Some(t) = self.fixed_duration {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::invalid("duration", format!("{t} must be > 0")));
            }
        }
        Ok(())
    }

    pub fn active_kinds(&self) -> Vec<ControlKind> {
        ControlKind::ALL
            .into_iter()
            .filter(|k| self.field_mask[k.slot()])
            .collect()
    }

    pub fn n_active(&self) -> usize {
        self.field_mask.iter().filter(|&&m| m).count()
    }

    /// Number of leading entries that are not per-step amplitudes.
    pub fn n_global(&self) -> usize {
        usize::from(self.fixed_duration.is_none()) + 1 + usize::from(self.free_ramp) + self.n_active()
    }

    pub fn interior_steps(&self) -> usize {
        self.steps - 2
    }

    pub fn dim(&self) -> usize {
        self.n_global() + self.n_active() * self.interior_steps()
    }

    /// Offset of the interior amplitude block for the j-th active field.
    pub fn amplitude_offset(&self, active_index: usize) -> usize {
        self.n_global() + active_index * self.interior_steps()
    }

    fn amplitude_range(&self) -> (f64, f64) {
        (-self.bounds.amplitude_max, self.bounds.amplitude_max)
    }

    /// Physical parameters in layout order (T, ω_d, slope, φ…, Λ…).
    pub fn decode_parameters(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: raw.len(),
            });
        }
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("action".into()));
        }
        let mut it = raw.iter().map(|x| x.clamp(-1.0, 1.0));
        let mut out = Vec::with_capacity(raw.len());
        if self.fixed_duration.is_none() {
            out.push(to_range(it.next().unwrap(), self.bounds.duration));
        }
        out.push(to_range(it.next().unwrap(), self.bounds.drive_freq));
        if self.free_ramp {
            out.push(to_range(it.next().unwrap(), self.bounds.ramp_slope));
        }
        for _ in 0..self.n_active() {
            out.push(to_range(it.next().unwrap(), self.bounds.phase));
        }
        out.extend(it.map(|x| to_range(x, self.amplitude_range())));
        Ok(out)
    }

    /// Raw action → schedule. Deterministic, affine per component.
    pub fn decode(&self, raw: &[f64]) -> Result<PulseSchedule> {
        let params = self.decode_parameters(raw)?;
        let mut it = params.into_iter();
        let duration = self.fixed_duration.unwrap_or_else(|| it.next().unwrap());
        let drive_freq = it.next().unwrap();
        let slope = if self.free_ramp { it.next().unwrap() } else { 1.0 };
        let kinds = self.active_kinds();
        let phases: Vec<f64> = it.by_ref().take(kinds.len()).collect();
        let interior: Vec<f64> = it.collect();
        let a1 = slope * (self.gc - self.g0) / duration;
        let ramp = make_ramp(self.g0, self.gc, duration, a1)?;
        let n_int = self.interior_steps();
        let fields = kinds
            .into_iter()
            .enumerate()
            .map(|(j, kind)| {
                let mut amplitudes = vec![0.0; self.steps];
                amplitudes[1..self.steps - 1].copy_from_slice(&interior[j * n_int..(j + 1) * n_int]);
                ControlField {
                    kind,
                    phase: phases[j],
                    amplitudes,
                }
            })
            .collect();
        PulseSchedule::new(duration, self.steps, drive_freq, ramp, fields)
    }

    /// Inverse of [`decode`](Self::decode) for schedules inside the bounds.
    pub fn encode(&self, schedule: &PulseSchedule) -> Result<Vec<f64>> {
        if schedule.steps != self.steps {
            return Err(Error::invalid("steps", "schedule grid differs from action space"));
        }
        let mut out = Vec::with_capacity(self.dim());
        if self.fixed_duration.is_none() {
            out.push(from_range(schedule.duration, self.bounds.duration));
        }
        out.push(from_range(schedule.drive_freq, self.bounds.drive_freq));
        if self.free_ramp {
            let slope = schedule.ramp.a1 * schedule.duration / (self.gc - self.g0);
            out.push(from_range(slope, self.bounds.ramp_slope));
        }
        let kinds = self.active_kinds();
        let mut fields = Vec::with_capacity(kinds.len());
        for kind in kinds {
            let f = schedule
                .field(kind)
                .ok_or_else(|| Error::invalid("fields", format!("missing `{}`", kind.name())))?;
            out.push(from_range(f.phase, self.bounds.phase));
            fields.push(f);
        }
        for f in fields {
            out.extend(
                f.amplitudes[1..self.steps - 1]
                    .iter()
                    .map(|&a| from_range(a, self.amplitude_range())),
            );
        }
        Ok(out)
    }
}

/// Decodes a raw action vector; see [`ActionSpace`].
pub fn decode_action(raw: &[f64], space: &ActionSpace) -> Result<PulseSchedule> {
    space.decode(raw)
}
