//! Ramp schedules and time evolution under `H(t) = sum_k s_k(t) H_k`.
//!
//! Each step freezes the Hamiltonian at the step midpoint and applies the
//! exponential with a short Lanczos (Krylov) expansion. The scheme is
//! second order, exactly time-symmetric, and unitary up to the Krylov
//! truncation tolerance.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::operators::{SparseOperator, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    /// `start + (end - start) sin^4(pi tau / 2)`.
    Sin4Up,
    /// Mirror image of [`Shape::Sin4Up`]: `start + (end - start) (1 - cos^4(pi tau / 2))`.
    Sin4Down,
    /// Holds `start_value`.
    Constant,
    /// `start_value * sin(omega (t - t_start) + phase)`.
    Sinusoid { omega: f64, phase: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    #[serde(flatten)]
    pub shape: Shape,
    pub start_value: f64,
    pub end_value: f64,
}

impl Segment {
    fn value(&self, t: f64) -> f64 {
        let len = self.t_end - self.t_start;
        let tau = if len > 0.0 {
            ((t - self.t_start) / len).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let span = self.end_value - self.start_value;
        match self.shape {
            Shape::Sin4Up => self.start_value + span * (PI * tau / 2.0).sin().powi(4),
            Shape::Sin4Down => self.start_value + span * (1.0 - (PI * tau / 2.0).cos().powi(4)),
            Shape::Constant => self.start_value,
            Shape::Sinusoid { omega, phase } => {
                let local = t.clamp(self.t_start, self.t_end) - self.t_start;
                self.start_value * (omega * local + phase).sin()
            }
        }
    }

    fn is_oscillating(&self) -> bool {
        matches!(self.shape, Shape::Sinusoid { .. })
    }

    fn boundary_values(&self) -> (f64, f64) {
        (self.value(self.t_start), self.value(self.t_end))
    }
}

/// Piecewise scalar coefficient; clamps to its end values outside its span.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    segments: Vec<Segment>,
}

impl Schedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::domain("schedule needs at least one segment"));
        }
        for s in &segments {
            if !(s.t_end >= s.t_start) || !s.start_value.is_finite() || !s.end_value.is_finite() {
                return Err(Error::domain(format!("invalid schedule segment {s:?}")));
            }
        }
        for w in segments.windows(2) {
            if (w[0].t_end - w[1].t_start).abs() > 1e-12 * w[0].t_end.abs().max(1.0) {
                return Err(Error::domain(format!(
                    "schedule segments not contiguous at t = {} / {}",
                    w[0].t_end, w[1].t_start
                )));
            }
            // sudden (zero-length) segments and drives may jump
            let sudden = w[0].t_end == w[0].t_start || w[1].t_end == w[1].t_start;
            if !sudden && !w[0].is_oscillating() && !w[1].is_oscillating() {
                let (_, a) = w[0].boundary_values();
                let (b, _) = w[1].boundary_values();
                if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                    return Err(Error::domain(format!(
                        "schedule jumps from {a} to {b} at t = {}",
                        w[1].t_start
                    )));
                }
            }
        }
        Ok(Self { segments })
    }

    pub fn constant(value: f64, t0: f64, t1: f64) -> Self {
        Self {
            segments: vec![Segment {
                t_start: t0,
                t_end: t1,
                shape: Shape::Constant,
                start_value: value,
                end_value: value,
            }],
        }
    }

    pub fn builder(t0: f64) -> ScheduleBuilder {
        ScheduleBuilder {
            cursor: t0,
            segments: Vec::new(),
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn span(&self) -> (f64, f64) {
        (self.segments[0].t_start, self.segments.last().unwrap().t_end)
    }

    pub fn value(&self, t: f64) -> f64 {
        let (t0, t1) = self.span();
        if t <= t0 {
            return self.segments[0].value(t0);
        }
        if t >= t1 {
            return self.segments.last().unwrap().value(t1);
        }
        let idx = self.segments.partition_point(|s| s.t_end < t);
        self.segments[idx.min(self.segments.len() - 1)].value(t)
    }

    /// Largest `|omega|` of any oscillating segment.
    pub fn max_frequency(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| match s.shape {
                Shape::Sinusoid { omega, .. } => omega.abs(),
                _ => 0.0,
            })
            .fold(0.0, f64::max)
    }

    /// Time-mirrored schedule `s'(t) = s(about - t)`.
    pub fn reflected(&self, about: f64) -> Self {
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| {
                let len = s.t_end - s.t_start;
                let shape = match s.shape {
                    Shape::Sin4Up => Shape::Sin4Down,
                    Shape::Sin4Down => Shape::Sin4Up,
                    Shape::Constant => Shape::Constant,
                    Shape::Sinusoid { omega, phase } => Shape::Sinusoid {
                        omega: -omega,
                        phase: omega * len + phase,
                    },
                };
                let (start_value, end_value) = match s.shape {
                    Shape::Sinusoid { .. } | Shape::Constant => (s.start_value, s.end_value),
                    _ => (s.end_value, s.start_value),
                };
                Segment {
                    t_start: about - s.t_end,
                    t_end: about - s.t_start,
                    shape,
                    start_value,
                    end_value,
                }
            })
            .collect();
        Self { segments }
    }

    /// Integral of `g(value(t))` over `[t0, t1]` by composite Simpson.
    pub fn integrate(&self, t0: f64, t1: f64, g: impl Fn(f64) -> f64) -> f64 {
        if t1 <= t0 {
            return 0.0;
        }
        let n = 2 * ((t1 - t0) * 50.0).ceil().max(50.0) as usize;
        let h = (t1 - t0) / n as f64;
        let mut acc = g(self.value(t0)) + g(self.value(t1));
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * g(self.value(t0 + i as f64 * h));
        }
        acc * h / 3.0
    }
}

pub struct ScheduleBuilder {
    cursor: f64,
    segments: Vec<Segment>,
}

impl ScheduleBuilder {
    fn push(mut self, duration: f64, shape: Shape, start_value: f64, end_value: f64) -> Self {
        let t_start = self.cursor;
        self.cursor += duration;
        self.segments.push(Segment {
            t_start,
            t_end: self.cursor,
            shape,
            start_value,
            end_value,
        });
        self
    }

    pub fn hold(self, duration: f64, value: f64) -> Self {
        self.push(duration, Shape::Constant, value, value)
    }

    pub fn sin4_up(self, duration: f64, from: f64, to: f64) -> Self {
        self.push(duration, Shape::Sin4Up, from, to)
    }

    pub fn sin4_down(self, duration: f64, from: f64, to: f64) -> Self {
        self.push(duration, Shape::Sin4Down, from, to)
    }

    pub fn sinusoid(self, duration: f64, amplitude: f64, omega: f64, phase: f64) -> Self {
        self.push(duration, Shape::Sinusoid { omega, phase }, amplitude, amplitude)
    }

    pub fn build(self) -> Result<Schedule> {
        Schedule::new(self.segments)
    }
}

pub fn schedule_value(schedule: &Schedule, t: f64) -> f64 {
    schedule.value(t)
}

/// `H(t) = sum_k s_k(t) H_k` over a shared sparsity pattern.
#[derive(Clone, Debug)]
pub struct TimeDependentHamiltonian {
    parts: Vec<(SparseOperator, Schedule)>,
    /// Union pattern with zeroed values, refilled at each step.
    combined: SparseOperator,
    /// For each part, the slot of each of its entries in `combined`.
    slots: Vec<Vec<usize>>,
}

impl TimeDependentHamiltonian {
    pub fn new(parts: Vec<(SparseOperator, Schedule)>) -> Result<Self> {
        let Some((first, _)) = parts.first() else {
            return Err(Error::domain("time-dependent Hamiltonian needs at least one part"));
        };
        let dim = first.dim();
        for (op, _) in &parts {
            check_len("Hamiltonian part", dim, op.dim())?;
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let mut cols: Vec<u32> = Vec::new();
        let mut slots: Vec<Vec<usize>> = parts.iter().map(|(op, _)| Vec::with_capacity(op.nnz())).collect();
        let mut merged: Vec<u32> = Vec::new();
        for r in 0..dim {
            merged.clear();
            for (op, _) in &parts {
                merged.extend(op.row(r).map(|(c, _)| c as u32));
            }
            merged.sort_unstable();
            merged.dedup();
            let base = cols.len();
            cols.extend_from_slice(&merged);
            for (k, (op, _)) in parts.iter().enumerate() {
                for (c, _) in op.row(r) {
                    let pos = merged.binary_search(&(c as u32)).expect("column in union");
                    slots[k].push(base + pos);
                }
            }
            row_ptr.push(cols.len());
        }
        let nnz = cols.len();
        let combined = SparseOperator::from_parts(dim, row_ptr, cols, vec![0.0; nnz]);
        Ok(Self {
            parts,
            combined,
            slots,
        })
    }

    pub fn dim(&self) -> usize {
        self.combined.dim()
    }

    pub fn parts(&self) -> &[(SparseOperator, Schedule)] {
        &self.parts
    }

    pub fn coefficients(&self, t: f64) -> Vec<f64> {
        self.parts.iter().map(|(_, s)| s.value(t)).collect()
    }

    /// The instantaneous Hamiltonian as one sparse operator.
    pub fn at(&self, t: f64) -> SparseOperator {
        let mut out = self.combined.clone();
        self.fill(t, &mut out);
        out
    }

    fn fill(&self, t: f64, out: &mut SparseOperator) {
        let vals = out.values_mut();
        vals.iter_mut().for_each(|v| *v = 0.0);
        for ((op, sched), slots) in self.parts.iter().zip(&self.slots) {
            let c = sched.value(t);
            if c == 0.0 {
                continue;
            }
            for (&slot, &v) in slots.iter().zip(op.values()) {
                vals[slot] += c * v;
            }
        }
    }

    pub fn max_frequency(&self) -> f64 {
        self.parts.iter().map(|(_, s)| s.max_frequency()).fold(0.0, f64::max)
    }

    /// Same parts with every schedule mirrored about `about`.
    pub fn reflected(&self, about: f64) -> Self {
        Self {
            parts: self
                .parts
                .iter()
                .map(|(op, s)| (op.clone(), s.reflected(about)))
                .collect(),
            combined: self.combined.clone(),
            slots: self.slots.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Upper bound on the midpoint step.
    pub max_step: f64,
    /// Minimum number of steps per period of the fastest drive.
    pub steps_per_period: usize,
    pub krylov_dim: usize,
    /// Per-step Krylov truncation tolerance (absolute, on a unit state).
    pub krylov_tol: f64,
    /// Number of observation intervals; the observer sees `samples + 1` points.
    pub samples: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            max_step: 0.05,
            steps_per_period: 40,
            krylov_dim: 30,
            krylov_tol: 1e-12,
            samples: 200,
        }
    }
}

impl EvolveOptions {
    pub fn step_for(&self, h: &TimeDependentHamiltonian) -> f64 {
        let w = h.max_frequency();
        if w > 0.0 {
            self.max_step
                .min(2.0 * PI / (self.steps_per_period as f64 * w))
        } else {
            self.max_step
        }
    }
}

/// Propagates `psi0` from `t0` to `t1`, calling `observer` at evenly spaced
/// sample times (including both ends).
pub fn evolve<F>(
    psi0: &StateVector,
    h: &TimeDependentHamiltonian,
    t0: f64,
    t1: f64,
    opts: &EvolveOptions,
    mut observer: F,
) -> Result<StateVector>
where
    F: FnMut(f64, &StateVector) -> Result<()>,
{
    check_len("initial state", h.dim(), psi0.len())?;
    if !(t1 >= t0) {
        return Err(Error::domain(format!("evolution window [{t0}, {t1}] is reversed")));
    }
    if !(opts.max_step > 0.0) || opts.krylov_dim < 2 {
        return Err(Error::domain("evolution needs a positive step and Krylov dimension >= 2"));
    }
    let mut psi = psi0.clone();
    let intervals = opts.samples.max(1);
    if opts.samples > 0 {
        observer(t0, &psi)?;
    }
    if t1 == t0 {
        return Ok(psi);
    }
    let dt_max = opts.step_for(h);
    let mut work = h.combined.clone();
    let mut krylov = KrylovWorkspace::new(h.dim(), opts.krylov_dim);
    for s in 0..intervals {
        let a = t0 + (t1 - t0) * s as f64 / intervals as f64;
        let b = t0 + (t1 - t0) * (s + 1) as f64 / intervals as f64;
        let steps = ((b - a) / dt_max).ceil().max(1.0) as usize;
        let dt = (b - a) / steps as f64;
        for k in 0..steps {
            let ta = a + k as f64 * dt;
            step(h, &mut work, &mut krylov, &mut psi, ta, dt, opts, 0)?;
        }
        if opts.samples > 0 {
            observer(b, &psi)?;
        }
    }
    Ok(psi)
}

#[allow(clippy::too_many_arguments)]
fn step(
    h: &TimeDependentHamiltonian,
    work: &mut SparseOperator,
    krylov: &mut KrylovWorkspace,
    psi: &mut StateVector,
    ta: f64,
    dt: f64,
    opts: &EvolveOptions,
    depth: usize,
) -> Result<()> {
    h.fill(ta + 0.5 * dt, work);
    match krylov.expm(work, psi, dt, opts.krylov_tol) {
        Some(next) => {
            *psi = next;
            Ok(())
        }
        None => {
            if depth > 24 {
                return Err(Error::Stiffness { t: ta, step: dt });
            }
            step(h, work, krylov, psi, ta, 0.5 * dt, opts, depth + 1)?;
            step(h, work, krylov, psi, ta + 0.5 * dt, 0.5 * dt, opts, depth + 1)
        }
    }
}

/// `exp(-i dt H) psi` for a constant operator, by short Krylov steps.
pub fn propagate_constant(
    h: &SparseOperator,
    psi: &StateVector,
    duration: f64,
    opts: &EvolveOptions,
) -> Result<StateVector> {
    let td = TimeDependentHamiltonian::new(vec![(h.clone(), Schedule::constant(1.0, 0.0, duration))])?;
    let quiet = EvolveOptions {
        samples: 0,
        ..opts.clone()
    };
    evolve(psi, &td, 0.0, duration, &quiet, |_, _| Ok(()))
}

struct KrylovWorkspace {
    v: Vec<StateVector>,
    w: StateVector,
    max_dim: usize,
}

impl KrylovWorkspace {
    fn new(dim: usize, max_dim: usize) -> Self {
        Self {
            v: (0..=max_dim).map(|_| StateVector::zeros(dim)).collect(),
            w: StateVector::zeros(dim),
            max_dim,
        }
    }

    /// Returns `None` if the Krylov space is too small for the requested step.
    fn expm(&mut self, h: &SparseOperator, psi: &StateVector, dt: f64, tol: f64) -> Option<StateVector> {
        let beta0 = psi.norm();
        if beta0 == 0.0 {
            return Some(psi.clone());
        }
        let inv = 1.0 / beta0;
        for (d, s) in self.v[0].iter_mut().zip(psi.iter()) {
            *d = s * inv;
        }
        let mut alpha = Vec::with_capacity(self.max_dim);
        let mut beta: Vec<f64> = Vec::with_capacity(self.max_dim);
        let mut coeffs: Option<Vec<Complex64>> = None;
        for j in 0..self.max_dim {
            h.apply_into(&self.v[j], &mut self.w);
            let a: f64 = self.v[j].dot(&self.w).re;
            alpha.push(a);
            {
                let (head, _) = self.v.split_at(j + 1);
                let vj = &head[j];
                for (w, x) in self.w.iter_mut().zip(vj.iter()) {
                    *w -= x * a;
                }
                if j > 0 {
                    let vp = &head[j - 1];
                    let b = beta[j - 1];
                    for (w, x) in self.w.iter_mut().zip(vp.iter()) {
                        *w -= x * b;
                    }
                }
                // second pass against the two latest vectors
                for vk in head.iter().skip(j.saturating_sub(1)) {
                    let c = vk.dot(&self.w);
                    for (w, x) in self.w.iter_mut().zip(vk.iter()) {
                        *w -= x * c;
                    }
                }
            }
            let b = self.w.norm();
            let m = j + 1;
            let c = small_expm(&alpha, &beta, dt);
            let err = b * c[m - 1].norm();
            if b < 1e-13 || err < tol {
                coeffs = Some(c);
                break;
            }
            if m == self.max_dim {
                return None;
            }
            beta.push(b);
            let inv = 1.0 / b;
            for (d, s) in self.v[j + 1].iter_mut().zip(self.w.iter()) {
                *d = s * inv;
            }
        }
        let c = coeffs?;
        let mut out = StateVector::zeros(psi.len());
        for (vk, ck) in self.v.iter().zip(&c) {
            let f = ck * beta0;
            for (o, x) in out.iter_mut().zip(vk.iter()) {
                *o += x * f;
            }
        }
        Some(out)
    }
}

/// `exp(-i dt T) e_1` for the symmetric tridiagonal `T`.
fn small_expm(alpha: &[f64], beta: &[f64], dt: f64) -> Vec<Complex64> {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    (0..m)
        .map(|r| {
            (0..m)
                .map(|k| {
                    let q0 = eig.eigenvectors[(0, k)];
                    let qr = eig.eigenvectors[(r, k)];
                    Complex64::from_polar(qr * q0, -dt * eig.eigenvalues[k])
                })
                .sum()
        })
        .collect()
}

/// `|<a|b>|^2`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    check_len("fidelity", a.len(), b.len())?;
    Ok(a.dot(b).norm_sqr())
}
