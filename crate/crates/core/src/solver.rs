//! Dual solvers for the doublet and triplet SVMs.
//!
//! Doublet dual:
//!
//! ```text
//! max  Σ α_l − ½ Σ_ij α_i α_j h_i h_j K(z_i, z_j)
//! s.t. 0 ≤ α_l ≤ C,  Σ α_l h_l = 0
//! ```
//!
//! solved by two-variable SMO with maximal-violating-pair selection.
//!
//! Triplet dual: the same objective without labels and without the
//! equality constraint, so single coordinates can be maximized exactly;
//! solved by cyclic coordinate ascent with clipping.
//!
//! Both solvers keep the full gradient up to date. Shrinking only narrows
//! the set of coordinates scanned or visited; every tenth sweep, and before
//! declaring convergence, all coordinates are reactivated.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::PairLabel;
use crate::error::{Error, Result};
use crate::kernels::{GramMode, GramView};

/// Curvature floor for pair updates along a flat direction.
const TAU: f64 = 1e-12;

/// Sweeps between full reactivations of shrunk coordinates.
const UNSHRINK_EVERY: usize = 10;
/// Updates between doublet shrinking passes (capped at N).
const SHRINK_INTERVAL: usize = 1000;

/// Exact-gradient refreshes allowed when rounding drift hides a residual
/// violation at the end.
const MAX_REFRESHES: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Box bound `C`.
    pub c: f64,
    /// Stop once the maximal KKT violation is at most this.
    pub tolerance: f64,
    /// Update budget is `max_passes × N`.
    pub max_passes: usize,
    /// Seeds the coordinate order of the triplet solver.
    pub seed: u64,
    pub shrinking: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            c: 1.0,
            tolerance: 1e-3,
            max_passes: 1000,
            seed: 0,
            shrinking: true,
        }
    }
}

impl SolverConfig {
    pub fn with_c(c: f64) -> Self {
        SolverConfig {
            c,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid(format!(
                "C must be positive and finite, got {}",
                self.c
            )));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::invalid(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_passes == 0 {
            return Err(Error::invalid("max_passes must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    /// Present for doublet solutions only.
    pub bias_b: Option<f64>,
    pub dual_objective: f64,
    pub kkt_violation: f64,
    /// Accepted coordinate or pair updates.
    pub iterations: usize,
    pub sweeps: usize,
    pub support_count: usize,
    pub converged: bool,
}

/// One line of the per-sweep solver trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub sweep: usize,
    pub iterations: usize,
    pub objective: f64,
    pub violation: f64,
}

/// Hooks into solver progress. Both methods default to no-ops.
pub trait SolverObserver {
    /// Called after every accepted update with the current multipliers.
    fn on_update(&mut self, _iteration: usize, _alphas: &[f64]) {}

    fn on_sweep(&mut self, _record: &TraceRecord) {}

    /// Per-sweep records cost an extra objective evaluation; solvers skip
    /// them unless this returns true.
    fn wants_sweeps(&self) -> bool {
        false
    }
}

impl SolverObserver for () {}

/// Writes `sweep iterations objective violation` lines.
pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W) -> Self {
        let _ = writeln!(out, "sweep iterations objective violation");
        TraceWriter { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> SolverObserver for TraceWriter<W> {
    fn wants_sweeps(&self) -> bool {
        true
    }

    fn on_sweep(&mut self, r: &TraceRecord) {
        let _ = writeln!(
            self.out,
            "{} {} {:.16e} {:.16e}",
            r.sweep, r.iterations, r.objective, r.violation
        );
    }
}

/// Objective from a gradient `g = 1 − Qα` of the maximization form:
/// `D = Σα − ½αᵀQα = ½(Σα + αᵀg)`.
fn objective_from_gradient(alphas: &[f64], grad: &[f64]) -> f64 {
    let mut s = 0.0;
    for (a, g) in alphas.iter().zip(grad) {
        if *a != 0.0 {
            s += a * (1.0 + g);
        }
    }
    0.5 * s
}

/// Exact dual objective by summing over non-zero multipliers.
pub fn dual_objective(alphas: &[f64], gram: &GramView<'_>, labels_h: Option<&[PairLabel]>) -> f64 {
    let y = |i: usize| labels_h.map_or(1.0, |h| h[i] as f64);
    let mut linear = 0.0;
    let mut quad = 0.0;
    for (i, &ai) in alphas.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        linear += ai;
        let row = gram.row(i);
        let mut inner = 0.0;
        for (j, &aj) in alphas.iter().enumerate() {
            if aj != 0.0 {
                inner += aj * y(j) * row[j];
            }
        }
        quad += ai * y(i) * inner;
    }
    linear - 0.5 * quad
}

/// Dual gradient `g_l = 1 − y_l Σ_j α_j y_j K(l, j)`, recomputed from
/// scratch.
fn exact_gradient(alphas: &[f64], gram: &GramView<'_>, labels_h: Option<&[PairLabel]>) -> Vec<f64> {
    let n = gram.len();
    let y = |i: usize| labels_h.map_or(1.0, |h| h[i] as f64);
    let mut acc = vec![0.0; n];
    for (j, &aj) in alphas.iter().enumerate() {
        if aj == 0.0 {
            continue;
        }
        let w = aj * y(j);
        let row = gram.row(j);
        for (t, k) in acc.iter_mut().zip(row.iter()) {
            *t += w * k;
        }
    }
    (0..n).map(|l| 1.0 - y(l) * acc[l]).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct KktReport {
    /// Largest of the per-constraint, box and equality violations.
    pub max_violation: f64,
    /// Dual gradient per constraint.
    pub gradient: Vec<f64>,
    /// Per-constraint optimality violation (0 when satisfied).
    pub violations: Vec<f64>,
    /// Largest distance of a multiplier outside `[0, C]`.
    pub box_violation: f64,
    /// `|Σ α_l h_l|`, doublet mode only.
    pub equality_violation: f64,
    /// Bias used for the doublet conditions.
    pub bias_b: Option<f64>,
}

/// Doublet bias: mean of `h_t g_t` over free multipliers, or the midpoint
/// of the feasible interval when none are free.
fn doublet_bias(alphas: &[f64], grad: &[f64], h: &[PairLabel], c: f64) -> f64 {
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (t, (&a, &g)) in alphas.iter().zip(grad).enumerate() {
        let y = h[t] as f64;
        let ct = y * g;
        if a > 0.0 && a < c {
            free_sum += ct;
            free_count += 1;
        }
        if in_up(a, h[t], c) {
            lo = lo.max(ct);
        }
        if in_low(a, h[t], c) {
            hi = hi.min(ct);
        }
    }
    if free_count > 0 {
        free_sum / free_count as f64
    } else if lo.is_finite() && hi.is_finite() {
        0.5 * (lo + hi)
    } else if lo.is_finite() {
        lo
    } else if hi.is_finite() {
        hi
    } else {
        0.0
    }
}

/// Indices whose multiplier may still move so as to raise `b`'s lower bound.
const UP: u8 = 1;
const LOW: u8 = 2;

#[inline]
fn in_up(a: f64, h: PairLabel, c: f64) -> bool {
    (h > 0 && a < c) || (h < 0 && a > 0.0)
}

#[inline]
fn in_low(a: f64, h: PairLabel, c: f64) -> bool {
    (h < 0 && a < c) || (h > 0 && a > 0.0)
}

/// Recomputes the optimality conditions for `alphas` from the Gram matrix
/// alone. With `labels_h` the doublet conditions (equality constraint and
/// bias) are used; without, the box-only triplet conditions. Triplet
/// coordinates whose self-kernel is 0 carry no constraint and are skipped.
pub fn kkt_report(
    alphas: &[f64],
    gram: &GramView<'_>,
    labels_h: Option<&[PairLabel]>,
    c: f64,
    bias_b: Option<f64>,
) -> Result<KktReport> {
    let n = gram.len();
    if alphas.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: alphas.len(),
        });
    }
    if let Some(h) = labels_h {
        if h.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: h.len(),
            });
        }
    }
    let gradient = exact_gradient(alphas, gram, labels_h);
    let box_violation = alphas
        .iter()
        .map(|&a| (-a).max(a - c).max(0.0))
        .fold(0.0, f64::max);
    let (violations, equality_violation, bias) = match labels_h {
        Some(h) => {
            let b = bias_b.unwrap_or_else(|| doublet_bias(alphas, &gradient, h, c));
            let v = (0..n)
                .map(|t| {
                    let ct = h[t] as f64 * gradient[t];
                    let mut v: f64 = 0.0;
                    if in_up(alphas[t], h[t], c) {
                        v = v.max(ct - b);
                    }
                    if in_low(alphas[t], h[t], c) {
                        v = v.max(b - ct);
                    }
                    v
                })
                .collect::<Vec<_>>();
            let eq: f64 = alphas.iter().zip(h).map(|(a, &y)| a * y as f64).sum();
            (v, eq.abs(), Some(b))
        }
        None => {
            let v = (0..n)
                .map(|l| {
                    if gram.diag(l) <= 0.0 {
                        0.0
                    } else {
                        box_coordinate_violation(alphas[l], gradient[l], c)
                    }
                })
                .collect::<Vec<_>>();
            (v, 0.0, None)
        }
    };
    let max_violation = violations
        .iter()
        .copied()
        .fold(box_violation.max(equality_violation), f64::max);
    Ok(KktReport {
        max_violation,
        gradient,
        violations,
        box_violation,
        equality_violation,
        bias_b: bias,
    })
}

/// Projected-gradient magnitude for one box-constrained coordinate.
#[inline]
fn box_coordinate_violation(a: f64, g: f64, c: f64) -> f64 {
    if a <= 0.0 {
        g.max(0.0)
    } else if a >= c {
        (-g).max(0.0)
    } else {
        g.abs()
    }
}

fn check_row(row: &[f64], i: usize) -> Result<()> {
    if row.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("kernel row {i}")))
    }
}

fn support_count(alphas: &[f64]) -> usize {
    alphas.iter().filter(|&&a| a > 0.0).count()
}

pub fn solve_doublet_svm(
    gram: &GramView<'_>,
    labels_h: &[PairLabel],
    config: &SolverConfig,
) -> Result<DualSolution> {
    solve_doublet_svm_observed(gram, labels_h, config, &mut ())
}

pub fn solve_doublet_svm_observed(
    gram: &GramView<'_>,
    labels_h: &[PairLabel],
    config: &SolverConfig,
    observer: &mut dyn SolverObserver,
) -> Result<DualSolution> {
    config.validate()?;
    let n = gram.len();
    if labels_h.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: labels_h.len(),
        });
    }
    if n < 2 {
        return Err(Error::invalid("doublet SVM needs at least two constraints"));
    }
    if labels_h.iter().any(|&h| h != 1 && h != -1) {
        return Err(Error::invalid("doublet labels must be ±1"));
    }
    if !(labels_h.iter().any(|&h| h > 0) && labels_h.iter().any(|&h| h < 0)) {
        return Err(Error::DegenerateLabels(
            "doublet SVM needs both similar (−1) and dissimilar (+1) pairs".into(),
        ));
    }
    if gram.diagonal().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Gram diagonal".into()));
    }
    let check_each_row = gram.mode() == GramMode::Cached;
    if !check_each_row {
        for i in 0..n {
            check_row(&gram.row(i), i)?;
        }
    }

    let c = config.c;
    let y: Vec<f64> = labels_h.iter().map(|&h| h as f64).collect();
    let mut alpha = vec![0.0; n];
    // minimization-form gradient: G = Qα − 1
    let mut grad = vec![-1.0; n];
    let mut active = vec![true; n];
    let mut list: Vec<usize> = (0..n).collect();
    let mut n_active = n;
    let status_of = |a: f64, h: PairLabel| (in_up(a, h, c) as u8) | ((in_low(a, h, c) as u8) << 1);
    let mut status: Vec<u8> = labels_h.iter().map(|&h| status_of(0.0, h)).collect();
    // selection carried over from the last gradient update
    let mut pending: Option<(Option<usize>, f64)> = None;
    let max_updates = config.max_passes.saturating_mul(n);
    let mut iterations = 0usize;
    let mut sweeps = 0usize;
    let mut refreshes = 0usize;
    let mut converged = false;

    // (i, j, gap) over the active set
    let select = |status: &[u8], grad: &[f64], list: &[usize]| -> (Option<usize>, f64) {
        let mut gmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        let mut imax = None;
        for &t in list {
            let v = -y[t] * grad[t];
            let s = status[t];
            if s & UP != 0 && v > gmax {
                gmax = v;
                imax = Some(t);
            }
            if s & LOW != 0 && v < gmin {
                gmin = v;
            }
        }
        (imax, gmax - gmin)
    };

    loop {
        let (i, gap) = match pending.take() {
            Some(sel) => sel,
            None => select(&status, &grad, &list),
        };
        let done = match i {
            Some(_) => gap <= config.tolerance,
            None => true,
        };
        if done {
            if n_active < n {
                n_active = unshrink(&mut grad, &alpha, &y, gram, &mut active);
                list = active_list(&active);
                pending = None;
                continue;
            }
            // guard against accumulated drift in the running gradient
            let exact: Vec<f64> = exact_gradient(&alpha, gram, Some(labels_h))
                .into_iter()
                .map(|g| -g)
                .collect();
            let (_, exact_gap) = select(&status, &exact, &list);
            grad = exact;
            if exact_gap <= config.tolerance || refreshes >= MAX_REFRESHES {
                converged = exact_gap <= config.tolerance;
                break;
            }
            refreshes += 1;
            continue;
        }
        if iterations >= max_updates {
            break;
        }
        let i = i.expect("checked");
        let row_i_ref = gram.row(i);
        if check_each_row {
            check_row(&row_i_ref, i)?;
        }
        let row_i: &[f64] = &row_i_ref;
        // second-order choice of j: largest guaranteed objective increase
        let gmax = -y[i] * grad[i];
        let (qii, two_yi) = (row_i[i], 2.0 * y[i]);
        let diag = gram.diagonal();
        let mut j = None;
        // best gain b²/a kept as the pair (b², a) to avoid dividing
        let (mut best_b2, mut best_a) = (0.0, 1.0);
        for &t in &list {
            if status[t] & LOW == 0 {
                continue;
            }
            let b = gmax + y[t] * grad[t];
            if b > 0.0 {
                let mut a = qii + diag[t] - two_yi * y[t] * row_i[t];
                if a <= 0.0 {
                    a = TAU;
                }
                let b2 = b * b;
                if b2 * best_a > best_b2 * a {
                    best_b2 = b2;
                    best_a = a;
                    j = Some(t);
                }
            }
        }
        let Some(j) = j else {
            // no pair makes progress: treat as converged on this set
            if n_active < n {
                n_active = unshrink(&mut grad, &alpha, &y, gram, &mut active);
                list = active_list(&active);
                pending = None;
                continue;
            }
            converged = gap <= config.tolerance;
            break;
        };
        let row_j_ref = gram.row(j);
        if check_each_row {
            check_row(&row_j_ref, j)?;
        }
        let row_j: &[f64] = &row_j_ref;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let mut quad = row_i[i] + row_j[j] - 2.0 * row_i[j];
        if quad <= 0.0 {
            quad = TAU;
        }
        let (mut ai, mut aj) = (old_i, old_j);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        ai = ai.clamp(0.0, c);
        aj = aj.clamp(0.0, c);
        let (di, dj) = (ai - old_i, aj - old_j);
        alpha[i] = ai;
        alpha[j] = aj;
        status[i] = status_of(ai, labels_h[i]);
        status[j] = status_of(aj, labels_h[j]);
        if di != 0.0 || dj != 0.0 {
            let (wi, wj) = (y[i] * di, y[j] * dj);
            let mut gmax = f64::NEG_INFINITY;
            let mut gmin = f64::INFINITY;
            let mut imax = None;
            for &t in &list {
                let g = grad[t] + y[t] * (wi * row_i[t] + wj * row_j[t]);
                grad[t] = g;
                let v = -y[t] * g;
                let s = status[t];
                if s & UP != 0 && v > gmax {
                    gmax = v;
                    imax = Some(t);
                }
                if s & LOW != 0 && v < gmin {
                    gmin = v;
                }
            }
            pending = Some((imax, gmax - gmin));
        }
        iterations += 1;
        observer.on_update(iterations, &alpha);

        if iterations.is_multiple_of(n) {
            sweeps += 1;
            if observer.wants_sweeps() {
                let (_, gap) = select(&status, &grad, &list);
                observer.on_sweep(&TraceRecord {
                    sweep: sweeps,
                    iterations,
                    objective: dual_objective(&alpha, gram, Some(labels_h)),
                    violation: gap.max(0.0),
                });
            }
            if config.shrinking && sweeps.is_multiple_of(UNSHRINK_EVERY) {
                n_active = unshrink(&mut grad, &alpha, &y, gram, &mut active);
                list = active_list(&active);
                pending = None;
                continue;
            }
        }
        if config.shrinking && iterations.is_multiple_of(SHRINK_INTERVAL.min(n)) {
            n_active = shrink_doublet(&alpha, &grad, labels_h, c, &mut active);
            list = active_list(&active);
            pending = None;
        }
    }

    let gradient = exact_gradient(&alpha, gram, Some(labels_h));
    let bias = doublet_bias(&alpha, &gradient, labels_h, c);
    let report = kkt_report(&alpha, gram, Some(labels_h), c, Some(bias))?;
    Ok(DualSolution {
        dual_objective: objective_from_gradient(&alpha, &gradient),
        support_count: support_count(&alpha),
        alphas: alpha,
        bias_b: Some(bias),
        kkt_violation: report.max_violation,
        iterations,
        sweeps,
        converged,
    })
}

/// Reactivates every coordinate, recomputing the gradient entries that
/// went stale while shrunk. Returns the new active count.
fn unshrink(
    grad: &mut [f64],
    alpha: &[f64],
    y: &[f64],
    gram: &GramView<'_>,
    active: &mut [bool],
) -> usize {
    let ya: Vec<(usize, f64)> = alpha
        .iter()
        .enumerate()
        .filter(|(_, &a)| a != 0.0)
        .map(|(j, &a)| (j, y[j] * a))
        .collect();
    for t in 0..alpha.len() {
        if !active[t] {
            let row = gram.row(t);
            let s: f64 = ya.iter().map(|&(j, w)| w * row[j]).sum();
            grad[t] = y[t] * s - 1.0;
            active[t] = true;
        }
    }
    alpha.len()
}

/// Deactivates bounded coordinates that cannot enter the next working set.
fn shrink_doublet(
    alpha: &[f64],
    grad: &[f64],
    h: &[PairLabel],
    c: f64,
    active: &mut [bool],
) -> usize {
    let mut gmax = f64::NEG_INFINITY;
    let mut gmin = f64::INFINITY;
    for t in 0..alpha.len() {
        if !active[t] {
            continue;
        }
        let v = -(h[t] as f64) * grad[t];
        if in_up(alpha[t], h[t], c) {
            gmax = gmax.max(v);
        }
        if in_low(alpha[t], h[t], c) {
            gmin = gmin.min(v);
        }
    }
    let mut count = 0;
    for t in 0..alpha.len() {
        if !active[t] {
            continue;
        }
        let v = -(h[t] as f64) * grad[t];
        let up = in_up(alpha[t], h[t], c);
        let low = in_low(alpha[t], h[t], c);
        let bounded = alpha[t] <= 0.0 || alpha[t] >= c;
        if bounded && ((up && !low && v < gmin) || (low && !up && v > gmax)) {
            active[t] = false;
        } else {
            count += 1;
        }
    }
    count
}

pub fn solve_triplet_svm(gram: &GramView<'_>, config: &SolverConfig) -> Result<DualSolution> {
    solve_triplet_svm_observed(gram, config, &mut ())
}

pub fn solve_triplet_svm_observed(
    gram: &GramView<'_>,
    config: &SolverConfig,
    observer: &mut dyn SolverObserver,
) -> Result<DualSolution> {
    config.validate()?;
    let n = gram.len();
    if n == 0 {
        return Err(Error::invalid("triplet SVM needs at least one constraint"));
    }
    if gram.diagonal().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Gram diagonal".into()));
    }
    let check_each_row = gram.mode() == GramMode::Cached;
    if !check_each_row {
        for i in 0..n {
            check_row(&gram.row(i), i)?;
        }
    }
    let c = config.c;
    let diag = gram.diagonal();
    // coordinates with zero self-kernel carry T = 0 and stay pinned at 0
    let live: Vec<bool> = diag.iter().map(|&k| k > 0.0).collect();

    let mut order: Vec<usize> = (0..n).filter(|&l| live[l]).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));

    let mut alpha = vec![0.0; n];
    // maximization-form gradient: g = 1 − Kα
    let mut grad = vec![1.0; n];
    let mut active = live.clone();
    let max_updates = config.max_passes.saturating_mul(n);
    let mut iterations = 0usize;
    let mut sweeps = 0usize;
    let mut refreshes = 0usize;
    let mut converged = false;

    let max_violation = |alpha: &[f64], grad: &[f64], mask: &[bool]| -> f64 {
        (0..n)
            .filter(|&l| mask[l])
            .map(|l| box_coordinate_violation(alpha[l], grad[l], c))
            .fold(0.0, f64::max)
    };

    'outer: loop {
        for &l in &order {
            if !active[l] {
                continue;
            }
            if iterations >= max_updates {
                break 'outer;
            }
            let target = (alpha[l] + grad[l] / diag[l]).clamp(0.0, c);
            let delta = target - alpha[l];
            iterations += 1;
            if delta != 0.0 {
                let row = gram.row(l);
                if check_each_row {
                    check_row(&row, l)?;
                }
                alpha[l] = target;
                for (g, k) in grad.iter_mut().zip(row.iter()) {
                    *g -= delta * k;
                }
            }
            observer.on_update(iterations, &alpha);
        }
        sweeps += 1;
        let violation = max_violation(&alpha, &grad, &live);
        observer.on_sweep(&TraceRecord {
            sweep: sweeps,
            iterations,
            objective: objective_from_gradient(&alpha, &grad),
            violation,
        });
        if violation <= config.tolerance {
            let exact = exact_gradient(&alpha, gram, None);
            let exact_violation = max_violation(&alpha, &exact, &live);
            grad = exact;
            if exact_violation <= config.tolerance {
                converged = true;
                break;
            }
            refreshes += 1;
            if refreshes > MAX_REFRESHES {
                break;
            }
        }
        if config.shrinking {
            if sweeps.is_multiple_of(UNSHRINK_EVERY) {
                active.copy_from_slice(&live);
            } else {
                for l in 0..n {
                    if !live[l] {
                        continue;
                    }
                    let at_lower = alpha[l] <= 0.0 && grad[l] < -config.tolerance;
                    let at_upper = alpha[l] >= c && grad[l] > config.tolerance;
                    active[l] = !(at_lower || at_upper);
                }
            }
        }
        if iterations >= max_updates {
            break;
        }
    }

    let report = kkt_report(&alpha, gram, None, c, None)?;
    Ok(DualSolution {
        dual_objective: objective_from_gradient(&alpha, &report.gradient),
        support_count: support_count(&alpha),
        alphas: alpha,
        bias_b: None,
        kkt_violation: report.max_violation,
        iterations,
        sweeps,
        converged,
    })
}

fn active_list(active: &[bool]) -> Vec<usize> {
    active
        .iter()
        .enumerate()
        .filter(|(_, &a)| a)
        .map(|(t, _)| t)
        .collect()
}
