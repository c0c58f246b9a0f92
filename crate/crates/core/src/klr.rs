//! Kernel logistic regression on doublets.
//!
//! Labels here are `{0, 1}` with **1 = same class**, the opposite sign
//! sense from the ±1 doublet labels used by the SVM (where −1 = same
//! class). The same-class probability of doublet `l` is
//!
//! ```text
//! p_l = 1 / (1 + exp(s_l)),   s_l = Σ_i α_i K(z_i, z_l) + b
//! ```
//!
//! and `(α, b)` maximize `Σ h_l ln p_l + (1 − h_l) ln(1 − p_l)`, optionally
//! minus `ridge/2 · ‖α‖²`. Since `s = diffᵀ M diff + b` with
//! `M = Σ α_l diff_l diff_lᵀ`, the fitted α define a metric directly.

use serde::{Deserialize, Serialize};

use crate::constraints::{DoubletSet, SIMILAR};
use crate::error::{Error, Result};
use crate::kernels::GramView;
use crate::linalg::dot;
use crate::metric::{weighted_doublet_metric, MetricMatrix};

const P_MIN: f64 = 1e-300;
const P_MAX: f64 = 1.0 - 1e-16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlrConfig {
    pub max_iter: usize,
    /// Stop once ‖∇l‖₂ falls to this.
    pub gradient_tolerance: f64,
    pub initial_step: f64,
    /// Sufficient-increase constant of the Armijo test.
    pub armijo: f64,
    pub backtrack: f64,
    /// Ridge weight on α (0 = plain likelihood).
    pub ridge: f64,
}

impl Default for KlrConfig {
    fn default() -> Self {
        KlrConfig {
            max_iter: 1000,
            gradient_tolerance: 1e-5,
            initial_step: 1.0,
            armijo: 1e-4,
            backtrack: 0.5,
            ridge: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlrSolution {
    pub alphas: Vec<f64>,
    pub bias_b: f64,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
    /// The likelihood is still climbing toward 0 with growing α: the data
    /// look separable and the unregularized optimum is at infinity.
    pub diverging: bool,
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `1 / (1 + e^s)` clamped into `[1e-300, 1 − 1e-16]`.
pub fn same_class_probability(score: f64) -> f64 {
    let p = if score >= 0.0 {
        let e = (-score).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + score.exp())
    };
    p.clamp(P_MIN, P_MAX)
}

/// Probability that the doublet whose Gram row is `gram_row` joins two
/// samples of the same class.
pub fn klr_probability(solution: &KlrSolution, gram_row: &[f64]) -> Result<f64> {
    if gram_row.len() != solution.alphas.len() {
        return Err(Error::DimensionMismatch {
            expected: solution.alphas.len(),
            found: gram_row.len(),
        });
    }
    Ok(same_class_probability(
        dot(&solution.alphas, gram_row) + solution.bias_b,
    ))
}

/// `{0,1}` labels (1 = same class) for a doublet set.
pub fn labels01_from_doublets(doublets: &DoubletSet) -> Vec<u8> {
    doublets
        .constraints
        .iter()
        .map(|z| u8::from(z.label_h == SIMILAR))
        .collect()
}

fn likelihood_from_scores(scores: &[f64], labels01: &[u8]) -> f64 {
    scores
        .iter()
        .zip(labels01)
        .map(|(&s, &h)| if h == 1 { -softplus(s) } else { -softplus(-s) })
        .sum()
}

fn penalty(alphas: &[f64], ridge: f64) -> f64 {
    if ridge == 0.0 {
        0.0
    } else {
        0.5 * ridge * dot(alphas, alphas)
    }
}

fn scores(alphas: &[f64], b: f64, gram: &GramView<'_>) -> Vec<f64> {
    gram.mul_vec(alphas).into_iter().map(|s| s + b).collect()
}

fn check_inputs(alphas: &[f64], gram: &GramView<'_>, labels01: &[u8]) -> Result<()> {
    let n = gram.len();
    for len in [alphas.len(), labels01.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: len,
            });
        }
    }
    if labels01.iter().any(|&h| h > 1) {
        return Err(Error::invalid("KLR labels must be 0 or 1"));
    }
    Ok(())
}

/// Penalized log-likelihood at `(α, b)`.
pub fn log_likelihood(
    alphas: &[f64],
    b: f64,
    gram: &GramView<'_>,
    labels01: &[u8],
    ridge: f64,
) -> Result<f64> {
    check_inputs(alphas, gram, labels01)?;
    Ok(likelihood_from_scores(&scores(alphas, b, gram), labels01) - penalty(alphas, ridge))
}

/// Analytic gradient: `∂l/∂α = K(p − h) − ridge·α`, `∂l/∂b = Σ(p − h)`.
pub fn likelihood_gradient(
    alphas: &[f64],
    b: f64,
    gram: &GramView<'_>,
    labels01: &[u8],
    ridge: f64,
) -> Result<(Vec<f64>, f64)> {
    check_inputs(alphas, gram, labels01)?;
    Ok(gradient_from_scores(
        &scores(alphas, b, gram),
        alphas,
        gram,
        labels01,
        ridge,
    ))
}

fn gradient_from_scores(
    scores: &[f64],
    alphas: &[f64],
    gram: &GramView<'_>,
    labels01: &[u8],
    ridge: f64,
) -> (Vec<f64>, f64) {
    let resid: Vec<f64> = scores
        .iter()
        .zip(labels01)
        .map(|(&s, &h)| same_class_probability_unclamped(s) - h as f64)
        .collect();
    let mut ga = gram.mul_vec(&resid);
    if ridge != 0.0 {
        for (g, a) in ga.iter_mut().zip(alphas) {
            *g -= ridge * a;
        }
    }
    (ga, resid.iter().sum())
}

fn same_class_probability_unclamped(score: f64) -> f64 {
    if score >= 0.0 {
        let e = (-score).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + score.exp())
    }
}

pub fn fit_doublet_klr(
    gram: &GramView<'_>,
    labels01: &[u8],
    config: &KlrConfig,
) -> Result<KlrSolution> {
    fit_doublet_klr_observed(gram, labels01, config, &mut |_, _| {})
}

/// Full-batch gradient ascent with Armijo backtracking. `observer` sees
/// `(iteration, log_likelihood)` after every accepted step.
pub fn fit_doublet_klr_observed(
    gram: &GramView<'_>,
    labels01: &[u8],
    config: &KlrConfig,
    observer: &mut dyn FnMut(usize, f64),
) -> Result<KlrSolution> {
    let n = gram.len();
    let mut alphas = vec![0.0; n];
    check_inputs(&alphas, gram, labels01)?;
    if !(labels01.contains(&0) && labels01.contains(&1)) {
        return Err(Error::DegenerateLabels(
            "KLR needs both same-class and different-class doublets".into(),
        ));
    }
    if !(config.backtrack > 0.0 && config.backtrack < 1.0)
        || config.initial_step.is_nan()
        || config.initial_step <= 0.0
    {
        return Err(Error::invalid(
            "KLR step control must have 0 < backtrack < 1 and a positive step",
        ));
    }
    let mut b = 0.0;
    let mut kalpha = vec![0.0; n];
    let mut score: Vec<f64> = vec![0.0; n];
    let mut ll = likelihood_from_scores(&score, labels01);
    let mut step = config.initial_step;
    let mut iterations = 0;
    let mut converged = false;
    let mut grad_norm;

    let mut prev: Option<(Vec<f64>, f64, Vec<f64>, f64)> = None;
    loop {
        let (ga, gb) = gradient_from_scores(&score, &alphas, gram, labels01, config.ridge);
        // Barzilai-Borwein trial step from the last move, backtracked below
        if let Some((pa, pb, pga, pgb)) = prev.take() {
            let mut ss = (b - pb) * (b - pb);
            let mut sy = -(b - pb) * (gb - pgb);
            for l in 0..n {
                let s = alphas[l] - pa[l];
                ss += s * s;
                sy -= s * (ga[l] - pga[l]);
            }
            if sy > 0.0 && ss > 0.0 {
                step = ss / sy;
            }
        }
        let sq = dot(&ga, &ga) + gb * gb;
        grad_norm = sq.sqrt();
        if !grad_norm.is_finite() {
            return Err(Error::NonFinite("KLR gradient".into()));
        }
        if grad_norm <= config.gradient_tolerance {
            converged = true;
            break;
        }
        if iterations >= config.max_iter {
            break;
        }
        let kg = gram.mul_vec(&ga);
        let mut accepted = false;
        while step > 1e-30 {
            let trial_alpha: Vec<f64> = alphas.iter().zip(&ga).map(|(a, g)| a + step * g).collect();
            let trial_b = b + step * gb;
            let trial_kalpha: Vec<f64> =
                kalpha.iter().zip(&kg).map(|(k, g)| k + step * g).collect();
            let trial_score: Vec<f64> = trial_kalpha.iter().map(|k| k + trial_b).collect();
            let trial_ll = likelihood_from_scores(&trial_score, labels01)
                - penalty(&trial_alpha, config.ridge);
            if trial_ll.is_finite() && trial_ll >= ll + config.armijo * step * sq {
                prev = Some((
                    std::mem::replace(&mut alphas, trial_alpha),
                    b,
                    ga.clone(),
                    gb,
                ));
                b = trial_b;
                kalpha = trial_kalpha;
                score = trial_score;
                ll = trial_ll;
                accepted = true;
                break;
            }
            step *= config.backtrack;
        }
        if !accepted {
            break;
        }
        iterations += 1;
        observer(iterations, ll);
        step /= config.backtrack;
    }
    let diverging = !converged && config.ridge == 0.0 && ll > -1e-6 * n as f64;
    if diverging {
        log::warn!("KLR likelihood approaches 0: doublets look separable, α diverges");
    }
    Ok(KlrSolution {
        alphas,
        bias_b: b,
        log_likelihood: ll,
        iterations,
        gradient_norm: grad_norm,
        converged,
        diverging,
    })
}

/// `M = Σ_l α_l diff_l diff_lᵀ`; not necessarily PSD.
pub fn reconstruct_klr_metric(
    solution: &KlrSolution,
    doublets: &DoubletSet,
) -> Result<MetricMatrix> {
    weighted_doublet_metric(&solution.alphas, doublets)
}
