//! PU classifiers built on logistic regression.
//!
//! All four estimators start from the naive fit of `s` on `x`:
//!
//! * **naive**: that fit, used as is.
//! * **enhanced**: the naive direction with the intercept chosen to maximise
//!   the empirical `F1_PU = r̂² / P̂(ŷ = 1)`, where `r̂` is the recall on the
//!   labeled rows. Under SCAR the recall on labeled rows estimates the recall
//!   on all positives, so `F1_PU` is observable without negative labels.
//! * **JOINT**: maximum of the complete likelihood
//!   `Σ sᵢ log(c σ(tᵢ)) + (1 − sᵢ) log(1 − c σ(tᵢ))` over `(b, c)`.
//! * **weighted EN**: Elkan–Noto reweighting of the unlabeled rows given `c`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::{raw_scores, Dataset, FitReport, ModelParams, PredictedLabels};
use crate::logistic::{fit_logistic, log_sigmoid, probabilities, sigma, CaseWeights, FitConfig};
use crate::numkit::{dot, rng_stream, Matrix};
use crate::timing::Stopwatch;
use crate::{Error, Result};

/// Lower clamp applied to the Elkan–Noto label-frequency estimate.
pub const EN_C_FLOOR: f64 = 1e-3;

const THETA_LIMIT: f64 = 12.0;
const MAX_LINE_SEARCH: usize = 60;

pub fn fit_naive(d: &Dataset, cfg: &FitConfig) -> Result<ModelParams> {
    fit_naive_report(d, cfg).map(|r| r.params)
}

pub fn fit_naive_report(d: &Dataset, cfg: &FitConfig) -> Result<FitReport> {
    fit_logistic(d, cfg, None, None)
}

/// Empirical `F1_PU` from counts; 0 when nothing is predicted positive.
#[inline]
fn f1pu_from_counts(hits: usize, labeled: usize, predicted: usize, n: usize) -> f64 {
    if predicted == 0 {
        return 0.0;
    }
    let recall = hits as f64 / labeled as f64;
    recall * recall / (predicted as f64 / n as f64)
}

/// `r̂² / P̂` with `r̂` the fraction of labeled rows predicted positive and
/// `P̂` the fraction of all rows predicted positive.
pub fn f1pu_empirical(predictions: &PredictedLabels, s_labels: &[u8]) -> Result<f64> {
    let pred = predictions.as_slice();
    if pred.len() != s_labels.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: s_labels.len(),
        });
    }
    let labeled = s_labels.iter().filter(|&&s| s == 1).count();
    if labeled == 0 {
        return Err(Error::NoLabeledExamples);
    }
    let hits = pred
        .iter()
        .zip(s_labels)
        .filter(|(&p, &s)| p == 1 && s == 1)
        .count();
    let predicted = pred.iter().filter(|&&p| p == 1).count();
    Ok(f1pu_from_counts(hits, labeled, predicted, pred.len()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Intercept `ŵ₀` whose strict rule `w₀ + x̃ᵀd > 0` selects exactly the
    /// rows with raw score `≥ best_threshold`.
    pub chosen_intercept: f64,
    pub best_threshold: f64,
    pub best_score: f64,
    /// `(threshold, F1_PU)` for every distinct raw score, ascending.
    pub curve: Vec<(f64, f64)>,
}

/// Chooses the intercept maximising the empirical `F1_PU` for a fixed
/// direction.
///
/// Candidate thresholds are the distinct raw scores `tᵢ = x̃ᵢᵀd`; at threshold
/// `τ` the rows with `tᵢ ≥ τ` are predicted positive. One descending pass
/// updates the hit and prediction counts. Ties in `F1_PU` keep the larger
/// threshold. The returned intercept sits halfway between the winning
/// threshold and the next lower distinct score.
pub fn sweep_intercept(direction: &[f64], d: &Dataset) -> Result<SweepResult> {
    if direction.len() != d.num_features() {
        return Err(Error::DimensionMismatch {
            expected: d.num_features(),
            found: direction.len(),
        });
    }
    if direction.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroDirection);
    }
    let s = d.s_labels();
    let labeled = s.iter().filter(|&&v| v == 1).count();
    if labeled == 0 {
        return Err(Error::NoLabeledExamples);
    }
    let n = d.len();
    let scores = raw_scores(direction, d);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut curve = Vec::new();
    let (mut hits, mut predicted) = (0, 0);
    let mut best: Option<(usize, f64)> = None;
    let mut i = 0;
    while i < n {
        let tau = scores[order[i]];
        while i < n && scores[order[i]] == tau {
            hits += usize::from(s[order[i]] == 1);
            predicted += 1;
            i += 1;
        }
        let f = f1pu_from_counts(hits, labeled, predicted, n);
        if best.is_none_or(|(_, b)| f > b) {
            best = Some((curve.len(), f));
        }
        curve.push((tau, f));
    }
    let (best_idx, best_score) = best.expect("at least one candidate");
    let best_threshold = curve[best_idx].0;

    let boundary = match curve.get(best_idx + 1) {
        Some(&(lower, _)) => {
            let mid = best_threshold + 0.5 * (lower - best_threshold);
            if mid < best_threshold && mid >= lower {
                mid
            } else {
                lower
            }
        }
        None => {
            // the curve is still in descending order here
            let span = curve[0].0 - best_threshold;
            let margin = if span > 0.0 {
                0.5 * span
            } else {
                0.5 * best_threshold.abs().max(1.0)
            };
            best_threshold - margin
        }
    };
    curve.reverse();
    Ok(SweepResult {
        chosen_intercept: 0.0 - boundary,
        best_threshold,
        best_score,
        curve,
    })
}

/// Naive direction with the `F1_PU`-maximising intercept, both from `d`.
pub fn fit_enhanced(d: &Dataset, cfg: &FitConfig) -> Result<ModelParams> {
    let naive = fit_naive(d, cfg)?;
    let sweep = sweep_intercept(&naive.direction, d)?;
    Ok(ModelParams::new(sweep.chosen_intercept, naive.direction))
}

#[derive(Debug, Clone, Copy)]
struct JointTerm {
    value: f64,
    d_score: f64,
    d_c: f64,
}

/// Contribution of one row to the complete log-likelihood and its partial
/// derivatives in the score `t` and in `c`.
#[inline]
fn joint_term(s: u8, t: f64, c: f64) -> JointTerm {
    if s == 1 {
        return JointTerm {
            value: libm::log(c) + log_sigmoid(t),
            d_score: sigma(-t),
            d_c: 1.0 / c,
        };
    }
    // log(1 − cσ(t)) = log σ(−t) + log(1 + (1 − c)eᵗ)
    let a = 1.0 - c;
    if t <= 0.0 || a == 0.0 {
        let et = libm::exp(t);
        let bump = if a == 0.0 { 0.0 } else { libm::log1p(a * et) };
        let (d_score, d_c) = if t <= 0.0 {
            (-c * sigma(t) / (1.0 + a * et), -et / (1.0 + a * et))
        } else {
            let em = libm::exp(-t);
            (-c * em / ((1.0 + em) * (em + a)), -1.0 / (em + a))
        };
        JointTerm {
            value: log_sigmoid(-t) + bump,
            d_score,
            d_c,
        }
    } else {
        let em = libm::exp(-t);
        JointTerm {
            value: libm::log(em + a) - libm::log1p(em),
            d_score: -c * em / ((1.0 + em) * (em + a)),
            d_c: -1.0 / (em + a),
        }
    }
}

fn label_frequency(b: &ModelParams) -> Result<f64> {
    let c = b
        .label_frequency
        .ok_or(Error::InvalidConfig("label frequency required"))?;
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::COutOfRange(c));
    }
    Ok(c)
}

/// Complete log-likelihood of `(x, s)` under `P(s = 1 | x) = c σ(xᵀb)`; `c`
/// is read from `b.label_frequency`. Equals [`crate::logistic::loglik_naive`]
/// bit for bit when `c = 1`.
pub fn loglik_joint(b: &ModelParams, d: &Dataset) -> Result<f64> {
    let c = label_frequency(b)?;
    b.check_dims(d)?;
    let s = d.s_labels();
    Ok(raw_scores(&b.direction, d)
        .into_iter()
        .enumerate()
        .map(|(i, t)| joint_term(s[i], b.intercept + t, c).value)
        .sum())
}

fn joint_value_and_gradient(x: &Matrix, s: &[u8], b: &[f64], c: f64) -> (f64, Vec<f64>, f64) {
    let mut grad = vec![0.0; b.len()];
    let mut d_c = 0.0;
    let mut value = 0.0;
    for i in 0..x.rows() {
        let row = x.row(i);
        let term = joint_term(s[i], b[0] + dot(row, &b[1..]), c);
        value += term.value;
        d_c += term.d_c;
        grad[0] += term.d_score;
        for (g, xj) in grad[1..].iter_mut().zip(row) {
            *g += term.d_score * xj;
        }
    }
    (value, grad, d_c)
}

/// Gradient of [`loglik_joint`] in `(intercept, direction…, logit c)`.
pub fn grad_joint(b: &ModelParams, d: &Dataset) -> Result<Vec<f64>> {
    let c = label_frequency(b)?;
    b.check_dims(d)?;
    let (_, mut grad, d_c) =
        joint_value_and_gradient(d.features(), d.s_labels(), &b.coefficients(), c);
    grad.push(d_c * c * (1.0 - c));
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointConfig {
    /// Number of quasi-Newton starts, the naive warm start included.
    pub restarts: usize,
    /// `c = c_floor + (1 − c_floor) σ(θ)` keeps `c` away from 0.
    pub c_floor: f64,
    pub inner: FitConfig,
    pub max_iterations: usize,
    /// Seeds the random restart perturbations.
    pub seed: u64,
}

impl Default for JointConfig {
    fn default() -> Self {
        JointConfig {
            restarts: 5,
            c_floor: 1e-3,
            inner: FitConfig::default(),
            max_iterations: 1000,
            seed: 0,
        }
    }
}

impl JointConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1"));
        }
        if !(self.c_floor > 0.0 && self.c_floor < 1.0) {
            return Err(Error::InvalidConfig("c_floor must lie in (0, 1)"));
        }
        self.inner.validate()
    }

    fn c_of(&self, theta: f64) -> f64 {
        self.c_floor + (1.0 - self.c_floor) * sigma(theta)
    }

    fn theta_of(&self, c: f64) -> f64 {
        let u = ((c - self.c_floor) / (1.0 - self.c_floor)).clamp(1e-12, 1.0);
        (libm::log(u) - libm::log1p(-u)).clamp(-THETA_LIMIT, THETA_LIMIT)
    }
}

struct BfgsOutcome {
    z: Vec<f64>,
    loglik: f64,
    iterations: usize,
    converged: bool,
}

/// Minimises `−ℓ(b, θ)/n` by BFGS with backtracking Armijo steps.
fn joint_bfgs(x: &Matrix, s: &[u8], start: Vec<f64>, cfg: &JointConfig) -> Option<BfgsOutcome> {
    let n = x.rows() as f64;
    let k = start.len();
    let eval = |z: &[f64]| -> (f64, Vec<f64>) {
        let theta = z[k - 1];
        let c = cfg.c_of(theta);
        let (value, grad, d_c) = joint_value_and_gradient(x, s, &z[..k - 1], c);
        let dc_dtheta = (1.0 - cfg.c_floor) * sigma(theta) * sigma(-theta);
        let mut g: Vec<f64> = grad.into_iter().map(|v| -v / n).collect();
        g.push(-d_c * dc_dtheta / n);
        (-value / n, g)
    };
    let tol = cfg.inner.gradient_tolerance;
    let max_abs = |g: &[f64]| g.iter().fold(0.0, |m: f64, v| m.max(v.abs()));

    let mut z = start;
    let (mut f, mut g) = eval(&z);
    if !f.is_finite() {
        return None;
    }
    let mut h = Matrix::identity(k);
    let mut iterations = 0;
    let mut converged = max_abs(&g) <= tol;
    while !converged && iterations < cfg.max_iterations {
        let mut dir: Vec<f64> = h.mul_vec(&g).ok()?.into_iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            h = Matrix::identity(k);
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&g, &dir);
        }
        let mut step = 1.0;
        let mut next = None;
        for _ in 0..MAX_LINE_SEARCH {
            let cand: Vec<f64> = z.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
            let (fc, gc) = eval(&cand);
            if fc.is_finite() && fc <= f + 1e-4 * step * slope {
                next = Some((cand, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((z_new, f_new, g_new)) = next else {
            break;
        };
        let sv: Vec<f64> = z_new.iter().zip(&z).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&sv, &yv);
        if sy > 1e-12 * crate::numkit::norm(&sv) * crate::numkit::norm(&yv) {
            if iterations == 0 {
                h = Matrix::identity(k);
                let scale = sy / dot(&yv, &yv);
                for i in 0..k {
                    h.set(i, i, scale);
                }
            }
            bfgs_update(&mut h, &sv, &yv, sy);
        }
        z = z_new;
        f = f_new;
        g = g_new;
        iterations += 1;
        converged = max_abs(&g) <= tol;
    }
    Some(BfgsOutcome {
        loglik: -f * n,
        z,
        iterations,
        converged,
    })
}

/// Inverse-Hessian update `H ← (I − ρsyᵀ) H (I − ρysᵀ) + ρssᵀ`.
fn bfgs_update(h: &mut Matrix, s: &[f64], y: &[f64], sy: f64) {
    let k = s.len();
    let rho = 1.0 / sy;
    let hy = h.mul_vec(y).expect("square");
    let yhy = dot(y, &hy);
    for i in 0..k {
        for j in 0..k {
            let v = h.get(i, j) - rho * (hy[i] * s[j] + s[i] * hy[j])
                + (rho * rho * yhy + rho) * s[i] * s[j];
            h.set(i, j, v);
        }
    }
}

/// The first JOINT start: naive coefficients with `c₀ = 2·mean(s)`, clipped
/// to `[c_floor, 1]`.
pub fn joint_warm_start(d: &Dataset, jcfg: &JointConfig) -> Result<ModelParams> {
    let naive = fit_naive(d, &jcfg.inner)?;
    let c0 = (2.0 * d.num_labeled() as f64 / d.len() as f64).clamp(jcfg.c_floor, 1.0);
    naive.with_label_frequency(c0)
}

/// JOINT estimator: quasi-Newton ascent of the complete likelihood over
/// `(b, θ)` from several starts.
///
/// Start 0 is the naive fit with `c₀ = 2·mean(s)`; the others perturb it at
/// random. The naive point with `c = 1` also competes as a candidate, so the
/// result never scores below it. `params.label_frequency` carries `ĉ`.
pub fn fit_joint(d: &Dataset, jcfg: &JointConfig) -> Result<FitReport> {
    let clock = Stopwatch::start();
    jcfg.validate()?;
    let warm = joint_warm_start(d, jcfg)?;
    let nb = warm.coefficients();
    let theta0 = jcfg.theta_of(warm.label_frequency.expect("warm start carries c"));

    let mut rng = rng_stream(jcfg.seed, 0x006a_6f69_6e74);
    let mut best: Option<(BfgsOutcome, f64)> = None;
    for r in 0..jcfg.restarts {
        let mut start = nb.clone();
        let mut theta = theta0;
        if r > 0 {
            let scale = libm::exp(0.5 * rng.sample::<f64, _>(StandardNormal));
            for v in start.iter_mut() {
                *v = *v * scale + 0.25 * rng.sample::<f64, _>(StandardNormal);
            }
            theta =
                (theta0 + rng.sample::<f64, _>(StandardNormal)).clamp(-THETA_LIMIT, THETA_LIMIT);
        }
        start.push(theta);
        let Some(mut out) = joint_bfgs(d.features(), d.s_labels(), start, jcfg) else {
            continue;
        };
        if !out.loglik.is_finite() {
            continue;
        }
        let c = jcfg.c_of(out.z.pop().expect("theta is the last coordinate"));
        if best.as_ref().is_none_or(|(b, _)| out.loglik > b.loglik) {
            best = Some((out, c));
        }
    }
    let (out, c) = best.ok_or(Error::AllRestartsFailed)?;

    let naive_point = ModelParams::from_coefficients(&nb).with_label_frequency(1.0)?;
    let naive_ll = loglik_joint(&naive_point, d)?;
    let (params, final_loglik) = if naive_ll > out.loglik {
        (naive_point, naive_ll)
    } else {
        (
            ModelParams::from_coefficients(&out.z).with_label_frequency(c)?,
            out.loglik,
        )
    };
    Ok(FitReport {
        params,
        final_loglik,
        iterations: out.iterations,
        converged: out.converged,
        wall_time: clock.seconds(),
    })
}

/// Elkan–Noto `e₁`: mean naive probability over the labeled rows, clamped
/// to `[EN_C_FLOOR, 1]`.
pub fn estimate_c_en(d: &Dataset, naive: &ModelParams) -> Result<f64> {
    let probs = probabilities(naive, d)?;
    let labeled: Vec<f64> = probs
        .iter()
        .zip(d.s_labels())
        .filter(|(_, &s)| s == 1)
        .map(|(&p, _)| p)
        .collect();
    if labeled.is_empty() {
        return Err(Error::NoLabeledExamples);
    }
    let mean = labeled.iter().sum::<f64>() / labeled.len() as f64;
    Ok(mean.clamp(EN_C_FLOOR, 1.0))
}

/// Weight `((1 − c)/c) · ŝ/(1 − ŝ)` clamped to `[0, 1]` with which an
/// unlabeled row counts as positive.
pub fn en_positive_weight(s_hat: f64, c: f64) -> f64 {
    let factor = (1.0 - c) / c;
    if factor == 0.0 {
        return 0.0;
    }
    let w = factor * s_hat / (1.0 - s_hat);
    if w.is_nan() {
        1.0
    } else {
        w.clamp(0.0, 1.0)
    }
}

/// Positive-copy weights for every row of `d`; labeled rows get 1.
pub fn en_weights(d: &Dataset, naive: &ModelParams, c: f64) -> Result<Vec<f64>> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::COutOfRange(c));
    }
    let probs = probabilities(naive, d)?;
    Ok(probs
        .into_iter()
        .zip(d.s_labels())
        .map(|(p, &s)| {
            if s == 1 {
                1.0
            } else {
                en_positive_weight(p, c)
            }
        })
        .collect())
}

/// Elkan–Noto weighted classifier for a given label frequency.
///
/// Labeled rows enter once as positives; each unlabeled row enters twice,
/// as a positive with weight `wᵢ` from [`en_positive_weight`] and as a
/// negative with weight `1 − wᵢ`. The returned hyperplane thresholds the
/// weighted posterior at 1/2.
pub fn fit_weighted_en(d: &Dataset, c: f64, cfg: &FitConfig) -> Result<ModelParams> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::COutOfRange(c));
    }
    let naive = fit_naive(d, cfg)?;
    fit_weighted_en_from(d, &naive, c, cfg)
}

/// [`fit_weighted_en`] reusing an existing naive fit.
pub fn fit_weighted_en_from(
    d: &Dataset,
    naive: &ModelParams,
    c: f64,
    cfg: &FitConfig,
) -> Result<ModelParams> {
    let w = en_weights(d, naive, c)?;
    let x = d.features();
    let p = x.cols();
    let s = d.s_labels();
    let extra = s.iter().filter(|&&v| v == 0).count();
    let total = d.len() + extra;
    let mut data = Vec::with_capacity(total * p);
    let mut responses = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    for i in 0..d.len() {
        data.extend_from_slice(x.row(i));
        responses.push(1);
        weights.push(w[i]);
        if s[i] == 0 {
            data.extend_from_slice(x.row(i));
            responses.push(0);
            weights.push(1.0 - w[i]);
        }
    }
    let expanded = Dataset::new(
        d.name(),
        Matrix::new(total, p, data)?,
        responses.clone(),
        None,
    )?;
    let report = fit_logistic(
        &expanded,
        cfg,
        Some(&CaseWeights::new(weights)?),
        Some(&responses),
    )?;
    report.params.with_label_frequency(c)
}
