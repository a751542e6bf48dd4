//! Classification measures and collinearity diagnostics.

use alloc::string::String;

use crate::data::{ModelParams, PredictedLabels};
use crate::logistic::sigma;
use crate::numkit::{dot, rng_stream, sample_mvn, Matrix};
use crate::{Error, Result};

/// One evaluation record per (classifier, c, n, replication).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub classifier: String,
    pub c: f64,
    pub n: Option<usize>,
    pub replication: usize,
    pub f1: f64,
    pub balanced_accuracy: f64,
    pub angle_degrees: Option<f64>,
    pub eta_hat: Option<f64>,
    pub train_seconds: f64,
    /// `"ok"` or a failure description.
    pub status: String,
}

impl MetricsRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
struct Confusion {
    tp: usize,
    fp: usize,
    fn_: usize,
    tn: usize,
}

fn confusion(pred: &[u8], y: &[u8]) -> Result<Confusion> {
    if pred.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: y.len(),
        });
    }
    let mut c = Confusion::default();
    for (&p, &t) in pred.iter().zip(y) {
        match (p == 1, t == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// `2·TP / (2·TP + FP + FN)`, 0 when the denominator vanishes.
pub fn f1_true(pred: &PredictedLabels, y: &[u8]) -> Result<f64> {
    let c = confusion(pred.as_slice(), y)?;
    let denom = 2 * c.tp + c.fp + c.fn_;
    Ok(if denom == 0 {
        0.0
    } else {
        (2 * c.tp) as f64 / denom as f64
    })
}

/// Mean of true-positive and true-negative rates.
pub fn balanced_accuracy(pred: &PredictedLabels, y: &[u8]) -> Result<f64> {
    let c = confusion(pred.as_slice(), y)?;
    let pos = c.tp + c.fn_;
    let neg = c.tn + c.fp;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClassTruth);
    }
    Ok(0.5 * (c.tp as f64 / pos as f64 + c.tn as f64 / neg as f64))
}

/// Angle in degrees, in `[0, 180]`.
pub fn angle_between(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (aa, bb) = (dot(a, a), dot(b, b));
    if aa == 0.0 || bb == 0.0 {
        return Err(Error::ZeroVector);
    }
    let cos = (dot(a, b) / libm::sqrt(aa * bb)).clamp(-1.0, 1.0);
    Ok(libm::acos(cos).to_degrees())
}

/// Least-squares `λ` minimising `‖fitted − λ·true‖`.
pub fn estimate_eta(fitted_dir: &[f64], true_dir: &[f64]) -> Result<f64> {
    if fitted_dir.len() != true_dir.len() {
        return Err(Error::LengthMismatch {
            left: fitted_dir.len(),
            right: true_dir.len(),
        });
    }
    let tt = dot(true_dir, true_dir);
    if tt == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(dot(fitted_dir, true_dir) / tt)
}

/// Zero-mean (or shifted) Gaussian feature source for Monte-Carlo diagnostics.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    pub mean: alloc::vec::Vec<f64>,
    pub chol_lower: Matrix,
    pub draws: usize,
    pub seed: u64,
}

/// Relative gap between the two sides of the Gaussian identity linking the
/// collinearity factor to the label frequency:
///
/// `η/c = E σ'(β₀ + x̃ᵀβ₋₀) / E σ'(β*₀ + η x̃ᵀβ₋₀)`.
///
/// `η̂` comes from [`estimate_eta`] on the two directions; both expectations
/// share the same Monte-Carlo draws. Returns `|η̂/c − ratio| / (η̂/c)`.
pub fn check_collinearity_ratio(
    beta: &ModelParams,
    beta_star: &ModelParams,
    c: f64,
    sampler: &GaussianSampler,
) -> Result<f64> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::COutOfRange(c));
    }
    let eta = estimate_eta(&beta_star.direction, &beta.direction)?;
    let mut rng = rng_stream(sampler.seed, 0);
    let dsigma = |t: f64| {
        let p = sigma(t);
        p * (1.0 - p)
    };
    let (mut num, mut den) = (0.0, 0.0);
    for _ in 0..sampler.draws {
        let x = sample_mvn(&sampler.mean, &sampler.chol_lower, &mut rng)?;
        let proj = dot(&x, &beta.direction);
        num += dsigma(beta.intercept + proj);
        den += dsigma(beta_star.intercept + eta * proj);
    }
    let ratio = num / den;
    let lhs = eta / c;
    Ok(((lhs - ratio) / lhs).abs())
}
