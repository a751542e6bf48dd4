//! Logistic regression by damped Newton (IRLS), optionally case-weighted.
//!
//! With `s` as the response this is the misspecified "naive" PU fit; the same
//! engine serves the oracle fit on `y` and the weighted Elkan–Noto fit.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::{raw_scores, Dataset, FitReport, ModelParams};
use crate::numkit::{cholesky, cholesky_solve, Matrix};
use crate::timing::Stopwatch;
use crate::{Error, Result};

/// Scores beyond this magnitude at a ridge-free optimum mean complete separation.
pub const SEPARATION_SCORE: f64 = 30.0;

const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub max_iterations: usize,
    /// Convergence threshold on the max-abs (penalized) gradient.
    pub gradient_tolerance: f64,
    /// L2 penalty on the direction; the intercept is not penalized.
    pub ridge: f64,
    /// Halve Newton steps until the objective does not decrease.
    pub step_damping: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iterations: 100,
            gradient_tolerance: 1e-8,
            ridge: 1e-6,
            step_damping: true,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::InvalidConfig("gradient_tolerance must be positive"));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::InvalidConfig("ridge must be nonnegative"));
        }
        Ok(())
    }
}

/// Nonnegative per-row weights, at least one positive.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseWeights(Vec<f64>);

impl CaseWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidWeights(
                "weights must be finite and nonnegative",
            ));
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(Error::InvalidWeights(
                "at least one weight must be positive",
            ));
        }
        Ok(CaseWeights(weights))
    }

    pub fn uniform(n: usize) -> Self {
        CaseWeights(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Logistic function `exp(t) / (1 + exp(t))`, evaluated without overflow.
#[inline]
pub fn sigma(t: f64) -> f64 {
    if t < 0.0 {
        let e = libm::exp(t);
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + libm::exp(-t))
    }
}

/// `log σ(t)`.
#[inline]
pub fn log_sigmoid(t: f64) -> f64 {
    if t < 0.0 {
        t - libm::log1p(libm::exp(t))
    } else {
        -libm::log1p(libm::exp(-t))
    }
}

#[inline]
fn bernoulli_loglik(response: u8, t: f64) -> f64 {
    if response == 1 {
        log_sigmoid(t)
    } else {
        log_sigmoid(-t)
    }
}

/// Predicted probabilities `σ(intercept + x̃ᵀ·direction)`.
pub fn probabilities(b: &ModelParams, d: &Dataset) -> Result<Vec<f64>> {
    b.check_dims(d)?;
    Ok(raw_scores(&b.direction, d)
        .into_iter()
        .map(|t| sigma(b.intercept + t))
        .collect())
}

struct Problem<'a> {
    x: &'a Matrix,
    responses: &'a [u8],
    weights: Option<&'a [f64]>,
}

impl<'a> Problem<'a> {
    fn new(
        d: &'a Dataset,
        responses: Option<&'a [u8]>,
        weights: Option<&'a CaseWeights>,
    ) -> Result<Self> {
        let n = d.len();
        let responses = responses.unwrap_or(d.s_labels());
        if responses.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: responses.len(),
            });
        }
        if let Some(index) = responses.iter().position(|&r| r > 1) {
            return Err(Error::InvalidLabel {
                index,
                value: responses[index],
            });
        }
        let weights = weights.map(CaseWeights::as_slice);
        if let Some(w) = weights {
            if w.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: w.len(),
                });
            }
        }
        Ok(Problem {
            x: d.features(),
            responses,
            weights,
        })
    }

    #[inline]
    fn weight(&self, i: usize) -> f64 {
        self.weights.map_or(1.0, |w| w[i])
    }

    fn scores(&self, b: &[f64]) -> Vec<f64> {
        (0..self.x.rows())
            .map(|i| b[0] + crate::numkit::dot(self.x.row(i), &b[1..]))
            .collect()
    }

    fn loglik(&self, b: &[f64]) -> f64 {
        self.scores(b)
            .iter()
            .enumerate()
            .map(|(i, &t)| self.weight(i) * bernoulli_loglik(self.responses[i], t))
            .sum()
    }

    fn gradient(&self, b: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; b.len()];
        for (i, t) in self.scores(b).into_iter().enumerate() {
            let resid = self.weight(i) * (f64::from(self.responses[i]) - sigma(t));
            g[0] += resid;
            for (gj, xj) in g[1..].iter_mut().zip(self.x.row(i)) {
                *gj += resid * xj;
            }
        }
        g
    }

    /// Negative Hessian `Σ wᵢ σᵢ(1−σᵢ) xᵢxᵢᵀ` with `xᵢ = (1, x̃ᵢ)`.
    fn information(&self, scores: &[f64]) -> Matrix {
        let k = self.x.cols() + 1;
        let mut h = vec![0.0; k * k];
        let mut row = vec![0.0; k];
        row[0] = 1.0;
        for (i, &t) in scores.iter().enumerate() {
            let p = sigma(t);
            let v = self.weight(i) * p * (1.0 - p);
            if v == 0.0 {
                continue;
            }
            row[1..].copy_from_slice(self.x.row(i));
            for a in 0..k {
                let va = v * row[a];
                let hr = &mut h[a * k..a * k + a + 1];
                for (hab, rb) in hr.iter_mut().zip(&row[..=a]) {
                    *hab += va * rb;
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                h[b * k + a] = h[a * k + b];
            }
        }
        Matrix::new(k, k, h).expect("finite information matrix")
    }

    fn has_both_classes(&self) -> bool {
        let mut seen = [false; 2];
        for (i, &r) in self.responses.iter().enumerate() {
            if self.weight(i) > 0.0 {
                seen[r as usize] = true;
            }
        }
        seen[0] && seen[1]
    }
}

fn penalized(obj: f64, b: &[f64], ridge: f64) -> f64 {
    obj - 0.5 * ridge * b[1..].iter().map(|v| v * v).sum::<f64>()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
}

/// Log-likelihood `Σ wᵢ [rᵢ log σ(tᵢ) + (1−rᵢ) log(1−σ(tᵢ))]`; responses
/// default to `s` and weights to 1.
pub fn loglik(
    b: &ModelParams,
    d: &Dataset,
    responses: Option<&[u8]>,
    weights: Option<&CaseWeights>,
) -> Result<f64> {
    b.check_dims(d)?;
    Ok(Problem::new(d, responses, weights)?.loglik(&b.coefficients()))
}

/// Gradient of [`loglik`], intercept coordinate first.
pub fn gradient(
    b: &ModelParams,
    d: &Dataset,
    responses: Option<&[u8]>,
    weights: Option<&CaseWeights>,
) -> Result<Vec<f64>> {
    b.check_dims(d)?;
    Ok(Problem::new(d, responses, weights)?.gradient(&b.coefficients()))
}

/// Log-likelihood of the logistic model fitted to `(x, s)`.
pub fn loglik_naive(b: &ModelParams, d: &Dataset) -> Result<f64> {
    loglik(b, d, None, None)
}

/// Score vector `Σ xᵢ (sᵢ − σ(xᵢᵀb))` with `xᵢ = (1, x̃ᵢ)`.
pub fn grad_naive(b: &ModelParams, d: &Dataset) -> Result<Vec<f64>> {
    gradient(b, d, None, None)
}

pub fn fit_logistic(
    d: &Dataset,
    cfg: &FitConfig,
    weights: Option<&CaseWeights>,
    responses: Option<&[u8]>,
) -> Result<FitReport> {
    fit_logistic_with_trace(d, cfg, weights, responses).map(|(report, _)| report)
}

/// [`fit_logistic`] that also returns the penalized objective after every
/// accepted step (starting point first).
pub fn fit_logistic_with_trace(
    d: &Dataset,
    cfg: &FitConfig,
    weights: Option<&CaseWeights>,
    responses: Option<&[u8]>,
) -> Result<(FitReport, Vec<f64>)> {
    let clock = Stopwatch::start();
    cfg.validate()?;
    if responses.is_none() {
        d.validate()?;
    }
    let problem = Problem::new(d, responses, weights)?;
    if !problem.has_both_classes() {
        return Err(Error::DegenerateLabels);
    }

    let k = d.num_features() + 1;
    let mut b = vec![0.0; k];
    let mut obj = penalized(problem.loglik(&b), &b, cfg.ridge);
    let mut trace = vec![obj];
    let mut iterations = 0;
    let mut converged = false;

    loop {
        let mut g = problem.gradient(&b);
        for (gj, bj) in g[1..].iter_mut().zip(&b[1..]) {
            *gj -= cfg.ridge * bj;
        }
        if max_abs(&g) <= cfg.gradient_tolerance {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iterations {
            break;
        }

        let scores = problem.scores(&b);
        let mut info = problem.information(&scores);
        for j in 1..k {
            info.set(j, j, info.get(j, j) + cfg.ridge);
        }
        let step = newton_step(&info, &g)?;

        // Gains below the rounding level of the summed objective are accepted
        // so the final polishing steps are not rejected on noise.
        let slack = 1e-12 * (1.0 + obj.abs());
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let candidate: Vec<f64> = b
                .iter()
                .zip(&step)
                .map(|(bj, sj)| bj + scale * sj)
                .collect();
            let cand_obj = penalized(problem.loglik(&candidate), &candidate, cfg.ridge);
            if !cfg.step_damping || cand_obj >= obj - slack {
                accepted = Some((candidate, cand_obj));
                break;
            }
            scale *= 0.5;
        }
        let Some((next, next_obj)) = accepted else {
            break;
        };
        b = next;
        obj = next_obj;
        trace.push(obj);
        iterations += 1;
    }

    if converged
        && cfg.ridge == 0.0
        && problem
            .scores(&b)
            .iter()
            .any(|t| t.abs() > SEPARATION_SCORE)
    {
        return Err(Error::SeparationDetected);
    }

    let params = ModelParams::from_coefficients(&b);
    let report = FitReport {
        final_loglik: problem.loglik(&b),
        params,
        iterations,
        converged,
        wall_time: clock.seconds(),
    };
    Ok((report, trace))
}

fn newton_step(info: &Matrix, g: &[f64]) -> Result<Vec<f64>> {
    let l = match cholesky(info) {
        Ok(l) => l,
        Err(_) => {
            let k = info.rows();
            let jitter = 1e-10 * (1.0 + (0..k).map(|j| info.get(j, j)).fold(0.0, f64::max));
            let mut damped = info.clone();
            for j in 0..k {
                damped.set(j, j, damped.get(j, j) + jitter);
            }
            cholesky(&damped).map_err(|_| Error::SingularHessian)?
        }
    };
    cholesky_solve(&l, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::rng_stream;
    use rand::Rng;

    fn random_dataset(rng: &mut impl Rng, n: usize, p: usize) -> Dataset {
        let x = Matrix::new(
            n,
            p,
            (0..n * p)
                .map(|_| rng.random::<f64>() * 4.0 - 2.0)
                .collect(),
        )
        .unwrap();
        let mut s: Vec<u8> = (0..n)
            .map(|_| u8::from(rng.random::<f64>() < 0.4))
            .collect();
        s[0] = 1;
        s[1] = 0;
        Dataset::new("rand", x, s, None).unwrap()
    }

    #[test]
    fn sigma_properties() {
        assert_eq!(sigma(0.0), 0.5);
        assert_eq!(sigma(-1000.0), 0.0);
        assert_eq!(sigma(1000.0), 1.0);
        for t in [0.1, 1.0, 3.7, 12.0, 40.0] {
            assert!((sigma(t) + sigma(-t) - 1.0).abs() <= 1e-15);
        }
        assert!(log_sigmoid(-1000.0).is_finite());
        assert!((log_sigmoid(2.0) - libm::log(sigma(2.0))).abs() < 1e-15);
    }

    #[test]
    fn loglik_closed_forms() {
        let x = Matrix::from_rows(&[[1.0], [-1.0], [2.0], [0.0]]).unwrap();
        let d = Dataset::new("t", x, vec![1, 0, 1, 0], None).unwrap();
        let l0 = loglik_naive(&ModelParams::zeros(1), &d).unwrap();
        assert!((l0 - 4.0 * libm::log(0.5)).abs() < 1e-12);
        assert!((l0 + 2.7726).abs() < 1e-4);

        // scores (1, -1) with s = (1, 0): 2 log σ(1)
        let x = Matrix::from_rows(&[[1.0], [-1.0]]).unwrap();
        let d = Dataset::new("t", x, vec![1, 0], None).unwrap();
        let l = loglik_naive(&ModelParams::new(0.0, vec![1.0]), &d).unwrap();
        assert!((l - 2.0 * libm::log(sigma(1.0))).abs() < 1e-15);
        assert!((l + 0.6265).abs() < 1e-4);

        // confident separation approaches 0 from below
        let strong = loglik_naive(&ModelParams::new(0.0, vec![40.0]), &d).unwrap();
        assert!(strong < 0.0 && strong > -1e-15);
    }

    #[test]
    fn gradient_at_zero_is_label_imbalance() {
        let mut rng = rng_stream(4, 0);
        let d = random_dataset(&mut rng, 30, 2);
        let g = grad_naive(&ModelParams::zeros(2), &d).unwrap();
        let expected: f64 = d.s_labels().iter().map(|&s| f64::from(s) - 0.5).sum();
        assert!((g[0] - expected).abs() < 1e-12);
    }

    fn fd_check(b: &ModelParams, d: &Dataset, weights: Option<&CaseWeights>) {
        let g = gradient(b, d, None, weights).unwrap();
        let h = 1e-5;
        let base = b.coefficients();
        for j in 0..base.len() {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[j] += h;
            minus[j] -= h;
            let fp = loglik(&ModelParams::from_coefficients(&plus), d, None, weights).unwrap();
            let fm = loglik(&ModelParams::from_coefficients(&minus), d, None, weights).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            let rel = (fd - g[j]).abs() / g[j].abs().max(1.0);
            assert!(rel <= 1e-5, "coordinate {j}: fd {fd} vs analytic {}", g[j]);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rng_stream(11, 0);
        for _ in 0..20 {
            let d = random_dataset(&mut rng, 40, 3);
            let b = ModelParams::from_coefficients(
                &(0..4)
                    .map(|_| rng.random::<f64>() * 2.0 - 1.0)
                    .collect::<Vec<_>>(),
            );
            fd_check(&b, &d, None);
            let w = CaseWeights::new((0..40).map(|_| rng.random::<f64>() * 2.0).collect()).unwrap();
            fd_check(&b, &d, Some(&w));
        }
    }

    #[test]
    fn intercept_only_fit_is_logit_of_rate() {
        let x = Matrix::new(4, 0, vec![]).unwrap();
        let d = Dataset::new("i", x, vec![1, 1, 0, 0], None).unwrap();
        let r = fit_logistic(&d, &FitConfig::default(), None, None).unwrap();
        assert!(r.converged);
        assert!(r.params.intercept.abs() < 1e-6);

        let x = Matrix::new(4, 0, vec![]).unwrap();
        let d = Dataset::new("i", x, vec![1, 0, 0, 0], None).unwrap();
        let r = fit_logistic(&d, &FitConfig::default(), None, None).unwrap();
        assert!((r.params.intercept - libm::log(1.0 / 3.0)).abs() < 1e-6);
    }

    #[test]
    fn unit_weights_reproduce_unweighted_fit_bitwise() {
        let mut rng = rng_stream(5, 0);
        let d = random_dataset(&mut rng, 200, 3);
        let cfg = FitConfig::default();
        let a = fit_logistic(&d, &cfg, None, None).unwrap();
        let b = fit_logistic(&d, &cfg, Some(&CaseWeights::uniform(200)), None).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.params, b.params);
        assert_eq!(a.final_loglik.to_bits(), b.final_loglik.to_bits());
    }

    #[test]
    fn trace_is_monotone_and_score_equations_hold() {
        let mut rng = rng_stream(6, 0);
        for _ in 0..10 {
            let d = random_dataset(&mut rng, 300, 4);
            let (r, trace) =
                fit_logistic_with_trace(&d, &FitConfig::default(), None, None).unwrap();
            assert!(r.converged);
            assert!(r.iterations <= 100);
            assert!(r.final_loglik <= 0.0);
            for w in trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-12 * (1.0 + w[0].abs()));
            }
            let g = grad_naive(&r.params, &d).unwrap();
            assert!(max_abs(&g) <= 1e-6 * d.len() as f64);
        }
    }

    #[test]
    fn separation_detected_without_ridge() {
        let x = Matrix::from_rows(&[[-2.0], [-1.0], [1.0], [2.0]]).unwrap();
        let d = Dataset::new("sep", x, vec![0, 0, 1, 1], None).unwrap();
        let cfg = FitConfig {
            ridge: 0.0,
            max_iterations: 500,
            ..FitConfig::default()
        };
        assert_eq!(
            fit_logistic(&d, &cfg, None, None),
            Err(Error::SeparationDetected)
        );
        // the default ridge keeps the optimum finite
        let r = fit_logistic(&d, &FitConfig::default(), None, None).unwrap();
        assert!(r.params.direction[0] > 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        let d = Dataset::new("t", x, vec![1, 0], None).unwrap();
        let cfg = FitConfig {
            gradient_tolerance: 0.0,
            ..FitConfig::default()
        };
        assert!(matches!(
            fit_logistic(&d, &cfg, None, None),
            Err(Error::InvalidConfig(_))
        ));
        assert!(CaseWeights::new(vec![0.0, 0.0]).is_err());
        assert!(CaseWeights::new(vec![-1.0, 1.0]).is_err());
        assert!(matches!(
            fit_logistic(
                &d,
                &FitConfig::default(),
                Some(&CaseWeights::uniform(3)),
                None
            ),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(
            fit_logistic(&d, &FitConfig::default(), None, Some(&[1, 1])),
            Err(Error::DegenerateLabels)
        );
    }
}
