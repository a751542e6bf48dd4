//! SCAR data with Gaussian features and a logistic class posterior.

use alloc::vec::Vec;

use rand::Rng;

use crate::data::{Dataset, ModelParams};
use crate::logistic::sigma;
use crate::numkit::{cholesky, dot, keyed_uniform, rng_stream, sample_mvn, Matrix};
use crate::{Error, Result};

const FEATURE_STREAM: u64 = 0;
const LABEL_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub mean: Vec<f64>,
    pub covariance: Matrix,
    /// True posterior parameters `(β₀, β₋₀)`.
    pub beta: ModelParams,
    /// Label frequency `P(s = 1 | y = 1)`.
    pub c: f64,
    pub n: usize,
    pub seed: u64,
}

/// Three correlated Gaussian features, mean `(1, 1, −1)`, and
/// `β = (−1, −1, 1, 1)`.
pub fn reference_spec(c: f64, n: usize, seed: u64) -> SynthSpec {
    let covariance = Matrix::from_rows(&[[1.0, 0.2, -0.2], [0.2, 1.0, 0.0], [-0.2, 0.0, 1.0]])
        .expect("constant covariance");
    SynthSpec {
        mean: alloc::vec![1.0, 1.0, -1.0],
        covariance,
        beta: ModelParams::new(-1.0, alloc::vec![-1.0, 1.0, 1.0]),
        c,
        n,
        seed,
    }
}

impl SynthSpec {
    /// Same design with zero-mean features.
    pub fn centered(mut self) -> Self {
        self.mean.iter_mut().for_each(|m| *m = 0.0);
        self
    }

    pub fn with_intercept(mut self, beta0: f64) -> Self {
        self.beta.intercept = beta0;
        self
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Validates the spec and returns the covariance factor.
    pub fn validate(&self) -> Result<Matrix> {
        if !(self.c > 0.0 && self.c <= 1.0) {
            return Err(Error::COutOfRange(self.c));
        }
        let p = self.mean.len();
        if self.beta.direction.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: self.beta.direction.len(),
            });
        }
        if self.covariance.rows() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: self.covariance.rows(),
            });
        }
        cholesky(&self.covariance)
    }
}

/// Draws `x ~ N(mean, Σ)`, `y ~ Bernoulli(σ(β₀ + xᵀβ₋₀))`, then labels each
/// positive with probability `c`.
///
/// Features and classes come from one stream; the labeling coin of row `i` is
/// keyed by `(seed, i)` on a separate stream, so varying `c` under a fixed seed
/// keeps `(x, y)` and nests the labeled sets.
pub fn generate(spec: &SynthSpec) -> Result<Dataset> {
    let chol = spec.validate()?;
    let p = spec.mean.len();
    let mut rng = rng_stream(spec.seed, FEATURE_STREAM);
    let mut features = Vec::with_capacity(spec.n * p);
    let mut y = Vec::with_capacity(spec.n);
    let mut s = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let x = sample_mvn(&spec.mean, &chol, &mut rng)?;
        let prob = sigma(spec.beta.intercept + dot(&x, &spec.beta.direction));
        let yi = u8::from(rng.random::<f64>() < prob);
        let coin = keyed_uniform(spec.seed, LABEL_STREAM, i as u64);
        s.push(yi & u8::from(coin < spec.c));
        y.push(yi);
        features.extend_from_slice(&x);
    }
    Dataset::new("synthetic", Matrix::new(spec.n, p, features)?, s, Some(y))
}
