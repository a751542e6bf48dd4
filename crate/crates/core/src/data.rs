use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::numkit::{dot, Matrix};
use crate::{Error, Result};

/// PU sample: features without an intercept column, observed labels `s`, and
/// (for synthetic data and evaluation splits) the true classes `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Matrix,
    s_labels: Vec<u8>,
    y_labels: Option<Vec<u8>>,
    row_ids: Vec<u64>,
    feature_names: Vec<String>,
}

impl Dataset {
    /// Row identifiers default to `0..n`, feature names to `x1..xp`.
    pub fn new(
        name: impl Into<String>,
        features: Matrix,
        s_labels: Vec<u8>,
        y_labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        let n = features.rows();
        check_len(n, s_labels.len())?;
        if let Some(y) = &y_labels {
            check_len(n, y.len())?;
        }
        let feature_names = (1..=features.cols()).map(|j| format!("x{j}")).collect();
        Ok(Dataset {
            name: name.into(),
            features,
            s_labels,
            y_labels,
            row_ids: (0..n as u64).collect(),
            feature_names,
        })
    }

    pub fn with_row_ids(mut self, row_ids: Vec<u64>) -> Result<Self> {
        check_len(self.len(), row_ids.len())?;
        self.row_ids = row_ids;
        Ok(self)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        check_len(self.num_features(), names.len())?;
        self.feature_names = names;
        Ok(self)
    }

    /// Same rows with the observed labels replaced.
    pub fn with_s_labels(mut self, s_labels: Vec<u8>) -> Result<Self> {
        check_len(self.len(), s_labels.len())?;
        self.s_labels = s_labels;
        Ok(self)
    }

    pub fn with_features(mut self, features: Matrix) -> Result<Self> {
        check_len(self.len(), features.rows())?;
        check_len(self.num_features(), features.cols())?;
        self.features = features;
        Ok(self)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Rows `indices`, in that order, with their labels and row identifiers.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let pick = |v: &Vec<u8>| indices.iter().map(|&i| v[i]).collect::<Vec<u8>>();
        Dataset {
            name: self.name.clone(),
            features: self.features.select_rows(indices),
            s_labels: pick(&self.s_labels),
            y_labels: self.y_labels.as_ref().map(pick),
            row_ids: indices.iter().map(|&i| self.row_ids[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn s_labels(&self) -> &[u8] {
        &self.s_labels
    }

    pub fn y_labels(&self) -> Option<&[u8]> {
        self.y_labels.as_deref()
    }

    pub fn row_ids(&self) -> &[u64] {
        &self.row_ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn num_labeled(&self) -> usize {
        self.s_labels.iter().filter(|&&s| s == 1).count()
    }

    /// Checks binary labels, the SCAR rule `s = 1 ⇒ y = 1`, and that both
    /// labeled and unlabeled rows exist.
    pub fn validate(&self) -> Result<()> {
        check_binary(&self.s_labels)?;
        if let Some(y) = &self.y_labels {
            check_binary(y)?;
            if let Some(index) = self
                .s_labels
                .iter()
                .zip(y)
                .position(|(&s, &y)| s == 1 && y == 0)
            {
                return Err(Error::ScarViolation { index });
            }
        }
        let labeled = self.num_labeled();
        if labeled == 0 || labeled == self.len() {
            return Err(Error::DegenerateLabels);
        }
        Ok(())
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn check_binary(labels: &[u8]) -> Result<()> {
    match labels.iter().position(|&v| v > 1) {
        Some(index) => Err(Error::InvalidLabel {
            index,
            value: labels[index],
        }),
        None => Ok(()),
    }
}

/// Separating hyperplane `intercept + x̃ᵀ·direction`, plus the label
/// frequency when the estimator produces one.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub intercept: f64,
    pub direction: Vec<f64>,
    pub label_frequency: Option<f64>,
}

impl ModelParams {
    pub fn new(intercept: f64, direction: Vec<f64>) -> Self {
        ModelParams {
            intercept,
            direction,
            label_frequency: None,
        }
    }

    pub fn zeros(p: usize) -> Self {
        ModelParams::new(0.0, alloc::vec![0.0; p])
    }

    /// `(intercept, direction…)`.
    pub fn from_coefficients(b: &[f64]) -> Self {
        ModelParams::new(b[0], b[1..].to_vec())
    }

    pub fn coefficients(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.direction.len() + 1);
        b.push(self.intercept);
        b.extend_from_slice(&self.direction);
        b
    }

    pub fn with_label_frequency(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::COutOfRange(c));
        }
        self.label_frequency = Some(c);
        Ok(self)
    }

    /// Multiplies intercept and direction by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        ModelParams {
            intercept: self.intercept * factor,
            direction: self.direction.iter().map(|v| v * factor).collect(),
            label_frequency: self.label_frequency,
        }
    }

    pub(crate) fn check_dims(&self, d: &Dataset) -> Result<()> {
        check_len(d.num_features(), self.direction.len())
    }
}

/// Outcome of an iterative fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub params: ModelParams,
    pub final_loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Seconds; always 0 without the `std` feature.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictedLabels(pub Vec<u8>);

impl PredictedLabels {
    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn num_positive(&self) -> usize {
        self.0.iter().filter(|&&v| v == 1).count()
    }
}

/// `x̃ᵢᵀ·direction` for every row, without the intercept.
pub(crate) fn raw_scores(direction: &[f64], d: &Dataset) -> Vec<f64> {
    let x = d.features();
    (0..x.rows()).map(|i| dot(x.row(i), direction)).collect()
}

pub fn decision_scores(params: &ModelParams, d: &Dataset) -> Result<Vec<f64>> {
    params.check_dims(d)?;
    Ok(raw_scores(&params.direction, d)
        .into_iter()
        .map(|t| params.intercept + t)
        .collect())
}

/// Positive iff the decision score is strictly greater than zero.
pub fn classify(params: &ModelParams, d: &Dataset) -> Result<PredictedLabels> {
    Ok(PredictedLabels(
        decision_scores(params, d)?
            .into_iter()
            .map(|t| u8::from(t > 0.0))
            .collect(),
    ))
}
