//! TOML experiment configuration.
//!
//! ```toml
//! seed = 7
//! c_grid = [0.3, 0.6]
//! classifiers = ["oracle", "naive", "enhanced"]
//! output = "results/synthetic"
//!
//! [split]
//! replications = 20
//!
//! [data]
//! kind = "synthetic"
//! n_grid = [500, 5000]
//! test_n = 10000
//! ```
//!
//! A real dataset uses `kind = "recipe"` with `recipe = "path/to/recipe.toml"`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use pu_core::estimators::JointConfig;
use pu_core::logistic::FitConfig;
use pu_core::numkit::Matrix;
use pu_core::prep::SplitSpec;
use pu_core::synth::{reference_spec, SynthSpec};
use pu_core::ModelParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(String),
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Oracle,
    Naive,
    Enhanced,
    Joint,
    WeightedEnTrueC,
    WeightedEnEstimatedC,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 6] = [
        ClassifierKind::Oracle,
        ClassifierKind::Naive,
        ClassifierKind::Enhanced,
        ClassifierKind::Joint,
        ClassifierKind::WeightedEnTrueC,
        ClassifierKind::WeightedEnEstimatedC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Oracle => "oracle",
            ClassifierKind::Naive => "naive",
            ClassifierKind::Enhanced => "enhanced",
            ClassifierKind::Joint => "joint",
            ClassifierKind::WeightedEnTrueC => "weighted_en_true_c",
            ClassifierKind::WeightedEnEstimatedC => "weighted_en_estimated_c",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    /// Ignored for synthetic data, which draws a separate test sample.
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_replications")]
    pub replications: usize,
}

fn default_test_fraction() -> f64 {
    0.3
}

fn default_replications() -> usize {
    200
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            test_fraction: default_test_fraction(),
            replications: default_replications(),
        }
    }
}

/// Optimiser settings shared by every classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSettings {
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_tolerance")]
    pub gradient_tolerance: f64,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
    #[serde(default = "default_restarts")]
    pub joint_restarts: usize,
    #[serde(default = "default_joint_iterations")]
    pub joint_max_iterations: usize,
}

fn default_max_iterations() -> usize {
    FitConfig::default().max_iterations
}
fn default_tolerance() -> f64 {
    FitConfig::default().gradient_tolerance
}
fn default_ridge() -> f64 {
    FitConfig::default().ridge
}
fn default_restarts() -> usize {
    JointConfig::default().restarts
}
fn default_joint_iterations() -> usize {
    JointConfig::default().max_iterations
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            max_iterations: default_max_iterations(),
            gradient_tolerance: default_tolerance(),
            ridge: default_ridge(),
            joint_restarts: default_restarts(),
            joint_max_iterations: default_joint_iterations(),
        }
    }
}

impl FitSettings {
    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            max_iterations: self.max_iterations,
            gradient_tolerance: self.gradient_tolerance,
            ridge: self.ridge,
            ..FitConfig::default()
        }
    }

    pub fn joint_config(&self, seed: u64) -> JointConfig {
        JointConfig {
            restarts: self.joint_restarts,
            inner: self.fit_config(),
            max_iterations: self.joint_max_iterations,
            seed,
            ..JointConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Gaussian features with a logistic posterior. Unset fields take the
    /// three-feature reference design.
    Synthetic {
        n_grid: Vec<usize>,
        #[serde(default = "default_test_n")]
        test_n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        covariance: Option<Vec<Vec<f64>>>,
        /// Intercept first.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<Vec<f64>>,
    },
    Recipe {
        recipe: PathBuf,
        #[serde(default = "default_true")]
        standardize: bool,
    },
}

fn default_test_n() -> usize {
    10_000
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub c_grid: Vec<f64>,
    pub classifiers: Vec<ClassifierKind>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Writes wall times into the raw report too. Off by default so that the
    /// raw report is reproducible byte for byte; timings.csv always has them.
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub fit: FitSettings,
    pub data: DataSource,
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

/// 1-based line of the first `key =` assignment, or 1.
fn line_of(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map_or(1, |i| i + 1)
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        cfg.validate()
            .map_err(|(key, message)| ConfigError::Invalid {
                line: line_of(text, key),
                message,
            })?;
        Ok(cfg)
    }

    /// Reads a config file. A relative recipe path is taken relative to the
    /// config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            ConfigError::Syntax(m) => ConfigError::Syntax(format!("{}: {m}", path.display())),
            ConfigError::Invalid { line, message } => ConfigError::Invalid {
                line,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })?;
        if let DataSource::Recipe { recipe, .. } = &mut cfg.data {
            if recipe.is_relative() {
                if let Some(dir) = path.parent() {
                    *recipe = dir.join(&*recipe);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            test_fraction: self.split.test_fraction,
            n_replications: self.split.replications,
            seed: self.seed,
        }
    }

    /// Synthetic design at label frequency `c`, or `None` for recipe data.
    pub fn synth_spec(&self, c: f64, n: usize, seed: u64) -> Option<SynthSpec> {
        let DataSource::Synthetic {
            mean,
            covariance,
            beta,
            ..
        } = &self.data
        else {
            return None;
        };
        let mut spec = reference_spec(c, n, seed);
        if let Some(m) = mean {
            spec.mean = m.clone();
        }
        if let Some(cov) = covariance {
            spec.covariance = Matrix::from_rows(cov).expect("validated");
        }
        if let Some(b) = beta {
            spec.beta = ModelParams::from_coefficients(b);
        }
        Some(spec)
    }

    fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.c_grid.is_empty() {
            return Err(("c_grid", "c_grid must not be empty".into()));
        }
        if let Some(c) = self.c_grid.iter().find(|&&c| !(c > 0.0 && c <= 1.0)) {
            return Err(("c_grid", format!("label frequency {c} is outside (0, 1]")));
        }
        if self.classifiers.is_empty() {
            return Err(("classifiers", "classifiers must not be empty".into()));
        }
        for (i, k) in self.classifiers.iter().enumerate() {
            if self.classifiers[..i].contains(k) {
                return Err(("classifiers", format!("classifier {k} listed twice")));
            }
        }
        self.split_spec().validate().map_err(|e| {
            let key = if self.split.replications == 0 {
                "replications"
            } else {
                "test_fraction"
            };
            (key, e.to_string())
        })?;
        if self.fit.joint_restarts == 0 {
            return Err(("joint_restarts", "joint_restarts must be at least 1".into()));
        }
        self.fit
            .fit_config()
            .validate()
            .map_err(|e| ("fit", e.to_string()))?;
        if let DataSource::Synthetic { n_grid, test_n, .. } = &self.data {
            if n_grid.is_empty() || n_grid.contains(&0) {
                return Err((
                    "n_grid",
                    "n_grid must be a nonempty list of positive sizes".into(),
                ));
            }
            if *test_n == 0 {
                return Err(("test_n", "test_n must be positive".into()));
            }
            let spec = self.synth_spec_checked()?;
            spec.validate().map_err(|e| ("covariance", e.to_string()))?;
        }
        Ok(())
    }

    fn synth_spec_checked(&self) -> Result<SynthSpec, (&'static str, String)> {
        if let DataSource::Synthetic {
            mean,
            covariance,
            beta,
            ..
        } = &self.data
        {
            if let Some(cov) = covariance {
                Matrix::from_rows(cov).map_err(|e| ("covariance", e.to_string()))?;
            }
            let p = mean.as_ref().map_or(3, Vec::len);
            if let Some(b) = beta {
                if b.len() != p + 1 {
                    return Err((
                        "beta",
                        format!(
                            "beta needs {} entries (intercept first), found {}",
                            p + 1,
                            b.len()
                        ),
                    ));
                }
            }
        }
        Ok(self.synth_spec(1.0, 1, 0).expect("synthetic source"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SYNTH: &str = r#"
seed = 11
c_grid = [0.3, 0.6]
classifiers = ["naive", "enhanced"]

[split]
replications = 20

[data]
kind = "synthetic"
n_grid = [5000]
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml_str(SYNTH).unwrap();
        assert_eq!(cfg.seed, 11);
        assert_eq!(
            cfg.classifiers,
            [ClassifierKind::Naive, ClassifierKind::Enhanced]
        );
        assert_eq!(cfg.split.test_fraction, 0.3);
        assert_eq!(cfg.output, PathBuf::from("results"));
        assert!(!cfg.record_timing);
        assert_eq!(cfg.fit, FitSettings::default());
        let spec = cfg.synth_spec(0.6, 100, 1).unwrap();
        assert_eq!(spec, reference_spec(0.6, 100, 1));
    }

    #[test]
    fn round_trips_through_text() {
        let mut cfg = ExperimentConfig::from_toml_str(SYNTH).unwrap();
        cfg.data = DataSource::Synthetic {
            n_grid: vec![10, 20],
            test_n: 50,
            mean: Some(vec![0.0, 0.0]),
            covariance: Some(vec![vec![1.0, 0.5], vec![0.5, 2.0]]),
            beta: Some(vec![0.1, 1.0, -1.0]),
        };
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(again, cfg);
        let recipe = ExperimentConfig {
            data: DataSource::Recipe {
                recipe: "r.toml".into(),
                standardize: false,
            },
            ..cfg
        };
        assert_eq!(
            ExperimentConfig::from_toml_str(&recipe.to_toml_string()).unwrap(),
            recipe
        );
    }

    #[test]
    fn invalid_values_report_their_line() {
        let bad_c = SYNTH.replace("[0.3, 0.6]", "[0.3, 1.6]");
        match ExperimentConfig::from_toml_str(&bad_c) {
            Err(ConfigError::Invalid { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("1.6"));
            }
            other => panic!("{other:?}"),
        }
        let unknown = SYNTH.replace("\"enhanced\"", "\"tice\"");
        let err = ExperimentConfig::from_toml_str(&unknown)
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 4"), "{err}");
        let empty = SYNTH.replace("n_grid = [5000]", "n_grid = []");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&empty),
            Err(ConfigError::Invalid { line: 11, .. })
        ));
        let dup = SYNTH.replace("\"enhanced\"", "\"naive\"");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&dup),
            Err(ConfigError::Invalid { line: 4, .. })
        ));
        let reps = SYNTH.replace("replications = 20", "replications = 0");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&reps),
            Err(ConfigError::Invalid { line: 7, .. })
        ));
    }

    #[test]
    fn synthetic_overrides_are_checked() {
        let bad_beta = format!("{SYNTH}beta = [1.0, 2.0]\n");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&bad_beta),
            Err(ConfigError::Invalid { .. })
        ));
        let singular = format!("{SYNTH}mean = [0.0, 0.0]\ncovariance = [[1.0, 1.0], [1.0, 1.0]]\nbeta = [0.0, 1.0, 1.0]\n");
        match ExperimentConfig::from_toml_str(&singular) {
            Err(ConfigError::Invalid { line, .. }) => assert_eq!(line, 13),
            other => panic!("{other:?}"),
        }
    }
}
