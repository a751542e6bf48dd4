//! Executes the classifier × c × n × replication grid of an experiment.

use std::time::Instant;

use pu_core::data::classify;
use pu_core::estimators::{
    estimate_c_en, fit_enhanced, fit_joint, fit_naive, fit_weighted_en, fit_weighted_en_from,
};
use pu_core::logistic::fit_logistic;
use pu_core::metrics::{angle_between, balanced_accuracy, estimate_eta, f1_true, MetricsRow};
use pu_core::prep::{scar_relabel, split, standardize};
use pu_core::synth::generate;
use pu_core::{Dataset, ModelParams};
use rayon::prelude::*;

use crate::config::{ClassifierKind, DataSource, ExperimentConfig};
use crate::ingest::{DatasetRecipe, IngestError};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

const TRAIN_STREAM: u64 = 0;
const TEST_STREAM: u64 = 1;
const RELABEL_STREAM: u64 = 2;
const JOINT_STREAM: u64 = 3;

/// Folds `parts` into `base` with the splitmix64 finaliser.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    parts.iter().fold(mix(base), |acc, &p| {
        mix(acc.wrapping_add(0x9e37_79b9_7f4a_7c15) ^ p)
    })
}

#[derive(Debug, Clone, Copy)]
struct Task {
    n: Option<usize>,
    c_index: usize,
    c: f64,
    replication: usize,
}

struct Prepared {
    train: Dataset,
    test: Dataset,
    true_direction: Option<Vec<f64>>,
}

fn prepare(cfg: &ExperimentConfig, data: Option<&Dataset>, t: &Task) -> Result<Prepared, String> {
    let rep = t.replication as u64;
    match (&cfg.data, data) {
        (DataSource::Synthetic { test_n, .. }, _) => {
            let n = t.n.expect("synthetic cells carry n");
            let train_seed = derive_seed(cfg.seed, &[TRAIN_STREAM, n as u64, rep]);
            let test_seed = derive_seed(cfg.seed, &[TEST_STREAM, n as u64, rep]);
            let spec = cfg.synth_spec(t.c, n, train_seed).expect("synthetic");
            let truth = spec.beta.direction.clone();
            let train = generate(&spec).map_err(|e| e.to_string())?;
            let test = generate(&spec.with_c(1.0).with_n(*test_n).with_seed(test_seed))
                .map_err(|e| e.to_string())?;
            Ok(Prepared {
                train,
                test,
                true_direction: Some(truth),
            })
        }
        (
            DataSource::Recipe {
                standardize: scale, ..
            },
            Some(d),
        ) => {
            let (train, test) =
                split(d, &cfg.split_spec(), t.replication).map_err(|e| e.to_string())?;
            let train = scar_relabel(&train, t.c, derive_seed(cfg.seed, &[RELABEL_STREAM, rep]))
                .map_err(|e| e.to_string())?;
            let (train, test) = if *scale {
                let (train, record) = standardize(&train).map_err(|e| e.to_string())?;
                let test = record.apply(&test).map_err(|e| e.to_string())?;
                (train, test)
            } else {
                (train, test)
            };
            Ok(Prepared {
                train,
                test,
                true_direction: None,
            })
        }
        (DataSource::Recipe { .. }, None) => Err("recipe data not loaded".into()),
    }
}

fn fit(
    cfg: &ExperimentConfig,
    kind: ClassifierKind,
    t: &Task,
    train: &Dataset,
) -> pu_core::Result<ModelParams> {
    let fc = cfg.fit.fit_config();
    match kind {
        ClassifierKind::Oracle => {
            let y = train.y_labels().ok_or(pu_core::Error::MissingTruth)?;
            Ok(fit_logistic(train, &fc, None, Some(y))?.params)
        }
        ClassifierKind::Naive => fit_naive(train, &fc),
        ClassifierKind::Enhanced => fit_enhanced(train, &fc),
        ClassifierKind::Joint => {
            let seed = derive_seed(
                cfg.seed,
                &[
                    JOINT_STREAM,
                    t.n.unwrap_or(0) as u64,
                    t.c_index as u64,
                    t.replication as u64,
                ],
            );
            Ok(fit_joint(train, &cfg.fit.joint_config(seed))?.params)
        }
        ClassifierKind::WeightedEnTrueC => fit_weighted_en(train, t.c, &fc),
        ClassifierKind::WeightedEnEstimatedC => {
            let naive = fit_naive(train, &fc)?;
            let c = estimate_c_en(train, &naive)?;
            fit_weighted_en_from(train, &naive, c, &fc)
        }
    }
}

fn evaluate(
    params: &ModelParams,
    prep: &Prepared,
) -> pu_core::Result<(f64, f64, Option<f64>, Option<f64>)> {
    let y = prep.test.y_labels().ok_or(pu_core::Error::MissingTruth)?;
    let pred = classify(params, &prep.test)?;
    let f1 = f1_true(&pred, y)?;
    let ba = balanced_accuracy(&pred, y)?;
    let (angle, eta) = match &prep.true_direction {
        Some(truth) => (
            angle_between(&params.direction, truth).ok(),
            estimate_eta(&params.direction, truth).ok(),
        ),
        None => (None, None),
    };
    Ok((f1, ba, angle, eta))
}

fn failed_row(kind: ClassifierKind, t: &Task, seconds: f64, status: String) -> MetricsRow {
    MetricsRow {
        classifier: kind.name().to_owned(),
        c: t.c,
        n: t.n,
        replication: t.replication,
        f1: f64::NAN,
        balanced_accuracy: f64::NAN,
        angle_degrees: None,
        eta_hat: None,
        train_seconds: seconds,
        status,
    }
}

fn run_task(cfg: &ExperimentConfig, data: Option<&Dataset>, t: &Task) -> Vec<MetricsRow> {
    let prep = match prepare(cfg, data, t) {
        Ok(p) => p,
        Err(e) => {
            return cfg
                .classifiers
                .iter()
                .map(|&k| failed_row(k, t, f64::NAN, format!("data error: {e}")))
                .collect()
        }
    };
    cfg.classifiers
        .iter()
        .map(|&kind| {
            let clock = Instant::now();
            let fitted = fit(cfg, kind, t, &prep.train);
            let seconds = clock.elapsed().as_secs_f64();
            match fitted.and_then(|p| evaluate(&p, &prep)) {
                Ok((f1, ba, angle, eta)) => MetricsRow {
                    classifier: kind.name().to_owned(),
                    c: t.c,
                    n: t.n,
                    replication: t.replication,
                    f1,
                    balanced_accuracy: ba,
                    angle_degrees: angle,
                    eta_hat: eta,
                    train_seconds: seconds,
                    status: "ok".to_owned(),
                },
                Err(e) => failed_row(kind, t, seconds, format!("failed: {e}")),
            }
        })
        .collect()
}

/// Loads the dataset a recipe-based config refers to.
pub fn load_data(cfg: &ExperimentConfig) -> Result<Option<Dataset>, IngestError> {
    match &cfg.data {
        DataSource::Synthetic { .. } => Ok(None),
        DataSource::Recipe { recipe, .. } => DatasetRecipe::from_toml(recipe)?.load().map(Some),
    }
}

/// Runs every cell and replication. Rows come back ordered by classifier
/// (config order), c, n and replication whatever the thread count.
pub fn execute(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<Vec<MetricsRow>, RunError> {
    let data = load_data(cfg)?;
    execute_on(cfg, data.as_ref(), jobs)
}

/// As [`execute`], with the dataset supplied by the caller.
pub fn execute_on(
    cfg: &ExperimentConfig,
    data: Option<&Dataset>,
    jobs: Option<usize>,
) -> Result<Vec<MetricsRow>, RunError> {
    let n_grid: Vec<Option<usize>> = match &cfg.data {
        DataSource::Synthetic { n_grid, .. } => n_grid.iter().copied().map(Some).collect(),
        DataSource::Recipe { .. } => vec![None],
    };
    let mut tasks = Vec::new();
    for (c_index, &c) in cfg.c_grid.iter().enumerate() {
        for &n in &n_grid {
            for replication in 0..cfg.split.replications {
                tasks.push(Task {
                    n,
                    c_index,
                    c,
                    replication,
                });
            }
        }
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder.build()?;
    let mut keyed: Vec<((usize, usize, usize, usize), MetricsRow)> = pool.install(|| {
        tasks
            .par_iter()
            .flat_map_iter(|t| {
                run_task(cfg, data, t)
                    .into_iter()
                    .enumerate()
                    .map(move |(k, row)| ((k, t.c_index, t.n.unwrap_or(0), t.replication), row))
            })
            .collect()
    });
    keyed.sort_by_key(|(key, _)| *key);
    Ok(keyed.into_iter().map(|(_, row)| row).collect())
}

/// True when some (classifier, c, n) cell has at least one successful row.
pub fn any_cell_succeeded(rows: &[MetricsRow]) -> bool {
    rows.iter().any(MetricsRow::is_ok)
}
