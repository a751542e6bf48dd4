//! Feature standardization, SCAR relabeling and replicated train/test splits.

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::data::Dataset;
use crate::numkit::{keyed_uniform, rng_stream, Matrix};
use crate::{Error, Result};

const RELABEL_STREAM: u64 = 1;
const SPLIT_STREAM_BASE: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub n_replications: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.3,
            n_replications: 200,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidConfig("test_fraction must lie in (0, 1)"));
        }
        if self.n_replications == 0 {
            return Err(Error::InvalidConfig("n_replications must be at least 1"));
        }
        Ok(())
    }
}

/// Per-column affine map `x ↦ (x − shift) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        self.map(d, |v, m, s| (v - m) / s)
    }

    pub fn invert(&self, d: &Dataset) -> Result<Dataset> {
        self.map(d, |v, m, s| v * s + m)
    }

    fn map(&self, d: &Dataset, f: impl Fn(f64, f64, f64) -> f64) -> Result<Dataset> {
        let p = self.shift.len();
        if d.num_features() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: d.num_features(),
            });
        }
        let x = d.features();
        let data = (0..x.rows())
            .flat_map(|i| {
                x.row(i)
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| f(v, self.shift[j], self.scale[j]))
                    .collect::<Vec<_>>()
            })
            .collect();
        d.clone().with_features(Matrix::new(x.rows(), p, data)?)
    }
}

/// Centres every column to mean 0 and scales it to unit (population)
/// variance. The returned record maps held-out rows the same way.
pub fn standardize(d: &Dataset) -> Result<(Dataset, Standardizer)> {
    let x = d.features();
    let n = x.rows() as f64;
    let mut shift = Vec::with_capacity(x.cols());
    let mut scale = Vec::with_capacity(x.cols());
    for j in 0..x.cols() {
        let col = x.column(j);
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        if !(var > 0.0) {
            return Err(Error::ConstantFeature {
                index: j,
                name: d.feature_names()[j].clone(),
            });
        }
        shift.push(mean);
        scale.push(libm::sqrt(var));
    }
    let record = Standardizer { shift, scale };
    Ok((record.apply(d)?, record))
}

/// Labels each true positive with probability `c`. The coin for a row is
/// keyed by its row identifier, so relabeling commutes with splitting.
pub fn scar_relabel(d: &Dataset, c: f64, seed: u64) -> Result<Dataset> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::COutOfRange(c));
    }
    let y = d.y_labels().ok_or(Error::MissingTruth)?;
    let s = y
        .iter()
        .zip(d.row_ids())
        .map(|(&yi, &id)| yi & u8::from(keyed_uniform(seed, RELABEL_STREAM, id) < c))
        .collect();
    d.clone().with_s_labels(s)
}

/// Replication `replication` of a random train/test partition with
/// `round(n · test_fraction)` test rows.
pub fn split(d: &Dataset, spec: &SplitSpec, replication: usize) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    if replication >= spec.n_replications {
        return Err(Error::InvalidConfig("replication index out of range"));
    }
    let n = d.len();
    let test_n = libm::round(n as f64 * spec.test_fraction) as usize;
    if test_n == 0 || test_n >= n {
        return Err(Error::EmptySplit {
            train: n.saturating_sub(test_n),
            test: test_n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_stream(
        spec.seed,
        SPLIT_STREAM_BASE + replication as u64,
    ));
    let (test_idx, train_idx) = order.split_at_mut(test_n);
    test_idx.sort_unstable();
    train_idx.sort_unstable();
    Ok((d.subset(train_idx), d.subset(test_idx)))
}
