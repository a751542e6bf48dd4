//! Positive-unlabeled (PU) classification under the SCAR labeling assumption.
//!
//! Only a random fraction `c` of the positive examples carries a label `s = 1`;
//! every other example is unlabeled (`s = 0`). Fitting an ordinary logistic
//! regression to `(x, s)` is misspecified, but for elliptical features its
//! slope vector stays collinear with the true one. The [`estimators`] module
//! builds on that:
//!
//! * [`estimators::fit_naive`] fits logistic regression with `s` as response.
//! * [`estimators::fit_enhanced`] keeps the naive direction and replaces the
//!   intercept by the maximiser of the observable `F1_PU = r² / P(ŷ = 1)`.
//! * [`estimators::fit_joint`] maximises the full likelihood over `(b, c)`.
//! * [`estimators::fit_weighted_en`] is the Elkan–Noto weighted baseline.
//!
//! The crate is `no_std` (with `alloc`). The default `std` feature only adds
//! wall-clock timing to [`FitReport`].

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

mod error;
mod timing;

pub mod data;
pub mod estimators;
pub mod logistic;
pub mod metrics;
pub mod numkit;
pub mod prep;
pub mod synth;

pub use data::{Dataset, FitReport, ModelParams, PredictedLabels};
pub use error::{Error, Result};
pub use numkit::Matrix;
