//! Diebold–Mariano equal-predictive-accuracy tests under strong dependence.
//!
//! The crate provides the DM statistic with Bartlett (weighted
//! autocovariance) and Daniell (weighted periodogram) long-run variances,
//! fixed-smoothing critical values, simulators for near-unit-root loss
//! differentials and their limiting functionals, a Monte Carlo harness for
//! rejection frequencies, an ADF diagnostic, and a rolling-window
//! inflation-forecast evaluation pipeline.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adf;
pub mod bandwidth;
pub mod dgp;
pub mod dm;
pub mod empirical;
pub mod error;
pub mod limit;
pub mod mc;
pub mod rng;
pub mod series;
pub mod spectral;
pub mod stats;

pub use adf::{adf_test, AdfResult};
pub use bandwidth::BandwidthRule;
pub use dm::{dm_a, dm_p, CriticalValueTable, CvRegime, DmResult};
pub use error::{DmError, Result};
pub use mc::{run_rejection_table, ExperimentSpec, RejectionTable};
pub use series::{loss_differential, LossDifferential, LossKind, Series};
pub use spectral::{lrv_bartlett, lrv_daniell, periodogram, Estimator, LrvEstimate};
