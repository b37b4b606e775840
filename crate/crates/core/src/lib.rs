//! Debiased inference for high-dimensional linear models: scaled-Lasso fits,
//! decorrelated (debiased) estimates along a subspace, `ℓ∞` projection tests
//! against structured nulls, confidence intervals for linear and quadratic
//! functionals, and the Monte Carlo drivers used to study them.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod debias;
pub mod decorrelate;
pub mod error;
pub mod experiment;
pub mod hypothesis;
pub mod inference;
pub mod isotonic;
pub mod lp;
pub mod num;
pub mod scaled_lasso;

pub use data::{load_csv, make_signal, sample_dataset, Dataset, DesignSampler, RngSeed};
pub use decorrelate::Subspace;
pub use error::{Error, Result};
pub use hypothesis::HypothesisSet;
pub use inference::{
    ci_linear, ci_sqnorm, run_test, ConfidenceInterval, PipelineConfig, TestOutcome,
};
pub use num::CovarianceModel;
