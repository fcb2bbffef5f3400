//! Lasso regression on data with many missing entries.
//!
//! The pipeline works entirely in covariance form:
//!
//! 1. [`IncompleteDataset::center`] centers each column on its observed
//!    entries.
//! 2. [`pairwise_moments`] computes the pairwise covariance `S_pair`, the
//!    cross-moment `ρ_pair` and the observed-pair ratios `R`.
//! 3. [`admm_solve`] replaces `S_pair` by the nearest positive semidefinite
//!    matrix under a norm weighted by `R^α`.
//! 4. [`cd_solve`] / [`path_solve`] run coordinate descent on
//!    `½βᵀΣβ − ρᵀβ + λ‖β‖₁`.
//!
//! [`cross_validate`] ties the steps together and selects `λ`;
//! [`sim`] generates synthetic benchmarks.

pub mod cv;
pub mod dataset;
pub mod error;
pub mod estimator;
pub mod export;
pub mod lasso;
pub mod moments;
pub mod psd;
pub mod sim;

#[cfg(test)]
mod testutil;

pub use cv::{assign_folds, cross_validate, validation_error, CvResult, CvSpec, GridSpec};
pub use dataset::{
    load_csv, read_csv, CenterOptions, Centering, CsvOptions, IncompleteDataset, ResponseColumn, ZeroFilledView,
};
pub use error::{Error, Result};
pub use estimator::{covariance_form, CovarianceEstimator, CovarianceForm};
pub use lasso::{
    cd_solve, kkt_violation, lambda_grid, lasso_objective, path_solve, soft_threshold, CovLassoProblem, LassoFit,
    LassoPath, LassoSettings, PathStop,
};
pub use moments::{mean_imputed_covariance, mean_imputed_cross, pairwise_moments, weight_matrix, PairwiseStats};
pub use psd::{
    admm_solve, max_norm_bstep, max_norm_bstep_literal, project_psd, weighted_objective, AdmmSettings, AdmmState,
    NormKind, PsdApproxProblem, PsdApproxResult, TraceRow,
};
pub use sim::{BetaPattern, CovPattern, MissingPattern, SimulationSpec};
