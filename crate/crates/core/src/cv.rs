//! K-fold cross-validation of `λ` on incomplete data.
//!
//! Each fold builds its own covariance form on the training rows and fits
//! the whole `λ` path. The held-out rows are expressed relative to the
//! training centering and scored with the covariance-form error
//!
//! ```text
//! err(β) = βᵀ Σ_val β − 2 ρ_valᵀ β + ‖y_val‖² / n_val
//! ```
//!
//! where `(Σ_val, ρ_val)` come from the same estimator applied to the
//! validation rows. On complete data this is exactly the mean squared
//! prediction residual.
//!
//! A `λ` at which a fold's path stopped (see [`LassoPath::stopped`]) scores
//! `+∞` on that fold and cannot be selected.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{CenterOptions, IncompleteDataset};
use crate::error::{Error, Result};
use crate::estimator::{covariance_form, CovarianceEstimator, CovarianceForm};
use crate::lasso::{lambda_grid, path_solve, LassoFit, LassoPath, LassoSettings};
use crate::psd::AdmmSettings;

/// Fold reassignments tried before giving up on a dataset whose training
/// folds lose a column.
pub const MAX_FOLD_ATTEMPTS: u64 = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    Explicit(Vec<f64>),
    /// Log-spaced grid from the full-data `λ_max` down to `ratio·λ_max`.
    Auto { n_lambda: usize, ratio: f64 },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Auto {
            n_lambda: 50,
            ratio: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvSpec {
    pub k_folds: usize,
    pub grid: GridSpec,
    pub seed: u64,
    pub estimator: CovarianceEstimator,
    pub admm: AdmmSettings,
    pub lasso: LassoSettings,
    pub center: CenterOptions,
    /// Fit fold `k` at `λ·√(n/n_train)`, so the fold-selected value maps to
    /// the full data through `√(n_train/n)`.
    pub calibrate: bool,
    /// Pick the largest `λ` within one standard error of the minimum.
    pub one_se: bool,
}

impl Default for CvSpec {
    fn default() -> Self {
        Self {
            k_folds: 5,
            grid: GridSpec::default(),
            seed: 0,
            estimator: CovarianceEstimator::HMLASSO,
            admm: AdmmSettings::default(),
            lasso: LassoSettings::default(),
            center: CenterOptions::default(),
            calibrate: false,
            one_se: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CvResult {
    pub lambdas: Vec<f64>,
    pub mean_error: Vec<f64>,
    pub std_error: Vec<f64>,
    /// `fold_errors[f][l]`: error of fold `f` at `lambdas[l]`.
    pub fold_errors: Vec<Vec<f64>>,
    pub selected_index: usize,
    pub selected_lambda: f64,
    /// Refit on all rows at the selected `λ`; `beta` is on the centered
    /// (and, if requested, standardized) scale.
    pub fit: LassoFit,
    /// Coefficients on the original data scale.
    pub coefficients: DVector<f64>,
    pub intercept: f64,
    /// Full-data path over the grid.
    pub path: LassoPath,
    pub full: CovarianceForm,
    /// Fold index of every row.
    pub folds: Vec<usize>,
}

/// Deterministic shuffle of `0..n` dealt round-robin into `k` folds.
pub fn assign_folds(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        folds[row] = pos % k;
    }
    folds
}

/// `βᵀΣβ − 2ρᵀβ + y²`, with `y²` the mean squared validation response.
pub fn validation_error(sigma: &DMatrix<f64>, rho: &DVector<f64>, y_sq: f64, beta: &DVector<f64>) -> f64 {
    beta.dot(&(sigma * beta)) - 2.0 * rho.dot(beta) + y_sq
}

/// First `(fold, column)` whose training rows observe the column fewer than
/// twice; a single observation centers to zero and leaves `Σ_jj = 0`.
fn training_covers_columns(ds: &IncompleteDataset, folds: &[usize], k: usize) -> Option<(usize, usize)> {
    let mask = ds.mask();
    for f in 0..k {
        for j in 0..ds.n_cols() {
            if (0..ds.n_rows()).filter(|&i| folds[i] != f && mask[(i, j)]).count() < 2 {
                return Some((f, j));
            }
        }
    }
    None
}

fn rows_where(folds: &[usize], pred: impl Fn(usize) -> bool) -> Vec<usize> {
    (0..folds.len()).filter(|&i| pred(folds[i])).collect()
}

pub fn cross_validate(ds: &IncompleteDataset, spec: &CvSpec) -> Result<CvResult> {
    let n = ds.n_rows();
    let k = spec.k_folds;
    if k < 2 {
        return Err(Error::invalid("k_folds", format!("must be at least 2, got {k}")));
    }
    if n < k {
        return Err(Error::invalid("k_folds", format!("{k} folds need at least {k} rows, got {n}")));
    }

    let full_ds = ds.center_with_options(spec.center)?;
    let full = covariance_form(&full_ds, spec.estimator, &spec.admm)?;
    let lambdas = match &spec.grid {
        GridSpec::Explicit(g) => {
            if g.is_empty() || g.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::invalid("grid", "must be non-empty and strictly decreasing"));
            }
            g.clone()
        }
        GridSpec::Auto { n_lambda, ratio } => lambda_grid(&full.rho, *n_lambda, *ratio)?,
    };

    let mut folds = None;
    let mut last_problem = None;
    for attempt in 0..MAX_FOLD_ATTEMPTS {
        let candidate = assign_folds(n, k, spec.seed.wrapping_add(attempt));
        match training_covers_columns(ds, &candidate, k) {
            None => {
                folds = Some(candidate);
                break;
            }
            Some(problem) => last_problem = Some(problem),
        }
    }
    let folds = folds.ok_or_else(|| {
        let (f, j) = last_problem.unwrap_or_default();
        Error::FoldAssignment(format!(
            "after {MAX_FOLD_ATTEMPTS} attempts, training fold {} still observes column {} fewer than twice",
            f + 1,
            j + 1
        ))
    })?;

    let fold_errors: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|f| fold_errors(ds, spec, &folds, f, &lambdas))
        .collect::<Result<_>>()?;

    let n_lambda = lambdas.len();
    let mut mean_error = vec![0.0; n_lambda];
    let mut std_error = vec![0.0; n_lambda];
    for l in 0..n_lambda {
        let errs: Vec<f64> = fold_errors.iter().map(|e| e[l]).collect();
        let mean = errs.iter().sum::<f64>() / k as f64;
        let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        mean_error[l] = mean;
        std_error[l] = if mean.is_finite() { (var / k as f64).sqrt() } else { f64::INFINITY };
    }

    let path = path_solve(&full.sigma, &full.rho, &lambdas, spec.lasso)?;
    let usable = path.fits.len();

    // strict comparison keeps the earliest (largest) λ on ties
    let mut best = 0;
    for l in 1..usable {
        if mean_error[l] < mean_error[best] {
            best = l;
        }
    }
    let selected_index = if spec.one_se {
        let bound = mean_error[best] + std_error[best];
        (0..=best).find(|&l| mean_error[l] <= bound).unwrap_or(best)
    } else {
        best
    };

    let mut fit = path.fits[selected_index].clone();
    let centering = full_ds.centering().expect("centered above");
    let (intercept, coefficients) = centering.to_original(&fit.beta);
    fit.intercept = intercept;

    Ok(CvResult {
        selected_lambda: lambdas[selected_index],
        lambdas,
        mean_error,
        std_error,
        fold_errors,
        selected_index,
        fit,
        coefficients,
        intercept,
        path,
        full,
        folds,
    })
}

fn fold_errors(ds: &IncompleteDataset, spec: &CvSpec, folds: &[usize], f: usize, lambdas: &[f64]) -> Result<Vec<f64>> {
    let train_rows = rows_where(folds, |g| g != f);
    let val_rows = rows_where(folds, |g| g == f);
    let train = ds.select_rows(&train_rows).center_with_options(spec.center)?;
    let reference = train.centering().expect("centered above").clone();
    let val = ds.select_rows(&val_rows).center_with(&reference)?;

    let train_form = covariance_form(&train, spec.estimator, &spec.admm)?;
    let val_form = covariance_form(&val, spec.estimator, &spec.admm)?;

    let fold_grid: Vec<f64> = if spec.calibrate {
        let factor = (ds.n_rows() as f64 / train_rows.len() as f64).sqrt();
        lambdas.iter().map(|l| l * factor).collect()
    } else {
        lambdas.to_vec()
    };
    let path = path_solve(&train_form.sigma, &train_form.rho, &fold_grid, spec.lasso)?;
    let y_sq = val.response().norm_squared() / val_rows.len() as f64;
    let mut errors: Vec<f64> = path
        .fits
        .iter()
        .map(|fit| validation_error(&val_form.sigma, &val_form.rho, y_sq, &fit.beta))
        .collect();
    errors.resize(lambdas.len(), f64::INFINITY);
    Ok(errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_masked;

    #[test]
    fn folds_are_deterministic_partitions() {
        let a = assign_folds(23, 5, 7);
        assert_eq!(a, assign_folds(23, 5, 7));
        assert_ne!(a, assign_folds(23, 5, 8));
        for f in 0..5 {
            let size = a.iter().filter(|&&g| g == f).count();
            assert!(size == 4 || size == 5);
        }
    }

    #[test]
    fn single_lambda_grid_is_selected() {
        let ds = random_masked(40, 3, 0.2, 1);
        let spec = CvSpec {
            grid: GridSpec::Explicit(vec![0.1]),
            ..CvSpec::default()
        };
        let res = cross_validate(&ds, &spec).unwrap();
        assert_eq!(res.selected_lambda, 0.1);
        assert_eq!(res.selected_index, 0);
        assert!(res.fit.kkt_violation < 1e-6);
    }

    #[test]
    fn zero_fit_scores_mean_square_response() {
        let ds = random_masked(50, 4, 0.3, 9);
        let res = cross_validate(&ds, &CvSpec::default()).unwrap();
        // first λ is λ_max of the full data, fold fits there may be nonzero;
        // score an explicit zero vector instead
        let folds = &res.folds;
        let train = ds.select_rows(&rows_where(folds, |g| g != 0)).center().unwrap();
        let val_rows = rows_where(folds, |g| g == 0);
        let val = ds.select_rows(&val_rows).center_with(train.centering().unwrap()).unwrap();
        let form = covariance_form(&val, CovarianceEstimator::HMLASSO, &AdmmSettings::default()).unwrap();
        let y_sq = val.response().norm_squared() / val_rows.len() as f64;
        let err = validation_error(&form.sigma, &form.rho, y_sq, &DVector::zeros(4));
        assert!((err - y_sq).abs() < 1e-10);
    }

    #[test]
    fn duplicated_halves_give_equal_fold_errors() {
        let base = random_masked(20, 3, 0.2, 4);
        // lay the copies out so that each fold holds one full copy
        let seed = 0;
        let folds = assign_folds(40, 2, seed);
        let mut next = [0usize; 2];
        let rows: Vec<usize> = folds
            .iter()
            .map(|&f| {
                next[f] += 1;
                next[f] - 1
            })
            .collect();
        let ds = base.select_rows(&rows);
        let spec = CvSpec {
            k_folds: 2,
            seed,
            grid: GridSpec::Auto {
                n_lambda: 8,
                ratio: 0.01,
            },
            ..CvSpec::default()
        };
        let res = cross_validate(&ds, &spec).unwrap();
        assert_eq!(res.folds, folds);
        for (a, b) in res.fold_errors[0].iter().zip(&res.fold_errors[1]) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn unrecoverable_fold_assignment_fails() {
        let nan = f64::NAN;
        // column 2 observed in a single row: every split loses it somewhere
        let x = DMatrix::from_fn(10, 2, |i, j| if j == 1 && i != 3 { nan } else { i as f64 + j as f64 });
        let ds = IncompleteDataset::from_nan_matrix(x, DVector::from_fn(10, |i, _| i as f64)).unwrap();
        assert!(matches!(cross_validate(&ds, &CvSpec::default()), Err(Error::FoldAssignment(_))));
    }

    #[test]
    fn invalid_specs() {
        let ds = random_masked(10, 2, 0.0, 1);
        let spec = CvSpec {
            k_folds: 1,
            ..CvSpec::default()
        };
        assert!(cross_validate(&ds, &spec).is_err());
        let spec = CvSpec {
            k_folds: 11,
            ..CvSpec::default()
        };
        assert!(cross_validate(&ds, &spec).is_err());
        let spec = CvSpec {
            grid: GridSpec::Explicit(vec![0.1, 0.2]),
            ..CvSpec::default()
        };
        assert!(cross_validate(&ds, &spec).is_err());
    }

    #[test]
    fn one_se_rule_picks_larger_lambda() {
        let ds = random_masked(80, 6, 0.3, 12);
        let base = cross_validate(&ds, &CvSpec::default()).unwrap();
        let spec = CvSpec {
            one_se: true,
            ..CvSpec::default()
        };
        let res = cross_validate(&ds, &spec).unwrap();
        assert!(res.selected_lambda >= base.selected_lambda);
        assert!(res.mean_error[res.selected_index] <= base.mean_error[base.selected_index] + base.std_error[base.selected_index] + 1e-12);
    }
}
