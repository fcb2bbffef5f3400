use std::io::Write;
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;

use super::{generate_trial, SimulationSpec, Trial};
use crate::cv::{cross_validate, CvSpec};
use crate::error::{Error, Result};
use crate::estimator::CovarianceEstimator;
use crate::export::{fmt_f64, write_table};

/// Metrics of one method on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub method: String,
    /// `‖β̂ − β*‖₂` on the original scale.
    pub l2_error: f64,
    /// Prediction RMSE on the complete test set.
    pub rmse: f64,
    pub selected_lambda: f64,
    /// Seconds spent in cross-validation and the final fit.
    pub wall_time: f64,
    /// Columns observed too rarely to estimate; their coefficients are fixed
    /// at zero.
    pub dropped_columns: usize,
    pub kkt_violation: f64,
    /// `None` for estimators that do not run ADMM.
    pub admm_converged: Option<bool>,
    pub beta_hat: DVector<f64>,
}

/// Fits one method on a trial with cross-validated `λ` and scores it.
///
/// Columns with fewer than `cv.k_folds` observed training entries are
/// removed before fitting; cross-validation could not give every training
/// fold a usable estimate of their variance.
pub fn run_method(estimator: CovarianceEstimator, trial: &Trial, cv: &CvSpec) -> Result<TrialResult> {
    let start = Instant::now();
    let p = trial.train.n_cols();
    let keep: Vec<usize> = trial
        .train
        .observed_counts()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c >= cv.k_folds.max(2))
        .map(|(j, _)| j)
        .collect();
    if keep.is_empty() {
        return Err(Error::TooSmall("every column is too sparsely observed".into()));
    }
    let train = if keep.len() == p {
        trial.train.clone()
    } else {
        trial.train.select_columns(&keep)
    };
    let spec = CvSpec {
        estimator,
        ..cv.clone()
    };
    let res = cross_validate(&train, &spec)?;
    let wall_time = start.elapsed().as_secs_f64();

    let mut beta_hat = DVector::zeros(p);
    for (pos, &j) in keep.iter().enumerate() {
        beta_hat[j] = res.coefficients[pos];
    }
    let l2_error = (&beta_hat - &trial.beta).norm();
    let pred = &trial.test_x * &beta_hat;
    let sse: f64 = pred
        .iter()
        .zip(trial.test_y.iter())
        .map(|(f, y)| (y - f - res.intercept).powi(2))
        .sum();
    let rmse = (sse / trial.test_y.len() as f64).sqrt();
    if !(l2_error.is_finite() && rmse.is_finite()) {
        return Err(Error::NonFinite("trial metrics".into()));
    }
    Ok(TrialResult {
        method: estimator.id(),
        l2_error,
        rmse,
        selected_lambda: res.selected_lambda,
        wall_time,
        dropped_columns: p - keep.len(),
        kkt_violation: res.fit.kkt_violation,
        admm_converged: res.full.psd.as_ref().map(|r| r.converged),
        beta_hat,
    })
}

/// One method on one replicate of one condition.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub condition: usize,
    pub replicate: usize,
    pub seed: u64,
    pub method: String,
    pub outcome: std::result::Result<TrialResult, String>,
}

/// Aggregate over replicates for one `(condition, method)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub condition: usize,
    pub spec: SimulationSpec,
    pub method: String,
    pub succeeded: usize,
    pub failed: usize,
    pub mean_l2_error: f64,
    pub se_l2_error: f64,
    pub mean_rmse: f64,
    pub se_rmse: f64,
    pub mean_selected_lambda: f64,
    pub mean_dropped_columns: f64,
    /// First failure message, if any replicate failed.
    pub first_error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub conditions: Vec<SimulationSpec>,
    /// Sorted by `(condition, method, replicate)` with methods in the order
    /// they were given.
    pub records: Vec<TrialRecord>,
    pub rows: Vec<ExperimentRow>,
}

/// Mean and standard error; the standard error of a single value is `NaN`.
fn mean_se(values: &[f64]) -> (f64, f64) {
    let m = values.len();
    if m == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    if m == 1 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    (mean, (var / m as f64).sqrt())
}

/// Runs every method on `replicates` trials of every condition.
///
/// Replicate `r` of a condition uses seed `spec.seed + r` for both the data
/// and the CV folds; all methods see the same trial. A failing trial is
/// recorded and the experiment continues.
pub fn run_experiment(
    conditions: &[SimulationSpec],
    methods: &[CovarianceEstimator],
    replicates: usize,
    cv: &CvSpec,
) -> Result<Experiment> {
    if replicates == 0 {
        return Err(Error::invalid("replicates", "must be at least 1"));
    }
    if methods.is_empty() || conditions.is_empty() {
        return Err(Error::invalid("experiment", "needs at least one condition and one method"));
    }
    for c in conditions {
        c.validate()?;
    }

    let jobs: Vec<(usize, usize)> = (0..conditions.len())
        .flat_map(|c| (0..replicates).map(move |r| (c, r)))
        .collect();
    let per_job: Vec<Vec<TrialRecord>> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let seed = conditions[c].seed.wrapping_add(r as u64);
            let trial = generate_trial(&conditions[c].with_seed(seed));
            methods
                .iter()
                .map(|&m| {
                    let outcome = match &trial {
                        Ok(t) => run_method(m, t, &CvSpec { seed, ..cv.clone() }).map_err(|e| e.to_string()),
                        Err(e) => Err(format!("trial generation: {e}")),
                    };
                    TrialRecord {
                        condition: c,
                        replicate: r,
                        seed,
                        method: m.id(),
                        outcome,
                    }
                })
                .collect()
        })
        .collect();

    let mut records = Vec::with_capacity(jobs.len() * methods.len());
    for c in 0..conditions.len() {
        for m in 0..methods.len() {
            for r in 0..replicates {
                records.push(per_job[c * replicates + r][m].clone());
            }
        }
    }

    let rows = records
        .chunks(replicates)
        .map(|group| {
            let ok: Vec<&TrialResult> = group.iter().filter_map(|t| t.outcome.as_ref().ok()).collect();
            let collect = |f: fn(&TrialResult) -> f64| ok.iter().map(|t| f(t)).collect::<Vec<f64>>();
            let (mean_l2_error, se_l2_error) = mean_se(&collect(|t| t.l2_error));
            let (mean_rmse, se_rmse) = mean_se(&collect(|t| t.rmse));
            let (mean_selected_lambda, _) = mean_se(&collect(|t| t.selected_lambda));
            let (mean_dropped_columns, _) = mean_se(&collect(|t| t.dropped_columns as f64));
            ExperimentRow {
                condition: group[0].condition,
                spec: conditions[group[0].condition].clone(),
                method: group[0].method.clone(),
                succeeded: ok.len(),
                failed: group.len() - ok.len(),
                mean_l2_error,
                se_l2_error,
                mean_rmse,
                se_rmse,
                mean_selected_lambda,
                mean_dropped_columns,
                first_error: group.iter().find_map(|t| t.outcome.as_ref().err().cloned()),
            }
        })
        .collect();

    Ok(Experiment {
        conditions: conditions.to_vec(),
        records,
        rows,
    })
}

fn fmt_or_na(x: f64) -> String {
    if x.is_finite() {
        fmt_f64(x)
    } else {
        "NA".into()
    }
}

const CONDITION_COLUMNS: [&str; 8] = ["condition", "n", "p", "n_test", "cov", "missing", "beta", "noise_var"];

fn condition_fields(index: usize, spec: &SimulationSpec) -> Vec<String> {
    vec![
        index.to_string(),
        spec.n.to_string(),
        spec.p.to_string(),
        spec.n_test.to_string(),
        spec.cov.to_string(),
        spec.missing.to_string(),
        spec.beta.to_string(),
        fmt_f64(spec.noise_var),
    ]
}

fn header(extra: &[&str]) -> Vec<String> {
    CONDITION_COLUMNS.iter().chain(extra).map(|s| s.to_string()).collect()
}

impl Experiment {
    /// One row per `(condition, method)`. Standard errors of a single
    /// replicate are written as `NA`.
    pub fn write_summary<W: Write>(&self, writer: W) -> Result<()> {
        let head = header(&[
            "method",
            "replicates",
            "failures",
            "mean_l2_error",
            "se_l2_error",
            "mean_rmse",
            "se_rmse",
            "mean_selected_lambda",
            "mean_dropped_columns",
            "first_error",
        ]);
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut row = condition_fields(r.condition, &r.spec);
                row.extend([
                    r.method.clone(),
                    r.succeeded.to_string(),
                    r.failed.to_string(),
                    fmt_or_na(r.mean_l2_error),
                    fmt_or_na(r.se_l2_error),
                    fmt_or_na(r.mean_rmse),
                    fmt_or_na(r.se_rmse),
                    fmt_or_na(r.mean_selected_lambda),
                    fmt_or_na(r.mean_dropped_columns),
                    r.first_error.clone().unwrap_or_default(),
                ]);
                row
            })
            .collect();
        write_table(&head, &rows, writer)
    }

    /// Long format, one row per trial and method. Wall times are left out so
    /// the file is a pure function of the inputs; see
    /// [`Experiment::write_timings`].
    pub fn write_trials<W: Write>(&self, writer: W) -> Result<()> {
        let head = header(&[
            "replicate",
            "seed",
            "method",
            "status",
            "l2_error",
            "rmse",
            "selected_lambda",
            "kkt_violation",
            "admm_converged",
            "dropped_columns",
            "error",
        ]);
        let rows: Vec<Vec<String>> = self
            .records
            .iter()
            .map(|t| {
                let mut row = condition_fields(t.condition, &self.conditions[t.condition]);
                row.extend([t.replicate.to_string(), t.seed.to_string(), t.method.clone()]);
                match &t.outcome {
                    Ok(r) => row.extend([
                        "ok".into(),
                        fmt_f64(r.l2_error),
                        fmt_f64(r.rmse),
                        fmt_f64(r.selected_lambda),
                        fmt_f64(r.kkt_violation),
                        r.admm_converged.map_or_else(|| "NA".into(), |c| c.to_string()),
                        r.dropped_columns.to_string(),
                        String::new(),
                    ]),
                    Err(e) => {
                        row.push("failed".into());
                        row.extend(std::iter::repeat_n("NA".to_string(), 6));
                        row.push(e.clone());
                    }
                }
                row
            })
            .collect();
        write_table(&head, &rows, writer)
    }

    pub fn write_timings<W: Write>(&self, writer: W) -> Result<()> {
        let head: Vec<String> = ["condition", "replicate", "method", "wall_time_s"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let rows: Vec<Vec<String>> = self
            .records
            .iter()
            .filter_map(|t| {
                let r = t.outcome.as_ref().ok()?;
                Some(vec![
                    t.condition.to_string(),
                    t.replicate.to_string(),
                    t.method.clone(),
                    fmt_f64(r.wall_time),
                ])
            })
            .collect();
        write_table(&head, &rows, writer)
    }
}
