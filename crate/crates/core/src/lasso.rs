//! Covariance-form Lasso by cyclic coordinate descent.
//!
//! Minimizes `½ βᵀΣβ − ρᵀβ + λ‖β‖₁` for a PSD `Σ`. Each coordinate update is
//! `β_j ← S(ρ_j − Σ_{j,−j} β_{−j}, λ) / Σ_jj` with `S` the soft-threshold.
//! The gradient `Σβ` is maintained incrementally so a sweep costs `O(p)` per
//! coordinate that actually moves.
//!
//! A PSD `Σ` may be singular (eigenvalue clipping produces exact zeros). If
//! `ρ` has a component along its null space the objective is unbounded below
//! for every `λ` under `max_{Σv=0, ‖v‖₁=1} ρᵀv`; coordinate descent then
//! drifts off linearly. The drift is detected and reported as
//! [`LassoFit::unbounded`], and paths stop at the first fit that fails.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// `sgn(z)·(|z| − γ)₊`.
#[inline]
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    debug_assert!(gamma >= 0.0);
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoSettings {
    /// Convergence threshold on the largest coordinate change in a sweep.
    pub tol: f64,
    /// A converged fit must also satisfy the KKT conditions to this level.
    pub kkt_tol: f64,
    pub max_sweeps: usize,
    /// Use a sequential strong-rule filter on paths. Never changes the
    /// solution: every fit is re-checked on all coordinates.
    pub screening: bool,
}

impl Default for LassoSettings {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            kkt_tol: 1e-7,
            max_sweeps: 100_000,
            screening: true,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CovLassoProblem<'a> {
    pub sigma: &'a DMatrix<f64>,
    pub rho: &'a DVector<f64>,
    pub lambda: f64,
    pub settings: LassoSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub beta: DVector<f64>,
    /// Zero until mapped back through the dataset centering.
    pub intercept: f64,
    pub lambda: f64,
    pub active_set: Vec<usize>,
    pub kkt_violation: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Coordinate descent was moving along a direction of zero curvature
    /// with decreasing objective.
    pub unbounded: bool,
    pub objective: f64,
}

/// Grid point at which a path ended early.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathStop {
    pub index: usize,
    pub lambda: f64,
    pub unbounded: bool,
    pub kkt_violation: f64,
}

/// Converged fits for a prefix of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoPath {
    pub fits: Vec<LassoFit>,
    /// Set when a fit failed; it and every smaller `λ` are left out.
    pub stopped: Option<PathStop>,
}

impl LassoPath {
    pub fn lambdas(&self) -> Vec<f64> {
        self.fits.iter().map(|f| f.lambda).collect()
    }

    pub fn max_kkt_violation(&self) -> f64 {
        self.fits.iter().map(|f| f.kkt_violation).fold(0.0, f64::max)
    }
}

/// `½ βᵀΣβ − ρᵀβ + λ‖β‖₁`.
pub fn lasso_objective(sigma: &DMatrix<f64>, rho: &DVector<f64>, beta: &DVector<f64>, lambda: f64) -> f64 {
    0.5 * beta.dot(&(sigma * beta)) - rho.dot(beta) + lambda * beta.lp_norm(1)
}

/// Largest KKT violation: `|g_j + λ sgn β_j|` on the active set and
/// `(|g_j| − λ)₊` elsewhere, where `g = Σβ − ρ`.
pub fn kkt_violation(sigma: &DMatrix<f64>, rho: &DVector<f64>, beta: &DVector<f64>, lambda: f64) -> f64 {
    let grad = sigma * beta - rho;
    (0..beta.len())
        .map(|j| coordinate_kkt(grad[j], beta[j], lambda))
        .fold(0.0, f64::max)
}

#[inline]
fn coordinate_kkt(g: f64, b: f64, lambda: f64) -> f64 {
    if b != 0.0 {
        (g + lambda * b.signum()).abs()
    } else {
        (g.abs() - lambda).max(0.0)
    }
}

fn validate_data(sigma: &DMatrix<f64>, rho: &DVector<f64>) -> Result<()> {
    let p = rho.len();
    if sigma.shape() != (p, p) {
        return Err(Error::Dimension(format!("sigma {:?} vs rho length {p}", sigma.shape())));
    }
    if sigma.iter().chain(rho.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("lasso input".into()));
    }
    let scale = sigma.amax().max(1.0);
    if (sigma - sigma.transpose()).amax() > 1e-10 * scale {
        return Err(Error::invalid("sigma", "must be symmetric"));
    }
    if let Some(j) = (0..p).find(|&j| sigma[(j, j)] <= 0.0) {
        return Err(Error::ZeroDiagonal {
            index: j,
            value: sigma[(j, j)],
        });
    }
    if p > 0 {
        let eig = SymmetricEigen::new(sigma.clone()).eigenvalues;
        let (lo, hi) = (eig.min(), eig.amax());
        if lo < -1e-8 * hi.max(f64::MIN_POSITIVE) {
            return Err(Error::NotPsd { min_eigenvalue: lo });
        }
    }
    Ok(())
}

fn validate_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("lambda", format!("must be positive, got {lambda}")));
    }
    Ok(())
}

/// Solves one covariance-form Lasso problem, starting from `warm_start` or
/// zero.
pub fn cd_solve(prob: &CovLassoProblem<'_>, warm_start: Option<&DVector<f64>>) -> Result<LassoFit> {
    validate_data(prob.sigma, prob.rho)?;
    validate_lambda(prob.lambda)?;
    let solver = Solver {
        sigma: prob.sigma,
        rho: prob.rho,
        settings: prob.settings,
    };
    let beta = match warm_start {
        Some(w) if w.len() != prob.rho.len() => {
            return Err(Error::Dimension(format!(
                "warm start length {} vs {}",
                w.len(),
                prob.rho.len()
            )))
        }
        Some(w) => w.clone(),
        None => DVector::zeros(prob.rho.len()),
    };
    let all: Vec<usize> = (0..prob.rho.len()).collect();
    solver.solve(prob.lambda, beta, &all)
}

/// Fits a strictly decreasing grid, warm-starting each fit from the previous
/// one, until the grid ends or a fit fails to converge.
pub fn path_solve(sigma: &DMatrix<f64>, rho: &DVector<f64>, grid: &[f64], settings: LassoSettings) -> Result<LassoPath> {
    validate_data(sigma, rho)?;
    for &l in grid {
        validate_lambda(l)?;
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("grid", "must be strictly decreasing"));
    }
    let solver = Solver { sigma, rho, settings };
    let p = rho.len();
    let lambda_max = rho.amax();
    let mut beta = DVector::zeros(p);
    let mut prev_lambda = lambda_max.max(grid.first().copied().unwrap_or(0.0));
    let mut fits = Vec::with_capacity(grid.len());
    for (index, &lambda) in grid.iter().enumerate() {
        let fit = if settings.screening {
            solver.solve_screened(lambda, prev_lambda, beta.clone())?
        } else {
            let all: Vec<usize> = (0..p).collect();
            solver.solve(lambda, beta.clone(), &all)?
        };
        if !fit.converged {
            return Ok(LassoPath {
                fits,
                stopped: Some(PathStop {
                    index,
                    lambda,
                    unbounded: fit.unbounded,
                    kkt_violation: fit.kkt_violation,
                }),
            });
        }
        beta = fit.beta.clone();
        prev_lambda = lambda;
        fits.push(fit);
    }
    Ok(LassoPath { fits, stopped: None })
}

/// `λ_max = max_j |ρ_j|`, log-spaced down to `ratio·λ_max`.
pub fn lambda_grid(rho: &DVector<f64>, n_lambda: usize, ratio: f64) -> Result<Vec<f64>> {
    let lambda_max = rho.amax();
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(Error::invalid("rho", "must have a finite nonzero entry"));
    }
    if n_lambda < 2 {
        return Err(Error::invalid("n_lambda", format!("must be at least 2, got {n_lambda}")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid("lambda_min_ratio", format!("must lie in (0, 1), got {ratio}")));
    }
    let step = ratio.ln() / (n_lambda - 1) as f64;
    let mut grid: Vec<f64> = (0..n_lambda).map(|k| lambda_max * (step * k as f64).exp()).collect();
    grid[0] = lambda_max;
    grid[n_lambda - 1] = lambda_max * ratio;
    Ok(grid)
}

/// Sweeps between checks for unbounded drift.
const DRIFT_CHECK_EVERY: usize = 50;
/// Curvature `dᵀΣd / ‖d‖²` below this fraction of `max_j Σ_jj` counts as
/// zero.
const DRIFT_CURVATURE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stop {
    Converged,
    SweepLimit,
    Unbounded,
}

struct Solver<'a> {
    sigma: &'a DMatrix<f64>,
    rho: &'a DVector<f64>,
    settings: LassoSettings,
}

impl Solver<'_> {
    fn gradient(&self, beta: &DVector<f64>) -> DVector<f64> {
        self.sigma * beta
    }

    /// `d = β − β_earlier` is a recession direction: no curvature and the
    /// linear part `ρᵀd − λ‖d‖₁` strictly decreasing the objective.
    fn drifting(&self, lambda: f64, d: &DVector<f64>) -> bool {
        let norm_sq = d.norm_squared();
        if !(d.amax() > self.settings.tol * DRIFT_CHECK_EVERY as f64) {
            return false;
        }
        let scale = self.sigma.diagonal().max();
        let curvature = d.dot(&(self.sigma * d));
        curvature <= DRIFT_CURVATURE * scale * norm_sq && self.rho.dot(d) - lambda * d.lp_norm(1) > 0.0
    }

    /// Coordinate descent over `work`; coordinates outside it stay fixed.
    fn descend(&self, lambda: f64, beta: &mut DVector<f64>, work: &[usize], sweeps: &mut usize) -> Result<Stop> {
        let sigma = self.sigma;
        let mut q = self.gradient(beta);
        let mut anchor = beta.clone();
        let mut since_anchor = 0;
        loop {
            if *sweeps >= self.settings.max_sweeps {
                return Ok(Stop::SweepLimit);
            }
            *sweeps += 1;
            since_anchor += 1;
            if since_anchor == DRIFT_CHECK_EVERY {
                if self.drifting(lambda, &(&*beta - &anchor)) {
                    return Ok(Stop::Unbounded);
                }
                anchor.copy_from(beta);
                since_anchor = 0;
            }
            let mut max_change = 0.0f64;
            for &j in work {
                let sjj = sigma[(j, j)];
                let old = beta[j];
                let z = self.rho[j] - (q[j] - sjj * old);
                let new = soft_threshold(z, lambda) / sjj;
                if new != old {
                    let delta = new - old;
                    q.axpy(delta, &sigma.column(j), 1.0);
                    beta[j] = new;
                    max_change = max_change.max(delta.abs());
                }
            }
            if !max_change.is_finite() {
                return Err(Error::NonFinite("coordinate descent iterate".into()));
            }
            if max_change < self.settings.tol {
                // fresh gradient so accumulated drift cannot fake convergence
                q = self.gradient(beta);
                let worst = work
                    .iter()
                    .map(|&j| coordinate_kkt(q[j] - self.rho[j], beta[j], lambda))
                    .fold(0.0, f64::max);
                if worst <= self.settings.kkt_tol {
                    return Ok(Stop::Converged);
                }
            }
        }
    }

    fn solve(&self, lambda: f64, mut beta: DVector<f64>, work: &[usize]) -> Result<LassoFit> {
        let mut sweeps = 0;
        let stop = self.descend(lambda, &mut beta, work, &mut sweeps)?;
        Ok(self.finish(lambda, beta, sweeps, stop))
    }

    /// Strong-rule working set, then full KKT check with violators added
    /// until none remain.
    fn solve_screened(&self, lambda: f64, prev_lambda: f64, mut beta: DVector<f64>) -> Result<LassoFit> {
        let p = self.rho.len();
        let grad = self.gradient(&beta) - self.rho;
        let cutoff = 2.0 * lambda - prev_lambda;
        let mut in_work: Vec<bool> = (0..p).map(|j| beta[j] != 0.0 || grad[j].abs() >= cutoff).collect();
        let mut sweeps = 0;
        loop {
            let work: Vec<usize> = (0..p).filter(|&j| in_work[j]).collect();
            let stop = self.descend(lambda, &mut beta, &work, &mut sweeps)?;
            if stop != Stop::Converged {
                return Ok(self.finish(lambda, beta, sweeps, stop));
            }
            let grad = self.gradient(&beta) - self.rho;
            let violators: Vec<usize> = (0..p)
                .filter(|&j| !in_work[j] && coordinate_kkt(grad[j], beta[j], lambda) > self.settings.kkt_tol)
                .collect();
            if violators.is_empty() {
                return Ok(self.finish(lambda, beta, sweeps, Stop::Converged));
            }
            for j in violators {
                in_work[j] = true;
            }
        }
    }

    fn finish(&self, lambda: f64, beta: DVector<f64>, sweeps: usize, stop: Stop) -> LassoFit {
        let active_set = (0..beta.len()).filter(|&j| beta[j] != 0.0).collect();
        LassoFit {
            kkt_violation: kkt_violation(self.sigma, self.rho, &beta, lambda),
            objective: lasso_objective(self.sigma, self.rho, &beta, lambda),
            intercept: 0.0,
            lambda,
            active_set,
            sweeps,
            converged: stop == Stop::Converged,
            unbounded: stop == Stop::Unbounded,
            beta,
        }
    }
}
