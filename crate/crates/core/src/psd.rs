//! Weighted nearest positive-semidefinite approximation by ADMM.
//!
//! Solves
//!
//! ```text
//! Σ̃ = argmin_{Σ ⪰ 0} ½‖W ⊙ (Σ − S)‖²_F      (weighted Frobenius)
//! Σ̃ = argmin_{Σ ⪰ 0} ½‖W ⊙ (Σ − S)‖_max     (weighted max norm)
//! ```
//!
//! through the splitting `A ⪰ 0`, `B = A − S` with augmented Lagrangian
//!
//! ```text
//! f(A, B, Λ) = g(B) − ⟨Λ, A − B − S⟩ + (1/2μ)‖A − B − S‖²_F
//! ```
//!
//! Each iteration projects onto the PSD cone (A-step), applies the proximal
//! map of `g` (B-step: an elementwise division for Frobenius, a
//! sort-and-clip for the max norm) and takes a dual step on `Λ`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Loss measuring the distance between `Σ` and the pairwise target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NormKind {
    WeightedFrobenius,
    WeightedMax,
}

impl NormKind {
    pub fn default_mu(self) -> f64 {
        match self {
            NormKind::WeightedFrobenius => 10.0,
            NormKind::WeightedMax => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::WeightedFrobenius => "frobenius",
            NormKind::WeightedMax => "max",
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "frobenius" | "fro" | "f" => Ok(NormKind::WeightedFrobenius),
            "max" | "m" => Ok(NormKind::WeightedMax),
            other => Err(Error::invalid("norm", format!("expected frobenius or max, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmSettings {
    /// Augmented Lagrangian parameter; `None` picks the per-norm default.
    pub mu: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
    pub record_trace: bool,
    /// Rebalance `μ` from the residual ratio during the first half of the
    /// iterations. `mu` is then only the starting value.
    pub adaptive_mu: bool,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        Self {
            mu: None,
            max_iters: 10_000,
            tol: 1e-7,
            record_trace: false,
            adaptive_mu: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PsdApproxProblem {
    target: DMatrix<f64>,
    weights: DMatrix<f64>,
    norm: NormKind,
    settings: AdmmSettings,
}

impl PsdApproxProblem {
    /// Symmetrizes `target` and `weights` and validates them.
    pub fn new(target: DMatrix<f64>, weights: DMatrix<f64>, norm: NormKind) -> Result<Self> {
        if !target.is_square() || target.shape() != weights.shape() {
            return Err(Error::Dimension(format!(
                "target {:?} and weights {:?} must be equal square shapes",
                target.shape(),
                weights.shape()
            )));
        }
        if target.iter().chain(weights.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("PSD approximation input".into()));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::invalid("weights", "must be nonnegative"));
        }
        Ok(Self {
            target: symmetrize(&target),
            weights: symmetrize(&weights),
            norm,
            settings: AdmmSettings::default(),
        })
    }

    pub fn with_settings(mut self, settings: AdmmSettings) -> Result<Self> {
        if let Some(mu) = settings.mu {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::invalid("mu", format!("must be positive, got {mu}")));
            }
        }
        if !(settings.tol > 0.0) {
            return Err(Error::invalid("tol", format!("must be positive, got {}", settings.tol)));
        }
        if settings.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be positive"));
        }
        self.settings = settings;
        Ok(self)
    }

    pub fn target(&self) -> &DMatrix<f64> {
        &self.target
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn norm(&self) -> NormKind {
        self.norm
    }

    pub fn settings(&self) -> &AdmmSettings {
        &self.settings
    }

    pub fn mu(&self) -> f64 {
        self.settings.mu.unwrap_or_else(|| self.norm.default_mu())
    }

    /// Weighted objective of a candidate `Σ`.
    pub fn objective(&self, sigma: &DMatrix<f64>) -> f64 {
        weighted_objective(sigma, &self.target, &self.weights, self.norm)
    }
}

/// `½‖W ⊙ (Σ − S)‖²_F` or `½‖W ⊙ (Σ − S)‖_max`.
pub fn weighted_objective(sigma: &DMatrix<f64>, target: &DMatrix<f64>, weights: &DMatrix<f64>, norm: NormKind) -> f64 {
    let diff = (sigma - target).component_mul(weights);
    match norm {
        NormKind::WeightedFrobenius => 0.5 * diff.norm_squared(),
        NormKind::WeightedMax => 0.5 * diff.amax(),
    }
}

#[derive(Debug, Clone)]
pub struct AdmmState {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct PsdApproxResult {
    pub sigma_tilde: DMatrix<f64>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
    pub objective: f64,
    pub state: AdmmState,
    /// Per-iteration diagnostics, populated when `record_trace` is set.
    pub trace: Vec<TraceRow>,
}

impl PsdApproxResult {
    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.sigma_tilde.clone()).eigenvalues.min()
    }
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Euclidean projection onto the PSD cone: symmetrize, clip negative
/// eigenvalues to zero, reconstruct.
pub fn project_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("expected square matrix, got {:?}", m.shape())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("PSD projection input".into()));
    }
    let eig = SymmetricEigen::try_new(symmetrize(m), f64::EPSILON, 0).ok_or(Error::Eigen)?;
    // V diag(λ₊) Vᵀ = U Uᵀ with U = V diag(√λ₊); the product form keeps the
    // result exactly symmetric.
    let mut u = eig.eigenvectors;
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        let s = if l > 0.0 { l.sqrt() } else { 0.0 };
        u.column_mut(k).scale_mut(s);
    }
    Ok(&u * u.transpose())
}

const ADAPT_EVERY: usize = 10;
const ADAPT_RATIO: f64 = 10.0;

/// Runs ADMM until both `‖A − B − S‖_F / p` and `‖B_k − B_{k−1}‖_F / p`
/// fall below `tol`, or `max_iters` is reached (`converged = false`).
pub fn admm_solve(prob: &PsdApproxProblem) -> Result<PsdApproxResult> {
    let s = &prob.target;
    let w = &prob.weights;
    let p = s.nrows();
    let mut mu = prob.mu();
    let AdmmSettings {
        max_iters,
        tol,
        record_trace,
        adaptive_mu,
        ..
    } = prob.settings;
    let scale = p.max(1) as f64;
    let (mu_min, mu_max) = (mu * 1e-6, mu * 1e6);

    let mut frob_denominator = w.map(|wij| mu * wij * wij + 1.0);

    let mut a = project_psd(s)?;
    let mut b = &a - s;
    let mut lambda = DMatrix::zeros(p, p);
    let mut trace = Vec::new();
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for k in 1..=max_iters {
        iterations = k;
        a = project_psd(&(&b + s + &lambda * mu))?;

        let c = &a - s - &lambda * mu;
        let b_next = match prob.norm {
            NormKind::WeightedFrobenius => c.component_div(&frob_denominator),
            NormKind::WeightedMax => max_norm_bstep(&c, w, mu),
        };

        let residual = &a - &b_next - s;
        lambda -= &residual / mu;
        primal = residual.norm() / scale;
        dual = (&b_next - &b).norm() / scale;
        b = b_next;

        if !(primal.is_finite() && dual.is_finite()) {
            return Err(Error::NonFinite(format!("ADMM iterate at iteration {k}")));
        }
        if record_trace {
            trace.push(TraceRow {
                iteration: k,
                primal_residual: primal,
                dual_residual: dual,
                objective: prob.objective(&a),
            });
        }
        if primal < tol && dual < tol {
            converged = true;
            break;
        }

        // balance the two quantities the stopping rule tests; Λ is unscaled
        // so it carries over a change of μ
        if adaptive_mu && k % ADAPT_EVERY == 0 && 2 * k <= max_iters {
            let next = if primal > ADAPT_RATIO * dual {
                (mu / 2.0).max(mu_min)
            } else if dual > ADAPT_RATIO * primal {
                (mu * 2.0).min(mu_max)
            } else {
                mu
            };
            if next != mu {
                mu = next;
                frob_denominator = w.map(|wij| mu * wij * wij + 1.0);
            }
        }
    }

    Ok(PsdApproxResult {
        objective: prob.objective(&a),
        sigma_tilde: a.clone(),
        iterations,
        primal_residual: primal,
        dual_residual: dual,
        converged,
        state: AdmmState { a, b, lambda },
        trace,
    })
}

/// Proximal map of `(μ/2)·max_j w_j|b_j|` at `c`, entrywise over the matrix.
///
/// This is the exact B-step for the weighted max-norm loss
/// `½‖W ⊙ B‖_max`. Entries are sorted by `w_j|c_j|`; the clip level `d`
/// solves `Σ_j (w_j|c_j| − d)₊ / w_j² = μ/2`, and every entry with
/// `w_j|c_j| > d` is pulled back to `d·sgn(c_j)/w_j`. Zero-weight entries are
/// unpenalized and pass through. For unit weights this coincides with
/// [`max_norm_bstep_literal`].
pub fn max_norm_bstep(c: &DMatrix<f64>, weights: &DMatrix<f64>, mu: f64) -> DMatrix<f64> {
    clip_by_level(c, weights, mu, |cj, wj| (cj / wj, 1.0 / (wj * wj)))
}

/// Sort-and-clip B-step with the level
/// `d = (Σ_{j≤l}|c_j| − μ/2) / Σ_{j≤l} 1/w_j`.
///
/// This level is the exact proximal map only when the quadratic coupling is
/// itself weighted by `w` (`½Σ w_j (b_j − c_j)²`); for the unweighted
/// coupling of the ADMM splitting it differs from [`max_norm_bstep`] whenever
/// weights are not all equal to one. Kept for comparison.
pub fn max_norm_bstep_literal(c: &DMatrix<f64>, weights: &DMatrix<f64>, mu: f64) -> DMatrix<f64> {
    clip_by_level(c, weights, mu, |cj, wj| (cj, 1.0 / wj))
}

/// Shared sort-and-clip driver. `terms(|c_j|, w_j)` gives the contributions
/// of entry `j` to the numerator and denominator of the candidate level.
fn clip_by_level(
    c: &DMatrix<f64>,
    weights: &DMatrix<f64>,
    mu: f64,
    terms: impl Fn(f64, f64) -> (f64, f64),
) -> DMatrix<f64> {
    debug_assert_eq!(c.shape(), weights.shape());
    let half_mu = 0.5 * mu;
    let mut order: Vec<(f64, usize)> = c
        .iter()
        .zip(weights.iter())
        .enumerate()
        .filter(|(_, (_, &w))| w > 0.0)
        .map(|(idx, (&cj, &w))| (w * cj.abs(), idx))
        .collect();
    if order.is_empty() {
        return c.clone();
    }
    order.sort_by(|x, y| y.0.total_cmp(&x.0));

    let mut num = 0.0;
    let mut den = 0.0;
    let mut level = None;
    for &(u, idx) in &order {
        let (tn, td) = terms(c[idx].abs(), weights[idx]);
        num += tn;
        den += td;
        let d = (num - half_mu) / den;
        if u - d > 0.0 {
            level = Some(d);
        }
    }
    let d = level.unwrap_or(0.0).max(0.0);

    let mut out = c.clone();
    for &(u, idx) in &order {
        if u > d {
            out[idx] = d * c[idx].signum() / weights[idx];
        }
    }
    out
}
