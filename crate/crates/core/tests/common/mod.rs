//! Reference solvers written independently of the library's algorithms.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(n: usize, p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Nearest PSD matrix in the plain Frobenius norm, through nalgebra's
/// default eigen solver.
pub fn clip_eigen(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0)));
    let out = &eig.eigenvectors * d * eig.eigenvectors.transpose();
    (&out + out.transpose()) * 0.5
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

pub fn max_abs_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.amax()
}

pub fn weighted_frobenius(sigma: &DMatrix<f64>, s: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    0.5 * w.component_mul(&(sigma - s)).norm_squared()
}

/// Accelerated projected gradient for `min ½‖W ⊙ (Σ − S)‖_F²` over PSD `Σ`.
pub fn pg_weighted_frobenius(s: &DMatrix<f64>, w: &DMatrix<f64>, iters: usize) -> DMatrix<f64> {
    let w2 = w.component_mul(w);
    let step = 1.0 / w2.max().max(1e-12);
    let mut x = clip_eigen(s);
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let grad = w2.component_mul(&(&y - s));
        let x_next = clip_eigen(&(&y - grad * step));
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = &x_next + (&x_next - &x) * ((t - 1.0) / t_next);
        x = x_next;
        t = t_next;
    }
    x
}

/// Prox of `(μ/2)·max_j w_j|b_j|` at `c` by one-dimensional minimization
/// over the level `t = max_j w_j|b_j|`: for fixed `t` the optimal `b` clips
/// each `c_j` to `[−t/w_j, t/w_j]`, leaving the convex function
/// `φ(t) = (μ/2)t + ½Σ(|c_j| − t/w_j)₊²`. Its derivative is increasing, so
/// bisection on the sign of `φ'` finds the minimizer to machine precision.
pub fn max_prox_oracle(c: &[f64], w: &[f64], mu: f64) -> Vec<f64> {
    let slope = |t: f64| -> f64 {
        let mut d = 0.5 * mu;
        for (&cj, &wj) in c.iter().zip(w) {
            if wj > 0.0 {
                d -= (cj.abs() - t / wj).max(0.0) / wj;
            }
        }
        d
    };
    let hi = c
        .iter()
        .zip(w)
        .map(|(cj, wj)| wj * cj.abs())
        .fold(0.0f64, f64::max);
    let t = if slope(0.0) >= 0.0 {
        0.0
    } else {
        let (mut a, mut b) = (0.0f64, hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if slope(m) < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    c.iter()
        .zip(w)
        .map(|(&cj, &wj)| {
            if wj > 0.0 {
                cj.clamp(-t / wj, t / wj)
            } else {
                cj
            }
        })
        .collect()
}

fn soft(z: f64, g: f64) -> f64 {
    z.signum() * (z.abs() - g).max(0.0)
}

/// Column-centered copy of `x` and centered `y`.
pub fn center(x: &DMatrix<f64>, y: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = x.nrows() as f64;
    let mut xc = x.clone();
    for mut col in xc.column_iter_mut() {
        let m = col.sum() / n;
        col.add_scalar_mut(-m);
    }
    let ym = y.sum() / n;
    (xc, y.add_scalar(-ym))
}

/// Naive residual-updating coordinate descent on
/// `(1/2n)‖y − Xβ‖² + λ‖β‖₁` for already centered data.
pub fn lasso_on_x(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, tol: f64) -> DVector<f64> {
    let n = x.nrows() as f64;
    let p = x.ncols();
    let norms: Vec<f64> = (0..p).map(|j| x.column(j).norm_squared() / n).collect();
    let mut beta = DVector::zeros(p);
    let mut resid = y.clone();
    for _ in 0..1_000_000 {
        let mut delta = 0.0f64;
        for j in 0..p {
            let col = x.column(j);
            let old = beta[j];
            let z = col.dot(&resid) / n + norms[j] * old;
            let new = soft(z, lambda) / norms[j];
            if new != old {
                resid.axpy(old - new, &col, 1.0);
                beta[j] = new;
                delta = delta.max((new - old).abs());
            }
        }
        if delta < tol {
            break;
        }
    }
    beta
}

/// FISTA on `½βᵀΣβ − ρᵀβ + λ‖β‖₁`.
pub fn lasso_prox_grad(sigma: &DMatrix<f64>, rho: &DVector<f64>, lambda: f64, iters: usize) -> DVector<f64> {
    let l = sigma.clone().symmetric_eigen().eigenvalues.max().max(1e-12);
    let p = rho.len();
    let mut x = DVector::zeros(p);
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let grad = sigma * &y - rho;
        let x_next = (&y - grad / l).map(|v| soft(v, lambda / l));
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = &x_next + (&x_next - &x) * ((t - 1.0) / t_next);
        x = x_next;
        t = t_next;
    }
    x
}

/// KKT residual of `½βᵀΣβ − ρᵀβ + λ‖β‖₁`, computed from scratch.
pub fn kkt_residual(sigma: &DMatrix<f64>, rho: &DVector<f64>, beta: &DVector<f64>, lambda: f64) -> f64 {
    let g = sigma * beta - rho;
    (0..beta.len())
        .map(|j| {
            if beta[j] != 0.0 {
                (g[j] + lambda * beta[j].signum()).abs()
            } else {
                (g[j].abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Residual-based K-fold CV on complete data: for each fold, center on the
/// training rows, fit each `λ`, and score the mean squared prediction error
/// of the held-out rows. Returns the index of the minimizing `λ` (earliest
/// on ties) and the fold-averaged error curve.
pub fn residual_cv(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    folds: &[usize],
    k: usize,
    lambdas: &[f64],
) -> (usize, Vec<f64>) {
    let mut total = vec![0.0; lambdas.len()];
    for f in 0..k {
        let train: Vec<usize> = (0..x.nrows()).filter(|&i| folds[i] != f).collect();
        let val: Vec<usize> = (0..x.nrows()).filter(|&i| folds[i] == f).collect();
        let xt = x.select_rows(&train);
        let yt = y.select_rows(&train);
        let nt = train.len() as f64;
        let means = DVector::from_fn(x.ncols(), |j, _| xt.column(j).sum() / nt);
        let ymean = yt.sum() / nt;
        let (xc, yc) = center(&xt, &yt);
        for (l, &lam) in lambdas.iter().enumerate() {
            let beta = lasso_on_x(&xc, &yc, lam, 1e-13);
            let mut sse = 0.0;
            for &i in &val {
                let xi = x.row(i).transpose() - &means;
                let pred = ymean + xi.dot(&beta);
                sse += (y[i] - pred).powi(2);
            }
            total[l] += sse / val.len() as f64 / k as f64;
        }
    }
    let mut best = 0;
    for l in 1..lambdas.len() {
        if total[l] < total[best] {
            best = l;
        }
    }
    (best, total)
}
