use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{BetaPattern, CovPattern, MissingPattern, SimulationSpec};
use crate::dataset::IncompleteDataset;
use crate::error::{Error, Result};

pub fn make_covariance(pattern: CovPattern, p: usize) -> Result<DMatrix<f64>> {
    pattern.validate(p)?;
    Ok(DMatrix::from_fn(p, p, |j, k| {
        if j == k {
            return 1.0;
        }
        match pattern {
            CovPattern::Uniform { r } => r,
            CovPattern::Autoregressive { r } => r.powi(j.abs_diff(k) as i32),
            CovPattern::Block { r, block_size } => {
                if j / block_size == k / block_size {
                    r
                } else {
                    0.0
                }
            }
        }
    }))
}

pub fn true_beta(pattern: BetaPattern, p: usize) -> DVector<f64> {
    let mut beta = DVector::zeros(p);
    for t in 0..10usize {
        let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
        let (pos, value) = match pattern {
            BetaPattern::Spread => (10 * t, sign * (10 - t) as f64),
            BetaPattern::Head => (t, sign * (10 - t) as f64),
            BetaPattern::Flat => (10 * t, sign * 5.0),
        };
        if pos < p {
            beta[pos] = value;
        }
    }
    beta
}

/// Square root `L` with `L Lᵀ = Σ`: Cholesky when it succeeds, otherwise
/// the eigen square root with negative eigenvalues clipped.
fn covariance_factor(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = sigma.clone().cholesky() {
        return Ok(ch.l());
    }
    let eig = nalgebra::SymmetricEigen::try_new(sigma.clone(), f64::EPSILON, 0).ok_or(Error::Eigen)?;
    let mut u = eig.eigenvectors;
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        let s = l.max(0.0).sqrt();
        u.column_mut(k).scale_mut(s);
    }
    Ok(u)
}

/// `n` rows from `N(0, Σ)`.
pub fn sample_gaussian<R: Rng + ?Sized>(sigma: &DMatrix<f64>, n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    let l = covariance_factor(sigma)?;
    let p = sigma.nrows();
    let z = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok(z * l.transpose())
}

/// Per-cell missing probabilities for an `n × p` design.
pub fn missing_probabilities<R: Rng + ?Sized>(
    pattern: MissingPattern,
    n: usize,
    p: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    pattern.validate()?;
    let mut uniform = |lo: f64, hi: f64, len: usize| -> Vec<f64> {
        (0..len).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect()
    };
    Ok(match pattern {
        MissingPattern::Random { mu } => DMatrix::from_element(n, p, mu),
        MissingPattern::Column { mu } => {
            let cols = uniform((2.0 * mu - 1.0).max(0.0), (2.0 * mu).min(1.0), p);
            DMatrix::from_fn(n, p, |_, j| cols[j])
        }
        MissingPattern::RowColumn { mu } => {
            if mu < 0.3 {
                let (rows, cols) = (uniform(0.0, 0.632, n), uniform(0.0, 0.632, p));
                DMatrix::from_fn(n, p, |i, j| rows[i] * cols[j])
            } else if mu < 0.7 {
                let (rows, cols) = (uniform(0.414, 1.0, n), uniform(0.414, 1.0, p));
                DMatrix::from_fn(n, p, |i, j| rows[i] * cols[j])
            } else {
                let (rows, cols) = (uniform(0.368, 1.0, n), uniform(0.368, 1.0, p));
                DMatrix::from_fn(n, p, |i, j| 1.0 - (1.0 - rows[i]) * (1.0 - cols[j]))
            }
        }
    })
}

#[derive(Debug, Clone)]
pub struct Trial {
    /// Training data with missing cells, uncentered.
    pub train: IncompleteDataset,
    /// The same training rows before masking.
    pub train_complete: IncompleteDataset,
    pub test_x: DMatrix<f64>,
    pub test_y: DVector<f64>,
    pub beta: DVector<f64>,
    pub sigma_star: DMatrix<f64>,
}

/// Draws one trial. All randomness comes from `spec.seed`.
pub fn generate_trial(spec: &SimulationSpec) -> Result<Trial> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sigma_star = make_covariance(spec.cov, spec.p)?;
    let beta = true_beta(spec.beta, spec.p);
    let noise_sd = spec.noise_var.sqrt();

    let draw = |n: usize, rng: &mut ChaCha8Rng| -> Result<(DMatrix<f64>, DVector<f64>)> {
        let x = sample_gaussian(&sigma_star, n, rng)?;
        let mut y = &x * &beta;
        for v in y.iter_mut() {
            *v += noise_sd * rng.sample::<f64, _>(StandardNormal);
        }
        Ok((x, y))
    };
    let (x, y) = draw(spec.n, &mut rng)?;
    let probs = missing_probabilities(spec.missing, spec.n, spec.p, &mut rng)?;
    let mask = probs.map(|q| rng.random::<f64>() >= q);
    let (test_x, test_y) = draw(spec.n_test, &mut rng)?;

    Ok(Trial {
        train: IncompleteDataset::new(x.clone(), mask, y.clone())?,
        train_complete: IncompleteDataset::complete(x, y)?,
        test_x,
        test_y,
        beta,
        sigma_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_examples() {
        let u = make_covariance(CovPattern::Uniform { r: 0.5 }, 3).unwrap();
        assert_eq!(u, DMatrix::from_row_slice(3, 3, &[1., 0.5, 0.5, 0.5, 1., 0.5, 0.5, 0.5, 1.]));
        let a = make_covariance(CovPattern::Autoregressive { r: 0.5 }, 3).unwrap();
        assert_eq!(a, DMatrix::from_row_slice(3, 3, &[1., 0.5, 0.25, 0.5, 1., 0.5, 0.25, 0.5, 1.]));
        let b = make_covariance(CovPattern::Block { r: 0.9, block_size: 2 }, 4).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[1., 0.9, 0., 0., 0.9, 1., 0., 0., 0., 0., 1., 0.9, 0., 0., 0.9, 1.],
        );
        assert_eq!(b, expected);
        assert!(make_covariance(CovPattern::Uniform { r: -0.1 }, 3).is_err());
    }

    #[test]
    fn beta_layouts() {
        let s = true_beta(BetaPattern::Spread, 100);
        assert_eq!((s[0], s[10], s[20], s[90]), (10.0, -9.0, 8.0, -1.0));
        assert_eq!(s.iter().filter(|v| **v != 0.0).count(), 10);
        let h = true_beta(BetaPattern::Head, 30);
        assert_eq!(h.rows(0, 10).as_slice(), &[10., -9., 8., -7., 6., -5., 4., -3., 2., -1.]);
        let f = true_beta(BetaPattern::Flat, 100);
        assert_eq!((f[0], f[10], f[90]), (5.0, -5.0, -5.0));
        let short = true_beta(BetaPattern::Spread, 30);
        assert_eq!(short.iter().filter(|v| **v != 0.0).count(), 3);
    }

    #[test]
    fn random_pattern_rate() {
        let spec = SimulationSpec {
            n: 10_000,
            p: 100,
            n_test: 1,
            seed: 11,
            missing: MissingPattern::Random { mu: 0.5 },
            ..SimulationSpec::default()
        };
        let t = generate_trial(&spec).unwrap();
        assert!((t.train.missing_fraction() - 0.5).abs() < 0.01);
    }

    #[test]
    fn column_rates_spread() {
        let mut overall = 0.0;
        for seed in 0..20 {
            let spec = SimulationSpec {
                n: 500,
                p: 30,
                n_test: 1,
                seed,
                missing: MissingPattern::Column { mu: 0.5 },
                ..SimulationSpec::default()
            };
            let t = generate_trial(&spec).unwrap();
            let counts = t.train.observed_counts();
            let rates: Vec<f64> = counts.iter().map(|&c| 1.0 - c as f64 / 500.0).collect();
            let lo = rates.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(lo < 0.3 && hi > 0.7, "rates not spread: {lo}..{hi}");
            overall += t.train.missing_fraction() / 20.0;
        }
        assert!((overall - 0.5).abs() < 0.05, "{overall}");
    }

    #[test]
    fn row_column_rates() {
        for (mu, tol) in [(0.1, 0.02), (0.5, 0.03), (0.9, 0.02)] {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let probs = missing_probabilities(MissingPattern::RowColumn { mu }, 2000, 200, &mut rng).unwrap();
            assert!((probs.mean() - mu).abs() < tol, "mu={mu}: {}", probs.mean());
            assert!(probs.iter().all(|q| (0.0..=1.0).contains(q)));
        }
    }

    #[test]
    fn noiseless_response_is_exact() {
        let spec = SimulationSpec {
            n: 50,
            p: 12,
            n_test: 20,
            noise_var: 0.0,
            beta: BetaPattern::Head,
            missing: MissingPattern::Random { mu: 0.0 },
            ..SimulationSpec::default()
        };
        let t = generate_trial(&spec).unwrap();
        assert_eq!(t.train.missing_fraction(), 0.0);
        let x = t.train_complete.filled(0.0);
        assert!((&x * &t.beta - t.train.response()).amax() < 1e-12);
        assert!((&t.test_x * &t.beta - &t.test_y).amax() < 1e-12);
    }

    #[test]
    fn same_seed_same_trial() {
        let spec = SimulationSpec {
            n: 40,
            p: 10,
            n_test: 10,
            ..SimulationSpec::default()
        };
        let a = generate_trial(&spec).unwrap();
        let b = generate_trial(&spec).unwrap();
        assert_eq!(a.train.mask(), b.train.mask());
        assert_eq!(a.train.filled(0.0), b.train.filled(0.0));
        assert_eq!(a.test_x, b.test_x);
        let c = generate_trial(&spec.with_seed(1)).unwrap();
        assert_ne!(a.test_x, c.test_x);
    }
}
