//! Turning an incomplete dataset into the `(Σ, ρ)` pair consumed by the
//! covariance-form Lasso.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::dataset::IncompleteDataset;
use crate::error::{Error, Result};
use crate::moments::{mean_imputed_covariance, mean_imputed_cross, pairwise_moments, weight_matrix, PairwiseStats};
use crate::psd::{admm_solve, AdmmSettings, NormKind, PsdApproxProblem, PsdApproxResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovarianceEstimator {
    /// PSD approximation of the pairwise covariance under weights `R^α`,
    /// paired with the pairwise cross-moment `ρ_pair`.
    Weighted { alpha: f64, norm: NormKind },
    /// Gram matrix and cross-moment of the zero-filled data: the ordinary
    /// Lasso after mean imputation.
    MeanImputed,
}

impl CovarianceEstimator {
    /// Frobenius norm with `α = 1`.
    pub const HMLASSO: Self = CovarianceEstimator::Weighted {
        alpha: 1.0,
        norm: NormKind::WeightedFrobenius,
    };

    /// Unweighted max norm (`α = 0`).
    pub const COCOLASSO: Self = CovarianceEstimator::Weighted {
        alpha: 0.0,
        norm: NormKind::WeightedMax,
    };

    /// Stable identifier used in result tables: `frobenius:1`, `max:0`,
    /// `mean_impute`.
    pub fn id(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for CovarianceEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovarianceEstimator::Weighted { alpha, norm } => write!(f, "{norm}:{alpha}"),
            CovarianceEstimator::MeanImputed => f.write_str("mean_impute"),
        }
    }
}

impl FromStr for CovarianceEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "mean_impute" | "mean-impute" | "mean" => return Ok(CovarianceEstimator::MeanImputed),
            "hmlasso" => return Ok(Self::HMLASSO),
            "cocolasso" => return Ok(Self::COCOLASSO),
            _ => {}
        }
        let (norm, alpha) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid("method", format!("expected norm:alpha, got {s:?}")))?;
        let alpha: f64 = alpha
            .trim()
            .parse()
            .map_err(|_| Error::invalid("alpha", format!("not a number: {alpha:?}")))?;
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::invalid("alpha", format!("must be nonnegative, got {alpha}")));
        }
        Ok(CovarianceEstimator::Weighted {
            alpha,
            norm: norm.trim().parse()?,
        })
    }
}

/// `(Σ, ρ)` for a centered dataset together with the statistics it came
/// from.
#[derive(Debug, Clone)]
pub struct CovarianceForm {
    pub sigma: DMatrix<f64>,
    pub rho: DVector<f64>,
    pub stats: PairwiseStats,
    /// ADMM diagnostics for weighted estimators.
    pub psd: Option<PsdApproxResult>,
}

pub fn covariance_form(
    ds: &IncompleteDataset,
    estimator: CovarianceEstimator,
    admm: &AdmmSettings,
) -> Result<CovarianceForm> {
    let stats = pairwise_moments(ds)?;
    match estimator {
        CovarianceEstimator::MeanImputed => Ok(CovarianceForm {
            sigma: mean_imputed_covariance(&stats),
            rho: mean_imputed_cross(&stats),
            stats,
            psd: None,
        }),
        CovarianceEstimator::Weighted { alpha, norm } => {
            let weights = weight_matrix(&stats, alpha)?;
            let prob = PsdApproxProblem::new(stats.s_pair.clone(), weights, norm)?.with_settings(*admm)?;
            let res = admm_solve(&prob)?;
            Ok(CovarianceForm {
                sigma: res.sigma_tilde.clone(),
                rho: stats.rho_pair.clone(),
                stats,
                psd: Some(res),
            })
        }
    }
}
