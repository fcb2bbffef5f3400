//! Pairwise covariance statistics of an incomplete dataset.

use nalgebra::{DMatrix, DVector};

use crate::dataset::IncompleteDataset;
use crate::error::{Error, Result};

/// Pairwise-deletion moments of a centered dataset.
///
/// `s_pair[(j, k)]` averages `x_ij · x_ik` over the `counts[(j, k)]` rows in
/// which both columns are observed; `ratio = counts / n`. Pairs with no
/// common observation get `s_pair = 0` and `ratio = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseStats {
    pub s_pair: DMatrix<f64>,
    pub rho_pair: DVector<f64>,
    pub ratio: DMatrix<f64>,
    pub counts: DMatrix<usize>,
    pub n: usize,
}

impl PairwiseStats {
    pub fn dim(&self) -> usize {
        self.rho_pair.len()
    }

    /// Smallest joint observation count over all pairs.
    pub fn min_overlap(&self) -> usize {
        self.counts.iter().copied().min().unwrap_or(0)
    }
}

pub fn pairwise_moments(ds: &IncompleteDataset) -> Result<PairwiseStats> {
    if !ds.is_centered() {
        return Err(Error::NotCentered);
    }
    let (n, p) = (ds.n_rows(), ds.n_cols());
    let z = ds.zero_fill()?.z;
    let mask = ds.mask().map(|m| if m { 1.0 } else { 0.0 });
    let y = ds.response();

    let mut s_pair = DMatrix::zeros(p, p);
    let mut ratio = DMatrix::zeros(p, p);
    let mut counts = DMatrix::zeros(p, p);
    let mut rho_pair = DVector::zeros(p);
    for j in 0..p {
        let zj = z.column(j);
        let mj = mask.column(j);
        for k in j..p {
            let zk = z.column(k);
            let mk = mask.column(k);
            let mut sum = 0.0;
            let mut count = 0usize;
            for i in 0..n {
                if mj[i] != 0.0 && mk[i] != 0.0 {
                    sum += zj[i] * zk[i];
                    count += 1;
                }
            }
            let s = if count > 0 { sum / count as f64 } else { 0.0 };
            let r = count as f64 / n as f64;
            s_pair[(j, k)] = s;
            s_pair[(k, j)] = s;
            ratio[(j, k)] = r;
            ratio[(k, j)] = r;
            counts[(j, k)] = count;
            counts[(k, j)] = count;
        }
        let njj = counts[(j, j)];
        if njj > 0 {
            let sum: f64 = (0..n).filter(|&i| mj[i] != 0.0).map(|i| zj[i] * y[i]).sum();
            rho_pair[j] = sum / njj as f64;
        }
    }
    Ok(PairwiseStats {
        s_pair,
        rho_pair,
        ratio,
        counts,
        n,
    })
}

/// `S_imp = R ⊙ S_pair`, the Gram matrix of the zero-filled data.
pub fn mean_imputed_covariance(stats: &PairwiseStats) -> DMatrix<f64> {
    stats.ratio.component_mul(&stats.s_pair)
}

/// `ρ_imp = R_diag ⊙ ρ_pair = Zᵀy / n`, the cross-moment of the zero-filled
/// data.
pub fn mean_imputed_cross(stats: &PairwiseStats) -> DVector<f64> {
    stats.ratio.diagonal().component_mul(&stats.rho_pair)
}

/// `W = R^α` elementwise, with `0^0 = 1`.
pub fn weight_matrix(stats: &PairwiseStats, alpha: f64) -> Result<DMatrix<f64>> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::invalid("alpha", format!("must be a finite nonnegative number, got {alpha}")));
    }
    Ok(stats.ratio.map(|r| if alpha == 0.0 { 1.0 } else { r.powf(alpha) }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_masked;

    #[test]
    fn complete_data_reduces_to_sample_moments() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let y = DVector::from_vec(vec![2.0, -2.0]);
        let ds = IncompleteDataset::complete(x, y).unwrap().center().unwrap();
        let st = pairwise_moments(&ds).unwrap();
        assert_eq!(st.s_pair, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        assert_eq!(st.rho_pair.as_slice(), &[2.0, -2.0]);
        assert!(st.ratio.iter().all(|&r| r == 1.0));
        assert_eq!(mean_imputed_covariance(&st), st.s_pair);
    }

    #[test]
    fn empty_overlap_convention() {
        let nan = f64::NAN;
        let x = DMatrix::from_row_slice(4, 2, &[1.0, nan, -1.0, nan, nan, 2.0, nan, -2.0]);
        let ds = IncompleteDataset::from_nan_matrix(x, DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]))
            .unwrap()
            .center()
            .unwrap();
        let st = pairwise_moments(&ds).unwrap();
        assert_eq!(st.counts[(0, 1)], 0);
        assert_eq!(st.s_pair[(0, 1)], 0.0);
        assert_eq!(st.ratio[(0, 1)], 0.0);
        assert_eq!(st.min_overlap(), 0);
        let w = weight_matrix(&st, 1.0).unwrap();
        assert_eq!(w[(0, 1)], 0.0);
        assert_eq!(weight_matrix(&st, 0.0).unwrap()[(0, 1)], 1.0);
    }

    /// Direct summation over `I_jk`, written independently of the
    /// zero-filled implementation path.
    fn brute_force(ds: &IncompleteDataset) -> (DMatrix<f64>, DVector<f64>) {
        let (n, p) = (ds.n_rows(), ds.n_cols());
        let mut s = DMatrix::zeros(p, p);
        let mut rho = DVector::zeros(p);
        for j in 0..p {
            for k in 0..p {
                let terms: Vec<f64> = (0..n)
                    .filter_map(|i| Some(ds.value(i, j)? * ds.value(i, k)?))
                    .collect();
                if !terms.is_empty() {
                    s[(j, k)] = terms.iter().sum::<f64>() / terms.len() as f64;
                }
            }
            let terms: Vec<f64> = (0..n).filter_map(|i| Some(ds.value(i, j)? * ds.response()[i])).collect();
            rho[j] = terms.iter().sum::<f64>() / terms.len() as f64;
        }
        (s, rho)
    }

    #[test]
    fn matches_double_loop_oracle() {
        let ds = random_masked(30, 5, 0.4, 11).center().unwrap();
        let st = pairwise_moments(&ds).unwrap();
        let (s, rho) = brute_force(&ds);
        assert!((&st.s_pair - s).amax() < 1e-12);
        assert!((&st.rho_pair - rho).amax() < 1e-12);
    }

    #[test]
    fn mean_imputed_equals_gram_of_zero_filled() {
        let ds = random_masked(40, 6, 0.5, 3).center().unwrap();
        let st = pairwise_moments(&ds).unwrap();
        let z = ds.zero_fill().unwrap().z;
        let gram = z.transpose() * &z / ds.n_rows() as f64;
        let s_imp = mean_imputed_covariance(&st);
        assert!((&s_imp - &gram).amax() < 1e-10);
        let min_eig = nalgebra::SymmetricEigen::new(s_imp).eigenvalues.min();
        assert!(min_eig >= -1e-8);
        let cross = z.transpose() * ds.response() / ds.n_rows() as f64;
        assert!((mean_imputed_cross(&st) - cross).amax() < 1e-10);
    }

    #[test]
    fn all_zero_dataset() {
        let ds = IncompleteDataset::complete(DMatrix::zeros(5, 3), DVector::zeros(5))
            .unwrap()
            .center()
            .unwrap();
        let st = pairwise_moments(&ds).unwrap();
        assert_eq!(mean_imputed_covariance(&st), DMatrix::zeros(3, 3));
    }

    #[test]
    fn weight_exponents() {
        let ds = random_masked(20, 3, 0.3, 5).center().unwrap();
        let mut st = pairwise_moments(&ds).unwrap();
        assert!(weight_matrix(&st, 0.0).unwrap().iter().all(|&w| w == 1.0));
        assert_eq!(weight_matrix(&st, 1.0).unwrap(), st.ratio);
        st.ratio[(0, 1)] = 0.25;
        assert_eq!(weight_matrix(&st, 0.5).unwrap()[(0, 1)], 0.5);
        assert!(weight_matrix(&st, -1.0).is_err());
        assert!(weight_matrix(&st, f64::NAN).is_err());
    }

    #[test]
    fn requires_centered() {
        let ds = random_masked(10, 2, 0.2, 1);
        assert!(matches!(pairwise_moments(&ds), Err(Error::NotCentered)));
    }
}
