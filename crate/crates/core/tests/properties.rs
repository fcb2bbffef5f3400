mod common;

use common::{clip_eigen, kkt_residual, max_prox_oracle, min_eigenvalue};
use hmlasso::sim::make_covariance;
use hmlasso::{
    cd_solve, max_norm_bstep, pairwise_moments, project_psd, CovLassoProblem, CovPattern, IncompleteDataset,
    LassoSettings,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Random dataset whose first two rows are fully observed, so every column
/// has at least two observations.
fn dataset() -> impl Strategy<Value = IncompleteDataset> {
    (3usize..12, 1usize..6).prop_flat_map(|(n, p)| {
        (
            prop::collection::vec(-5.0f64..5.0, n * p),
            prop::collection::vec(prop::bool::weighted(0.7), n * p),
            prop::collection::vec(-5.0f64..5.0, n),
        )
            .prop_map(move |(vals, mask, y)| {
                let x = DMatrix::from_row_slice(n, p, &vals);
                let mask = DMatrix::from_fn(n, p, |i, j| i < 2 || mask[i * p + j]);
                IncompleteDataset::new(x, mask, DVector::from_vec(y)).unwrap()
            })
    })
}

fn symmetric(max_p: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_p).prop_flat_map(|p| {
        prop::collection::vec(-3.0f64..3.0, p * p).prop_map(move |v| {
            let m = DMatrix::from_row_slice(p, p, &v);
            (&m + m.transpose()) * 0.5
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn centering_is_idempotent(ds in dataset()) {
        let once = ds.center().unwrap();
        let twice = once.center().unwrap();
        prop_assert!((once.filled(0.0) - twice.filled(0.0)).amax() < 1e-12);
        prop_assert!((once.response() - twice.response()).amax() < 1e-12);
        for m in once.observed_means() {
            prop_assert!(m.unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn zero_fill_is_masked_centered_values(ds in dataset()) {
        let c = ds.center().unwrap();
        let z = c.zero_fill().unwrap().z;
        for i in 0..c.n_rows() {
            for j in 0..c.n_cols() {
                let expected = c.value(i, j).unwrap_or(0.0);
                prop_assert_eq!(z[(i, j)], expected);
            }
        }
    }

    #[test]
    fn ratio_weighted_pairwise_is_zero_filled_gram(ds in dataset()) {
        let c = ds.center().unwrap();
        let stats = pairwise_moments(&c).unwrap();
        let z = c.zero_fill().unwrap().z;
        let n = c.n_rows() as f64;
        let gram = z.transpose() * &z / n;
        prop_assert!((stats.ratio.component_mul(&stats.s_pair) - &gram).amax() < 1e-10);
        let cross = z.transpose() * c.response() / n;
        prop_assert!((stats.rho_pair.component_mul(&stats.ratio.diagonal()) - cross).amax() < 1e-10);
    }

    #[test]
    fn pairwise_moments_are_permutation_equivariant(ds in dataset(), seed in 0u64..1000) {
        let p = ds.n_cols();
        let mut perm: Vec<usize> = (0..p).collect();
        let rot = (seed as usize) % p;
        perm.rotate_left(rot);
        let a = pairwise_moments(&ds.center().unwrap()).unwrap();
        let b = pairwise_moments(&ds.select_columns(&perm).center().unwrap()).unwrap();
        for (jn, &jo) in perm.iter().enumerate() {
            prop_assert!((a.rho_pair[jo] - b.rho_pair[jn]).abs() < 1e-12);
            for (kn, &ko) in perm.iter().enumerate() {
                prop_assert!((a.s_pair[(jo, ko)] - b.s_pair[(jn, kn)]).abs() < 1e-12);
                prop_assert_eq!(a.counts[(jo, ko)], b.counts[(jn, kn)]);
            }
        }

        // reversing the rows changes nothing
        let rows: Vec<usize> = (0..ds.n_rows()).rev().collect();
        let r = pairwise_moments(&ds.select_rows(&rows).center().unwrap()).unwrap();
        prop_assert!((&a.s_pair - &r.s_pair).amax() < 1e-12);
    }

    #[test]
    fn projection_is_psd_idempotent_and_matches_oracle(m in symmetric(7)) {
        let out = project_psd(&m).unwrap();
        let scale = m.amax().max(1.0);
        prop_assert!(min_eigenvalue(&out) >= -1e-10 * scale);
        prop_assert!((project_psd(&out).unwrap() - &out).amax() < 1e-10 * scale);
        prop_assert!((&out - clip_eigen(&m)).amax() < 1e-10 * scale);
    }

    #[test]
    fn bstep_is_the_prox(
        c in prop::collection::vec(-4.0f64..4.0, 9),
        w in prop::collection::vec(0.05f64..2.0, 9),
        mu in 0.05f64..5.0,
    ) {
        let cm = DMatrix::from_row_slice(3, 3, &c);
        let wm = DMatrix::from_row_slice(3, 3, &w);
        let out = max_norm_bstep(&cm, &wm, mu);
        let oracle = max_prox_oracle(cm.as_slice(), wm.as_slice(), mu);
        for (a, b) in out.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn generated_covariances_are_psd(r in 0.0f64..0.999, kind in 0usize..3, blocks in 1usize..5, size in 1usize..6) {
        let p = blocks * size;
        let pattern = match kind {
            0 => CovPattern::Uniform { r },
            1 => CovPattern::Autoregressive { r },
            _ => CovPattern::Block { r, block_size: size },
        };
        let sigma = make_covariance(pattern, p).unwrap();
        prop_assert!(min_eigenvalue(&sigma) >= -1e-10);
    }

    #[test]
    fn coordinate_descent_meets_kkt(
        g in prop::collection::vec(-2.0f64..2.0, 48),
        rho in prop::collection::vec(-2.0f64..2.0, 6),
        frac in 0.001f64..1.0,
    ) {
        let g = DMatrix::from_row_slice(8, 6, &g);
        let sigma = g.transpose() * &g / 8.0 + DMatrix::identity(6, 6) * 1e-3;
        let rho = DVector::from_vec(rho);
        let lambda = frac * rho.amax().max(1e-3);
        let fit = cd_solve(&CovLassoProblem { sigma: &sigma, rho: &rho, lambda, settings: LassoSettings::default() }, None).unwrap();
        prop_assert!(fit.converged);
        prop_assert!(kkt_residual(&sigma, &rho, &fit.beta, lambda) < 1e-6);
    }
}
