//! Fixtures shared by the criterion benches.

use hmlasso::sim::generate_trial;
use hmlasso::{pairwise_moments, weight_matrix, IncompleteDataset, MissingPattern, PairwiseStats, SimulationSpec};
use nalgebra::DMatrix;

/// Centered training data with `Random { mu }` missingness.
pub fn centered(n: usize, p: usize, mu: f64, seed: u64) -> IncompleteDataset {
    let spec = SimulationSpec {
        n,
        p,
        n_test: 1,
        seed,
        missing: MissingPattern::Random { mu },
        ..SimulationSpec::default()
    };
    generate_trial(&spec).unwrap().train.center().unwrap()
}

pub fn moments(n: usize, p: usize, mu: f64, seed: u64) -> PairwiseStats {
    pairwise_moments(&centered(n, p, mu, seed)).unwrap()
}

/// `(S_pair, R^alpha)`; with few rows and heavy missingness `S_pair` is
/// indefinite.
pub fn psd_target(n: usize, p: usize, mu: f64, alpha: f64, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let stats = moments(n, p, mu, seed);
    let w = weight_matrix(&stats, alpha).unwrap();
    (stats.s_pair, w)
}
