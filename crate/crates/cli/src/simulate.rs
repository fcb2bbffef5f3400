use clap::Args;
use hmlasso::export::{fmt_f64, write_matrix, write_table};
use hmlasso::sim::generate_trial;
use hmlasso::{BetaPattern, CovPattern, IncompleteDataset, MissingPattern, SimulationSpec};

use crate::config::{resolve, Section};
use crate::fail::CliResult;
use crate::opts::{load_config, out_dir, write_file, RunArgs};

/// Shape of a simulated dataset; shared with `bench`.
#[derive(Args, Debug, Clone, Default)]
pub struct SpecArgs {
    /// Training rows.
    #[arg(long)]
    pub n: Option<usize>,
    /// Predictors.
    #[arg(long)]
    pub p: Option<usize>,
    /// Rows of the complete test set.
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Covariance: uniform:R, ar:R or block:R:SIZE.
    #[arg(long)]
    pub cov: Option<CovPattern>,
    /// Missingness: random:MU, column:MU or rowcolumn:MU.
    #[arg(long)]
    pub missing: Option<MissingPattern>,
    /// Coefficient layout: spread, head or flat.
    #[arg(long)]
    pub beta: Option<BetaPattern>,
    /// Noise variance.
    #[arg(long)]
    pub noise_var: Option<f64>,
}

impl SpecArgs {
    /// Flags over `section` over the defaults.
    pub fn spec(&self, section: &Section, seed: u64) -> CliResult<SimulationSpec> {
        let d = SimulationSpec::default();
        let spec = SimulationSpec {
            n: resolve(self.n, section, "n")?.unwrap_or(d.n),
            p: resolve(self.p, section, "p")?.unwrap_or(d.p),
            n_test: resolve(self.n_test, section, "n-test")?.unwrap_or(d.n_test),
            seed,
            cov: resolve(self.cov, section, "cov")?.unwrap_or(d.cov),
            missing: resolve(self.missing, section, "missing")?.unwrap_or(d.missing),
            beta: resolve(self.beta, section, "beta")?.unwrap_or(d.beta),
            noise_var: resolve(self.noise_var, section, "noise-var")?.unwrap_or(d.noise_var),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Generate one synthetic dataset and write it as CSV.
#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Random seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let (_, section) = load_config(&args.run, "simulate")?;
    let seed = resolve(args.seed, &section, "seed")?.unwrap_or(0);
    let spec = args.spec.spec(&section, seed)?;
    let dir = out_dir(&args.run, &section)?;
    let trial = generate_trial(&spec)?;

    write_file(&dir, "train.csv", |w| Ok(trial.train.write_csv(w)?))?;
    write_file(&dir, "train_complete.csv", |w| Ok(trial.train_complete.write_csv(w)?))?;
    let test = IncompleteDataset::complete(trial.test_x.clone(), trial.test_y.clone())?;
    write_file(&dir, "test.csv", |w| Ok(test.write_csv(w)?))?;
    write_file(&dir, "sigma.csv", |w| Ok(write_matrix(&trial.sigma_star, w)?))?;
    let rows: Vec<Vec<String>> = trial
        .beta
        .iter()
        .enumerate()
        .map(|(j, &b)| vec![format!("x{}", j + 1), fmt_f64(b)])
        .collect();
    write_file(&dir, "beta.csv", |w| {
        Ok(write_table(&["term".into(), "beta".into()], &rows, w)?)
    })?;
    println!(
        "n = {}, p = {}, {} missing ({:.1}% of cells), seed {}",
        spec.n,
        spec.p,
        spec.missing,
        100.0 * trial.train.missing_fraction(),
        seed
    );
    println!("outputs in {}", dir.display());
    Ok(())
}
