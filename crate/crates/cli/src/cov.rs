use clap::Args;
use hmlasso::export::{fmt_f64, write_matrix, write_trace};
use hmlasso::covariance_form;
use nalgebra::{DMatrix, SymmetricEigen};

use crate::config::resolve_switch;
use crate::fail::CliResult;
use crate::opts::{load_config, out_dir, setup_threads, write_file, write_pairs, DataArgs, MethodArgs, RunArgs};

/// Compute the pairwise covariance of a CSV file and its PSD repair.
#[derive(Args, Debug)]
pub struct CovArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Scale columns to unit observed standard deviation.
    #[arg(long)]
    pub standardize: bool,
    /// Write the per-iteration ADMM residuals.
    #[arg(long)]
    pub dump_trace: bool,
    /// Write the centered dataset.
    #[arg(long)]
    pub dump_centered: bool,
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

pub fn run(args: &CovArgs) -> CliResult<()> {
    let (_, section) = load_config(&args.run, "cov")?;
    let estimator = args.method.estimator(&section)?;
    let mut admm = args.method.admm(&section)?;
    let dump_trace = resolve_switch(args.dump_trace, &section, "dump-trace")?;
    admm.record_trace = dump_trace;
    let options = hmlasso::CenterOptions {
        standardize: resolve_switch(args.standardize, &section, "standardize")?,
    };
    let dump_centered = resolve_switch(args.dump_centered, &section, "dump-centered")?;
    setup_threads(&args.run, &section)?;
    let dir = out_dir(&args.run, &section)?;
    let ds = args.data.load(&section, false)?.center_with_options(options)?;

    let form = covariance_form(&ds, estimator, &admm)?;
    let stats = &form.stats;
    write_file(&dir, "s_pair.csv", |w| Ok(write_matrix(&stats.s_pair, w)?))?;
    write_file(&dir, "ratio.csv", |w| Ok(write_matrix(&stats.ratio, w)?))?;
    write_file(&dir, "sigma_tilde.csv", |w| Ok(write_matrix(&form.sigma, w)?))?;
    if dump_centered {
        write_file(&dir, "centered.csv", |w| Ok(ds.write_csv(w)?))?;
    }

    let s_min = min_eig(&stats.s_pair);
    let sigma_min = min_eig(&form.sigma);
    let mut diag = vec![
        ("method", estimator.id()),
        ("rows", ds.n_rows().to_string()),
        ("predictors", ds.n_cols().to_string()),
        ("missing_fraction", fmt_f64(ds.missing_fraction())),
        ("min_pair_count", stats.min_overlap().to_string()),
        ("s_pair_min_eigenvalue", fmt_f64(s_min)),
        ("sigma_min_eigenvalue", fmt_f64(sigma_min)),
        ("max_abs_change", fmt_f64((&form.sigma - &stats.s_pair).amax())),
    ];
    if let Some(p) = &form.psd {
        diag.extend([
            ("admm_iterations", p.iterations.to_string()),
            ("admm_converged", p.converged.to_string()),
            ("admm_primal_residual", fmt_f64(p.primal_residual)),
            ("admm_dual_residual", fmt_f64(p.dual_residual)),
            ("objective", fmt_f64(p.objective)),
        ]);
    }
    write_file(&dir, "diagnostics.csv", |w| write_pairs(w, &diag))?;
    if dump_trace {
        let trace = form.psd.as_ref().map(|p| p.trace.as_slice()).unwrap_or_default();
        write_file(&dir, "admm_trace.csv", |w| Ok(write_trace(trace, w)?))?;
    }

    println!(
        "{}: min eigenvalue {:.3e} → {:.3e}",
        estimator.id(),
        s_min,
        sigma_min
    );
    match &form.psd {
        Some(p) if !p.converged => eprintln!(
            "warning: ADMM stopped after {} iterations (primal {:.2e}, dual {:.2e}); Σ̃ is PSD but not fully optimal",
            p.iterations, p.primal_residual, p.dual_residual
        ),
        Some(p) => println!("ADMM converged in {} iterations", p.iterations),
        None => {}
    }
    println!("outputs in {}", dir.display());
    Ok(())
}
