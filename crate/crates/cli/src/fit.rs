use clap::Args;
use hmlasso::export::{fmt_f64, write_matrix, write_path, write_table, write_trace};
use hmlasso::{cross_validate, CvResult, IncompleteDataset};
use nalgebra::DMatrix;

use crate::fail::{CliResult, Failure};
use crate::opts::{load_config, out_dir, setup_threads, write_file, write_pairs, CvArgs, DataArgs, MethodArgs, RunArgs};

/// KKT residual above which a returned fit counts as a numerical failure.
const KKT_LIMIT: f64 = 1e-6;

/// Fit a cross-validated model on a CSV file.
#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    #[command(flatten)]
    pub cv: CvArgs,
    /// Write the ADMM residual trace of the full-data fit.
    #[arg(long)]
    pub dump_trace: bool,
    /// Write the centered dataset.
    #[arg(long)]
    pub dump_centered: bool,
    /// Write S_pair, R and ρ_pair.
    #[arg(long)]
    pub dump_moments: bool,
}

pub fn run(args: &FitArgs) -> CliResult<()> {
    let (_, section) = load_config(&args.run, "fit")?;
    let mut spec = args.cv.spec(&section, &args.method)?;
    spec.seed = args.cv.seed(&section)?.unwrap_or(0);
    let dump_trace = crate::config::resolve_switch(args.dump_trace, &section, "dump-trace")?;
    spec.admm.record_trace = dump_trace;
    let dump_centered = crate::config::resolve_switch(args.dump_centered, &section, "dump-centered")?;
    let dump_moments = crate::config::resolve_switch(args.dump_moments, &section, "dump-moments")?;
    setup_threads(&args.run, &section)?;
    let dir = out_dir(&args.run, &section)?;
    let ds = args.data.load(&section, true)?;
    // surfaces a fully missing column before any fitting
    let centered = ds.center_with_options(spec.center)?;

    let res = cross_validate(&ds, &spec)?;

    write_file(&dir, "coefficients.csv", |w| write_coefficients(w, &ds, &res))?;
    write_file(&dir, "cv_curve.csv", |w| write_curve(w, &res))?;
    write_file(&dir, "path.csv", |w| Ok(write_path(&res.path, w)?))?;
    let psd = res.full.psd.as_ref();
    let nonzero = res.fit.beta.iter().filter(|&&b| b != 0.0).count();
    let sigma_min = nalgebra::SymmetricEigen::new(res.full.sigma.clone()).eigenvalues.min();
    let mut summary = vec![
        ("method", spec.estimator.id()),
        ("rows", ds.n_rows().to_string()),
        ("predictors", ds.n_cols().to_string()),
        ("missing_fraction", fmt_f64(ds.missing_fraction())),
        ("folds", spec.k_folds.to_string()),
        ("seed", spec.seed.to_string()),
        ("selected_lambda", fmt_f64(res.selected_lambda)),
        ("selected_index", (res.selected_index + 1).to_string()),
        ("intercept", fmt_f64(res.intercept)),
        ("nonzero", nonzero.to_string()),
        ("kkt_violation", fmt_f64(res.fit.kkt_violation)),
        ("lasso_converged", res.fit.converged.to_string()),
        ("sigma_min_eigenvalue", fmt_f64(sigma_min)),
        ("path_fits", res.path.fits.len().to_string()),
    ];
    if let Some(stop) = &res.path.stopped {
        // the objective has no minimum below this λ when unbounded
        let reason = if stop.unbounded { "unbounded" } else { "sweep_limit" };
        summary.extend([
            ("path_stop_lambda", fmt_f64(stop.lambda)),
            ("path_stop_reason", reason.to_string()),
        ]);
    }
    if let Some(p) = psd {
        summary.extend([
            ("admm_iterations", p.iterations.to_string()),
            ("admm_converged", p.converged.to_string()),
            ("admm_primal_residual", fmt_f64(p.primal_residual)),
            ("admm_dual_residual", fmt_f64(p.dual_residual)),
        ]);
    }
    write_file(&dir, "fit.csv", |w| write_pairs(w, &summary))?;

    if dump_trace {
        let trace = psd.map(|p| p.trace.as_slice()).unwrap_or_default();
        write_file(&dir, "admm_trace.csv", |w| Ok(write_trace(trace, w)?))?;
    }
    if dump_centered {
        write_file(&dir, "centered.csv", |w| Ok(centered.write_csv(w)?))?;
    }
    if dump_moments {
        let stats = &res.full.stats;
        write_file(&dir, "s_pair.csv", |w| Ok(write_matrix(&stats.s_pair, w)?))?;
        write_file(&dir, "ratio.csv", |w| Ok(write_matrix(&stats.ratio, w)?))?;
        let rho = DMatrix::from_column_slice(stats.rho_pair.len(), 1, stats.rho_pair.as_slice());
        write_file(&dir, "rho_pair.csv", |w| Ok(write_matrix(&rho, w)?))?;
    }

    println!(
        "{}: λ = {:.6e} ({} of {}), intercept {:.6}, {} nonzero, KKT {:.2e}",
        spec.estimator.id(),
        res.selected_lambda,
        res.selected_index + 1,
        res.lambdas.len(),
        res.intercept,
        nonzero,
        res.fit.kkt_violation
    );
    println!("outputs in {}", dir.display());
    if let Some(p) = psd.filter(|p| !p.converged) {
        eprintln!(
            "warning: ADMM stopped after {} iterations (primal {:.2e}, dual {:.2e}); Σ̃ is PSD but not fully optimal",
            p.iterations, p.primal_residual, p.dual_residual
        );
    }
    if !res.fit.converged || !(res.fit.kkt_violation < KKT_LIMIT) {
        return Err(Failure::numerical(format!(
            "coordinate descent did not converge at λ = {:e}: KKT violation {:e}, {} sweeps, min eigenvalue of Σ {:e}",
            res.selected_lambda, res.fit.kkt_violation, res.fit.sweeps, sigma_min
        )));
    }
    Ok(())
}

fn write_coefficients(w: &mut impl std::io::Write, ds: &IncompleteDataset, res: &CvResult) -> CliResult<()> {
    let mut rows = vec![vec!["(intercept)".to_string(), "0".to_string(), fmt_f64(res.intercept)]];
    for (j, &b) in res.coefficients.iter().enumerate() {
        if b != 0.0 {
            let name = ds.column_name(j).map_or_else(|| format!("x{}", j + 1), str::to_owned);
            rows.push(vec![name, (j + 1).to_string(), fmt_f64(b)]);
        }
    }
    let head = ["term", "column", "coefficient"].map(String::from);
    Ok(write_table(&head, &rows, w)?)
}

fn write_curve(w: &mut impl std::io::Write, res: &CvResult) -> CliResult<()> {
    let mut head: Vec<String> = ["lambda", "mean_error", "std_error"].map(String::from).into();
    head.extend((1..=res.fold_errors.len()).map(|f| format!("fold_{f}")));
    let rows: Vec<Vec<String>> = (0..res.lambdas.len())
        .map(|l| {
            let mut row = vec![
                fmt_f64(res.lambdas[l]),
                fmt_f64(res.mean_error[l]),
                fmt_f64(res.std_error[l]),
            ];
            row.extend(res.fold_errors.iter().map(|e| fmt_f64(e[l])));
            row
        })
        .collect();
    Ok(write_table(&head, &rows, w)?)
}
