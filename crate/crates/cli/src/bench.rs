use clap::Args;
use hmlasso::sim::run_experiment;
use hmlasso::{CovarianceEstimator, SimulationSpec};

use crate::config::{resolve, Config, Section};
use crate::fail::{CliResult, Failure};
use crate::opts::{load_config, out_dir, setup_threads, write_file, CvArgs, MethodArgs, RunArgs};
use crate::simulate::SpecArgs;

/// Condition keys, in the order their value lists are expanded.
const CONDITION_KEYS: [&str; 7] = ["n", "p", "n-test", "cov", "missing", "beta", "noise-var"];

/// Run a grid of simulated conditions and aggregate the errors.
///
/// Conditions come from `[condition]` or `[condition.NAME]` config sections;
/// a comma-separated value expands into one condition per entry. Without
/// such sections a single condition is built from the flags.
#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    #[command(flatten)]
    pub cv: CvArgs,
    /// Comma-separated method ids; overrides --alpha, --norm and --method.
    #[arg(long)]
    pub methods: Option<String>,
    /// Replicates per condition.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Also write per-trial wall times (not reproducible).
    #[arg(long)]
    pub timings: bool,
}

fn expand(section: &Section) -> CliResult<Vec<Section>> {
    if let Some(k) = section.keys().find(|k| !CONDITION_KEYS.contains(k)) {
        return Err(Failure::validation(format!("[{}]: unknown key {k:?}", section.name)));
    }
    let mut combos: Vec<Vec<(&str, &str)>> = vec![Vec::new()];
    for key in CONDITION_KEYS {
        let Some(raw) = section.raw(key) else { continue };
        let values: Vec<&str> = raw.split(',').map(str::trim).collect();
        combos = combos
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |&v| {
                    let mut c = c.clone();
                    c.push((key, v));
                    c
                })
            })
            .collect();
    }
    Ok(combos
        .into_iter()
        .map(|c| Section::from_pairs(&section.name, c))
        .collect())
}

fn conditions(args: &BenchArgs, config: &Config, seed: u64) -> CliResult<Vec<SimulationSpec>> {
    let mut sections = Vec::new();
    for s in config.sections_named("condition") {
        sections.extend(expand(s)?);
    }
    if sections.is_empty() {
        sections.push(Section::default());
    }
    sections.iter().map(|s| args.spec.spec(s, seed)).collect()
}

fn methods(args: &BenchArgs, section: &Section) -> CliResult<Vec<CovarianceEstimator>> {
    let explicit = args.method.method.is_some() || args.method.alpha.is_some() || args.method.norm.is_some();
    let list = match &args.methods {
        Some(m) => Some(m.clone()),
        None if explicit => None,
        None => section.raw("methods").map(str::to_owned),
    };
    match list {
        Some(list) => list
            .split(',')
            .map(|m| m.trim().parse::<CovarianceEstimator>().map_err(Failure::from))
            .collect(),
        None => Ok(vec![args.method.estimator(section)?]),
    }
}

pub fn run(args: &BenchArgs) -> CliResult<()> {
    let seed = args
        .cv
        .seed
        .ok_or_else(|| Failure::validation("bench requires --seed (results must be reproducible)"))?;
    let (config, section) = load_config(&args.run, "bench")?;
    let specs = conditions(args, &config, seed)?;
    let methods = methods(args, &section)?;
    let replicates = resolve(args.replicates, &section, "replicates")?.unwrap_or(1);
    if replicates == 0 {
        return Err(Failure::validation("--replicates must be at least 1"));
    }
    let cv = args.cv.spec(&section, &args.method)?;
    let timings = crate::config::resolve_switch(args.timings, &section, "timings")?;
    setup_threads(&args.run, &section)?;
    let dir = out_dir(&args.run, &section)?;

    eprintln!(
        "{} conditions × {} methods × {} replicates",
        specs.len(),
        methods.len(),
        replicates
    );
    let exp = run_experiment(&specs, &methods, replicates, &cv)?;
    write_file(&dir, "summary.csv", |w| Ok(exp.write_summary(w)?))?;
    write_file(&dir, "trials.csv", |w| Ok(exp.write_trials(w)?))?;
    if timings {
        write_file(&dir, "timings.csv", |w| Ok(exp.write_timings(w)?))?;
    }

    for row in &exp.rows {
        println!(
            "condition {} {:<14} l2 {:.4} ± {:.4}  rmse {:.4} ± {:.4}  ({} ok, {} failed)",
            row.condition + 1,
            row.method,
            row.mean_l2_error,
            row.se_l2_error,
            row.mean_rmse,
            row.se_rmse,
            row.succeeded,
            row.failed
        );
    }
    let failed: usize = exp.rows.iter().map(|r| r.failed).sum();
    if failed > 0 {
        eprintln!("warning: {failed} trials failed; see the error columns of summary.csv and trials.csv");
    }
    println!("outputs in {}", dir.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comma_lists_expand_to_a_product() {
        let cfg = Config::parse("[condition]\nn = 100\nmissing = column:0.1, column:0.9\nbeta = spread, head\n").unwrap();
        let s = cfg.sections_named("condition").next().unwrap();
        let out = expand(s).unwrap();
        assert_eq!(out.len(), 4);
        assert_eq!(out[1].raw("missing"), Some("column:0.1"));
        assert_eq!(out[1].raw("beta"), Some("head"));
        assert_eq!(out[3].raw("n"), Some("100"));
    }

    #[test]
    fn unknown_condition_key() {
        let cfg = Config::parse("[condition]\nrows = 100\n").unwrap();
        assert!(expand(cfg.sections_named("condition").next().unwrap()).is_err());
    }
}
