//! Flags shared between subcommands and their resolution against a config
//! file.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use hmlasso::{
    AdmmSettings, CenterOptions, CovarianceEstimator, CsvOptions, CvSpec, GridSpec, IncompleteDataset, LassoSettings,
    NormKind, ResponseColumn,
};

use crate::config::{resolve, resolve_switch, Config, Section};
use crate::fail::{CliResult, Failure};

#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// INI-style config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for output files (created if needed).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct DataArgs {
    /// Input CSV file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Response column: a header name or a 1-based column number.
    #[arg(long)]
    pub response: Option<String>,
    /// Comma-separated tokens that mark a missing cell.
    #[arg(long)]
    pub missing_tokens: Option<String>,
    /// Field delimiter.
    #[arg(long)]
    pub delimiter: Option<char>,
    /// The first line is data, not a header.
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct MethodArgs {
    /// Weight exponent: W = R^alpha.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Norm of the PSD approximation: frobenius or max.
    #[arg(long)]
    pub norm: Option<String>,
    /// Method id (hmlasso, cocolasso, mean_impute or NORM:ALPHA);
    /// overrides --alpha and --norm.
    #[arg(long)]
    pub method: Option<String>,
    /// ADMM penalty parameter (starting value when adaptive).
    #[arg(long)]
    pub mu: Option<f64>,
    /// Convergence tolerance of ADMM and coordinate descent.
    #[arg(long)]
    pub tol: Option<f64>,
    /// ADMM iteration cap.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Keep the ADMM penalty fixed.
    #[arg(long)]
    pub fixed_mu: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CvArgs {
    /// Number of λ values on the grid.
    #[arg(long)]
    pub n_lambda: Option<usize>,
    /// Smallest λ as a fraction of λ_max.
    #[arg(long)]
    pub lambda_min_ratio: Option<f64>,
    /// Cross-validation folds.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Seed for fold assignment (and simulation).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scale columns to unit observed standard deviation.
    #[arg(long)]
    pub standardize: bool,
    /// Select the largest λ within one standard error of the minimum.
    #[arg(long)]
    pub one_se: bool,
    /// Rescale fold λ values by √(n/n_train).
    #[arg(long)]
    pub calibrate: bool,
}

pub fn load_config(run: &RunArgs, section: &str) -> CliResult<(Config, Section)> {
    let config = match &run.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let view = config.view(section);
    Ok((config, view))
}

pub fn setup_threads(run: &RunArgs, section: &Section) -> CliResult<()> {
    if let Some(n) = resolve(run.threads, section, "threads")? {
        if n == 0 {
            return Err(Failure::validation("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::validation(format!("thread pool: {e}")))?;
    }
    Ok(())
}

pub fn out_dir(run: &RunArgs, section: &Section) -> CliResult<PathBuf> {
    let dir = resolve(run.out_dir.clone(), section, "out-dir")?.unwrap_or_else(|| PathBuf::from("hmlasso-out"));
    std::fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;
    Ok(dir)
}

/// Creates `dir/name` and hands a buffered writer to `f`.
pub fn write_file<F>(dir: &Path, name: &str, f: F) -> CliResult<PathBuf>
where
    F: FnOnce(&mut BufWriter<File>) -> CliResult<()>,
{
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| Failure::io(&path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush().map_err(|e| Failure::io(&path, e))?;
    Ok(path)
}

/// `key,value` table.
pub fn write_pairs(w: &mut impl Write, pairs: &[(&str, String)]) -> CliResult<()> {
    let rows: Vec<Vec<String>> = pairs.iter().map(|(k, v)| vec![k.to_string(), v.clone()]).collect();
    hmlasso::export::write_table(&["key".into(), "value".into()], &rows, w)?;
    Ok(())
}

pub fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Failure::validation(format!("{name} must be positive, got {v}")))
    }
}

impl DataArgs {
    /// Reads the input CSV. `need_response` false allows a file without a
    /// response column when none is named.
    pub fn load(&self, section: &Section, need_response: bool) -> CliResult<IncompleteDataset> {
        let input: PathBuf = resolve(self.input.clone(), section, "input")?
            .ok_or_else(|| Failure::validation("--input is required"))?;
        let mut options = CsvOptions {
            has_header: !resolve_switch(self.no_header, section, "no-header")?,
            ..CsvOptions::default()
        };
        if let Some(d) = resolve(self.delimiter, section, "delimiter")? {
            if !d.is_ascii() {
                return Err(Failure::validation(format!("delimiter must be ASCII, got {d:?}")));
            }
            options.delimiter = d as u8;
        }
        if let Some(tokens) = resolve::<String>(self.missing_tokens.clone(), section, "missing-tokens")? {
            options.missing_tokens = tokens.split(',').map(|t| t.trim().to_string()).collect();
        }
        let response: Option<String> = resolve(self.response.clone(), section, "response")?;
        options.response = match response {
            Some(r) => response_column(&input, &options, &r)?,
            None if need_response || header_has(&input, &options, "y") => ResponseColumn::Name("y".into()),
            None => ResponseColumn::None,
        };
        hmlasso::load_csv(&input, &options).map_err(|e| Failure::from(e).context(format!("reading {}", input.display())))
    }
}

fn header_fields(path: &Path, options: &CsvOptions) -> Option<Vec<String>> {
    if !options.has_header {
        return None;
    }
    let file = File::open(path).ok()?;
    let first = BufReader::new(file).lines().next()?.ok()?;
    Some(
        first
            .split(options.delimiter as char)
            .map(|s| s.trim().to_string())
            .collect(),
    )
}

fn header_has(path: &Path, options: &CsvOptions, name: &str) -> bool {
    header_fields(path, options).is_some_and(|h| h.iter().any(|f| f == name))
}

/// A header name wins over a 1-based column number.
fn response_column(path: &Path, options: &CsvOptions, r: &str) -> CliResult<ResponseColumn> {
    if header_has(path, options, r) {
        return Ok(ResponseColumn::Name(r.to_string()));
    }
    match r.parse::<usize>() {
        Ok(0) => Err(Failure::validation("--response column numbers start at 1")),
        Ok(k) => Ok(ResponseColumn::Index(k - 1)),
        Err(_) => Ok(ResponseColumn::Name(r.to_string())),
    }
}

impl MethodArgs {
    pub fn estimator(&self, section: &Section) -> CliResult<CovarianceEstimator> {
        if let Some(m) = &self.method {
            return Ok(m.parse()?);
        }
        if self.alpha.is_none() && self.norm.is_none() {
            if let Some(m) = section.raw("method") {
                return Ok(m.parse()?);
            }
        }
        let alpha = resolve(self.alpha, section, "alpha")?.unwrap_or(1.0);
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Failure::validation(format!("--alpha must be nonnegative, got {alpha}")));
        }
        let norm: NormKind = match resolve::<String>(self.norm.clone(), section, "norm")? {
            Some(n) => n.parse()?,
            None => NormKind::WeightedFrobenius,
        };
        Ok(CovarianceEstimator::Weighted { alpha, norm })
    }

    pub fn admm(&self, section: &Section) -> CliResult<AdmmSettings> {
        let mut s = AdmmSettings::default();
        if let Some(mu) = resolve(self.mu, section, "mu")? {
            s.mu = Some(positive("--mu", mu)?);
        }
        if let Some(tol) = resolve(self.tol, section, "tol")? {
            s.tol = positive("--tol", tol)?;
        }
        if let Some(m) = resolve(self.max_iters, section, "max-iters")? {
            if m == 0 {
                return Err(Failure::validation("--max-iters must be positive"));
            }
            s.max_iters = m;
        }
        s.adaptive_mu = !resolve_switch(self.fixed_mu, section, "fixed-mu")?;
        Ok(s)
    }

    pub fn lasso(&self, section: &Section) -> CliResult<LassoSettings> {
        let mut s = LassoSettings::default();
        if let Some(tol) = resolve(self.tol, section, "tol")? {
            s.tol = positive("--tol", tol)?;
        }
        Ok(s)
    }
}

impl CvArgs {
    pub fn grid(&self, section: &Section) -> CliResult<GridSpec> {
        let n_lambda = resolve(self.n_lambda, section, "n-lambda")?.unwrap_or(50);
        let ratio = resolve(self.lambda_min_ratio, section, "lambda-min-ratio")?.unwrap_or(1e-3);
        if n_lambda < 2 {
            return Err(Failure::validation(format!("--n-lambda must be at least 2, got {n_lambda}")));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Failure::validation(format!("--lambda-min-ratio must lie in (0, 1), got {ratio}")));
        }
        Ok(GridSpec::Auto { n_lambda, ratio })
    }

    pub fn seed(&self, section: &Section) -> CliResult<Option<u64>> {
        resolve(self.seed, section, "seed")
    }

    /// Everything except the seed, which callers set.
    pub fn spec(&self, section: &Section, method: &MethodArgs) -> CliResult<CvSpec> {
        let k_folds = resolve(self.folds, section, "folds")?.unwrap_or(5);
        if k_folds < 2 {
            return Err(Failure::validation(format!("--folds must be at least 2, got {k_folds}")));
        }
        Ok(CvSpec {
            k_folds,
            grid: self.grid(section)?,
            seed: 0,
            estimator: method.estimator(section)?,
            admm: method.admm(section)?,
            lasso: method.lasso(section)?,
            center: CenterOptions {
                standardize: resolve_switch(self.standardize, section, "standardize")?,
            },
            calibrate: resolve_switch(self.calibrate, section, "calibrate")?,
            one_se: resolve_switch(self.one_se, section, "one-se")?,
        })
    }
}
