//! Synthetic data generation and method comparison.
//!
//! Conditions combine a covariance pattern, a missingness pattern, a true
//! coefficient layout and a noise level. A trial draws Gaussian training
//! data, masks it completely at random according to per-cell missing
//! probabilities, and draws an independent fully observed test set.

mod experiment;
mod generate;

use std::fmt;
use std::str::FromStr;

pub use experiment::{run_experiment, run_method, Experiment, ExperimentRow, TrialRecord, TrialResult};
pub use generate::{generate_trial, make_covariance, missing_probabilities, sample_gaussian, true_beta, Trial};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovPattern {
    /// `Σ_jk = r` off the diagonal.
    Uniform { r: f64 },
    /// `Σ_jk = r^|j−k|`.
    Autoregressive { r: f64 },
    /// Block diagonal of uniform blocks; off-block entries are zero.
    Block { r: f64, block_size: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MissingPattern {
    /// Every cell missing with probability `mu`.
    Random { mu: f64 },
    /// Column `j` missing with probability `μ_j`, `μ_j` uniform on
    /// `[max(0, 2μ−1), min(1, 2μ)]`, so the average rate is `μ`.
    Column { mu: f64 },
    /// Cell `(i, j)` missing with a probability combining a row rate and a
    /// column rate; defined for `μ ∈ {0.1, 0.5, 0.9}` only.
    RowColumn { mu: f64 },
}

/// Layouts of the true coefficients. Positions beyond `p` are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BetaPattern {
    /// `β₁ = 10, β₁₁ = −9, β₂₁ = 8, …, β₉₁ = −1`.
    Spread,
    /// `β₁ = 10, β₂ = −9, …, β₁₀ = −1`.
    Head,
    /// `β₁ = 5, β₁₁ = −5, β₂₁ = 5, …, β₉₁ = −5`.
    Flat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub n: usize,
    pub p: usize,
    /// Rows of the complete test set.
    pub n_test: usize,
    pub seed: u64,
    pub cov: CovPattern,
    pub missing: MissingPattern,
    pub beta: BetaPattern,
    pub noise_var: f64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            n: 1000,
            p: 30,
            n_test: 1000,
            seed: 0,
            cov: CovPattern::Uniform { r: 0.5 },
            missing: MissingPattern::Column { mu: 0.5 },
            beta: BetaPattern::Spread,
            noise_var: 1.0,
        }
    }
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p < 1 || self.n_test < 1 {
            return Err(Error::invalid("size", format!("n={}, p={}, n_test={}", self.n, self.p, self.n_test)));
        }
        self.cov.validate(self.p)?;
        self.missing.validate()?;
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            return Err(Error::invalid("noise_var", format!("must be nonnegative, got {}", self.noise_var)));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if (0.0..1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must lie in [0, 1), got {v}")))
    }
}

impl CovPattern {
    pub fn validate(&self, p: usize) -> Result<()> {
        match *self {
            CovPattern::Uniform { r } | CovPattern::Autoregressive { r } => check_unit("r", r),
            CovPattern::Block { r, block_size } => {
                check_unit("r", r)?;
                if block_size == 0 || !p.is_multiple_of(block_size) {
                    return Err(Error::invalid(
                        "block_size",
                        format!("{block_size} must be positive and divide p = {p}"),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Recognized `μ` values for the row-column pattern.
pub const ROW_COLUMN_RATES: [f64; 3] = [0.1, 0.5, 0.9];

impl MissingPattern {
    pub fn mu(&self) -> f64 {
        match *self {
            MissingPattern::Random { mu } | MissingPattern::Column { mu } | MissingPattern::RowColumn { mu } => mu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("mu", self.mu())?;
        if let MissingPattern::RowColumn { mu } = *self {
            if !ROW_COLUMN_RATES.iter().any(|&r| (r - mu).abs() < 1e-12) {
                return Err(Error::invalid("mu", format!("row-column pattern supports 0.1, 0.5, 0.9; got {mu}")));
            }
        }
        Ok(())
    }
}

fn parse_f64(name: &'static str, s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::invalid(name, format!("not a number: {s:?}")))
}

fn split_kind(s: &str) -> (String, Vec<&str>) {
    let mut parts = s.trim().split(':');
    let kind = parts.next().unwrap_or("").trim().to_ascii_lowercase();
    (kind, parts.collect())
}

impl FromStr for CovPattern {
    type Err = Error;

    /// `uniform:R`, `ar:R`, `block:R:SIZE`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = split_kind(s);
        match (kind.as_str(), args.as_slice()) {
            ("uniform", [r]) => Ok(CovPattern::Uniform { r: parse_f64("r", r)? }),
            ("ar" | "autoregressive", [r]) => Ok(CovPattern::Autoregressive { r: parse_f64("r", r)? }),
            ("block", [r, size]) => Ok(CovPattern::Block {
                r: parse_f64("r", r)?,
                block_size: size
                    .trim()
                    .parse()
                    .map_err(|_| Error::invalid("block_size", format!("not an integer: {size:?}")))?,
            }),
            _ => Err(Error::invalid("cov", format!("expected uniform:R, ar:R or block:R:SIZE, got {s:?}"))),
        }
    }
}

impl fmt::Display for CovPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovPattern::Uniform { r } => write!(f, "uniform:{r}"),
            CovPattern::Autoregressive { r } => write!(f, "ar:{r}"),
            CovPattern::Block { r, block_size } => write!(f, "block:{r}:{block_size}"),
        }
    }
}

impl FromStr for MissingPattern {
    type Err = Error;

    /// `random:MU`, `column:MU`, `rowcolumn:MU`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = split_kind(s);
        let mu = match args.as_slice() {
            [mu] => parse_f64("mu", mu)?,
            _ => return Err(Error::invalid("missing", format!("expected KIND:MU, got {s:?}"))),
        };
        match kind.as_str() {
            "random" => Ok(MissingPattern::Random { mu }),
            "column" => Ok(MissingPattern::Column { mu }),
            "rowcolumn" | "row-column" | "row_column" => Ok(MissingPattern::RowColumn { mu }),
            _ => Err(Error::invalid("missing", format!("unknown pattern {kind:?}"))),
        }
    }
}

impl fmt::Display for MissingPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MissingPattern::Random { mu } => write!(f, "random:{mu}"),
            MissingPattern::Column { mu } => write!(f, "column:{mu}"),
            MissingPattern::RowColumn { mu } => write!(f, "rowcolumn:{mu}"),
        }
    }
}

impl FromStr for BetaPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spread" => Ok(BetaPattern::Spread),
            "head" => Ok(BetaPattern::Head),
            "flat" => Ok(BetaPattern::Flat),
            other => Err(Error::invalid("beta", format!("expected spread, head or flat, got {other:?}"))),
        }
    }
}

impl fmt::Display for BetaPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BetaPattern::Spread => "spread",
            BetaPattern::Head => "head",
            BetaPattern::Flat => "flat",
        })
    }
}
