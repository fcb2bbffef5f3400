//! Incomplete datasets: ingestion, centering and the zero-filled view.
//!
//! A dataset holds an `n × p` predictor matrix whose missing cells are
//! tracked by a boolean mask, plus a fully observed response. Missing cells
//! store `NaN` internally and are never read by any arithmetic: every
//! accessor consults the mask first.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Tokens treated as missing when none are configured.
pub const DEFAULT_MISSING_TOKENS: [&str; 3] = ["NA", "NaN", ""];

/// Shifts (and optional scales) applied by [`IncompleteDataset::center`].
///
/// Kept so that coefficients fitted on centered data can be mapped back to
/// the original scale together with an intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct Centering {
    pub column_means: DVector<f64>,
    pub response_mean: f64,
    /// Per-column observed standard deviations when standardization was
    /// requested.
    pub column_scales: Option<DVector<f64>>,
}

impl Centering {
    /// Maps centered-scale coefficients to the original scale and returns
    /// `(intercept, beta)` with `intercept = ȳ − x̄ᵀβ`.
    pub fn to_original(&self, beta: &DVector<f64>) -> (f64, DVector<f64>) {
        let beta = match &self.column_scales {
            Some(scales) => beta.component_div(scales),
            None => beta.clone(),
        };
        let intercept = self.response_mean - self.column_means.dot(&beta);
        (intercept, beta)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CenterOptions {
    /// Divide each column by its observed-entry standard deviation.
    pub standardize: bool,
}

/// Numeric predictors with an observation mask and a complete response.
#[derive(Debug, Clone)]
pub struct IncompleteDataset {
    values: DMatrix<f64>,
    mask: DMatrix<bool>,
    response: DVector<f64>,
    column_names: Option<Vec<String>>,
    centering: Option<Centering>,
}

/// `Z = M ⊙ X` for a centered dataset: observed cells keep their centered
/// value, missing cells become zero (mean imputation).
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroFilledView {
    pub z: DMatrix<f64>,
}

impl IncompleteDataset {
    /// Builds a dataset from a value matrix and mask. Values under a `false`
    /// mask cell are ignored and replaced by the internal sentinel.
    pub fn new(values: DMatrix<f64>, mask: DMatrix<bool>, response: DVector<f64>) -> Result<Self> {
        if values.shape() != mask.shape() {
            return Err(Error::Dimension(format!(
                "values {:?} vs mask {:?}",
                values.shape(),
                mask.shape()
            )));
        }
        if response.len() != values.nrows() {
            return Err(Error::Dimension(format!(
                "response length {} vs {} rows",
                response.len(),
                values.nrows()
            )));
        }
        if let Some(i) = response.iter().position(|v| !v.is_finite()) {
            return Err(Error::MissingResponse { row: i + 1 });
        }
        let mut values = values;
        for (v, &m) in values.iter_mut().zip(mask.iter()) {
            if !m {
                *v = f64::NAN;
            } else if !v.is_finite() {
                return Err(Error::NonFinite("observed predictor value".into()));
            }
        }
        Ok(Self {
            values,
            mask,
            response,
            column_names: None,
            centering: None,
        })
    }

    /// Builds a dataset from a matrix where `NaN` marks a missing cell.
    pub fn from_nan_matrix(values: DMatrix<f64>, response: DVector<f64>) -> Result<Self> {
        let mask = values.map(|v| !v.is_nan());
        Self::new(values, mask, response)
    }

    /// Builds a fully observed dataset.
    pub fn complete(values: DMatrix<f64>, response: DVector<f64>) -> Result<Self> {
        let mask = DMatrix::from_element(values.nrows(), values.ncols(), true);
        Self::new(values, mask, response)
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Self {
        debug_assert_eq!(names.len(), self.n_cols());
        self.column_names = Some(names);
        self
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn mask(&self) -> &DMatrix<bool> {
        &self.mask
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.response
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    pub fn column_name(&self, j: usize) -> Option<&str> {
        self.column_names.as_ref().map(|n| n[j].as_str())
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.mask[(i, j)]
    }

    /// Value at `(i, j)`, or `None` when the cell is missing.
    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        self.mask[(i, j)].then(|| self.values[(i, j)])
    }

    pub fn centering(&self) -> Option<&Centering> {
        self.centering.as_ref()
    }

    pub fn is_centered(&self) -> bool {
        self.centering.is_some()
    }

    /// Number of observed entries in each column.
    pub fn observed_counts(&self) -> Vec<usize> {
        self.mask
            .column_iter()
            .map(|c| c.iter().filter(|&&m| m).count())
            .collect()
    }

    pub fn missing_fraction(&self) -> f64 {
        let missing = self.mask.iter().filter(|&&m| !m).count();
        missing as f64 / self.mask.len().max(1) as f64
    }

    /// Per-column mean over observed entries; `None` for a fully missing
    /// column.
    pub fn observed_means(&self) -> Vec<Option<f64>> {
        (0..self.n_cols())
            .map(|j| {
                let (sum, count) = self.observed_column(j).fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
                (count > 0).then(|| sum / count as f64)
            })
            .collect()
    }

    fn observed_column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_rows())
            .filter(move |&i| self.mask[(i, j)])
            .map(move |i| self.values[(i, j)])
    }

    fn missing_column_error(&self, j: usize) -> Error {
        Error::FullyMissingColumn {
            index: j,
            name: self.column_name(j).map(str::to_owned),
        }
    }

    /// Centers observed entries by their per-column observed mean and the
    /// response by its mean.
    pub fn center(&self) -> Result<Self> {
        self.center_with_options(CenterOptions::default())
    }

    pub fn center_with_options(&self, options: CenterOptions) -> Result<Self> {
        let p = self.n_cols();
        let mut means = DVector::zeros(p);
        for (j, m) in self.observed_means().into_iter().enumerate() {
            means[j] = m.ok_or_else(|| self.missing_column_error(j))?;
        }
        let y_mean = self.response.mean();
        let scales = if options.standardize {
            let mut scales = DVector::zeros(p);
            for j in 0..p {
                let (ss, count) = self
                    .observed_column(j)
                    .fold((0.0, 0usize), |(s, c), v| (s + (v - means[j]).powi(2), c + 1));
                let sd = (ss / count as f64).sqrt();
                scales[j] = if sd > 0.0 { sd } else { 1.0 };
            }
            Some(scales)
        } else {
            None
        };
        let shift = Centering {
            column_means: means,
            response_mean: y_mean,
            column_scales: scales,
        };
        let mut out = self.apply_shift(&shift);
        out.centering = Some(compose(self.centering.as_ref(), shift));
        Ok(out)
    }

    /// Expresses this dataset relative to a reference centering (for example
    /// a validation fold relative to its training fold). Observed column means
    /// of the result are generally not zero.
    pub fn center_with(&self, reference: &Centering) -> Result<Self> {
        if reference.column_means.len() != self.n_cols() {
            return Err(Error::Dimension(format!(
                "centering has {} columns, dataset has {}",
                reference.column_means.len(),
                self.n_cols()
            )));
        }
        let mut out = self.apply_shift(reference);
        out.centering = Some(compose(self.centering.as_ref(), reference.clone()));
        Ok(out)
    }

    fn apply_shift(&self, shift: &Centering) -> Self {
        let mut values = self.values.clone();
        for j in 0..self.n_cols() {
            let scale = shift.column_scales.as_ref().map_or(1.0, |s| s[j]);
            for i in 0..self.n_rows() {
                if self.mask[(i, j)] {
                    values[(i, j)] = (values[(i, j)] - shift.column_means[j]) / scale;
                }
            }
        }
        let response = self.response.add_scalar(-shift.response_mean);
        Self {
            values,
            mask: self.mask.clone(),
            response,
            column_names: self.column_names.clone(),
            centering: None,
        }
    }

    /// Raw values with every missing cell replaced by `fill`.
    pub fn filled(&self, fill: f64) -> DMatrix<f64> {
        self.values.zip_map(&self.mask, |v, m| if m { v } else { fill })
    }

    /// `M ⊙ X` on centered data.
    pub fn zero_fill(&self) -> Result<ZeroFilledView> {
        if !self.is_centered() {
            return Err(Error::NotCentered);
        }
        Ok(ZeroFilledView {
            z: self.values.zip_map(&self.mask, |v, m| if m { v } else { 0.0 }),
        })
    }

    /// Row subset, keeping centering metadata.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let values = self.values.select_rows(rows);
        let mask = self.mask.select_rows(rows);
        let response = self.response.select_rows(rows);
        Self {
            values,
            mask,
            response,
            column_names: self.column_names.clone(),
            centering: self.centering.clone(),
        }
    }

    /// Column subset of an uncentered dataset.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let centering = self.centering.as_ref().map(|c| Centering {
            column_means: c.column_means.select_rows(cols),
            response_mean: c.response_mean,
            column_scales: c.column_scales.as_ref().map(|s| s.select_rows(cols)),
        });
        Self {
            values: self.values.select_columns(cols),
            mask: self.mask.select_columns(cols),
            response: self.response.clone(),
            column_names: self
                .column_names
                .as_ref()
                .map(|n| cols.iter().map(|&j| n[j].clone()).collect()),
            centering,
        }
    }

    /// Writes the (possibly centered) predictors and response as CSV, with
    /// missing cells written as `NA`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.n_cols())
            .map(|j| self.column_name(j).map_or_else(|| format!("x{}", j + 1), str::to_owned))
            .collect();
        header.push("y".into());
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut row: Vec<String> = (0..self.n_cols())
                .map(|j| self.value(i, j).map_or_else(|| "NA".into(), crate::export::fmt_f64))
                .collect();
            row.push(crate::export::fmt_f64(self.response[i]));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<csv>".into(),
            source: e,
        })?;
        Ok(())
    }
}

fn compose(prev: Option<&Centering>, next: Centering) -> Centering {
    let Some(prev) = prev else { return next };
    // x_new = ((x - m1) / s1 - m2) / s2  =>  mean m1 + s1 m2, scale s1 s2
    let s1 = prev.column_scales.clone();
    let means = match &s1 {
        Some(s1) => &prev.column_means + next.column_means.component_mul(s1),
        None => &prev.column_means + &next.column_means,
    };
    let scales = match (s1, next.column_scales) {
        (Some(a), Some(b)) => Some(a.component_mul(&b)),
        (Some(a), None) | (None, Some(a)) => Some(a),
        (None, None) => None,
    };
    Centering {
        column_means: means,
        response_mean: prev.response_mean + next.response_mean,
        column_scales: scales,
    }
}

/// Which column of a CSV file holds the response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseColumn {
    Name(String),
    /// 0-based field index.
    Index(usize),
    /// Every field is a predictor; the response is set to zero.
    None,
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub has_header: bool,
    pub response: ResponseColumn,
    pub missing_tokens: HashSet<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            has_header: true,
            response: ResponseColumn::Index(0),
            missing_tokens: DEFAULT_MISSING_TOKENS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Reads a CSV file into an uncentered dataset.
pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<IncompleteDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, options)
}

pub fn read_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<IncompleteDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = rdr.records();
    let mut line = 0usize;
    let mut header: Option<Vec<String>> = None;
    if options.has_header {
        match records.next() {
            Some(rec) => {
                line += 1;
                header = Some(rec?.iter().map(str::to_owned).collect());
            }
            None => return Err(Error::TooSmall("empty file".into())),
        }
    }

    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    let mut width = header.as_ref().map(Vec::len);
    for rec in records {
        line += 1;
        let rec = rec?;
        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(Error::Arity {
                row: line,
                expected,
                found: rec.len(),
            });
        }
        let mut row = Vec::with_capacity(rec.len());
        for (k, tok) in rec.iter().enumerate() {
            if options.missing_tokens.contains(tok) {
                row.push(None);
            } else {
                let v: f64 = tok.parse().map_err(|_| Error::Parse {
                    row: line,
                    column: k + 1,
                    token: tok.to_owned(),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row: line,
                        column: k + 1,
                        token: tok.to_owned(),
                    });
                }
                row.push(Some(v));
            }
        }
        rows.push(row);
    }

    let width = width.unwrap_or(0);
    let response_idx = match &options.response {
        ResponseColumn::Index(k) => Some(*k),
        ResponseColumn::Name(name) => Some(
            header
                .as_ref()
                .and_then(|h| h.iter().position(|c| c == name))
                .ok_or_else(|| Error::UnknownResponse(name.clone()))?,
        ),
        ResponseColumn::None => None,
    };
    if let Some(k) = response_idx.filter(|&k| k >= width) {
        return Err(Error::UnknownResponse(format!("index {k}")));
    }
    let n = rows.len();
    let p = width - usize::from(response_idx.is_some());
    if n < 2 {
        return Err(Error::TooSmall(format!("{n} data rows, need at least 2")));
    }
    if p < 1 {
        return Err(Error::TooSmall("no predictor columns".into()));
    }

    let first_data_line = usize::from(options.has_header) + 1;
    let mut values = DMatrix::from_element(n, p, f64::NAN);
    let mut mask = DMatrix::from_element(n, p, false);
    let mut response = DVector::zeros(n);
    for (i, row) in rows.iter().enumerate() {
        let mut j = 0;
        for (k, cell) in row.iter().enumerate() {
            if Some(k) == response_idx {
                response[i] = cell.ok_or(Error::MissingResponse {
                    row: first_data_line + i,
                })?;
                continue;
            }
            if let Some(v) = cell {
                values[(i, j)] = *v;
                mask[(i, j)] = true;
            }
            j += 1;
        }
    }

    let names = match header {
        Some(h) => h
            .into_iter()
            .enumerate()
            .filter(|(k, _)| Some(*k) != response_idx)
            .map(|(_, n)| n)
            .collect(),
        None => (0..width).filter(|&k| Some(k) != response_idx).map(|k| format!("x{}", k + 1)).collect(),
    };
    Ok(IncompleteDataset::new(values, mask, response)?.with_column_names(names))
}
