//! Observations, datasets, fold partitions and estimation results.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One row `(y, d, x)` of a sample selection dataset.
///
/// `y` is the observed outcome, i.e. the latent outcome times the selection
/// indicator, so it is always zero when `d` is false.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y: f64,
    pub d: bool,
    pub x: Vec<f64>,
}

impl Observation {
    #[inline]
    pub fn d_f64(&self) -> f64 {
        if self.d {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    observations: Vec<Observation>,
    dim_x: usize,
    column_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from already-validated observations.
    pub fn new(observations: Vec<Observation>, column_names: Vec<String>) -> Result<Self> {
        let dim_x = column_names.len();
        if dim_x == 0 {
            return Err(Error::invalid("dataset needs at least one covariate"));
        }
        for (i, obs) in observations.iter().enumerate() {
            if obs.x.len() != dim_x {
                return Err(Error::Schema {
                    row: i,
                    column: "x".into(),
                    message: format!("expected {dim_x} covariates, found {}", obs.x.len()),
                });
            }
            if let Some(k) = obs.x.iter().position(|v| !v.is_finite()) {
                return Err(Error::Schema {
                    row: i,
                    column: column_names[k].clone(),
                    message: "non-finite covariate".into(),
                });
            }
            if !obs.y.is_finite() {
                return Err(Error::Schema {
                    row: i,
                    column: "y".into(),
                    message: "non-finite outcome".into(),
                });
            }
            if !obs.d && obs.y != 0.0 {
                return Err(Error::Consistency { row: i, y: obs.y });
            }
        }
        Ok(Dataset {
            observations,
            dim_x,
            column_names,
        })
    }

    /// Default covariate names `x1..xK`.
    pub fn default_names(k: usize) -> Vec<String> {
        (1..=k).map(|i| format!("x{i}")).collect()
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn dim_x(&self) -> usize {
        self.dim_x
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn get(&self, i: usize) -> &Observation {
        &self.observations[i]
    }

    pub fn selection_rate(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.observations.iter().filter(|o| o.d).count() as f64 / self.len() as f64
    }

    /// Returns a copy with every outcome multiplied by `c`.
    pub fn scale_outcome(&self, c: f64) -> Dataset {
        let observations = self
            .observations
            .iter()
            .map(|o| Observation {
                y: o.y * c,
                d: o.d,
                x: o.x.clone(),
            })
            .collect();
        Dataset {
            observations,
            dim_x: self.dim_x,
            column_names: self.column_names.clone(),
        }
    }

    /// Writes the dataset in the `d,y,<covariates>` CSV layout.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        let mut header = vec!["d".to_string(), "y".to_string()];
        header.extend(self.column_names.iter().cloned());
        w.write_record(&header)?;
        for obs in &self.observations {
            let mut rec = Vec::with_capacity(2 + self.dim_x);
            rec.push(if obs.d { "1".to_string() } else { "0".to_string() });
            rec.push(format!("{}", obs.y));
            rec.extend(obs.x.iter().map(|v| format!("{v}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// How `validate_dataset` treats rows with `d = 0` and a nonzero outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IngestMode {
    Strict,
    #[default]
    Lenient,
}

/// A row as read from an external source, before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub d: f64,
    pub y: Option<f64>,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    /// Rows with `d = 0` whose outcome was missing or nonzero and was set to 0.
    pub coerced_outcomes: usize,
}

/// Validates raw rows and builds a dataset.
///
/// Missing outcomes are only accepted where `d = 0`. A nonzero outcome with
/// `d = 0` is an error in strict mode and is zeroed (and counted) in lenient
/// mode.
pub fn validate_dataset(
    rows: Vec<RawRow>,
    column_names: Vec<String>,
    mode: IngestMode,
) -> Result<(Dataset, IngestReport)> {
    if rows.is_empty() {
        return Err(Error::invalid("no rows to ingest"));
    }
    let k = column_names.len();
    let mut report = IngestReport::default();
    let mut observations = Vec::with_capacity(rows.len());
    for (i, row) in rows.into_iter().enumerate() {
        if row.x.len() != k {
            return Err(Error::Schema {
                row: i,
                column: "x".into(),
                message: format!("expected {k} covariates, found {}", row.x.len()),
            });
        }
        let d = if row.d == 0.0 {
            false
        } else if row.d == 1.0 {
            true
        } else {
            return Err(Error::Schema {
                row: i,
                column: "d".into(),
                message: format!("selection indicator must be 0 or 1, found {}", row.d),
            });
        };
        if let Some(j) = row.x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Schema {
                row: i,
                column: column_names[j].clone(),
                message: "non-finite covariate".into(),
            });
        }
        let y = match (d, row.y) {
            (true, None) => {
                return Err(Error::Schema {
                    row: i,
                    column: "y".into(),
                    message: "missing outcome for a selected row".into(),
                })
            }
            (true, Some(y)) if !y.is_finite() => {
                return Err(Error::Schema {
                    row: i,
                    column: "y".into(),
                    message: "non-finite outcome".into(),
                })
            }
            (true, Some(y)) => y,
            (false, None) => {
                report.coerced_outcomes += 1;
                0.0
            }
            (false, Some(y)) if y == 0.0 => 0.0,
            (false, Some(y)) => match mode {
                IngestMode::Strict => return Err(Error::Consistency { row: i, y }),
                IngestMode::Lenient => {
                    report.coerced_outcomes += 1;
                    0.0
                }
            },
        };
        observations.push(Observation { y, d, x: row.x });
    }
    Ok((Dataset::new(observations, column_names)?, report))
}

fn parse_cell(s: &str) -> Option<f64> {
    let t = s.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan") {
        None
    } else {
        t.parse().ok()
    }
}

/// Reads a CSV with a header row whose first two columns are `d` and `y`,
/// followed by the covariates in file order.
pub fn read_csv<R: Read>(reader: R, mode: IngestMode) -> Result<(Dataset, IngestReport)> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.len() < 3 {
        return Err(Error::Schema {
            row: 0,
            column: "header".into(),
            message: "need columns d, y and at least one covariate".into(),
        });
    }
    if header[0] != "d" || header[1] != "y" {
        return Err(Error::Schema {
            row: 0,
            column: "header".into(),
            message: format!("first two columns must be `d,y`, found `{},{}`", header[0], header[1]),
        });
    }
    let names: Vec<String> = header[2..].to_vec();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::Schema {
                row: i,
                column: "*".into(),
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let d = parse_cell(&rec[0]).ok_or_else(|| Error::Schema {
            row: i,
            column: "d".into(),
            message: format!("unparseable selection indicator `{}`", &rec[0]),
        })?;
        let y = parse_cell(&rec[1]);
        if y.is_none() && !rec[1].trim().is_empty() && !rec[1].trim().eq_ignore_ascii_case("na") && !rec[1].trim().eq_ignore_ascii_case("nan") {
            return Err(Error::Schema {
                row: i,
                column: "y".into(),
                message: format!("unparseable outcome `{}`", &rec[1]),
            });
        }
        let mut x = Vec::with_capacity(names.len());
        for (j, cell) in rec.iter().skip(2).enumerate() {
            let v = parse_cell(cell).ok_or_else(|| Error::Schema {
                row: i,
                column: names[j].clone(),
                message: format!("unparseable covariate `{cell}`"),
            })?;
            x.push(v);
        }
        rows.push(RawRow { d, y, x });
    }
    validate_dataset(rows, names, mode)
}

/// Disjoint index sets covering `0..n`, used for cross-fitting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPartition {
    folds: Vec<Vec<usize>>,
    fold_of: Vec<usize>,
}

impl FoldPartition {
    pub fn from_folds(folds: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut fold_of = vec![usize::MAX; n];
        for (l, fold) in folds.iter().enumerate() {
            if fold.is_empty() {
                return Err(Error::invalid(format!("fold {l} is empty")));
            }
            for &i in fold {
                if i >= n || fold_of[i] != usize::MAX {
                    return Err(Error::invalid(format!("index {i} out of range or repeated")));
                }
                fold_of[i] = l;
            }
        }
        if fold_of.iter().any(|&f| f == usize::MAX) {
            return Err(Error::invalid("folds do not cover every index"));
        }
        Ok(FoldPartition { folds, fold_of })
    }

    pub fn n(&self) -> usize {
        self.fold_of.len()
    }

    pub fn n_folds(&self) -> usize {
        self.folds.len()
    }

    pub fn fold(&self, l: usize) -> &[usize] {
        &self.folds[l]
    }

    pub fn folds(&self) -> &[Vec<usize>] {
        &self.folds
    }

    pub fn fold_of(&self, i: usize) -> usize {
        self.fold_of[i]
    }

    /// Indices outside every listed fold, ascending.
    pub fn complement(&self, excluded: &[usize]) -> Vec<usize> {
        (0..self.n()).filter(|&i| !excluded.contains(&self.fold_of[i])).collect()
    }
}

/// Uniformly random partition of `0..n` into `folds` groups whose sizes
/// differ by at most one. Each fold is returned sorted.
pub fn partition_folds<R: Rng + ?Sized>(n: usize, folds: usize, rng: &mut R) -> Result<FoldPartition> {
    if folds <= 1 || folds > n {
        return Err(Error::invalid(format!("fold count must satisfy 1 < L <= n, got L={folds}, n={n}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for l in 0..folds {
        let size = base + usize::from(l < extra);
        let mut f = idx[start..start + size].to_vec();
        f.sort_unstable();
        out.push(f);
        start += size;
    }
    FoldPartition::from_folds(out, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimatorTag {
    LocallyRobust,
    Robinson,
    RobinsonOrthogonal,
    RobinsonCrossfit,
}

impl EstimatorTag {
    /// Table column order.
    pub const ALL: [EstimatorTag; 4] = [
        EstimatorTag::LocallyRobust,
        EstimatorTag::Robinson,
        EstimatorTag::RobinsonOrthogonal,
        EstimatorTag::RobinsonCrossfit,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            EstimatorTag::LocallyRobust => "LR",
            EstimatorTag::Robinson => "Robinson",
            EstimatorTag::RobinsonOrthogonal => "Robinson+Orth",
            EstimatorTag::RobinsonCrossfit => "Robinson+CF",
        }
    }

    pub fn long_name(self) -> &'static str {
        match self {
            EstimatorTag::LocallyRobust => "Locally Robust",
            EstimatorTag::Robinson => "Robinson",
            EstimatorTag::RobinsonOrthogonal => "Robinson with Orthogonalization",
            EstimatorTag::RobinsonCrossfit => "Robinson with Cross-fitting",
        }
    }

    pub fn from_short_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.short_name() == s)
    }
}

impl std::fmt::Display for EstimatorTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.short_name())
    }
}

/// Point estimate, sandwich covariance and fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub standard_errors: Vec<f64>,
    pub estimator_tag: EstimatorTag,
    pub diagnostics: BTreeMap<String, f64>,
}

impl FitResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
