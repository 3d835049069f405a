//! Tabular datasets: CSV ingestion, min-max scaling, random splits and folds.

use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    pub features: DMatrix<f64>,
    pub targets: DVector<f64>,
    /// Names of the feature columns, when the file had a header.
    pub column_names: Option<Vec<String>>,
    pub target_name: Option<String>,
}

impl TabularDataset {
    pub fn new(features: DMatrix<f64>, targets: DVector<f64>) -> Result<Self> {
        if features.nrows() < 2 {
            return Err(Error::Data(format!(
                "a dataset needs at least 2 rows, got {}",
                features.nrows()
            )));
        }
        if features.nrows() != targets.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} feature rows but {} targets",
                features.nrows(),
                targets.len()
            )));
        }
        if features
            .iter()
            .chain(targets.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Data("dataset contains non-finite values".into()));
        }
        Ok(Self {
            features,
            targets,
            column_names: None,
            target_name: None,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> TabularDataset {
        let features = self.features.select_rows(indices);
        let targets =
            DVector::from_iterator(indices.len(), indices.iter().map(|&i| self.targets[i]));
        TabularDataset {
            features,
            targets,
            column_names: self.column_names.clone(),
            target_name: self.target_name.clone(),
        }
    }
}

/// Which column of a CSV holds the target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetColumn {
    /// 0-based position.
    Index(usize),
    Name(String),
    Last,
}

impl FromStr for TargetColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.trim() {
            "last" | "" => TargetColumn::Last,
            s => match s.parse::<usize>() {
                Ok(i) => TargetColumn::Index(i),
                Err(_) => TargetColumn::Name(s.to_string()),
            },
        })
    }
}

/// Reads a numeric CSV. Every non-target column becomes a feature, in order.
///
/// Row and column numbers in errors are 1-based positions in the file.
pub fn load_csv(path: &Path, has_header: bool, target: &TargetColumn) -> Result<TabularDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;

    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;

    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = line + 1;
        if has_header && line == 0 {
            header = Some(record.iter().map(str::to_string).collect());
            width = Some(record.len());
            continue;
        }
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: row_no,
                column: record.len().min(expected) + 1,
                message: format!("expected {expected} fields, found {}", record.len()),
            });
        }
        let mut values = Vec::with_capacity(record.len());
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                row: row_no,
                column: col + 1,
                message: format!("non-numeric cell {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row: row_no,
                    column: col + 1,
                    message: format!("non-finite cell {cell:?}"),
                });
            }
            values.push(v);
        }
        rows.push(values);
    }

    let width = width.ok_or_else(|| Error::Data(format!("{}: no data rows", path.display())))?;
    if width < 2 {
        return Err(Error::Data(format!(
            "{}: need at least one feature column and a target column",
            path.display()
        )));
    }
    let target_idx = match target {
        TargetColumn::Last => width - 1,
        TargetColumn::Index(i) if *i < width => *i,
        TargetColumn::Index(i) => {
            return Err(Error::Data(format!(
                "{}: target column {i} out of range (file has {width} columns)",
                path.display()
            )))
        }
        TargetColumn::Name(name) => header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| {
                Error::Data(format!(
                    "{}: no target column named {name:?}",
                    path.display()
                ))
            })?,
    };

    let n = rows.len();
    let d = width - 1;
    let features = DMatrix::from_fn(n, d, |i, j| rows[i][if j < target_idx { j } else { j + 1 }]);
    let targets = DVector::from_iterator(n, rows.iter().map(|r| r[target_idx]));
    let mut data = TabularDataset::new(features, targets)?;
    if let Some(h) = header {
        data.target_name = Some(h[target_idx].clone());
        data.column_names = Some(
            h.into_iter()
                .enumerate()
                .filter(|(j, _)| *j != target_idx)
                .map(|(_, c)| c)
                .collect(),
        );
    }
    Ok(data)
}

/// Per-column (min, max) of a min-max scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxRecord {
    pub features: Vec<(f64, f64)>,
    pub target: (f64, f64),
}

fn column_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

#[inline]
fn scale(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.5
    }
}

#[inline]
fn unscale(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        lo + v * (hi - lo)
    } else {
        lo
    }
}

impl MinMaxRecord {
    pub fn fit(data: &TabularDataset) -> Self {
        let features = data
            .features
            .column_iter()
            .map(|c| column_range(c.iter().copied()))
            .collect();
        Self {
            features,
            target: column_range(data.targets.iter().copied()),
        }
    }

    pub fn transform_features(&self, features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if features.ncols() != self.features.len() {
            return Err(Error::DimensionMismatch(format!(
                "scaling record has {} feature columns, data has {}",
                self.features.len(),
                features.ncols()
            )));
        }
        Ok(DMatrix::from_fn(
            features.nrows(),
            features.ncols(),
            |i, j| scale(features[(i, j)], self.features[j]),
        ))
    }

    pub fn transform_targets(&self, targets: &DVector<f64>) -> DVector<f64> {
        targets.map(|t| scale(t, self.target))
    }

    pub fn inverse_features(&self, features: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(features.nrows(), features.ncols(), |i, j| {
            unscale(features[(i, j)], self.features[j])
        })
    }

    pub fn inverse_targets(&self, targets: &DVector<f64>) -> DVector<f64> {
        targets.map(|t| unscale(t, self.target))
    }

    pub fn apply(&self, data: &TabularDataset) -> Result<TabularDataset> {
        Ok(TabularDataset {
            features: self.transform_features(&data.features)?,
            targets: self.transform_targets(&data.targets),
            column_names: data.column_names.clone(),
            target_name: data.target_name.clone(),
        })
    }

    pub fn inverse(&self, data: &TabularDataset) -> TabularDataset {
        TabularDataset {
            features: self.inverse_features(&data.features),
            targets: self.inverse_targets(&data.targets),
            column_names: data.column_names.clone(),
            target_name: data.target_name.clone(),
        }
    }
}

/// Maps every feature and the target affinely onto [0, 1] using the column
/// min and max. Constant columns map to 0.5.
pub fn normalize_minmax(data: &TabularDataset) -> (TabularDataset, MinMaxRecord) {
    let record = MinMaxRecord::fit(data);
    let scaled = record.apply(data).expect("record fitted on the same data");
    (scaled, record)
}

/// Size of the training part of a split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainSize {
    Fraction(f64),
    Count(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: TrainSize,
    pub seed: u64,
    /// Cross-validation folds over the training part.
    pub folds: Option<usize>,
}

impl SplitSpec {
    pub fn train_count(&self, n: usize) -> Result<usize> {
        let count = match self.train {
            TrainSize::Fraction(f) => {
                if !(f > 0.0 && f < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "train fraction must lie in (0, 1), got {f}"
                    )));
                }
                (f * n as f64).round() as usize
            }
            TrainSize::Count(c) => c,
        };
        if count == 0 || count >= n {
            return Err(Error::Data(format!(
                "split of {n} rows leaves an empty part (train = {count})"
            )));
        }
        if let Some(folds) = self.folds {
            if folds < 2 || folds > count {
                return Err(Error::Data(format!(
                    "{folds} folds do not fit {count} training rows"
                )));
            }
        }
        Ok(count)
    }
}

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// Disjoint random train/test row indices, each sorted ascending.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let n_train = spec.train_count(n)?;
    let idx = shuffled(n, spec.seed);
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(data: &TabularDataset, spec: &SplitSpec) -> Result<(TabularDataset, TabularDataset)> {
    let (train, test) = split_indices(data.n_rows(), spec)?;
    Ok((data.select_rows(&train), data.select_rows(&test)))
}

/// Random k-fold partition of `0..n`: one `(train, validation)` pair per
/// fold, validation sizes differing by at most one.
pub fn kfold_indices(n: usize, folds: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if folds < 2 || n < folds {
        return Err(Error::InvalidParameter(format!(
            "k-fold needs 2 <= folds <= n, got folds = {folds}, n = {n}"
        )));
    }
    let idx = shuffled(n, seed);
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        let mut val = idx[start..start + size].to_vec();
        let mut train: Vec<usize> = idx[..start]
            .iter()
            .chain(&idx[start + size..])
            .copied()
            .collect();
        val.sort_unstable();
        train.sort_unstable();
        out.push((train, val));
        start += size;
    }
    Ok(out)
}
