//! Samples, datasets, fold splitting and the dataset CSV format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub response: f64,
}

impl Sample {
    pub fn new(features: Vec<f64>, response: f64) -> Self {
        Self { features, response }
    }
}

/// An ordered, non-empty collection of samples sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    d: usize,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, d: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput(
                "dataset must contain at least one sample".into(),
            ));
        }
        if d == 0 {
            return Err(Error::InvalidInput(
                "dataset dimension must be at least 1".into(),
            ));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != d {
                return Err(Error::InvalidInput(format!(
                    "sample {i} has {} features, expected {d}",
                    s.features.len()
                )));
            }
            if !s.response.is_finite() || s.features.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "sample {i} has a non-finite entry"
                )));
            }
        }
        Ok(Self { samples, d })
    }

    /// Infers `d` from the first sample.
    pub fn from_samples(samples: Vec<Sample>) -> Result<Self> {
        let d = samples.first().map(|s| s.features.len()).unwrap_or(0);
        Self::new(samples, d)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn responses(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.response).collect()
    }

    /// Linear predictions `x_i^T beta` for every sample.
    pub fn predict(&self, beta: &[f64]) -> Vec<f64> {
        self.samples
            .iter()
            .map(|s| crate::vector::dot(&s.features, beta))
            .collect()
    }
}

/// Size of every fold when `n` samples are split into `folds` parts.
pub fn fold_size(n: usize, folds: usize) -> Result<usize> {
    if folds == 0 {
        return Err(Error::InvalidConfig(
            "number of folds must be at least 1".into(),
        ));
    }
    if folds > n {
        return Err(Error::InvalidConfig(format!(
            "cannot split {n} samples into {folds} folds"
        )));
    }
    Ok(n / folds)
}

/// Splits into `folds` disjoint, equally sized, order-preserving folds.
/// The trailing `n mod folds` samples are dropped.
pub fn split_folds(ds: &Dataset, folds: usize) -> Result<Vec<Dataset>> {
    let m = fold_size(ds.n(), folds)?;
    Ok(ds
        .samples
        .chunks_exact(m)
        .take(folds)
        .map(|chunk| Dataset {
            samples: chunk.to_vec(),
            d: ds.d,
        })
        .collect())
}

/// A dataset read from CSV together with its column names.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub dataset: Dataset,
    pub feature_names: Vec<String>,
    pub response_name: String,
}

/// Writes the `x1..xd,y` CSV layout. Values use the shortest representation
/// that parses back to the same `f64`.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(csv_io)?;
    let mut header: Vec<String> = (1..=ds.d).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    w.write_record(&header).map_err(csv_io)?;
    let mut row = Vec::with_capacity(ds.d + 1);
    for s in &ds.samples {
        row.clear();
        row.extend(s.features.iter().map(|v| v.to_string()));
        row.push(s.response.to_string());
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            detail: format!("{other:?}"),
        },
    }
}

/// Reads a CSV with one header row. `response_col` names the response
/// column; every other column is a feature.
pub fn read_csv(path: impl AsRef<Path>, response_col: &str) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())
        .map_err(csv_io)?;
    let headers = rdr.headers().map_err(csv_io)?.clone();
    let response_idx = headers
        .iter()
        .position(|h| h.trim() == response_col)
        .ok_or_else(|| Error::Parse {
            line: 1,
            detail: format!("response column '{response_col}' not found in header"),
        })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != response_idx)
        .map(|(_, h)| h.trim().to_string())
        .collect();
    let d = feature_names.len();
    if d == 0 {
        return Err(Error::Parse {
            line: 1,
            detail: "no feature columns".into(),
        });
    }

    let mut samples = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_io)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let mut features = Vec::with_capacity(d);
        let mut response = f64::NAN;
        for (i, field) in record.iter().enumerate() {
            let field = field.trim();
            if field.is_empty() {
                return Err(Error::Parse {
                    line,
                    detail: format!("missing value in column '{}'", &headers[i]),
                });
            }
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                detail: format!("cannot parse '{field}' in column '{}'", &headers[i]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    detail: format!("non-finite value in column '{}'", &headers[i]),
                });
            }
            if i == response_idx {
                response = v;
            } else {
                features.push(v);
            }
        }
        samples.push(Sample::new(features, response));
    }
    if samples.is_empty() {
        return Err(Error::Parse {
            line: 2,
            detail: "no data rows".into(),
        });
    }
    Ok(LabeledDataset {
        dataset: Dataset::new(samples, d)?,
        feature_names,
        response_name: response_col.to_string(),
    })
}
