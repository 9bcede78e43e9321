use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Per-coordinate standard deviation of the synthetic KL-experiment inputs.
pub const KL_INPUT_STD: f64 = 1.0 / 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Gaussian,
    Matern12,
    Matern32,
    Matern52,
}

impl KernelFamily {
    pub fn is_gaussian(self) -> bool {
        self == KernelFamily::Gaussian
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "gaussian" | "rbf" | "se" => Ok(KernelFamily::Gaussian),
            "matern12" | "matern_12" | "matern_1_2" | "matern1/2" => Ok(KernelFamily::Matern12),
            "matern32" | "matern_32" | "matern_3_2" | "matern3/2" => Ok(KernelFamily::Matern32),
            "matern52" | "matern_52" | "matern_5_2" | "matern5/2" => Ok(KernelFamily::Matern52),
            other => Err(Error::Usage(format!("unknown kernel family '{other}'"))),
        }
    }
}

/// `N × D` inputs for the KL experiments.
///
/// Gaussian kernels get `N(0, (1/16)²)` coordinates; Matérn kernels get
/// `U(-√3/16, √3/16)`, which has the same variance. Rows are drawn in order, so
/// the first `n` rows do not depend on `N`.
pub fn generate_fig1_data(dim: usize, n: usize, family: KernelFamily, seed: u64) -> DMatrix<f64> {
    let mut rng = stream_rng(seed, Stream::Data, dim as u32);
    let h = 3f64.sqrt() * KL_INPUT_STD;
    let draws: Vec<f64> = (0..n * dim)
        .map(|_| match family {
            KernelFamily::Gaussian => KL_INPUT_STD * Distribution::<f64>::sample(&StandardNormal, &mut rng),
            _ => rng.random_range(-h..h),
        })
        .collect();
    DMatrix::from_row_slice(n, dim, &draws)
}

/// Smooth target used by the synthetic regression benchmark.
pub fn synthetic_target(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let a: f64 = x.iter().sum::<f64>() / d.sqrt();
    let b: f64 = x.iter().enumerate().map(|(j, v)| if j % 2 == 0 { *v } else { -*v }).sum::<f64>() / d.sqrt();
    (1.5 * a).sin() + 0.5 * (b * b) / (1.0 + 0.25 * b * b) + 0.3 * (a * b).cos()
}

/// Standard normal inputs and `synthetic_target` responses with Gaussian noise.
pub fn synthetic_regression(n: usize, dim: usize, noise_std: f64, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
    let mut rng = stream_rng(seed, Stream::Data, 0);
    let draws: Vec<f64> = (0..n * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let x = DMatrix::from_row_slice(n, dim, &draws);
    let mut noise = stream_rng(seed, Stream::Noise, 0);
    let y = DVector::from_fn(n, |i, _| {
        let row: Vec<f64> = x.row(i).iter().copied().collect();
        synthetic_target(&row) + noise_std * Distribution::<f64>::sample(&StandardNormal, &mut noise)
    });
    (x, y)
}

/// Shuffled `(train, test)` row indices; the test part holds `round(n · test_fraction)` rows.
pub fn train_test_split(n: usize, test_fraction: f64, seed: u64, split: u32) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!("test fraction must lie in (0, 1), got {test_fraction}")));
    }
    let n_test = ((n as f64) * test_fraction).round() as usize;
    if n_test == 0 || n_test >= n {
        return Err(Error::invalid(format!("cannot split {n} rows with test fraction {test_fraction}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream_rng(seed, Stream::Split, split));
    let test = idx.split_off(n - n_test);
    Ok((idx, test))
}

pub fn select_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

pub fn select_entries(y: &DVector<f64>, rows: &[usize]) -> DVector<f64> {
    DVector::from_fn(rows.len(), |i, _| y[rows[i]])
}

/// Feature matrix, target vector and feature column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub feature_names: Vec<String>,
    pub target_name: String,
}

pub fn load_csv(path: &Path, target_column: Option<&str>) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::Data {
        message: format!("cannot open {}: {e}", path.display()),
        line: None,
        column: None,
    })?;
    read_csv(file, target_column)
}

/// Parses a header-row CSV of numbers. The target defaults to the last column.
pub fn read_csv<R: Read>(reader: R, target_column: Option<&str>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(&e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(Error::data("empty file: no header row"));
    }
    let target = match target_column {
        Some(name) => headers.iter().position(|h| h == name).ok_or_else(|| Error::Data {
            message: format!("target column '{name}' not found in header"),
            line: Some(1),
            column: Some(name.to_string()),
        })?,
        None => headers.len() - 1,
    };
    if headers.len() < 2 {
        return Err(Error::data("need at least one feature column besides the target"));
    }
    let mut features = Vec::new();
    let mut targets = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(&e))?;
        let line = rec.position().map(|p| p.line());
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Data {
                message: format!("non-numeric value '{field}'"),
                line,
                column: Some(headers[j].clone()),
            })?;
            if !v.is_finite() {
                return Err(Error::Data {
                    message: format!("non-finite value '{field}'"),
                    line,
                    column: Some(headers[j].clone()),
                });
            }
            if j == target {
                targets.push(v);
            } else {
                features.push(v);
            }
        }
    }
    if targets.is_empty() {
        return Err(Error::Data {
            message: "no data rows".into(),
            line: Some(1),
            column: None,
        });
    }
    let d = headers.len() - 1;
    Ok(Dataset {
        x: DMatrix::from_row_slice(targets.len(), d, &features),
        y: DVector::from_vec(targets),
        feature_names: headers.iter().enumerate().filter(|(j, _)| *j != target).map(|(_, h)| h.clone()).collect(),
        target_name: headers[target].clone(),
    })
}

fn csv_error(e: &csv::Error) -> Error {
    let line = e.position().map(|p| p.line());
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("ragged row: expected {expected_len} fields, found {len}")
        }
        _ => e.to_string(),
    };
    Error::Data {
        message,
        line,
        column: None,
    }
}
