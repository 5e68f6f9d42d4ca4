//! Least-squares extrapolation of convergence tables.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Condition number above which a fit is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Basis functions for fitting a sequence indexed by the level `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// `L + b·ln m / m + c / m`
    LogOverLevel,
    /// `L + a_1/m + ... + a_k/m^k`
    InversePowers(usize),
    /// `v·m^{d+1}/(d+1)! + b·m^d ln m + c·m^d`
    EulerCharacteristic { dim: usize },
}

impl Model {
    pub fn basis(&self, m: f64) -> Vec<f64> {
        match *self {
            Model::LogOverLevel => vec![1.0, m.ln() / m, 1.0 / m],
            Model::InversePowers(k) => (0..=k).map(|i| m.powi(-(i as i32))).collect(),
            Model::EulerCharacteristic { dim } => {
                let d = dim as i32;
                let fact: f64 = (1..=dim + 1).map(|i| i as f64).product();
                vec![m.powi(d + 1) / fact, m.powi(d) * m.ln(), m.powi(d)]
            }
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Model::LogOverLevel => "L + b ln(m)/m + c/m".into(),
            Model::InversePowers(k) => format!("L + sum_(i<={k}) a_i m^-i"),
            Model::EulerCharacteristic { dim } => {
                format!(
                    "v m^{}/{}! + b m^{} ln m + c m^{}",
                    dim + 1,
                    dim + 1,
                    dim,
                    dim
                )
            }
        }
    }

    pub fn parameters(&self) -> usize {
        self.basis(2.0).len()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub m: f64,
    pub value: f64,
    pub model_fit: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Fit {
    pub model: String,
    /// Coefficients in the order of [`Model::basis`]; the first is the limit
    /// or leading coefficient.
    pub coefficients: Vec<f64>,
    pub condition: f64,
    pub rms_residual: f64,
    pub table: Vec<TableRow>,
}

impl Fit {
    pub fn leading(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.table
            .iter()
            .map(|r| r.residual.abs())
            .fold(0.0, f64::max)
    }
}

/// Ordinary least squares on column-equilibrated data via SVD.
pub fn least_squares(design: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let rows = design.len();
    let cols = design.first().map_or(0, Vec::len);
    if rows < cols || cols == 0 {
        return Err(Error::Precondition(format!(
            "need at least {cols} points for a {cols}-parameter fit, got {rows}"
        )));
    }
    let mut a = DMatrix::from_fn(rows, cols, |i, j| design[i][j]);
    let scales: Vec<f64> = (0..cols)
        .map(|j| {
            let n = a.column(j).norm();
            if n > 0.0 {
                n
            } else {
                1.0
            }
        })
        .collect();
    for (j, s) in scales.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if !(condition < MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let b = DVector::from_column_slice(y);
    let x = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::Precondition(format!("least squares failed: {e}")))?;
    Ok(((0..cols).map(|j| x[j] / scales[j]).collect(), condition))
}

/// Fits `values[i] ≈ model(levels[i])`.
pub fn fit(model: Model, levels: &[f64], values: &[f64]) -> Result<Fit> {
    if levels.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: levels.len(),
            found: values.len(),
        });
    }
    let design: Vec<Vec<f64>> = levels.iter().map(|&m| model.basis(m)).collect();
    let (coefficients, condition) = least_squares(&design, values)?;
    let table: Vec<TableRow> = levels
        .iter()
        .zip(values)
        .zip(&design)
        .map(|((&m, &value), row)| {
            let model_fit: f64 = row.iter().zip(&coefficients).map(|(b, c)| b * c).sum();
            TableRow {
                m,
                value,
                model_fit,
                residual: value - model_fit,
            }
        })
        .collect();
    let rms_residual =
        (table.iter().map(|r| r.residual * r.residual).sum::<f64>() / table.len() as f64).sqrt();
    Ok(Fit {
        model: model.name(),
        coefficients,
        condition,
        rms_residual,
        table,
    })
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}
