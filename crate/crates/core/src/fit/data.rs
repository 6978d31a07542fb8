use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Current-status observations `(Y_i, Delta_i, Z_i, W_i)`.
///
/// `delta[i]` is true when the failure happened before the observation
/// time (left-censored).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: Vec<f64>,
    pub delta: Vec<bool>,
    pub z: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub z_names: Vec<String>,
    pub w_names: Vec<String>,
}

impl Dataset {
    pub fn new(y: Vec<f64>, delta: Vec<bool>, z: DMatrix<f64>, w: DMatrix<f64>) -> Result<Self> {
        let z_names = (1..=z.ncols()).map(|k| format!("z{k}")).collect();
        let w_names = (1..=w.ncols()).map(|k| format!("w{k}")).collect();
        Self::with_names(y, delta, z, w, z_names, w_names)
    }

    pub fn with_names(
        y: Vec<f64>,
        delta: Vec<bool>,
        z: DMatrix<f64>,
        w: DMatrix<f64>,
        z_names: Vec<String>,
        w_names: Vec<String>,
    ) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty dataset".into()));
        }
        if delta.len() != n || z.nrows() != n || w.nrows() != n {
            return Err(Error::Dimension(format!(
                "row counts disagree: y {n}, delta {}, Z {}, W {}",
                delta.len(),
                z.nrows(),
                w.nrows()
            )));
        }
        if z_names.len() != z.ncols() || w_names.len() != w.ncols() {
            return Err(Error::Dimension(
                "column names do not match the covariates".into(),
            ));
        }
        if let Some(i) = y.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "observation time at row {i} must be positive and finite, got {}",
                y[i]
            )));
        }
        if z.iter().chain(w.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite covariate value".into()));
        }
        Ok(Self {
            y,
            delta,
            z,
            w,
            z_names,
            w_names,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn q(&self) -> usize {
        self.z.ncols()
    }

    pub fn n_smooth(&self) -> usize {
        self.w.ncols()
    }

    pub fn w_column(&self, j: usize) -> Vec<f64> {
        self.w.column(j).iter().copied().collect()
    }

    /// Fraction of observations with `delta = 0`.
    pub fn right_censoring_rate(&self) -> f64 {
        self.delta.iter().filter(|d| !**d).count() as f64 / self.n() as f64
    }

    /// Dataset made of the given rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            y: rows.iter().map(|&i| self.y[i]).collect(),
            delta: rows.iter().map(|&i| self.delta[i]).collect(),
            z: self.z.select_rows(rows),
            w: self.w.select_rows(rows),
            z_names: self.z_names.clone(),
            w_names: self.w_names.clone(),
        }
    }
}
