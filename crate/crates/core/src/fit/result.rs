use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use crate::basis::{BlockLayout, ConstraintTransform, KnotVector};
use crate::error::{Error, Result};
use crate::links::LinkFamily;

/// Critical value for the Wald intervals.
pub const WALD_Z: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformJson {
    pub bstar: Vec<f64>,
    /// Row-major `p_j x (p_j - 1)`.
    pub q: Vec<Vec<f64>>,
}

impl From<&ConstraintTransform> for TransformJson {
    fn from(t: &ConstraintTransform) -> Self {
        Self {
            bstar: t.bstar.iter().copied().collect(),
            q: t.q
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        }
    }
}

impl TransformJson {
    pub fn to_transform(&self) -> Result<ConstraintTransform> {
        let rows = self.q.len();
        let cols = self.q.first().map_or(0, Vec::len);
        if rows != self.bstar.len() || self.q.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("malformed constraint transform".into()));
        }
        let flat: Vec<f64> = self.q.iter().flatten().copied().collect();
        Ok(ConstraintTransform {
            bstar: DVector::from_vec(self.bstar.clone()),
            q: DMatrix::from_row_slice(rows, cols, &flat),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Iterations {
    pub outer: usize,
    pub inner_total: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub inner_converged: bool,
    pub stalled_inner_loops: usize,
    pub ridge_used: bool,
    pub clamped_probabilities: usize,
    pub lambda_updates: usize,
    pub lambda_floor_hits: usize,
    pub lambda_cap_hits: usize,
    /// Penalized log-likelihood at the end of each inner loop.
    pub outer_trace: Vec<f64>,
}

/// A fitted model; serializes to the `fit.json` layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub link: LinkFamily,
    pub penalty_order: usize,
    pub z_names: Vec<String>,
    pub w_names: Vec<String>,
    pub n: usize,
    pub beta: Vec<f64>,
    pub se_beta: Vec<f64>,
    pub ci_beta: Vec<[f64; 2]>,
    pub cov_beta: Vec<Vec<f64>>,
    pub gamma: Vec<f64>,
    /// Reduced spline coefficients of each additive term.
    pub alpha: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    pub loglik: f64,
    pub penalized_loglik: f64,
    pub edf: f64,
    pub iterations: Iterations,
    pub converged: bool,
    /// `eta` knots first, then one per smooth covariate.
    pub knots: Vec<KnotVector>,
    pub constraint_transforms: Vec<TransformJson>,
    pub layout: BlockLayout,
    pub diagnostics: Diagnostics,
}

/// Curves of the fitted functions on evaluation grids.
#[derive(Debug, Clone, PartialEq)]
pub struct Curves {
    pub eta: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
    pub n_clamped: usize,
}

impl FitResult {
    pub fn theta(&self) -> Vec<f64> {
        let mut t = self.beta.clone();
        t.extend_from_slice(&self.gamma);
        for a in &self.alpha {
            t.extend_from_slice(a);
        }
        t
    }

    pub fn cov_beta_matrix(&self) -> DMatrix<f64> {
        let q = self.beta.len();
        DMatrix::from_fn(q, q, |i, j| self.cov_beta[i][j])
    }

    pub fn eta_knots(&self) -> &KnotVector {
        &self.knots[0]
    }

    pub fn smooth_knots(&self) -> &[KnotVector] {
        &self.knots[1..]
    }

    /// Raw-basis coefficients `Q_j alpha_j` of term `j`.
    pub fn phi_coefficients(&self, j: usize) -> Result<Vec<f64>> {
        Ok(self.constraint_transforms[j]
            .to_transform()?
            .expand(&self.alpha[j]))
    }

    pub fn eta_at(&self, t: f64) -> f64 {
        self.eta_knots().eval(&self.gamma, t)
    }

    pub fn phi_at(&self, j: usize, w: f64) -> Result<f64> {
        Ok(self.smooth_knots()[j].eval(&self.phi_coefficients(j)?, w))
    }

    /// Evaluates `eta` on `t_grid` and each `phi_j` on `w_grids[j]`;
    /// points outside the knot ranges are clamped and counted.
    pub fn evaluate_functions(&self, t_grid: &[f64], w_grids: &[Vec<f64>]) -> Result<Curves> {
        if w_grids.len() != self.alpha.len() {
            return Err(Error::Dimension(format!(
                "{} grids for {} smooth terms",
                w_grids.len(),
                self.alpha.len()
            )));
        }
        let mut n_clamped = 0;
        let eta_knots = self.eta_knots();
        let eta = t_grid
            .iter()
            .map(|&t| {
                n_clamped += (t < eta_knots.lo() || t > eta_knots.hi()) as usize;
                eta_knots.eval(&self.gamma, t)
            })
            .collect();
        let mut phi = Vec::with_capacity(w_grids.len());
        for (j, grid) in w_grids.iter().enumerate() {
            let coef = self.phi_coefficients(j)?;
            let knots = &self.smooth_knots()[j];
            phi.push(
                grid.iter()
                    .map(|&w| {
                        n_clamped += (w < knots.lo() || w > knots.hi()) as usize;
                        knots.eval(&coef, w)
                    })
                    .collect(),
            );
        }
        Ok(Curves {
            eta,
            phi,
            n_clamped,
        })
    }

    /// `Z'beta + eta(Y) + sum_j phi_j(W_j)` for each row of `data`.
    pub fn linear_predictor(&self, data: &Dataset) -> Result<Vec<f64>> {
        if data.q() != self.beta.len() || data.n_smooth() != self.alpha.len() {
            return Err(Error::Dimension(
                "dataset does not match the fitted model".into(),
            ));
        }
        let coefs: Vec<Vec<f64>> = (0..self.alpha.len())
            .map(|j| self.phi_coefficients(j))
            .collect::<Result<_>>()?;
        Ok((0..data.n())
            .map(|i| {
                let zb: f64 = data
                    .z
                    .row(i)
                    .iter()
                    .zip(&self.beta)
                    .map(|(z, b)| z * b)
                    .sum();
                let phis: f64 = coefs
                    .iter()
                    .enumerate()
                    .map(|(j, c)| self.smooth_knots()[j].eval(c, data.w[(i, j)]))
                    .sum();
                zb + self.eta_at(data.y[i]) + phis
            })
            .collect())
    }

    /// Fitted `F(Y_i | X_i)`.
    pub fn fitted_probabilities(&self, data: &Dataset) -> Result<Vec<f64>> {
        Ok(self
            .linear_predictor(data)?
            .into_iter()
            .map(|v| self.link.inv_link(v))
            .collect())
    }

    /// Whether `beta_k` lies inside its Wald interval's reach of `truth`.
    pub fn covers(&self, k: usize, truth: f64) -> bool {
        let [lo, hi] = self.ci_beta[k];
        lo <= truth && truth <= hi
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Table of estimates with standard errors and 95% Wald intervals.
    pub fn coefficients_csv(&self) -> String {
        let mut out = String::from("parameter,estimate,se,ci_lower,ci_upper\n");
        for (k, name) in self.z_names.iter().enumerate() {
            let [lo, hi] = self.ci_beta[k];
            out.push_str(&format!(
                "{name},{},{},{},{}\n",
                self.beta[k], self.se_beta[k], lo, hi
            ));
        }
        out
    }
}
