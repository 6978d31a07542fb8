//! Log-likelihood, score and expected information of the spline model.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::links::LinkFamily;

/// Design, responses and link; everything the likelihood depends on
/// besides `theta` and the penalty.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub x: &'a DMatrix<f64>,
    pub delta: &'a [bool],
    pub link: LinkFamily,
}

/// Per-observation quantities at one `theta`.
#[derive(Debug, Clone)]
pub struct Working {
    pub eta: DVector<f64>,
    /// `(Delta_i - pi_i) G' / (pi_i (1 - pi_i))`, the product `Omega Delta(theta)`.
    pub score: DVector<f64>,
    /// `G'^2 / (pi_i (1 - pi_i))`.
    pub weight: DVector<f64>,
    pub loglik: f64,
    pub n_clamped: usize,
}

impl<'a> Problem<'a> {
    pub fn new(x: &'a DMatrix<f64>, delta: &'a [bool], link: LinkFamily) -> Result<Self> {
        if x.nrows() != delta.len() {
            return Err(Error::Dimension(format!(
                "design has {} rows but {} responses",
                x.nrows(),
                delta.len()
            )));
        }
        Ok(Self { x, delta, link })
    }

    pub fn n_params(&self) -> usize {
        self.x.ncols()
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.x.ncols() {
            return Err(Error::Dimension(format!(
                "theta has length {} but the design has {} columns",
                theta.len(),
                self.x.ncols()
            )));
        }
        Ok(())
    }

    pub fn linear_predictor(&self, theta: &[f64]) -> Result<DVector<f64>> {
        self.check(theta)?;
        Ok(self.x * DVector::from_column_slice(theta))
    }

    pub fn working(&self, theta: &[f64]) -> Result<Working> {
        let eta = self.linear_predictor(theta)?;
        let n = eta.len();
        let mut score = DVector::zeros(n);
        let mut weight = DVector::zeros(n);
        let mut loglik = 0.0;
        let mut n_clamped = 0;
        for i in 0..n {
            let pr = self.link.probs(eta[i]);
            let d = self.link.inv_link_deriv(eta[i]);
            let var = pr.p * pr.q;
            let resid = if self.delta[i] { pr.q } else { -pr.p };
            score[i] = resid * d / var;
            weight[i] = d * d / var;
            loglik += if self.delta[i] { pr.p.ln() } else { pr.q.ln() };
            n_clamped += pr.clamped as usize;
        }
        Ok(Working {
            eta,
            score,
            weight,
            loglik,
            n_clamped,
        })
    }

    /// Unpenalized log-likelihood.
    pub fn loglik(&self, theta: &[f64]) -> Result<f64> {
        let eta = self.linear_predictor(theta)?;
        Ok(eta
            .iter()
            .zip(self.delta)
            .map(|(&v, &d)| {
                let pr = self.link.probs(v);
                if d {
                    pr.p.ln()
                } else {
                    pr.q.ln()
                }
            })
            .sum())
    }

    /// `loglik - theta' S theta / 2`.
    pub fn penalized_loglik(&self, theta: &[f64], s: &DMatrix<f64>) -> Result<f64> {
        Ok(self.loglik(theta)? - 0.5 * quad(s, theta))
    }

    /// `X' Omega Delta(theta) - S theta`.
    pub fn gradient(&self, theta: &[f64], s: &DMatrix<f64>) -> Result<DVector<f64>> {
        let w = self.working(theta)?;
        Ok(self.gradient_from(&w, theta, s))
    }

    pub fn gradient_from(&self, w: &Working, theta: &[f64], s: &DMatrix<f64>) -> DVector<f64> {
        self.x.tr_mul(&w.score) - s * DVector::from_column_slice(theta)
    }

    /// `X' Omega X`, the unpenalized expected information.
    pub fn fisher_from(&self, w: &Working) -> DMatrix<f64> {
        let mut xw = self.x.clone();
        for (i, mut row) in xw.row_iter_mut().enumerate() {
            row *= w.weight[i].sqrt();
        }
        let f = xw.tr_mul(&xw);
        // symmetrize against rounding in the product
        (&f + f.transpose()) * 0.5
    }

    /// `X' Omega X + S`.
    pub fn expected_information(&self, theta: &[f64], s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let w = self.working(theta)?;
        Ok(self.fisher_from(&w) + s)
    }
}

pub(crate) fn quad(s: &DMatrix<f64>, theta: &[f64]) -> f64 {
    let t = DVector::from_column_slice(theta);
    t.dot(&(s * &t))
}

/// Cholesky factor of a symmetric positive definite matrix, with a single
/// ridge retry.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    pub chol: Cholesky<f64, Dyn>,
    pub ridged: bool,
}

impl SpdFactor {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        if let Some(chol) = Cholesky::new(a.clone()) {
            return Ok(Self {
                chol,
                ridged: false,
            });
        }
        let n = a.nrows().max(1);
        let ridge = 1e-8 * a.diagonal().iter().map(|v| v.abs()).sum::<f64>() / n as f64;
        let ridge = if ridge > 0.0 { ridge } else { 1e-8 };
        let mut b = a.clone();
        for i in 0..a.nrows() {
            b[(i, i)] += ridge;
        }
        match Cholesky::new(b) {
            Some(chol) => {
                log::debug!("information needed a ridge of {ridge:e}");
                Ok(Self { chol, ridged: true })
            }
            None => Err(Error::InformationSingular),
        }
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let inv = self.chol.inverse();
        (&inv + inv.transpose()) * 0.5
    }
}
