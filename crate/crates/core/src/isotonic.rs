//! Weighted isotonic regression by pool-adjacent-violators, and the exact
//! projection onto the monotone cone under a full quadratic metric.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the diagonal of the inverse information turns into PAVA weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PavaWeighting {
    /// `w_k = sigma_k^2`, the variances themselves.
    #[default]
    Variance,
    /// `w_k = 1 / sigma_k^2`.
    InverseVariance,
}

impl PavaWeighting {
    pub fn weight(self, variance: f64) -> f64 {
        match self {
            PavaWeighting::Variance => variance,
            PavaWeighting::InverseVariance => 1.0 / variance,
        }
    }
}

/// Minimizes `sum_k w_k (x_k - targets_k)^2` over nondecreasing `x`.
///
/// Single forward pass with a stack of pooled blocks; each merge pops a
/// block, so the whole pass is O(p).
pub fn pava(targets: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if targets.len() != weights.len() {
        return Err(Error::Dimension(format!(
            "{} targets but {} weights",
            targets.len(),
            weights.len()
        )));
    }
    if let Some((index, &weight)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0)) {
        return Err(Error::NonPositiveWeight { index, weight });
    }

    struct Block {
        mean: f64,
        weight: f64,
        len: usize,
    }

    let mut stack: Vec<Block> = Vec::with_capacity(targets.len());
    for (&y, &w) in targets.iter().zip(weights) {
        let mut cur = Block {
            mean: y,
            weight: w,
            len: 1,
        };
        while let Some(prev) = stack.last() {
            if prev.mean <= cur.mean {
                break;
            }
            let prev = stack.pop().unwrap();
            let weight = prev.weight + cur.weight;
            cur = Block {
                mean: (prev.mean * prev.weight + cur.mean * cur.weight) / weight,
                weight,
                len: prev.len + cur.len,
            };
        }
        stack.push(cur);
    }

    let mut out = Vec::with_capacity(targets.len());
    for b in &stack {
        out.extend(std::iter::repeat_n(b.mean, b.len));
    }
    // pooled means can differ in the last bit; restore exact monotonicity
    for k in 1..out.len() {
        if out[k] < out[k - 1] {
            out[k] = out[k - 1];
        }
    }
    Ok(out)
}

/// Replaces `theta[gamma]` with its weighted isotonic projection.
pub fn project_gamma(
    theta_star: &[f64],
    gamma: std::ops::Range<usize>,
    variances: &[f64],
    weighting: PavaWeighting,
) -> Result<Vec<f64>> {
    if gamma.end > theta_star.len() || variances.len() != gamma.len() {
        return Err(Error::Dimension(
            "gamma block does not fit the parameter vector".into(),
        ));
    }
    let weights: Vec<f64> = variances.iter().map(|&v| weighting.weight(v)).collect();
    let projected = pava(&theta_star[gamma.clone()], &weights)?;
    let mut out = theta_star.to_vec();
    out[gamma].copy_from_slice(&projected);
    Ok(out)
}

/// Projection of `theta_star` onto `{theta: theta[gamma] nondecreasing}` in
/// the metric of the symmetric positive definite `metric`:
/// `argmin (theta - theta_star)' M (theta - theta_star)`.
///
/// Solved as a bound-constrained quadratic program in the increments of the
/// gamma block by a primal active-set method, started from the feasible point
/// `start`. With a diagonal metric restricted to gamma this reduces to `pava`.
pub fn project_gamma_metric(
    theta_star: &[f64],
    gamma: std::ops::Range<usize>,
    metric: &DMatrix<f64>,
    start: &[f64],
) -> Result<Vec<f64>> {
    let n = theta_star.len();
    if gamma.end > n || metric.nrows() != n || metric.ncols() != n || start.len() != n {
        return Err(Error::Dimension(
            "metric projection dimensions disagree".into(),
        ));
    }
    if start[gamma.clone()].windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument(
            "starting point is not monotone".into(),
        ));
    }
    if gamma.len() < 2 {
        return Ok(theta_star.to_vec());
    }

    // theta = T u, where u holds gamma_1 and the increments gamma_k - gamma_{k-1}
    let mut t = DMatrix::<f64>::identity(n, n);
    for k in gamma.clone() {
        for l in gamma.start..=k {
            t[(k, l)] = 1.0;
        }
    }
    let bounded = |k: usize| k > gamma.start && k < gamma.end;
    let mt = metric * &t;
    let m = t.tr_mul(&mt);
    let b = mt.tr_mul(&DVector::from_column_slice(theta_star));

    let mut u: Vec<f64> = start.to_vec();
    for k in (gamma.start + 1..gamma.end).rev() {
        u[k] = (start[k] - start[k - 1]).max(0.0);
    }
    let mut active: Vec<bool> = (0..n).map(|k| bounded(k) && u[k] == 0.0).collect();
    for k in 0..n {
        if active[k] {
            u[k] = 0.0;
        }
    }
    let scale = b.amax().max(1.0);

    for _ in 0..(10 * n + 10) {
        let free: Vec<usize> = (0..n).filter(|&k| !active[k]).collect();
        let mff = DMatrix::from_fn(free.len(), free.len(), |i, j| m[(free[i], free[j])]);
        let bf = DVector::from_fn(free.len(), |i, _| b[free[i]]);
        let Some(chol) = mff.cholesky() else {
            return Err(Error::InformationSingular);
        };
        let sol = chol.solve(&bf);
        let mut candidate = vec![0.0; n];
        for (i, &k) in free.iter().enumerate() {
            candidate[k] = sol[i];
        }

        // largest feasible fraction of the way to the subspace minimizer
        let mut step = 1.0;
        let mut blocking = None;
        for &k in &free {
            if bounded(k) && candidate[k] < 0.0 {
                let frac = u[k] / (u[k] - candidate[k]);
                if frac < step {
                    step = frac;
                    blocking = Some(k);
                }
            }
        }
        for k in 0..n {
            u[k] += step * (candidate[k] - u[k]);
        }
        if let Some(k) = blocking {
            u[k] = 0.0;
            active[k] = true;
            continue;
        }

        // at the subspace minimizer: release the worst constraint pushing the wrong way
        let grad = &m * DVector::from_column_slice(&u) - &b;
        let release = (0..n)
            .filter(|&k| active[k])
            .min_by(|&i, &j| grad[i].total_cmp(&grad[j]))
            .filter(|&k| grad[k] < -1e-12 * scale);
        match release {
            Some(k) => active[k] = false,
            None => break,
        }
    }

    let mut out = (&t * DVector::from_column_slice(&u)).as_slice().to_vec();
    for k in gamma.start + 1..gamma.end {
        if out[k] < out[k - 1] {
            out[k] = out[k - 1];
        }
    }
    Ok(out)
}
