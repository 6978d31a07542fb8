//! Unpenalized spline fit with the knot count chosen by BIC.

use super::data::Dataset;
use super::design::AssembledDesign;
use super::likelihood::Problem;
use super::result::{Diagnostics, FitResult, Iterations};
use super::spec::{ModelSpec, SplineConfig};
use super::{finish, inner_loop};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BicCandidate {
    pub n_interior: usize,
    pub n_params: usize,
    pub loglik: f64,
    pub bic: f64,
    pub converged: bool,
    /// Set when the candidate was skipped (did not converge or failed).
    pub skipped: bool,
}

#[derive(Debug, Clone)]
pub struct BicFit {
    pub fit: FitResult,
    pub candidates: Vec<BicCandidate>,
}

/// For each interior-knot count in `knot_grid` (applied to every function)
/// maximizes the unpenalized likelihood under the monotone constraint, then
/// keeps the candidate minimizing `-2 loglik + (q + p0 + sum(p_j - 1)) log n`.
pub fn fit_unpenalized_bic(
    data: &Dataset,
    spec: &ModelSpec,
    knot_grid: &[usize],
) -> Result<BicFit> {
    if knot_grid.is_empty() {
        return Err(Error::InvalidArgument("empty knot grid".into()));
    }
    let n = data.n() as f64;
    let mut best: Option<(f64, FitResult)> = None;
    let mut candidates = Vec::with_capacity(knot_grid.len());
    for &k in knot_grid {
        let mut cand_spec = spec.clone();
        cand_spec.spline = SplineConfig {
            degree: spec.spline.degree,
            n_interior: Some(k),
        };
        cand_spec.per_function.clear();
        match fit_unpenalized(data, &cand_spec) {
            Ok(fit) => {
                let n_params = fit.layout.total();
                let bic = -2.0 * fit.loglik + n_params as f64 * n.ln();
                let skipped = !fit.converged || !bic.is_finite();
                candidates.push(BicCandidate {
                    n_interior: k,
                    n_params,
                    loglik: fit.loglik,
                    bic,
                    converged: fit.converged,
                    skipped,
                });
                if skipped {
                    log::debug!("knot count {k} skipped: fit did not converge");
                    continue;
                }
                if best.as_ref().is_none_or(|(b, _)| bic < *b) {
                    best = Some((bic, fit));
                }
            }
            Err(e) => {
                log::debug!("knot count {k} failed: {e}");
                candidates.push(BicCandidate {
                    n_interior: k,
                    n_params: 0,
                    loglik: f64::NAN,
                    bic: f64::NAN,
                    converged: false,
                    skipped: true,
                });
            }
        }
    }
    let (_, fit) = best.ok_or(Error::AllCandidatesFailed)?;
    Ok(BicFit { fit, candidates })
}

/// Single constrained maximum-likelihood fit with all smoothing parameters zero.
pub fn fit_unpenalized(data: &Dataset, spec: &ModelSpec) -> Result<FitResult> {
    let design = AssembledDesign::build(data, spec)?;
    let problem = Problem::new(&design.x, &data.delta, spec.link)?;
    let lambda = vec![0.0; design.penalty.n_terms()];
    let s = design.penalty.combined(&lambda)?;
    let inner = inner_loop(
        &problem,
        &s,
        design.layout.gamma(),
        &design.initial_theta(),
        &spec.inner_options(),
    )?;
    let iterations = Iterations {
        outer: 0,
        inner_total: inner.iterations,
    };
    let converged = inner.converged;
    let diag = Diagnostics {
        stalled_inner_loops: inner.stalled as usize,
        ridge_used: inner.ridged,
        outer_trace: vec![inner.penalized_loglik],
        ..Diagnostics::default()
    };
    finish(
        data, &design, spec, &problem, inner, lambda, &s, iterations, converged, diag,
    )
}

/// `ceil(n^{1/3}) - 3 ..= ceil(n^{1/3}) + 3`, truncated at zero.
pub fn default_knot_grid(n: usize) -> Vec<usize> {
    let c = super::spec::default_knot_count(n) as i64;
    ((c - 3).max(0)..=c + 3).map(|k| k as usize).collect()
}
