//! Penalized spline fitting: inner Fisher scoring with isotonic projection,
//! outer Fellner-Schall smoothing-parameter updates, sandwich variances,
//! the unpenalized BIC comparator and bootstrap bands.

mod bic;
mod bootstrap;
mod data;
mod design;
mod inner;
mod likelihood;
mod result;
mod smoothing;
mod spec;
mod variance;

pub use bic::{default_knot_grid, fit_unpenalized, fit_unpenalized_bic, BicCandidate, BicFit};
pub use bootstrap::{
    bootstrap_bands, empirical_quantile, BandGrid, Bands, BootstrapOptions, Resample,
};
pub use data::Dataset;
pub use design::AssembledDesign;
pub use inner::{inner_loop, InnerOptions, InnerResult, OBJECTIVE_RTOL};
pub use likelihood::{Problem, SpdFactor, Working};
pub use result::{Curves, Diagnostics, FitResult, Iterations, TransformJson, WALD_Z};
pub use smoothing::{block_pinv, fellner_schall_update, pinv_symmetric, LambdaUpdate};
pub use spec::{default_knot_count, ModelSpec, SplineConfig};
pub use variance::{beta_covariance, edf, sandwich};

use nalgebra::DMatrix;

use crate::error::Result;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

impl ModelSpec {
    pub fn inner_options(&self) -> InnerOptions {
        InnerOptions {
            tol: self.inner_tol,
            max_iter: self.max_inner,
            max_halvings: self.max_halvings,
            weighting: self.pava_weighting,
            refine: self.refine_projection,
        }
    }
}

/// Fits the penalized model with smoothing parameters chosen by the
/// nested Fellner-Schall iteration.
pub fn fit(data: &Dataset, spec: &ModelSpec) -> Result<FitResult> {
    let design = AssembledDesign::build(data, spec)?;
    fit_design(data, &design, spec)
}

pub fn fit_design(data: &Dataset, design: &AssembledDesign, spec: &ModelSpec) -> Result<FitResult> {
    let problem = Problem::new(&design.x, &data.delta, spec.link)?;
    let penalty = &design.penalty;
    let gamma = design.layout.gamma();
    let opts = spec.inner_options();
    let mut diag = Diagnostics::default();

    let mut lambda = vec![spec.lambda_init; penalty.n_terms()];
    let mut s = penalty.combined(&lambda)?;
    let mut inner = inner_loop(&problem, &s, gamma.clone(), &design.initial_theta(), &opts)?;
    let mut inner_total = inner.iterations + inner.refine_iterations;
    let record = |diag: &mut Diagnostics, r: &InnerResult| {
        diag.stalled_inner_loops += r.stalled as usize;
        diag.ridge_used |= r.ridged;
        diag.outer_trace.push(r.penalized_loglik);
    };
    record(&mut diag, &inner);

    let mut converged = false;
    let mut outer = 0;
    while outer < spec.max_outer {
        outer += 1;
        let w = problem.working(&inner.theta)?;
        let info = problem.fisher_from(&w) + &s;
        let factor = SpdFactor::new(&info)?;
        diag.ridge_used |= factor.ridged;
        let update = fellner_schall_update(
            &lambda,
            &inner.theta,
            penalty,
            &factor.inverse(),
            spec.lambda_floor,
            spec.lambda_cap,
        )?;
        diag.lambda_updates += update.lambda.len();
        diag.lambda_floor_hits += update.floored.iter().filter(|f| **f).count();
        diag.lambda_cap_hits += update.capped.iter().filter(|f| **f).count();

        lambda = update.lambda;
        s = penalty.combined(&lambda)?;
        let next = inner_loop(&problem, &s, gamma.clone(), &inner.theta, &opts)?;
        inner_total += next.iterations + next.refine_iterations;
        record(&mut diag, &next);
        let change = max_abs_diff(&next.theta, &inner.theta);
        inner = next;
        if change < spec.outer_tol {
            converged = true;
            break;
        }
    }
    if spec.max_outer == 0 {
        converged = inner.converged;
    }

    finish(
        data,
        design,
        spec,
        &problem,
        inner,
        lambda,
        &s,
        Iterations { outer, inner_total },
        converged,
        diag,
    )
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn finish(
    data: &Dataset,
    design: &AssembledDesign,
    spec: &ModelSpec,
    problem: &Problem<'_>,
    inner: InnerResult,
    lambda: Vec<f64>,
    s: &DMatrix<f64>,
    iterations: Iterations,
    converged: bool,
    mut diag: Diagnostics,
) -> Result<FitResult> {
    let layout = &design.layout;
    let theta = inner.theta;
    let w = problem.working(&theta)?;
    let fisher = problem.fisher_from(&w);
    let factor = SpdFactor::new(&(&fisher + s))?;
    diag.ridge_used |= factor.ridged;
    diag.inner_converged = inner.converged;
    diag.clamped_probabilities = w.n_clamped;
    let info_inv = factor.inverse();
    let q = layout.q;
    let cov = beta_covariance(&info_inv, &fisher, q);
    let se_beta: Vec<f64> = (0..q).map(|k| cov[(k, k)].max(0.0).sqrt()).collect();
    let beta = theta[layout.beta()].to_vec();
    let ci_beta = beta
        .iter()
        .zip(&se_beta)
        .map(|(b, se)| [b - WALD_Z * se, b + WALD_Z * se])
        .collect();
    let mut knots = vec![design.eta_knots.clone()];
    knots.extend(design.smooth_knots.iter().cloned());

    Ok(FitResult {
        link: spec.link,
        penalty_order: spec.penalty_order,
        z_names: data.z_names.clone(),
        w_names: data.w_names.clone(),
        n: data.n(),
        beta,
        se_beta,
        ci_beta,
        cov_beta: cov
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect(),
        gamma: theta[layout.gamma()].to_vec(),
        alpha: (0..layout.smooth.len())
            .map(|j| theta[layout.alpha(j)].to_vec())
            .collect(),
        lambda,
        loglik: w.loglik,
        penalized_loglik: inner.penalized_loglik,
        edf: edf(&info_inv, &fisher),
        iterations,
        converged: converged && inner.converged,
        knots,
        constraint_transforms: design.transforms.iter().map(TransformJson::from).collect(),
        layout: layout.clone(),
        diagnostics: diag,
    })
}
