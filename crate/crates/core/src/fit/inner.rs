//! Constrained maximization of the penalized log-likelihood at fixed
//! smoothing parameters: Fisher scoring followed by an isotonic projection
//! of the `eta` coefficients.
//!
//! The diagonally weighted projection can settle where the objective is not
//! maximal, because it ignores the correlation between gamma and the other
//! coefficients. Once it stops, a refinement stage keeps the Fisher step but
//! projects in the full information metric, whose fixed points are exactly
//! the constrained maximizers.

use nalgebra::{DMatrix, DVector};

use super::likelihood::{Problem, SpdFactor};
use crate::error::Result;
use crate::isotonic::{project_gamma, project_gamma_metric, PavaWeighting};

#[derive(Debug, Clone, Copy)]
pub struct InnerOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub weighting: PavaWeighting,
    /// Run the full-metric refinement after the isotonic stage.
    pub refine: bool,
}

#[derive(Debug, Clone)]
pub struct InnerResult {
    pub theta: Vec<f64>,
    pub penalized_loglik: f64,
    /// Iterations of the isotonic stage.
    pub iterations: usize,
    /// Iterations of the refinement stage.
    pub refine_iterations: usize,
    pub converged: bool,
    /// The isotonic stage found no improving step within the halving budget.
    pub stalled: bool,
    pub ridged: bool,
    /// Penalized log-likelihood after each accepted iteration, starting value first.
    pub trace: Vec<f64>,
}

/// Relative objective gain below which an undamped step counts as stationary.
pub const OBJECTIVE_RTOL: f64 = 1e-12;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy)]
enum Projection {
    Isotonic(PavaWeighting),
    Metric,
}

struct Stage {
    iterations: usize,
    converged: bool,
    stalled: bool,
}

struct State<'a> {
    problem: &'a Problem<'a>,
    s: &'a DMatrix<f64>,
    gamma: std::ops::Range<usize>,
    theta: Vec<f64>,
    current: f64,
    trace: Vec<f64>,
    ridged: bool,
}

impl State<'_> {
    fn run(
        &mut self,
        projection: Projection,
        max_iter: usize,
        opts: &InnerOptions,
    ) -> Result<Stage> {
        let mut stage = Stage {
            iterations: 0,
            converged: false,
            stalled: false,
        };
        while stage.iterations < max_iter {
            stage.iterations += 1;
            let w = self.problem.working(&self.theta)?;
            let grad = self.problem.gradient_from(&w, &self.theta, self.s);
            let info = self.problem.fisher_from(&w) + self.s;
            let factor = SpdFactor::new(&info)?;
            self.ridged |= factor.ridged;
            let step = factor.solve(&grad);
            let base = DVector::from_column_slice(&self.theta);

            let mut scale = 1.0;
            let mut full_step = true;
            let mut accepted = None;
            for _ in 0..=opts.max_halvings {
                let star = &base + &step * scale;
                let candidate = match projection {
                    Projection::Isotonic(weighting) => self.isotonic(star.as_slice(), weighting)?,
                    Projection::Metric => self.metric(star.as_slice(), &info)?,
                };
                if let Some(cand) = candidate {
                    let value = self.problem.penalized_loglik(&cand, self.s)?;
                    // an update must increase the objective; an unchanged
                    // objective only counts when theta has stopped moving,
                    // otherwise flat directions (clamped probabilities) drift
                    let improves = value > self.current
                        || (value == self.current && max_abs_diff(&cand, &self.theta) < opts.tol);
                    if value.is_finite() && improves {
                        accepted = Some((cand, value));
                        break;
                    }
                }
                scale *= 0.5;
                full_step = false;
            }

            let Some((next, value)) = accepted else {
                stage.stalled = true;
                stage.converged = true;
                break;
            };
            let change = max_abs_diff(&next, &self.theta);
            let gain = value - self.current;
            self.theta = next;
            self.current = value;
            self.trace.push(value);
            // An undamped step that no longer moves the objective is
            // stationary even if unidentified coefficients (a spline end
            // pushed to where every probability is clamped) keep wandering.
            let flat = full_step && gain <= OBJECTIVE_RTOL * (1.0 + value.abs());
            if change < opts.tol || flat {
                stage.converged = true;
                break;
            }
        }
        Ok(stage)
    }

    /// Isotonic projection of the gamma block with weights from
    /// `I^{-1}(theta_star)`. `None` when the trial point is numerically unusable.
    fn isotonic(
        &mut self,
        theta_star: &[f64],
        weighting: PavaWeighting,
    ) -> Result<Option<Vec<f64>>> {
        if theta_star.iter().any(|v| !v.is_finite()) {
            return Ok(None);
        }
        let w = self.problem.working(theta_star)?;
        if !w.loglik.is_finite() {
            return Ok(None);
        }
        let info = self.problem.fisher_from(&w) + self.s;
        let Ok(factor) = SpdFactor::new(&info) else {
            return Ok(None);
        };
        let inv = factor.inverse();
        let variances: Vec<f64> = self.gamma.clone().map(|k| inv[(k, k)]).collect();
        if variances.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Ok(None);
        }
        self.ridged |= factor.ridged;
        Ok(Some(project_gamma(
            theta_star,
            self.gamma.clone(),
            &variances,
            weighting,
        )?))
    }

    /// Projection in the metric of the information used for the step.
    fn metric(&self, theta_star: &[f64], info: &DMatrix<f64>) -> Result<Option<Vec<f64>>> {
        if theta_star.iter().any(|v| !v.is_finite()) {
            return Ok(None);
        }
        Ok(project_gamma_metric(theta_star, self.gamma.clone(), info, &self.theta).ok())
    }
}

/// Runs the inner iteration from `theta_init`, whose gamma block must be
/// nondecreasing.
pub fn inner_loop(
    problem: &Problem<'_>,
    s: &DMatrix<f64>,
    gamma: std::ops::Range<usize>,
    theta_init: &[f64],
    opts: &InnerOptions,
) -> Result<InnerResult> {
    let current = problem.penalized_loglik(theta_init, s)?;
    let mut state = State {
        problem,
        s,
        gamma,
        theta: theta_init.to_vec(),
        current,
        trace: vec![current],
        ridged: false,
    };
    let first = state.run(Projection::Isotonic(opts.weighting), opts.max_iter, opts)?;
    let mut converged = first.converged;
    let mut refine_iterations = 0;
    if opts.refine && state.gamma.len() > 1 {
        let second = state.run(Projection::Metric, opts.max_iter, opts)?;
        refine_iterations = second.iterations;
        converged = second.converged;
    }
    Ok(InnerResult {
        theta: state.theta,
        penalized_loglik: state.current,
        iterations: first.iterations,
        refine_iterations,
        converged,
        stalled: first.stalled,
        ridged: state.ridged,
        trace: state.trace,
    })
}
