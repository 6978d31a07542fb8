use serde::{Deserialize, Serialize};

use crate::basis::DEFAULT_DEGREE;
use crate::error::{Error, Result};
use crate::isotonic::PavaWeighting;
use crate::links::LinkFamily;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplineConfig {
    pub degree: usize,
    /// `None` places `ceil(n^{1/3})` interior knots.
    pub n_interior: Option<usize>,
}

impl Default for SplineConfig {
    fn default() -> Self {
        Self {
            degree: DEFAULT_DEGREE,
            n_interior: None,
        }
    }
}

impl SplineConfig {
    pub fn interior_for(&self, n: usize) -> usize {
        self.n_interior.unwrap_or_else(|| default_knot_count(n))
    }
}

/// `ceil(n^{1/3})`, guarding against `cbrt` landing just above an integer.
pub fn default_knot_count(n: usize) -> usize {
    let c = (n as f64).cbrt();
    let r = c.round();
    if (c - r).abs() < 1e-9 {
        r as usize
    } else {
        c.ceil() as usize
    }
}

/// Model and algorithm settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub link: LinkFamily,
    pub penalty_order: usize,
    /// Default spline for `eta` and every `phi_j`.
    pub spline: SplineConfig,
    /// Optional per-function overrides, `eta` first; empty means use `spline`.
    #[serde(default)]
    pub per_function: Vec<SplineConfig>,
    pub inner_tol: f64,
    pub outer_tol: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    pub max_halvings: usize,
    pub lambda_init: f64,
    pub lambda_floor: f64,
    pub lambda_cap: f64,
    pub pava_weighting: PavaWeighting,
    /// Finish each inner loop with full-metric projections so the result is
    /// the constrained maximizer rather than a fixed point of the isotonic step.
    pub refine_projection: bool,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            link: LinkFamily::default(),
            penalty_order: 2,
            spline: SplineConfig::default(),
            per_function: Vec::new(),
            inner_tol: 1e-6,
            outer_tol: 1e-4,
            max_inner: 100,
            max_outer: 50,
            max_halvings: 20,
            lambda_init: 1.0,
            lambda_floor: 1e-8,
            lambda_cap: 1e6,
            pava_weighting: PavaWeighting::Variance,
            refine_projection: true,
        }
    }
}

impl ModelSpec {
    pub fn with_link(link: LinkFamily) -> Self {
        Self {
            link,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.penalty_order < 1 {
            return bad("penalty order must be >= 1");
        }
        if !(self.inner_tol > 0.0 && self.outer_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_inner == 0 {
            return bad("max_inner must be >= 1");
        }
        if !(self.lambda_init >= 0.0
            && self.lambda_floor > 0.0
            && self.lambda_cap > self.lambda_floor)
        {
            return bad("smoothing parameter bounds are inconsistent");
        }
        if self.spline.degree < 1 || self.per_function.iter().any(|s| s.degree < 1) {
            return bad("spline degree must be >= 1");
        }
        Ok(())
    }

    /// Spline config for function `k` (0 = eta, `j` = phi_j).
    pub fn spline_for(&self, k: usize) -> SplineConfig {
        self.per_function.get(k).copied().unwrap_or(self.spline)
    }
}
