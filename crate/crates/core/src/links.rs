//! The `g_alpha` link family.
//!
//! `alpha = 0` is the complementary log-log link (proportional hazards) and
//! `alpha = 1` is the logit link (proportional odds). All evaluations go
//! through `log1p`/`expm1`/softplus forms so that large `|v|` neither
//! overflows nor loses the tail probability.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Below this value `alpha` is treated as exactly zero.
pub const ALPHA_ZERO: f64 = 1e-12;

pub const DEFAULT_PROB_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkFamily {
    pub alpha: f64,
    pub prob_eps: f64,
}

/// Fitted probability and its complement, both clamped to `[eps, 1 - eps]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probs {
    pub p: f64,
    pub q: f64,
    pub clamped: bool,
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl LinkFamily {
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_eps(alpha, DEFAULT_PROB_EPS)
    }

    pub fn with_eps(alpha: f64, prob_eps: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "link alpha must be >= 0, got {alpha}"
            )));
        }
        if !(prob_eps > 0.0 && prob_eps < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "probability clamp must lie in (0, 0.5), got {prob_eps}"
            )));
        }
        Ok(Self { alpha, prob_eps })
    }

    pub fn proportional_hazards() -> Self {
        Self {
            alpha: 0.0,
            prob_eps: DEFAULT_PROB_EPS,
        }
    }

    pub fn proportional_odds() -> Self {
        Self {
            alpha: 1.0,
            prob_eps: DEFAULT_PROB_EPS,
        }
    }

    fn is_ph(&self) -> bool {
        self.alpha < ALPHA_ZERO
    }

    /// `g_alpha(u)`. Returns the value and whether `u` had to be clamped.
    pub fn link(&self, u: f64) -> Result<(f64, bool)> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::ProbabilityOutOfRange(u));
        }
        let eps = self.prob_eps;
        let clamped = u < eps || u > 1.0 - eps;
        let u = u.clamp(eps, 1.0 - eps);
        Ok((self.link_unchecked(u), clamped))
    }

    /// `g_alpha(u)` for `u` strictly inside (0, 1), no clamping.
    pub fn link_unchecked(&self, u: f64) -> f64 {
        // log(1 - u), accurate for small u
        let log_surv = (-u).ln_1p();
        if self.is_ph() {
            (-log_surv).ln()
        } else {
            let a = self.alpha;
            (-a * log_surv).exp_m1().ln() - a.ln()
        }
    }

    /// `log(1 - G(v))`, the log survival probability, unclamped.
    fn log_survival(&self, v: f64) -> f64 {
        if self.is_ph() {
            -v.exp()
        } else {
            let a = self.alpha;
            // log(1 + a e^v) = softplus(v + ln a)
            -softplus(v + a.ln()) / a
        }
    }

    /// `G(v)` together with `1 - G(v)`, each clamped to `[eps, 1 - eps]`.
    pub fn probs(&self, v: f64) -> Probs {
        let ls = self.log_survival(v);
        let p_raw = -ls.exp_m1();
        let q_raw = ls.exp();
        let eps = self.prob_eps;
        let clamped = !(p_raw >= eps && q_raw >= eps);
        let p = p_raw.clamp(eps, 1.0 - eps);
        let q = if clamped { 1.0 - p } else { q_raw };
        Probs { p, q, clamped }
    }

    /// `G(v) = g^{-1}(v)`, clamped.
    pub fn inv_link(&self, v: f64) -> f64 {
        self.probs(v).p
    }

    /// `G'(v)`, strictly positive for finite `v` until it underflows.
    pub fn inv_link_deriv(&self, v: f64) -> f64 {
        if self.is_ph() {
            (v - v.exp()).exp()
        } else {
            let a = self.alpha;
            (v - (1.0 / a + 1.0) * softplus(v + a.ln())).exp()
        }
    }
}

impl Default for LinkFamily {
    fn default() -> Self {
        Self::proportional_hazards()
    }
}

impl fmt::Display for LinkFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ph() {
            write!(f, "ph")
        } else if self.alpha == 1.0 {
            write!(f, "po")
        } else {
            write!(f, "alpha={}", self.alpha)
        }
    }
}

impl FromStr for LinkFamily {
    type Err = Error;

    /// Accepts `ph`, `po` or `alpha=<x>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ph" => Ok(Self::proportional_hazards()),
            "po" => Ok(Self::proportional_odds()),
            other => {
                let value = other
                    .strip_prefix("alpha=")
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown link {s:?}")))?;
                let alpha: f64 = value
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad link alpha {value:?}")))?;
                Self::new(alpha)
            }
        }
    }
}
