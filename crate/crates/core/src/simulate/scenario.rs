use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioId {
    S1,
    S2,
    S3,
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScenarioId::S1 => "S1",
            ScenarioId::S2 => "S2",
            ScenarioId::S3 => "S3",
        };
        f.write_str(s)
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "S1" | "1" => Ok(ScenarioId::S1),
            "S2" | "2" => Ok(ScenarioId::S2),
            "S3" | "3" => Ok(ScenarioId::S3),
            _ => Err(Error::UnknownScenario(s.to_string())),
        }
    }
}

pub fn phi_exp(w: f64) -> f64 {
    (w + 0.5).exp() - (1.5f64.exp() - (-0.5f64).exp()) / 2.0
}

pub fn phi_sin(w: f64) -> f64 {
    2.0 * (-PI * w).sin()
}

pub fn phi_quad(w: f64) -> f64 {
    4.0 * w * w - 4.0 / 3.0
}

pub fn phi_zero(_: f64) -> f64 {
    0.0
}

/// `x - log(1 + x)` without cancellation for small `x`.
fn x_minus_log1p(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        // alternating series x^2/2 - x^3/3 + ...
        let mut term = x * x;
        let mut sum = 0.0;
        for k in 2..12 {
            sum += term / k as f64 * if k % 2 == 0 { 1.0 } else { -1.0 };
            term *= x;
        }
        sum
    } else {
        x - x.ln_1p()
    }
}

/// True data-generating model of one simulation scenario.
///
/// `beta` and `phi` are public so that tests can switch components off.
#[derive(Debug, Clone, Copy)]
pub struct Scenario {
    pub id: ScenarioId,
    pub beta: [f64; 2],
    pub phi: [fn(f64) -> f64; 2],
    /// Mean of the exponential observation-time distribution.
    pub censor_mean: f64,
}

impl Scenario {
    pub fn new(id: ScenarioId) -> Self {
        match id {
            ScenarioId::S1 => Self {
                id,
                beta: [0.5, -0.5],
                phi: [phi_exp, phi_sin],
                censor_mean: 2.0,
            },
            ScenarioId::S2 => Self {
                id,
                beta: [0.5, 0.5],
                phi: [phi_sin, phi_quad],
                censor_mean: 2.0,
            },
            ScenarioId::S3 => Self {
                id,
                beta: [-0.5, -0.5],
                phi: [phi_quad, phi_exp],
                censor_mean: 1.0,
            },
        }
    }

    /// Copy with `beta = 0` and both `phi_j = 0`.
    pub fn without_covariate_effects(mut self) -> Self {
        self.beta = [0.0, 0.0];
        self.phi = [phi_zero, phi_zero];
        self
    }

    pub fn eta(&self, t: f64) -> f64 {
        match self.id {
            ScenarioId::S1 => (2.0 * t).ln(),
            ScenarioId::S2 => x_minus_log1p(1.5 * t).ln(),
            ScenarioId::S3 => ((t / 10.0).ln_1p() + t.sqrt() / 10.0).ln(),
        }
    }

    /// Solves `eta(t) = v` for `t > 0`.
    pub fn invert_eta(&self, v: f64) -> Result<f64> {
        if !v.is_finite() {
            return Err(Error::Bracket(v));
        }
        if self.id == ScenarioId::S1 {
            return Ok(v.exp() / 2.0);
        }
        // bisection in log t; eta is increasing in t
        let f = |s: f64| self.eta(s.exp()) - v;
        let (mut lo, mut hi) = (-2.0, 2.0);
        let mut expansions = 0;
        while f(lo) > 0.0 {
            lo = 2.0 * lo - 1.0;
            expansions += 1;
            if expansions > 60 || lo < -700.0 {
                return Err(Error::Bracket(v));
            }
        }
        while f(hi) < 0.0 {
            hi = 2.0 * hi + 1.0;
            expansions += 1;
            if expansions > 60 || hi > 700.0 {
                return Err(Error::Bracket(v));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm.abs() < 1e-12 || hi - lo < 1e-15 {
                return Ok(mid.exp());
            }
            if fm < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((0.5 * (lo + hi)).exp())
    }

    pub fn additive(&self, z: [f64; 2], w: [f64; 2]) -> f64 {
        self.beta[0] * z[0] + self.beta[1] * z[1] + (self.phi[0])(w[0]) + (self.phi[1])(w[1])
    }
}
