//! Monte-Carlo study runner and its per-coefficient bias/SD/MSE/SE/coverage summary.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::generate::{generate, replicate_seed};
use super::scenario::{Scenario, ScenarioId};
use crate::error::{Error, Result};
use crate::fit::{default_knot_grid, fit, fit_unpenalized_bic, FitResult, ModelSpec, SplineConfig};
use crate::links::LinkFamily;
use crate::parallel::{map_indexed, Workers};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Penalized,
    UnpenalizedBic,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Penalized => "penalized",
            Method::UnpenalizedBic => "unpenalized-bic",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "penalized" => Ok(Method::Penalized),
            "unpenalized-bic" => Ok(Method::UnpenalizedBic),
            _ => Err(Error::InvalidArgument(format!("unknown method {s:?}"))),
        }
    }
}

/// Study configuration; also the JSON schema accepted by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub scenario: ScenarioId,
    pub alpha: f64,
    pub n: usize,
    pub replicates: usize,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub seed: u64,
    /// Interior knots for the penalized fit, or the centre of the BIC grid.
    #[serde(default)]
    pub knots: Option<usize>,
    #[serde(default = "default_penalty_order")]
    pub penalty_order: usize,
}

fn default_penalty_order() -> usize {
    2
}

impl StudyConfig {
    pub fn new(
        scenario: ScenarioId,
        alpha: f64,
        n: usize,
        replicates: usize,
        method: Method,
        seed: u64,
    ) -> Self {
        Self {
            scenario,
            alpha,
            n,
            replicates,
            method,
            seed,
            knots: None,
            penalty_order: 2,
        }
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let mut spec = ModelSpec::with_link(LinkFamily::new(self.alpha)?);
        spec.penalty_order = self.penalty_order;
        spec.spline = SplineConfig {
            n_interior: self.knots,
            ..SplineConfig::default()
        };
        Ok(spec)
    }
}

/// Outcome of one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub index: usize,
    pub converged: bool,
    pub error: Option<String>,
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub covered: Vec<bool>,
    pub right_censoring: f64,
    pub lambda: Vec<f64>,
    pub lambda_updates: usize,
    pub lambda_floor_hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub name: String,
    pub truth: f64,
    pub bias: f64,
    pub sd: f64,
    pub mse: f64,
    pub se: f64,
    /// Coverage of the nominal 95% intervals, in percent.
    pub cp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub config: StudyConfig,
    pub coefficients: Vec<CoefficientSummary>,
    pub replicates: usize,
    pub used: usize,
    pub failed: usize,
    /// More than 10% of replicates failed or did not converge.
    pub unreliable: bool,
    pub right_censoring: f64,
    pub records: Vec<ReplicateRecord>,
}

/// Bias, SD, MSE, mean SE and coverage over the usable replicates.
pub fn summarize(
    config: StudyConfig,
    truth: &[f64],
    records: Vec<ReplicateRecord>,
) -> SimulationSummary {
    let used: Vec<&ReplicateRecord> = records.iter().filter(|r| r.converged).collect();
    let r = used.len() as f64;
    let coefficients = truth
        .iter()
        .enumerate()
        .map(|(k, &b0)| {
            let est: Vec<f64> = used.iter().map(|rec| rec.beta[k]).collect();
            let mean = est.iter().sum::<f64>() / r;
            let var = if used.len() > 1 {
                est.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (r - 1.0)
            } else {
                f64::NAN
            };
            CoefficientSummary {
                name: format!("beta{}", k + 1),
                truth: b0,
                bias: mean - b0,
                sd: var.sqrt(),
                mse: est.iter().map(|b| (b - b0).powi(2)).sum::<f64>() / r,
                se: used.iter().map(|rec| rec.se[k]).sum::<f64>() / r,
                cp: 100.0 * used.iter().filter(|rec| rec.covered[k]).count() as f64 / r,
            }
        })
        .collect();
    let failed = records.len() - used.len();
    let right_censoring =
        records.iter().map(|r| r.right_censoring).sum::<f64>() / records.len().max(1) as f64;
    SimulationSummary {
        config,
        coefficients,
        replicates: records.len(),
        used: used.len(),
        failed,
        unreliable: failed * 10 > records.len(),
        right_censoring,
        records,
    }
}

fn fit_with(
    method: Method,
    data: &crate::fit::Dataset,
    spec: &ModelSpec,
    knots: Option<usize>,
) -> Result<FitResult> {
    match method {
        Method::Penalized => fit(data, spec),
        Method::UnpenalizedBic => {
            let grid = match knots {
                Some(k) => ((k as i64 - 3).max(0)..=k as i64 + 3)
                    .map(|v| v as usize)
                    .collect(),
                None => default_knot_grid(data.n()),
            };
            Ok(fit_unpenalized_bic(data, spec, &grid)?.fit)
        }
    }
}

/// Runs one replicate: generate with the replicate's own seed, fit, record.
pub fn run_replicate(config: &StudyConfig, spec: &ModelSpec, index: usize) -> ReplicateRecord {
    let scenario = Scenario::new(config.scenario);
    let truth = scenario.beta;
    let seed = replicate_seed(config.seed, index as u64);
    let mut rec = ReplicateRecord {
        index,
        converged: false,
        error: None,
        beta: Vec::new(),
        se: Vec::new(),
        covered: Vec::new(),
        right_censoring: f64::NAN,
        lambda: Vec::new(),
        lambda_updates: 0,
        lambda_floor_hits: 0,
    };
    let generated = match generate(&scenario, spec.link, config.n, seed) {
        Ok(g) => g,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    rec.right_censoring = generated.data.right_censoring_rate();
    match fit_with(config.method, &generated.data, spec, config.knots) {
        Ok(f) => {
            rec.converged = f.converged;
            rec.covered = (0..truth.len()).map(|k| f.covers(k, truth[k])).collect();
            rec.beta = f.beta;
            rec.se = f.se_beta;
            rec.lambda = f.lambda;
            rec.lambda_updates = f.diagnostics.lambda_updates;
            rec.lambda_floor_hits = f.diagnostics.lambda_floor_hits;
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

pub fn run_study(config: &StudyConfig, workers: Workers) -> Result<SimulationSummary> {
    if config.replicates < 2 {
        return Err(Error::InvalidArgument(
            "a study needs at least 2 replicates".into(),
        ));
    }
    let spec = config.model_spec()?;
    let records = map_indexed(config.replicates, workers, |r| {
        run_replicate(config, &spec, r)
    });
    let truth = Scenario::new(config.scenario).beta;
    let summary = summarize(config.clone(), &truth, records);
    if summary.unreliable {
        log::warn!(
            "{} of {} replicates failed or did not converge",
            summary.failed,
            summary.replicates
        );
    }
    Ok(summary)
}

impl SimulationSummary {
    pub const CSV_HEADER: &'static str =
        "scenario,alpha,method,n,replicates,used,coefficient,bias,sd,mse,se,cp";

    /// One row per coefficient with the Bias, SD, MSE, SE, CP columns.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for c in &self.coefficients {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.2}\n",
                self.config.scenario,
                self.config.alpha,
                self.config.method,
                self.config.n,
                self.replicates,
                self.used,
                c.name,
                c.bias,
                c.sd,
                c.mse,
                c.se,
                c.cp
            ));
        }
        out
    }
}
