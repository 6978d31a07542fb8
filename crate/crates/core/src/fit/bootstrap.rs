//! Point-wise bootstrap bands for the fitted functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::data::Dataset;
use super::result::{Curves, FitResult};
use super::spec::ModelSpec;
use crate::basis::quantile_sorted;
use crate::error::{Error, Result};
use crate::parallel::{map_indexed, Workers};

/// How bootstrap datasets are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Resample {
    /// Rows drawn with replacement.
    #[default]
    Rows,
    /// Every replicate is the original data (degenerate check).
    Identity,
}

#[derive(Debug, Clone, Copy)]
pub struct BootstrapOptions {
    pub replicates: usize,
    pub seed: u64,
    pub workers: Workers,
    pub resample: Resample,
    pub lower: f64,
    pub upper: f64,
}

impl BootstrapOptions {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self {
            replicates,
            seed,
            workers: Workers::default(),
            resample: Resample::Rows,
            lower: 0.025,
            upper: 0.975,
        }
    }
}

/// Evaluation grids: `t` for `eta`, `w[j]` for `phi_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandGrid {
    pub t: Vec<f64>,
    pub w: Vec<Vec<f64>>,
}

impl BandGrid {
    /// `points` equally spaced values across each knot range of `fit`.
    pub fn spanning(fit: &FitResult, points: usize) -> Self {
        let span = |lo: f64, hi: f64| -> Vec<f64> {
            if points == 1 {
                return vec![lo];
            }
            // the last point is set exactly so it never falls outside the knots
            (0..points)
                .map(|i| {
                    if i + 1 == points {
                        hi
                    } else {
                        lo + (hi - lo) * i as f64 / (points - 1) as f64
                    }
                })
                .collect()
        };
        let ek = fit.eta_knots();
        Self {
            t: span(ek.lo(), ek.hi()),
            w: fit
                .smooth_knots()
                .iter()
                .map(|k| span(k.lo(), k.hi()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Bands {
    pub grid: BandGrid,
    pub estimate: Curves,
    pub lower: Curves,
    pub upper: Curves,
    pub succeeded: usize,
    pub failed: usize,
}

/// Type-7 quantile of an unsorted sample.
pub fn empirical_quantile(values: &[f64], level: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, level)
}

fn pointwise(curves: &[Curves], level: f64) -> Curves {
    let column = |get: &dyn Fn(&Curves) -> f64| -> f64 {
        let v: Vec<f64> = curves.iter().map(get).collect();
        empirical_quantile(&v, level)
    };
    let first = &curves[0];
    Curves {
        eta: (0..first.eta.len())
            .map(|i| column(&|c: &Curves| c.eta[i]))
            .collect(),
        phi: (0..first.phi.len())
            .map(|j| {
                (0..first.phi[j].len())
                    .map(|i| column(&|c: &Curves| c.phi[j][i]))
                    .collect()
            })
            .collect(),
        n_clamped: 0,
    }
}

/// Refits `B` bootstrap samples and returns point-wise quantile bands
/// around the full-data estimate. More than 20% failed refits is an error.
pub fn bootstrap_bands(
    data: &Dataset,
    spec: &ModelSpec,
    grid: Option<BandGrid>,
    opts: &BootstrapOptions,
) -> Result<Bands> {
    if opts.replicates < 2 {
        return Err(Error::InvalidArgument(
            "bootstrap needs at least 2 replicates".into(),
        ));
    }
    let full = super::fit(data, spec)?;
    let grid = grid.unwrap_or_else(|| BandGrid::spanning(&full, 200));
    let estimate = full.evaluate_functions(&grid.t, &grid.w)?;

    let n = data.n();
    let results: Vec<Result<Curves>> = map_indexed(opts.replicates, opts.workers, |b| {
        let sample = match opts.resample {
            Resample::Identity => data.clone(),
            Resample::Rows => {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(b as u64);
                let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                data.select_rows(&rows)
            }
        };
        let refit = super::fit(&sample, spec)?;
        refit.evaluate_functions(&grid.t, &grid.w)
    });

    let mut curves = Vec::with_capacity(results.len());
    let mut failed = 0;
    for r in results {
        match r {
            Ok(c) => curves.push(c),
            Err(e) => {
                log::debug!("bootstrap refit failed: {e}");
                failed += 1;
            }
        }
    }
    if failed * 5 > opts.replicates || curves.is_empty() {
        return Err(Error::BootstrapFailures {
            failed,
            total: opts.replicates,
        });
    }
    Ok(Bands {
        lower: pointwise(&curves, opts.lower),
        upper: pointwise(&curves, opts.upper),
        estimate,
        grid,
        succeeded: curves.len(),
        failed,
    })
}
