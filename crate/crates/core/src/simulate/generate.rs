use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Exp, StandardNormal};

use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::fit::Dataset;
use crate::links::LinkFamily;

/// Redraws of `U` allowed per observation before giving up.
const MAX_REDRAWS: usize = 100;

/// Simulated dataset together with the latent failure times.
#[derive(Debug, Clone)]
pub struct Generated {
    pub data: Dataset,
    pub failure_times: Vec<f64>,
    /// Number of `U` draws rejected because `eta` could not be inverted.
    pub redraws: usize,
}

/// Mixes a study seed and a replicate index into an independent seed.
pub fn replicate_seed(seed: u64, replicate: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed
        ^ replicate
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn open_uniform(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Draws `n` observations from `scenario` under link `g_alpha`.
///
/// `W_j ~ U[-1, 1]`, `Z_1 ~ Bernoulli(0.5)`, `Z_2 ~ N(0, 1)`; the failure
/// time solves `F(T | X) = U` and the observation time is exponential.
pub fn generate(scenario: &Scenario, link: LinkFamily, n: usize, seed: u64) -> Result<Generated> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bern = Bernoulli::new(0.5).expect("valid probability");
    let exp = Exp::new(1.0 / scenario.censor_mean)
        .map_err(|e| Error::InvalidArgument(format!("censoring mean: {e}")))?;

    let mut y = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(2 * n);
    let mut w = Vec::with_capacity(2 * n);
    let mut times = Vec::with_capacity(n);
    let mut redraws = 0;
    for _ in 0..n {
        let w1 = rng.random_range(-1.0..=1.0);
        let w2 = rng.random_range(-1.0..=1.0);
        let z1 = if bern.sample(&mut rng) { 1.0 } else { 0.0 };
        let z2: f64 = StandardNormal.sample(&mut rng);
        let shift = scenario.additive([z1, z2], [w1, w2]);
        let mut attempt = 0;
        let t = loop {
            let u = open_uniform(&mut rng);
            match scenario.invert_eta(link.link_unchecked(u) - shift) {
                Ok(t) if t > 0.0 && t.is_finite() => break t,
                _ => {
                    redraws += 1;
                    attempt += 1;
                    if attempt >= MAX_REDRAWS {
                        return Err(Error::Bracket(link.link_unchecked(u) - shift));
                    }
                }
            }
        };
        let obs: f64 = loop {
            let v = exp.sample(&mut rng);
            if v > 0.0 {
                break v;
            }
        };
        y.push(obs);
        delta.push(t < obs);
        z.extend([z1, z2]);
        w.extend([w1, w2]);
        times.push(t);
    }
    if redraws > 0 {
        log::warn!("{redraws} uniform draws were redrawn while inverting eta");
    }
    let data = Dataset::new(
        y,
        delta,
        DMatrix::from_row_slice(n, 2, &z),
        DMatrix::from_row_slice(n, 2, &w),
    )?;
    Ok(Generated {
        data,
        failure_times: times,
        redraws,
    })
}

pub fn generate_dataset(
    scenario: &Scenario,
    link: LinkFamily,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    Ok(generate(scenario, link, n, seed)?.data)
}

/// Proportional-hazards design shaped like a uterine-fibroid cohort: three
/// binary covariates, one standardized smooth covariate, about 13%
/// left-censoring.
#[derive(Debug, Clone, Copy)]
pub struct FibroidDesign {
    pub beta: [f64; 3],
    pub prevalence: [f64; 3],
    /// `eta(t) = shape * log t + offset`
    pub shape: f64,
    pub offset: f64,
    /// Observation times are uniform on this interval.
    pub y_range: [f64; 2],
}

impl Default for FibroidDesign {
    fn default() -> Self {
        Self {
            beta: [1.479, -0.305, 0.114],
            prevalence: [0.3, 0.6, 0.25],
            shape: 2.0,
            // calibrated so that P(T < Y) = 0.13
            offset: -3.04,
            y_range: [0.5, 2.0],
        }
    }
}

impl FibroidDesign {
    pub fn phi(w: f64) -> f64 {
        0.8 * w * w - 0.8 / 3.0 - 0.4 * w
    }

    pub fn generate(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be >= 1".into()));
        }
        let link = LinkFamily::proportional_hazards();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut y = Vec::with_capacity(n);
        let mut delta = Vec::with_capacity(n);
        let mut z = Vec::with_capacity(3 * n);
        let mut w = Vec::with_capacity(n);
        for _ in 0..n {
            let zs: Vec<f64> = self
                .prevalence
                .iter()
                .map(|&p| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
                .collect();
            let wi = rng.random_range(-1.0..=1.0);
            let u = open_uniform(&mut rng);
            let shift: f64 =
                zs.iter().zip(&self.beta).map(|(a, b)| a * b).sum::<f64>() + Self::phi(wi);
            let t = ((link.link_unchecked(u) - shift - self.offset) / self.shape).exp();
            let obs = rng.random_range(self.y_range[0]..=self.y_range[1]);
            y.push(obs);
            delta.push(t < obs);
            z.extend(zs);
            w.push(wi);
        }
        Dataset::with_names(
            y,
            delta,
            DMatrix::from_row_slice(n, 3, &z),
            DMatrix::from_row_slice(n, 1, &w),
            vec!["z1".into(), "z2".into(), "z3".into()],
            vec!["w1".into()],
        )
    }
}
