//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use cstrans::basis::{BlockLayout, KnotVector, PenaltyAssembly};
use cstrans::fit::{fellner_schall_update, inner_loop, sandwich, InnerOptions, Problem, SpdFactor};
use cstrans::isotonic::{pava, PavaWeighting};
use cstrans::LinkFamily;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

// ---------------------------------------------------------------- isotonic

/// Exhaustive weighted isotonic regression: every split into consecutive
/// blocks, keep the monotone ones, take the cheapest.
pub fn brute_force_isotonic(x: &[f64], w: &[f64]) -> Vec<f64> {
    let p = x.len();
    if p == 0 {
        return Vec::new();
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (p - 1)) {
        let mut fitted = vec![0.0; p];
        let mut start = 0;
        let mut means = Vec::new();
        for end in 1..=p {
            let cut = end == p || mask & (1 << (end - 1)) != 0;
            if cut {
                let sw: f64 = w[start..end].iter().sum();
                let m = x[start..end]
                    .iter()
                    .zip(&w[start..end])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    / sw;
                fitted[start..end].iter_mut().for_each(|f| *f = m);
                means.push(m);
                start = end;
            }
        }
        if means.windows(2).any(|m| m[0] > m[1]) {
            continue;
        }
        let cost: f64 = x
            .iter()
            .zip(w)
            .zip(&fitted)
            .map(|((a, b), f)| b * (a - f).powi(2))
            .sum();
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, fitted));
        }
    }
    best.expect("the all-pooled split is always monotone").1
}

fn random_isotonic_instance(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let p = rng.random_range(1..=8);
    let trend = rng.random_range(-1.0..1.0);
    let x = (0..p).map(|k| trend * k as f64 + normal(rng)).collect();
    let w = (0..p).map(|_| rng.random_range(0.05..5.0)).collect();
    (x, w)
}

/// Largest deviation of `pava` from the exhaustive oracle.
pub fn pava_oracle_error(instances: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let (x, w) = random_isotonic_instance(&mut rng);
        let got = pava(&x, &w).unwrap();
        let want = brute_force_isotonic(&x, &w);
        for (a, b) in got.iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// The projection only reweights the gamma block; compare it with the oracle
/// under the same weights.
pub fn projection_oracle_error(instances: usize, seed: u64, weighting: PavaWeighting) -> f64 {
    let mut rng = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let (g, v) = random_isotonic_instance(&mut rng);
        let before = rng.random_range(0..3);
        let after = rng.random_range(0..3);
        let mut theta: Vec<f64> = (0..before).map(|_| normal(&mut rng)).collect();
        let start = theta.len();
        theta.extend_from_slice(&g);
        theta.extend((0..after).map(|_| normal(&mut rng)));
        let range = start..start + g.len();
        let got = cstrans::isotonic::project_gamma(&theta, range.clone(), &v, weighting).unwrap();
        let w: Vec<f64> = v.iter().map(|&s| weighting.weight(s)).collect();
        let want = brute_force_isotonic(&g, &w);
        for (k, a) in got.iter().enumerate() {
            let b = if range.contains(&k) {
                want[k - start]
            } else {
                theta[k]
            };
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

// ---------------------------------------------------------------- likelihood

/// `G` and `G'` written out directly, without the stable rewrites.
pub fn naive_g(alpha: f64, v: f64) -> f64 {
    if alpha == 0.0 {
        1.0 - (-v.exp()).exp()
    } else {
        1.0 - (1.0 + alpha * v.exp()).powf(-1.0 / alpha)
    }
}

pub fn naive_g_prime(alpha: f64, v: f64) -> f64 {
    if alpha == 0.0 {
        v.exp() * (-v.exp()).exp()
    } else {
        v.exp() * (1.0 + alpha * v.exp()).powf(-1.0 / alpha - 1.0)
    }
}

pub struct LikelihoodInstance {
    pub x: DMatrix<f64>,
    pub delta: Vec<bool>,
    pub theta: Vec<f64>,
    pub s: DMatrix<f64>,
    pub link: LinkFamily,
}

impl LikelihoodInstance {
    pub fn random(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Self {
        let alphas = [0.0, 0.25, 0.5, 1.0, 2.0];
        let alpha = alphas[rng.random_range(0..alphas.len())];
        let x = DMatrix::from_fn(n, p, |_, _| 0.6 * normal(rng));
        let theta = (0..p).map(|_| 0.5 * normal(rng)).collect();
        let delta = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let a = DMatrix::from_fn(p, p, |_, _| normal(rng));
        let s = a.transpose() * a * (rng.random_range(0.0..1.0) / p as f64);
        Self {
            x,
            delta,
            theta,
            s,
            link: LinkFamily::new(alpha).unwrap(),
        }
    }

    pub fn problem(&self) -> Problem<'_> {
        Problem::new(&self.x, &self.delta, self.link).unwrap()
    }

    pub fn eta(&self, i: usize) -> f64 {
        self.x
            .row(i)
            .iter()
            .zip(&self.theta)
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// Worst `|grad - central difference|_inf / max(|grad|_inf, 1)` over random instances.
pub fn gradient_fd_error(instances: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let n = rng.random_range(10..60);
        let p = rng.random_range(2..8);
        let inst = LikelihoodInstance::random(&mut rng, n, p);
        let problem = inst.problem();
        let grad = problem.gradient(&inst.theta, &inst.s).unwrap();
        let mut err = 0.0f64;
        for k in 0..p {
            let h = 1e-5;
            let mut up = inst.theta.clone();
            let mut down = inst.theta.clone();
            up[k] += h;
            down[k] -= h;
            let fd = (problem.penalized_loglik(&up, &inst.s).unwrap()
                - problem.penalized_loglik(&down, &inst.s).unwrap())
                / (2.0 * h);
            err = err.max((grad[k] - fd).abs());
        }
        worst = worst.max(err / grad.amax().max(1.0));
    }
    worst
}

/// `-E[Hessian]` of the Bernoulli log-likelihood, built observation by
/// observation from the second derivative in `eta` and averaged over both
/// outcomes.
pub fn expected_neg_hessian(inst: &LikelihoodInstance) -> DMatrix<f64> {
    let alpha = inst.link.alpha;
    let p = inst.x.ncols();
    let mut out = inst.s.clone();
    for i in 0..inst.x.nrows() {
        let v = inst.eta(i);
        let g = naive_g(alpha, v);
        let d1 = naive_g_prime(alpha, v);
        let h = 1e-5;
        let d2 = (naive_g_prime(alpha, v + h) - naive_g_prime(alpha, v - h)) / (2.0 * h);
        let if_event = (d2 * g - d1 * d1) / (g * g);
        let if_censored = -(d2 * (1.0 - g) + d1 * d1) / ((1.0 - g) * (1.0 - g));
        let curvature = g * if_event + (1.0 - g) * if_censored;
        let row = inst.x.row(i);
        for a in 0..p {
            for b in 0..p {
                out[(a, b)] -= curvature * row[a] * row[b];
            }
        }
    }
    out
}

/// Relative deviation of the sandwich from `M F M` with `M` from a dense LU inverse.
pub fn sandwich_oracle_error(instances: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let inst = LikelihoodInstance::random(&mut rng, 40, 6);
        let problem = inst.problem();
        let w = problem.working(&inst.theta).unwrap();
        let fisher = problem.fisher_from(&w);
        let info = &fisher + &inst.s;
        let ours = sandwich(&SpdFactor::new(&info).unwrap().inverse(), &fisher);
        let m = info.clone().lu().try_inverse().unwrap();
        let oracle = &m * &fisher * &m;
        worst = worst.max((ours - &oracle).amax() / oracle.amax());
    }
    worst
}

// ---------------------------------------------------------------- smoothing

/// Single-term, 4-coefficient update recomputed with an SVD pseudoinverse and
/// an LU inverse. Returns `(ours, oracle)`.
pub fn fellner_schall_dense(lambda: f64, theta: &[f64; 4], seed: u64) -> (f64, f64) {
    let mut rng = rng(seed);
    let layout = BlockLayout {
        q: 0,
        p0: 4,
        smooth: vec![],
    };
    let penalty = PenaltyAssembly::new(layout, 2).unwrap();
    let s1 = penalty.embedded(0);
    let a = DMatrix::from_fn(6, 4, |_, _| normal(&mut rng));
    let info = a.transpose() * a + &s1 * (lambda * lambda);
    let info_inv = info.clone().lu().try_inverse().unwrap();

    let ours = fellner_schall_update(&[lambda], theta, &penalty, &info_inv, 1e-8, 1e6).unwrap();

    let s = &s1 * (lambda * lambda);
    let svd = s.clone().svd(true, true);
    let cutoff = 1e-10 * svd.singular_values.max();
    let s_pinv = svd.pseudo_inverse(cutoff).unwrap();
    let t = DVector::from_column_slice(theta);
    let numer = (&s_pinv * &s1).trace() - (&info_inv * &s1).trace();
    let quad = t.dot(&(&s1 * &t));
    let oracle = (numer / quad * lambda * lambda).sqrt();
    (ours.lambda[0], oracle)
}

// ---------------------------------------------------------------- inner loop

/// Toy monotone problem: three quadratic B-spline coefficients, fifteen
/// observations whose event pattern dips in the middle.
pub struct ToyProblem {
    pub x: DMatrix<f64>,
    pub delta: Vec<bool>,
    pub s: DMatrix<f64>,
    pub link: LinkFamily,
}

impl ToyProblem {
    pub fn new(link: LinkFamily) -> Self {
        let knots = KnotVector::new(2, vec![], 0.0, 1.0).unwrap();
        let t: Vec<f64> = (0..15).map(|i| i as f64 / 14.0).collect();
        let (x, _) = knots.design(&t);
        let pattern = "011101000110111";
        let delta = pattern.chars().map(|c| c == '1').collect();
        let penalty = PenaltyAssembly::new(
            BlockLayout {
                q: 0,
                p0: 3,
                smooth: vec![],
            },
            2,
        )
        .unwrap();
        let s = penalty.combined(&[0.3]).unwrap();
        Self { x, delta, s, link }
    }

    pub fn problem(&self) -> Problem<'_> {
        Problem::new(&self.x, &self.delta, self.link).unwrap()
    }

    pub fn objective(&self, theta: &[f64]) -> f64 {
        self.problem().penalized_loglik(theta, &self.s).unwrap()
    }

    /// Maximizer over `g1 <= g2 <= g3` by repeatedly refined grid search in
    /// `(g1, g2 - g1, g3 - g2)`.
    pub fn grid_optimum(&self) -> Vec<f64> {
        let steps = 24;
        let mut center = [0.0, 1.0, 1.0];
        let mut half = [8.0, 8.0, 8.0];
        for _ in 0..40 {
            let mut best = (f64::NEG_INFINITY, center);
            for i in 0..=steps {
                for j in 0..=steps {
                    for k in 0..=steps {
                        let at = |c: usize, s: usize| {
                            center[c] - half[c] + 2.0 * half[c] * s as f64 / steps as f64
                        };
                        let (g1, d2, d3) = (at(0, i), at(1, j).max(0.0), at(2, k).max(0.0));
                        let theta = [g1, g1 + d2, g1 + d2 + d3];
                        let f = self.objective(&theta);
                        if f > best.0 {
                            best = (f, [g1, d2, d3]);
                        }
                    }
                }
            }
            center = best.1;
            for h in &mut half {
                *h *= 0.5;
            }
        }
        vec![
            center[0],
            center[0] + center[1],
            center[0] + center[1] + center[2],
        ]
    }

    pub fn inner(
        &self,
        init: &[f64],
        weighting: PavaWeighting,
        refine: bool,
    ) -> cstrans::fit::InnerResult {
        let opts = InnerOptions {
            tol: 1e-10,
            max_iter: 200,
            max_halvings: 20,
            weighting,
            refine,
        };
        inner_loop(&self.problem(), &self.s, 0..3, init, &opts).unwrap()
    }
}
