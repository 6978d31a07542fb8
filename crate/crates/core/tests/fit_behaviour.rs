use cstrans::fit::{
    bootstrap_bands, empirical_quantile, fit, fit_unpenalized, fit_unpenalized_bic, sandwich,
    BandGrid, BootstrapOptions, Dataset, ModelSpec, Resample,
};
use cstrans::simulate::{generate, generate_dataset, Scenario, ScenarioId};
use cstrans::{Error, LinkFamily};
use nalgebra::DMatrix;

fn s1(n: usize, seed: u64) -> Dataset {
    generate_dataset(
        &Scenario::new(ScenarioId::S1),
        LinkFamily::proportional_hazards(),
        n,
        seed,
    )
    .unwrap()
}

/// Cox-de Boor recursion straight from the definition, 0/0 taken as 0.
fn cox_de_boor(knots: &[f64], i: usize, degree: usize, x: f64) -> f64 {
    if degree == 0 {
        let last = knots[knots.len() - 1];
        let right_end = x == last && knots[i + 1] == last && knots[i] < last;
        return if (knots[i] <= x && x < knots[i + 1]) || right_end {
            1.0
        } else {
            0.0
        };
    }
    let mut v = 0.0;
    let a = knots[i + degree] - knots[i];
    if a > 0.0 {
        v += (x - knots[i]) / a * cox_de_boor(knots, i, degree - 1, x);
    }
    let b = knots[i + degree + 1] - knots[i + 1];
    if b > 0.0 {
        v += (knots[i + degree + 1] - x) / b * cox_de_boor(knots, i + 1, degree - 1, x);
    }
    v
}

#[test]
fn constant_z_column_is_rejected() {
    let mut data = s1(200, 1);
    data.z.column_mut(1).fill(0.0);
    let err = fit(&data, &ModelSpec::default()).unwrap_err();
    assert!(matches!(err, Error::ConstantZColumn(2)));
    assert!(err.to_string().contains("Z column constant"));
}

#[test]
fn fitted_curves_respect_constraints_and_match_basis_oracle() {
    let data = s1(400, 2);
    let f = fit(&data, &ModelSpec::default()).unwrap();
    assert!(f.gamma.windows(2).all(|w| w[0] <= w[1]));

    let ek = f.eta_knots();
    let grid = BandGrid::spanning(&f, 1000);
    let (t, w_grids) = (grid.t, grid.w);
    let curves = f.evaluate_functions(&t, &w_grids).unwrap();
    assert_eq!(curves.n_clamped, 0);
    assert!(curves.eta.windows(2).all(|w| w[0] <= w[1]));

    let full = ek.full();
    for (x, got) in t.iter().zip(&curves.eta).step_by(37) {
        let want: f64 = (0..f.gamma.len())
            .map(|i| f.gamma[i] * cox_de_boor(&full, i, ek.degree, *x))
            .sum();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
    for j in 0..2 {
        let knots = &f.smooth_knots()[j];
        let full = knots.full();
        let coef = f.phi_coefficients(j).unwrap();
        for (x, got) in w_grids[j].iter().zip(&curves.phi[j]) {
            let want: f64 = (0..coef.len())
                .map(|i| coef[i] * cox_de_boor(&full, i, knots.degree, *x))
                .sum();
            assert!((got - want).abs() < 1e-12);
        }
        let total: f64 = (0..data.n())
            .map(|i| f.phi_at(j, data.w[(i, j)]).unwrap())
            .sum();
        assert!(total.abs() < 1e-6, "sum of phi_{j} = {total}");
    }

    // outside the knot range values are clamped and counted
    let outside = f
        .evaluate_functions(&[ek.hi() + 1.0], &[vec![], vec![]])
        .unwrap();
    assert_eq!(outside.n_clamped, 1);
    assert_eq!(outside.eta[0], f.eta_at(ek.hi()));
}

#[test]
fn covariance_is_symmetric_and_psd() {
    let f = fit(&s1(400, 3), &ModelSpec::default()).unwrap();
    let c = f.cov_beta_matrix();
    assert!((&c - c.transpose()).amax() < 1e-12);
    assert!(c.clone().symmetric_eigen().eigenvalues.min() >= -1e-10);
    for k in 0..2 {
        assert!((f.se_beta[k] - c[(k, k)].sqrt()).abs() < 1e-15);
        let [lo, hi] = f.ci_beta[k];
        assert!((hi - lo - 2.0 * 1.96 * f.se_beta[k]).abs() < 1e-12);
    }
}

#[test]
fn sandwich_without_penalty_is_inverse_information() {
    let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
    let inv = a.clone().try_inverse().unwrap();
    let s = sandwich(&inv, &a);
    assert!((s - &inv).amax() < 1e-14);
}

#[test]
fn starting_smoothing_parameter_washes_out() {
    let data = generate_dataset(
        &Scenario::new(ScenarioId::S2),
        LinkFamily::proportional_hazards(),
        400,
        4,
    )
    .unwrap();
    let base = fit(&data, &ModelSpec::default()).unwrap();
    let doubled = fit(
        &data,
        &ModelSpec {
            lambda_init: 2.0,
            ..ModelSpec::default()
        },
    )
    .unwrap();
    assert!(base.converged && doubled.converged);
    // both runs stop once an update moves theta by less than the outer
    // tolerance, so they can sit a few tolerances apart
    let gap = base
        .theta()
        .iter()
        .zip(doubled.theta())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap < 1e-3, "gap {gap:e}");
}

#[test]
fn fitted_probabilities_are_invariant_to_rescaling_w() {
    let data = s1(400, 5);
    let mut scaled = data.clone();
    scaled.w *= 3.5;
    let spec = ModelSpec::default();
    let a = fit(&data, &spec).unwrap();
    let b = fit(&scaled, &spec).unwrap();
    let pa = a.fitted_probabilities(&data).unwrap();
    let pb = b.fitted_probabilities(&scaled).unwrap();
    let worst = pa
        .iter()
        .zip(&pb)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst:e}");
}

#[test]
fn bic_selects_the_minimum_and_single_grid_matches_plain_fit() {
    let data = s1(300, 6);
    let spec = ModelSpec::default();
    let chosen = fit_unpenalized_bic(&data, &spec, &[4, 6, 8]).unwrap();
    let usable: Vec<_> = chosen.candidates.iter().filter(|c| !c.skipped).collect();
    let best = usable.iter().map(|c| c.bic).fold(f64::INFINITY, f64::min);
    let selected = usable
        .iter()
        .find(|c| c.n_interior == chosen.fit.eta_knots().interior.len())
        .unwrap();
    assert_eq!(selected.bic, best);
    for c in &usable {
        let expected = -2.0 * c.loglik + c.n_params as f64 * (data.n() as f64).ln();
        assert!((c.bic - expected).abs() < 1e-9);
    }

    let single = fit_unpenalized_bic(&data, &spec, &[5]).unwrap();
    let mut fixed = spec.clone();
    fixed.spline.n_interior = Some(5);
    let plain = fit_unpenalized(&data, &fixed).unwrap();
    assert_eq!(single.fit.theta(), plain.theta());
    assert!(single.fit.lambda.iter().all(|&l| l == 0.0));
}

#[test]
fn identity_bootstrap_collapses_bands() {
    let data = s1(200, 7);
    let mut opts = BootstrapOptions::new(2, 9);
    opts.resample = Resample::Identity;
    let bands = bootstrap_bands(&data, &ModelSpec::default(), None, &opts).unwrap();
    assert_eq!(bands.grid.t.len(), 200);
    assert_eq!(bands.lower, bands.upper);
    assert_eq!(bands.lower.eta, bands.estimate.eta);
    assert_eq!(bands.lower.phi, bands.estimate.phi);
    assert!(bands.estimate.eta.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn bootstrap_needs_two_replicates() {
    let data = s1(100, 8);
    assert!(bootstrap_bands(
        &data,
        &ModelSpec::default(),
        None,
        &BootstrapOptions::new(1, 0)
    )
    .is_err());
}

#[test]
fn empirical_quantile_matches_sorting() {
    let values = [3.0, -1.0, 7.5, 2.0, 2.0, 10.0, 0.5];
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    for level in [0.0, 0.025, 0.1, 0.5, 0.9, 0.975, 1.0] {
        let h = (sorted.len() - 1) as f64 * level;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        let want = sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]);
        assert_eq!(empirical_quantile(&values, level), want);
    }
}

#[test]
fn bootstrap_bands_cover_the_true_curve() {
    let scenario = Scenario::new(ScenarioId::S2);
    let gen = generate(&scenario, LinkFamily::proportional_hazards(), 400, 10).unwrap();
    let data = gen.data;
    let spec = ModelSpec::default();
    let full = fit(&data, &spec).unwrap();
    let grid = BandGrid::spanning(&full, 60);
    let bands = bootstrap_bands(
        &data,
        &spec,
        Some(grid.clone()),
        &BootstrapOptions::new(40, 11),
    )
    .unwrap();
    assert_eq!(bands.failed, 0);
    // the fitted curve is centred on the sample, so centre the truth the same way
    let phi1 = scenario.phi[0];
    let shift = (0..data.n()).map(|i| phi1(data.w[(i, 0)])).sum::<f64>() / data.n() as f64;
    let inside = grid.w[0]
        .iter()
        .enumerate()
        .filter(|(i, w)| {
            let truth = phi1(**w) - shift;
            bands.lower.phi[0][*i] <= truth && truth <= bands.upper.phi[0][*i]
        })
        .count();
    assert!(
        inside as f64 >= 0.9 * grid.w[0].len() as f64,
        "{inside} of {}",
        grid.w[0].len()
    );
}

#[test]
fn fit_json_roundtrip_and_coefficient_table() {
    let f = fit(&s1(200, 12), &ModelSpec::default()).unwrap();
    let back = cstrans::FitResult::from_json(&f.to_json().unwrap()).unwrap();
    assert_eq!(back, f);
    let csv = f.coefficients_csv();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("parameter,estimate,se,ci_lower,ci_upper")
    );
    assert_eq!(lines.count(), 2);
}
