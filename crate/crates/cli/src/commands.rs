use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use cstrans::fit::{
    bootstrap_bands, default_knot_grid, fit_unpenalized_bic, BandGrid, BootstrapOptions, Curves,
    Dataset, ModelSpec, Resample, SplineConfig,
};
use cstrans::io::{read_dataset_csv, write_dataset_csv};
use cstrans::parallel::Workers;
use cstrans::simulate::{generate_dataset, run_study, Method, Scenario, StudyConfig};
use cstrans::{Error, FitResult, LinkFamily, Result};
use serde::Serialize;

use crate::{
    BandsArgs, BenchmarkArgs, FitArgs, GenerateArgs, ModelArgs, ResampleArg, SimulateArgs,
};

pub enum Outcome {
    Done,
    /// Results were written but should not be trusted as they stand
    /// (no convergence, too many failed replicates).
    Unreliable(String),
}

pub fn exit_code(e: &Error) -> u8 {
    if e.is_data_error() || matches!(e, Error::Json(_) | Error::UnknownScenario(_)) {
        1
    } else {
        2
    }
}

fn model_spec(args: &ModelArgs) -> Result<ModelSpec> {
    let mut spec = ModelSpec::with_link(args.link);
    spec.penalty_order = args.penalty_order;
    spec.spline = SplineConfig {
        n_interior: args.knots,
        ..SplineConfig::default()
    };
    spec.pava_weighting = args.pava_weighting.into();
    spec.max_outer = args.max_outer;
    spec.validate()?;
    Ok(spec)
}

fn read_data(path: &Path) -> Result<Dataset> {
    read_dataset_csv(path).map_err(|e| match e {
        Error::Io(io) => Error::InvalidArgument(format!("cannot read {}: {io}", path.display())),
        other => other,
    })
}

fn workers(k: Option<usize>) -> Result<Workers> {
    if k == Some(0) {
        return Err(Error::InvalidArgument(
            "--workers must be at least 1".into(),
        ));
    }
    Ok(Workers(k))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    log::info!("wrote {}", dir.join(name).display());
    Ok(())
}

fn write_fit(dir: &Path, fit: &FitResult) -> Result<()> {
    write(dir, "fit.json", &fit.to_json()?)?;
    write(dir, "coefficients.csv", &fit.coefficients_csv())
}

fn not_converged(fit: &FitResult) -> Outcome {
    if fit.converged {
        Outcome::Done
    } else {
        Outcome::Unreliable(format!(
            "fit did not converge after {} outer iterations",
            fit.iterations.outer
        ))
    }
}

pub fn fit(args: FitArgs) -> Result<Outcome> {
    let data = read_data(&args.data)?;
    let spec = model_spec(&args.model)?;
    let fit = match args.method {
        Method::Penalized => cstrans::fit(&data, &spec)?,
        Method::UnpenalizedBic => {
            let grid = match args.model.knots {
                Some(k) => (k.saturating_sub(3)..=k + 3).collect(),
                None => default_knot_grid(data.n()),
            };
            let chosen = fit_unpenalized_bic(&data, &spec, &grid)?;
            eprintln!("knots  loglik        bic");
            for c in chosen.candidates.iter().filter(|c| !c.skipped) {
                eprintln!("{:>5}  {:>12.4}  {:>12.4}", c.n_interior, c.loglik, c.bic);
            }
            chosen.fit
        }
    };
    write_fit(&args.out, &fit)?;
    print!("{}", fit.coefficients_csv());
    Ok(not_converged(&fit))
}

fn study_config(args: &SimulateArgs) -> Result<StudyConfig> {
    let mut config = match &args.config {
        Some(path) => serde_json::from_str::<StudyConfig>(&std::fs::read_to_string(path)?)?,
        None => {
            let missing =
                |flag: &str| Error::InvalidArgument(format!("{flag} is required without --config"));
            let scenario = args.scenario.ok_or_else(|| missing("--scenario"))?;
            let n = args.n.ok_or_else(|| missing("--n"))?;
            StudyConfig::new(scenario, 0.0, n, 200, Method::Penalized, 0)
        }
    };
    if let Some(v) = args.scenario {
        config.scenario = v;
    }
    if let Some(v) = args.alpha {
        config.alpha = v;
    }
    if let Some(v) = args.n {
        config.n = v;
    }
    if let Some(v) = args.replicates {
        config.replicates = v;
    }
    if let Some(v) = args.method {
        config.method = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if args.knots.is_some() {
        config.knots = args.knots;
    }
    if let Some(v) = args.penalty_order {
        config.penalty_order = v;
    }
    config.model_spec()?.validate()?;
    Ok(config)
}

pub fn simulate(args: SimulateArgs) -> Result<Outcome> {
    let config = study_config(&args)?;
    let summary = run_study(&config, workers(args.workers)?)?;
    write(&args.out, "summary.csv", &summary.to_csv())?;
    write(
        &args.out,
        "summary.json",
        &serde_json::to_string_pretty(&summary)?,
    )?;
    print!("{}", summary.to_csv());
    eprintln!(
        "used {} of {} replicates; right-censoring {:.1}%",
        summary.used,
        summary.replicates,
        100.0 * summary.right_censoring
    );
    if summary.unreliable {
        return Ok(Outcome::Unreliable(format!(
            "{} of {} replicates failed or did not converge; summary flagged unreliable",
            summary.failed, summary.replicates
        )));
    }
    Ok(Outcome::Done)
}

fn band_csv(x: &[f64], estimate: &[f64], lo: &[f64], hi: &[f64]) -> String {
    let mut out = String::from("x,estimate,lo,hi\n");
    for i in 0..x.len() {
        let _ = writeln!(out, "{},{},{},{}", x[i], estimate[i], lo[i], hi[i]);
    }
    out
}

fn write_bands(
    dir: &Path,
    names: &[String],
    grid: &BandGrid,
    est: &Curves,
    lo: &Curves,
    hi: &Curves,
) -> Result<()> {
    write(
        dir,
        "eta.csv",
        &band_csv(&grid.t, &est.eta, &lo.eta, &hi.eta),
    )?;
    for (j, name) in names.iter().enumerate() {
        let csv = band_csv(&grid.w[j], &est.phi[j], &lo.phi[j], &hi.phi[j]);
        write(dir, &format!("phi_{name}.csv"), &csv)?;
    }
    Ok(())
}

pub fn bands(args: BandsArgs) -> Result<Outcome> {
    if args.points < 2 {
        return Err(Error::InvalidArgument("--points must be at least 2".into()));
    }
    let data = read_data(&args.data)?;
    let spec = model_spec(&args.model)?;
    let full = cstrans::fit(&data, &spec)?;
    write_fit(&args.out, &full)?;
    let grid = BandGrid::spanning(&full, args.points);

    let mut opts = BootstrapOptions::new(args.bootstrap, args.seed);
    opts.workers = workers(args.workers)?;
    opts.resample = match args.resample {
        ResampleArg::Rows => Resample::Rows,
        ResampleArg::Identity => Resample::Identity,
    };
    let bands = bootstrap_bands(&data, &spec, Some(grid), &opts)?;
    write_bands(
        &args.out,
        &full.w_names,
        &bands.grid,
        &bands.estimate,
        &bands.lower,
        &bands.upper,
    )?;
    eprintln!(
        "{} bootstrap refits succeeded, {} failed",
        bands.succeeded, bands.failed
    );
    Ok(not_converged(&full))
}

#[derive(Serialize)]
struct BenchmarkReport {
    config: StudyConfig,
    sequential_seconds: f64,
    parallel_seconds: f64,
    parallel_workers: Option<usize>,
    speedup: f64,
    identical: bool,
}

pub fn benchmark(args: BenchmarkArgs) -> Result<Outcome> {
    let config = StudyConfig::new(
        args.scenario,
        args.alpha,
        args.n,
        args.replicates,
        Method::Penalized,
        args.seed,
    );
    let parallel = workers(args.workers)?;

    let start = Instant::now();
    let seq = run_study(&config, Workers::sequential())?;
    let sequential_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let par = run_study(&config, parallel)?;
    let parallel_seconds = start.elapsed().as_secs_f64();

    let report = BenchmarkReport {
        config,
        sequential_seconds,
        parallel_seconds,
        parallel_workers: args.workers,
        speedup: sequential_seconds / parallel_seconds,
        identical: seq == par,
    };
    println!("sequential  {:>9.3} s", report.sequential_seconds);
    println!("parallel    {:>9.3} s", report.parallel_seconds);
    println!("speedup     {:>9.2}x", report.speedup);
    println!("identical   {:>9}", report.identical);
    if let Some(dir) = &args.out {
        write(
            dir,
            "benchmark.json",
            &serde_json::to_string_pretty(&report)?,
        )?;
    }
    if !report.identical {
        return Ok(Outcome::Unreliable(
            "sequential and parallel studies disagree".into(),
        ));
    }
    Ok(Outcome::Done)
}

pub fn generate(args: GenerateArgs) -> Result<Outcome> {
    let link = LinkFamily::new(args.alpha)?;
    let data = generate_dataset(&Scenario::new(args.scenario), link, args.n, args.seed)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_dataset_csv(&data, &args.out)?;
    Ok(Outcome::Done)
}
