//! Subcommand implementations.  JSON and CSV artifacts are pure functions
//! of (config, seed); wall-clock timings go to `run.log` only, so re-runs
//! of the data files are byte-identical.

use std::time::Instant;

use gaplab_core::rng::derive;
use gaplab_core::scenarios::{Scenario, ScenarioConfig, TorusDisplacement, TorusSystem};
use gaplab_core::spectral::{
    axis_and_diagonal_grid, axis_grid, build_dual_operator, build_p_lambda, dominant_eigen,
    scan_r_mu_torus, FrequencyBall, ModifiedDisplacement, ScanReport, SpectralReport,
    SCAN_BALL_RADIUS, SCAN_ITERATES, SCAN_TOL,
};
use gaplab_core::spectral::spectral_radius;
use gaplab_core::stats::{empirical_covariance, recurrence_profile, RecurrenceReport};
use gaplab_core::verify::{self, VerifyOptions, CRITERION_COUNT};
use gaplab_core::walk::{check_centering, par_map_paths, run, CenteringReport, System, Thinning};
use gaplab_core::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::report::{ensure_dir, write_json, write_run_log, write_trajectory_csv, TOOL_VERSION};

// Seed words for the independent sub-tasks of a run.
const TAG_CENTERING: u64 = 0xCE;
const TAG_RECURRENCE: u64 = 0x6EC;
const TAG_DUAL: u64 = 0xD0A1;
const TAG_TWIST: u64 = 0x7715;
const TAG_SCAN: u64 = 0x5CA;

/// Most profile statistics saturate around a thousand paths; the ensemble
/// itself can be larger for endpoint moments.
const PROFILE_PATH_CAP: usize = 1000;
const CENTERING_SAMPLES: u64 = 50_000;

fn log_header(hash: &str, command: &str) -> Vec<String> {
    vec![
        format!("# gaplab {TOOL_VERSION} config {hash}"),
        format!("command {command}"),
    ]
}

// ------------------------------------------------------------- simulate ----

#[derive(Serialize)]
struct WorkCounters {
    ensemble_steps: u64,
    profile_steps: u64,
    centering_samples: u64,
}

#[derive(Serialize)]
struct SimulateSummary {
    scenario: &'static str,
    description: String,
    dim: usize,
    n: usize,
    paths: usize,
    seed: u64,
    work: WorkCounters,
    /// Mean of the normalized endpoints S_n / sqrt(n), one entry per axis.
    endpoint_mean: Vec<f64>,
    endpoint_covariance: Vec<Vec<f64>>,
    max_endpoint_norm: f64,
    centering: CenteringReport,
    recurrence: RecurrenceReport,
    trajectory_files: Vec<String>,
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let seed = cfg.require_seed()?;
    let scen = Scenario::build(&cfg.scenario)?;
    ensure_dir(&cfg.out)?;
    match &scen {
        Scenario::Torus(s) => simulate_on(s, cfg, seed),
        Scenario::Nil(s) => simulate_on(s, cfg, seed),
        Scenario::Scenery(s) => simulate_on(s, cfg, seed),
        Scenario::Motion(s) => simulate_on(s, cfg, seed),
        Scenario::Coin(s) => simulate_on(s, cfg, seed),
    }
}

fn simulate_on<S: System>(sys: &S, cfg: &RunConfig, seed: u64) -> Result<()> {
    let hash = cfg.hash();
    let t_total = Instant::now();
    let n = cfg.n;

    let t_phase = Instant::now();
    let endpoints: Vec<Vec<f64>> = par_map_paths(sys, seed, cfg.paths as u64, |mut w| {
        for _ in 0..n {
            w.step();
        }
        let scale = 1.0 / (n as f64).sqrt();
        w.sum.iter().map(|s| s * scale).collect()
    });
    let sec_ensemble = t_phase.elapsed().as_secs_f64();
    if endpoints.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "non-finite partial sums: the ensemble diverged".into(),
        ));
    }
    let max_endpoint_norm = endpoints
        .iter()
        .map(|e| e.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let (endpoint_mean, cov) = empirical_covariance(&endpoints)?;
    let dim = sys.dim();
    let endpoint_covariance: Vec<Vec<f64>> =
        (0..dim).map(|i| (0..dim).map(|j| cov[(i, j)]).collect()).collect();

    let t_phase = Instant::now();
    let centering = check_centering(sys, CENTERING_SAMPLES, derive(seed, TAG_CENTERING));
    let sec_centering = t_phase.elapsed().as_secs_f64();

    let t_phase = Instant::now();
    let profile_paths = cfg.paths.min(PROFILE_PATH_CAP);
    let recurrence =
        recurrence_profile(sys, derive(seed, TAG_RECURRENCE), profile_paths, &cfg.horizons)?;
    let sec_recurrence = t_phase.elapsed().as_secs_f64();

    let t_phase = Instant::now();
    let mut trajectory_files = Vec::new();
    for p in 0..cfg.csv_paths.min(cfg.paths) {
        let t = run(sys, seed, p as u64, n, Thinning::Stride(cfg.stride));
        let name = format!("trajectory_{p:03}.csv");
        write_trajectory_csv(&cfg.out, &name, &t, cfg.stride, &hash)?;
        trajectory_files.push(name);
    }
    let sec_csv = t_phase.elapsed().as_secs_f64();

    let summary = SimulateSummary {
        scenario: cfg.scenario.id(),
        description: cfg.scenario.describe(),
        dim,
        n,
        paths: cfg.paths,
        seed,
        work: WorkCounters {
            ensemble_steps: (cfg.paths * n) as u64,
            profile_steps: (profile_paths * cfg.horizons.last().copied().unwrap_or(0)) as u64,
            centering_samples: CENTERING_SAMPLES,
        },
        endpoint_mean,
        endpoint_covariance,
        max_endpoint_norm,
        centering,
        recurrence,
        trajectory_files,
    };
    write_json(&cfg.out, "summary.json", &hash, &summary)?;

    let mut log = log_header(&hash, "simulate");
    log.push(format!("scenario {}", cfg.scenario.id()));
    log.push(format!("wall_ensemble_sec {sec_ensemble:.3}"));
    log.push(format!("wall_centering_sec {sec_centering:.3}"));
    log.push(format!("wall_recurrence_sec {sec_recurrence:.3}"));
    log.push(format!("wall_csv_sec {sec_csv:.3}"));
    log.push(format!("wall_total_sec {:.3}", t_total.elapsed().as_secs_f64()));
    write_run_log(&cfg.out, &log)?;

    println!(
        "simulate {}: {} paths x {} steps, endpoint |S_n|/sqrt(n) up to {:.3}",
        cfg.scenario.id(),
        cfg.paths,
        n,
        max_endpoint_norm
    );
    println!(
        "centering within 4 sigma: {}; summary in {}",
        centering_verdict(&summary.centering),
        cfg.out.join("summary.json").display()
    );
    Ok(())
}

fn centering_verdict(c: &CenteringReport) -> &'static str {
    if c.within_4_sigma {
        "yes"
    } else {
        "NO"
    }
}

// ------------------------------------------------------------- spectral ----

#[derive(Serialize)]
struct KRow {
    lambda: Vec<f64>,
    k_re: f64,
    k_im: f64,
    k_abs: f64,
    iterations: usize,
    converged: bool,
    tie: bool,
}

#[derive(Serialize)]
struct PoissonSection {
    ball_radius: f64,
    cutoff: f64,
    terms: usize,
    residual_max: f64,
    converged: bool,
    error: Option<String>,
}

#[derive(Serialize)]
struct SpectralSummary {
    scenario: &'static str,
    dim_torus: usize,
    ball_radius: f64,
    seed: u64,
    /// Radius estimates on the mean-zero compression at R/4, R/2, R.
    dual: Vec<SpectralReport>,
    twisted: Vec<KRow>,
    scan: ScanReport,
    scan_ball_radius: f64,
    poisson: Option<PoissonSection>,
    convergence_flags: Vec<String>,
}

/// Guards against balls whose bounding cube would not fit in memory.
fn sized_ball(d: usize, radius: f64) -> Result<FrequencyBall> {
    let m = radius.floor().max(0.0);
    let cube = (2.0 * m + 1.0).powi(d as i32);
    if cube > 2.0e8 {
        return Err(Error::Config(format!(
            "ball radius {radius} in dimension {d} scans ~{cube:.1e} lattice points; \
             reduce --ball-radius"
        )));
    }
    let ball = FrequencyBall::new(d, radius)?;
    if ball.len() > 500_000 {
        return Err(Error::Config(format!(
            "ball radius {radius} in dimension {d} keeps {} frequencies; reduce --ball-radius",
            ball.len()
        )));
    }
    Ok(ball)
}

/// Scan calibration was done on moderate balls; keep the scan ball at the
/// calibrated radius but never above the per-dimension budget.
fn scan_radius(budget: f64) -> f64 {
    SCAN_BALL_RADIUS.min(budget).max(1.0)
}

pub fn cmd_spectral(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let seed = cfg.require_seed()?;
    let scen = Scenario::build(&cfg.scenario)?;
    let Some((d, matrices, weights)) = scen.factor_matrices() else {
        return Err(Error::Unsupported(format!(
            "scenario '{}' has no torus factor with lattice Fourier support, so truncated \
             transfer operators and their twists are not defined for it; \
             frequency-space analysis covers torus_sl2, q_torus3 and heisenberg_h7",
            cfg.scenario.id()
        )));
    };
    ensure_dir(&cfg.out)?;
    let hash = cfg.hash();
    let t_total = Instant::now();
    let radius = cfg.resolved_ball_radius(d);
    let mut flags = Vec::new();

    // The twisted/Poisson parts act on a sawtooth torus system: the torus
    // scenarios directly, the nil scenario through its torus factor.
    let torus: TorusSystem = match &scen {
        Scenario::Torus(s) => s.clone(),
        _ => TorusSystem::new(
            &format!("{}-factor", cfg.scenario.id()),
            matrices.clone(),
            weights.clone(),
            TorusDisplacement::Sawtooth,
        )?,
    };

    let t_phase = Instant::now();
    let mut dual = Vec::new();
    for (i, r) in [radius / 4.0, radius / 2.0, radius]
        .into_iter()
        .map(|r| r.max(1.0))
        .enumerate()
    {
        let ball = sized_ball(d, r)?;
        let op = build_dual_operator(&matrices, &weights, &ball)?;
        let rep = spectral_radius(&op, 300, 1e-4, 3, derive(seed, TAG_DUAL + i as u64));
        if !rep.converged {
            flags.push(format!("dual radius estimate at R={r} did not stabilize"));
        }
        dual.push(rep);
    }
    let sec_dual = t_phase.elapsed().as_secs_f64();

    let t_phase = Instant::now();
    let ball = sized_ball(d, radius)?;
    let grid = if cfg.lambda_grid.diagonal {
        axis_and_diagonal_grid(d, cfg.lambda_grid.max, cfg.lambda_grid.step)
    } else {
        axis_grid(d, cfg.lambda_grid.max, cfg.lambda_grid.step)
    };
    // Rows are independent; collect preserves grid order, so the table is
    // identical under any thread count.  High-dimensional rows with
    // near-tied moduli can hit the iteration cap; they are reported with
    // converged = false rather than stalling the run.
    let twisted: Vec<KRow> = grid
        .par_iter()
        .enumerate()
        .map(|(i, lambda)| -> Result<KRow> {
            let op = build_p_lambda(&torus, lambda, &ball)?;
            let eig = dominant_eigen(&op, 1e-9, 800, derive(seed, TAG_TWIST + i as u64));
            Ok(KRow {
                lambda: lambda.clone(),
                k_re: eig.value.re,
                k_im: eig.value.im,
                k_abs: eig.value.norm(),
                iterations: eig.iterations,
                converged: eig.converged,
                tie: eig.tie,
            })
        })
        .collect::<Result<_>>()?;
    for row in twisted.iter().filter(|r| !r.converged) {
        flags.push(format!("twisted eigenvalue at lambda={:?} did not converge", row.lambda));
    }
    let sec_twisted = t_phase.elapsed().as_secs_f64();

    let t_phase = Instant::now();
    let scan_ball = sized_ball(d, scan_radius(radius))?;
    let scan = scan_r_mu_torus(&torus, &grid, &scan_ball, SCAN_ITERATES, SCAN_TOL, derive(seed, TAG_SCAN))?;
    let sec_scan = t_phase.elapsed().as_secs_f64();

    let t_phase = Instant::now();
    let cutoff = 1e-12;
    let poisson = match ModifiedDisplacement::new(&torus, &ball, cutoff, 4000) {
        Ok(md) => Some(PoissonSection {
            ball_radius: radius,
            cutoff,
            terms: md.terms(),
            residual_max: md.residual().iter().fold(0.0f64, |a, &v| a.max(v.abs())),
            converged: true,
            error: None,
        }),
        Err(Error::Numerical(msg)) => {
            flags.push(format!("Poisson solve: {msg}"));
            Some(PoissonSection {
                ball_radius: radius,
                cutoff,
                terms: 0,
                residual_max: f64::NAN,
                converged: false,
                error: Some(msg),
            })
        }
        Err(e) => return Err(e),
    };
    let sec_poisson = t_phase.elapsed().as_secs_f64();

    let dual_dead = dual.iter().all(|r| !r.converged);
    let twist_dead = !twisted.is_empty() && twisted.iter().all(|r| !r.converged);
    let poisson_dead = poisson.as_ref().map(|p| !p.converged).unwrap_or(false);
    if dual_dead && twist_dead && poisson_dead {
        return Err(Error::Numerical(
            "no spectral estimate converged at this truncation; enlarge --ball-radius".into(),
        ));
    }

    let summary = SpectralSummary {
        scenario: cfg.scenario.id(),
        dim_torus: d,
        ball_radius: radius,
        seed,
        dual,
        twisted,
        scan,
        scan_ball_radius: scan_ball.radius,
        poisson,
        convergence_flags: flags,
    };
    write_json(&cfg.out, "spectral.json", &hash, &summary)?;

    let mut log = log_header(&hash, "spectral");
    log.push(format!("scenario {}", cfg.scenario.id()));
    log.push(format!("wall_dual_sec {sec_dual:.3}"));
    log.push(format!("wall_twisted_sec {sec_twisted:.3}"));
    log.push(format!("wall_scan_sec {sec_scan:.3}"));
    log.push(format!("wall_poisson_sec {sec_poisson:.3}"));
    log.push(format!("wall_total_sec {:.3}", t_total.elapsed().as_secs_f64()));
    write_run_log(&cfg.out, &log)?;

    for rep in &summary.dual {
        println!(
            "dual radius (R = {:>5.1}, size {:>6}): {:.6}{}",
            rep.ball_radius,
            rep.size,
            rep.radius,
            if rep.converged { "" } else { "  [not stabilized]" }
        );
    }
    println!(
        "twisted table: {} rows on |lambda| <= {} (step {}), scan flagged {} of {}",
        summary.twisted.len(),
        cfg.lambda_grid.max,
        cfg.lambda_grid.step,
        summary.scan.flagged_count,
        summary.scan.rows.len()
    );
    if let Some(p) = &summary.poisson {
        if p.converged {
            println!("Poisson solve: {} terms, max residual {:.3e}", p.terms, p.residual_max);
        } else {
            println!("Poisson solve did not converge: {}", p.error.as_deref().unwrap_or("?"));
        }
    }
    println!("report in {}", cfg.out.join("spectral.json").display());
    Ok(())
}

// --------------------------------------------------------------- verify ----

#[derive(Serialize)]
struct VerifySummary {
    seed: u64,
    quick: bool,
    passed: bool,
    mandatory_failures: usize,
    criteria: Vec<verify::CriterionResult>,
}

/// Runs the acceptance criteria, streaming one table line per criterion.
/// Returns true when every mandatory criterion passed.
pub fn cmd_verify(out: &std::path::Path, seed: u64, quick: bool) -> Result<bool> {
    ensure_dir(out)?;
    let opts = VerifyOptions { quick, seed };
    let mut results = Vec::with_capacity(CRITERION_COUNT);
    println!("acceptance criteria (seed {seed}{}):", if quick { ", quick" } else { "" });
    for index in 1..=CRITERION_COUNT {
        let res = verify::run_criterion(index, &opts)?;
        let status = match (res.passed, res.advisory) {
            (true, false) => "PASS",
            (true, true) => "PASS (advisory)",
            (false, true) => "FAIL (advisory)",
            (false, false) => "FAIL",
        };
        println!(
            "criterion {:02} {:<28} {:<16} {:>8.2}s  {}",
            res.index, res.name, status, res.runtime_sec, res.title
        );
        for c in res.checks.iter().filter(|c| !c.passed) {
            println!(
                "    failed: {} = {:.6e} (want {} {:.6e})",
                c.label, c.measured, c.op, c.threshold
            );
        }
        results.push(res);
    }
    let mandatory_failures = verify::count_mandatory_failures(&results);
    let passed = mandatory_failures == 0;
    println!(
        "{}: {} criteria, {} mandatory failure(s)",
        if passed { "PASS" } else { "FAIL" },
        results.len(),
        mandatory_failures
    );

    // The verify config is just (seed, quick); hash those for the stamp.
    let hash = format!("verify-{seed:016x}-{}", u8::from(quick));
    let summary = VerifySummary { seed, quick, passed, mandatory_failures, criteria: results };
    write_json(out, "verify.json", &hash, &summary)?;
    write_run_log(out, &log_header(&hash, "verify"))?;
    println!("report in {}", out.join("verify.json").display());
    Ok(passed)
}

// ------------------------------------------------------- list-scenarios ----

pub fn cmd_list_scenarios() {
    for id in ScenarioConfig::all_ids() {
        let cfg = ScenarioConfig::from_id(id).expect("catalog ids parse");
        println!("{id:<20} {}", cfg.describe());
    }
}
