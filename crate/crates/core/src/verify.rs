//! Acceptance checks: one function per numbered criterion, each returning
//! structured results (measured value, threshold, direction, pass flag) so
//! that the CLI and the acceptance test target share a single source of
//! truth.  Two criteria are advisory by design; quick mode trades sample
//! sizes for runtime and demotes every size-reduced criterion to advisory.

use std::time::Instant;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{q_fixed_vector, q_of, HeisAuto, HeisPoint, IntMatrix};
use crate::rng::{derive, CounterRng};
use crate::scenarios::{
    coin_system, scenario_motion_group, scenario_scenery_free_group, scenario_torus_sl2,
    TorusDisplacement, TorusSystem, TrigPoly,
};
use crate::spectral::{
    axis_and_diagonal_grid, axis_grid, build_dual_operator, dual_orbit, kesten_return_estimate,
    perturbation_check, scan_lattice_proxy, scan_r_mu_torus, sigma_form, spectral_radius,
    FrequencyBall, ModifiedDisplacement, OrbitStatus, SCAN_ITERATES, SCAN_TOL,
};
use crate::stats::{
    binomial_window_mass, clt_test, llt_estimate, recurrence_profile, transience_profile, BoxSpec,
};
use crate::walk::{
    apply_word, check_centering, cocycle_sum, par_map_paths, run, write_sums_csv, System, Thinning,
};

pub const CRITERION_COUNT: usize = 14;
pub const DEFAULT_SEED: u64 = 7;

/// One measured quantity against one pinned threshold.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub label: String,
    pub measured: f64,
    /// Comparison direction: "<=", ">=", or "==".
    pub op: &'static str,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn le(label: impl Into<String>, measured: f64, threshold: f64) -> Check {
        Check {
            label: label.into(),
            measured,
            op: "<=",
            threshold,
            passed: measured <= threshold,
        }
    }

    pub fn ge(label: impl Into<String>, measured: f64, threshold: f64) -> Check {
        Check {
            label: label.into(),
            measured,
            op: ">=",
            threshold,
            passed: measured >= threshold,
        }
    }

    pub fn eq_count(label: impl Into<String>, measured: f64, expected: f64) -> Check {
        Check {
            label: label.into(),
            measured,
            op: "==",
            threshold: expected,
            passed: measured == expected,
        }
    }
}

fn push_band(checks: &mut Vec<Check>, label: &str, measured: f64, lo: f64, hi: f64) {
    checks.push(Check::ge(format!("{label} (lower)"), measured, lo));
    checks.push(Check::le(format!("{label} (upper)"), measured, hi));
}

/// Result of one criterion run.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub index: usize,
    pub name: &'static str,
    pub title: &'static str,
    /// Advisory results are reported but do not gate the suite.
    pub advisory: bool,
    /// True when quick mode reduced this criterion's sample sizes.
    pub reduced: bool,
    pub seed: u64,
    /// Wall-clock time; not serialized, so written reports stay
    /// byte-identical across re-runs.
    #[serde(skip_serializing)]
    pub runtime_sec: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    /// Reduced sample sizes; affected criteria are demoted to advisory.
    pub quick: bool,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { quick: false, seed: DEFAULT_SEED }
    }
}

/// (name, title, advisory, reduced-in-quick) per criterion, 1-based order.
const INFO: [(&str, &str, bool, bool); CRITERION_COUNT] = [
    (
        "symbolic-algebra",
        "symmetric-square homomorphism and fixed vectors, exact integers",
        false,
        false,
    ),
    ("heisenberg-laws", "Heisenberg group laws and automorphisms", false, false),
    ("cocycle-identities", "cocycle concatenation and coboundary telescoping", false, false),
    ("dual-radius-orbits", "restricted dual radius and escaping character orbits", false, false),
    ("poisson-centering", "Poisson solve residual and conditional centering", false, false),
    ("variance-form-match", "twisted eigenvalue versus quadratic variance form", false, true),
    ("clt", "Gaussian limit of normalized sums on the torus", false, true),
    ("recurrence-contrast", "running minima shrink with horizon (D = 2)", false, true),
    ("scenery-transience", "escape and diffusive exponent for scenery sums (D = 3)", false, true),
    ("local-limit", "box-hit normalization against oracle and Gaussian mass", false, true),
    ("free-group-radius", "return-probability radius on the free group", false, false),
    ("degenerate-frequency-scan", "flagged frequencies match the expected set", true, true),
    ("motion-local-limit", "motion-group centering and box-hit stabilization", true, true),
    ("thread-determinism", "bitwise-identical results under different thread counts", false, false),
];

pub fn criterion_name(index: usize) -> &'static str {
    INFO[index - 1].0
}

/// Runs one criterion (1-based); `Err` only on infrastructure failure, not
/// on a failed check.
pub fn run_criterion(index: usize, opts: &VerifyOptions) -> Result<CriterionResult> {
    if index == 0 || index > CRITERION_COUNT {
        return Err(Error::Config(format!("criterion index {index} out of range 1..=14")));
    }
    let (name, title, advisory, reduced_in_quick) = INFO[index - 1];
    let seed = derive(opts.seed, index as u64);
    let quick = opts.quick;
    let start = Instant::now();
    let (mut checks, notes) = match index {
        1 => c01_symbolic_algebra(seed)?,
        2 => c02_heisenberg_laws(seed)?,
        3 => c03_cocycle_identities(seed)?,
        4 => c04_dual_radius_orbits(seed)?,
        5 => c05_poisson_centering(seed)?,
        6 => c06_variance_form_match(seed, quick)?,
        7 => c07_clt(seed, quick)?,
        8 => c08_recurrence_contrast(seed, quick)?,
        9 => c09_scenery_transience(seed, quick)?,
        10 => c10_local_limit(seed, quick)?,
        11 => c11_free_group_radius(seed)?,
        12 => c12_degenerate_frequency_scan(seed, quick)?,
        13 => c13_motion_local_limit(seed, quick)?,
        14 => c14_thread_determinism(seed)?,
        _ => unreachable!(),
    };
    let runtime_sec = start.elapsed().as_secs_f64();
    // Per-criterion runtime budgets, where one is pinned.
    match index {
        4 => checks.push(Check::le("runtime (s)", runtime_sec, 60.0)),
        7 => checks.push(Check::le("runtime (s)", runtime_sec, 180.0)),
        10 => checks.push(Check::le("runtime (s)", runtime_sec, 300.0)),
        _ => {}
    }
    let reduced = quick && reduced_in_quick;
    Ok(CriterionResult {
        index,
        name,
        title,
        advisory: advisory || reduced,
        reduced,
        seed,
        runtime_sec,
        passed: checks.iter().all(|c| c.passed),
        checks,
        notes,
    })
}

pub fn run_all(opts: &VerifyOptions) -> Result<Vec<CriterionResult>> {
    (1..=CRITERION_COUNT).map(|i| run_criterion(i, opts)).collect()
}

/// Number of non-advisory criteria that failed.
pub fn count_mandatory_failures(results: &[CriterionResult]) -> usize {
    results.iter().filter(|r| !r.advisory && !r.passed).count()
}

// ------------------------------------------------------------ helpers ----

fn sl2_pair() -> (IntMatrix, IntMatrix) {
    (
        IntMatrix::from_i64(2, &[2, 1, 1, 1]).unwrap(),
        IntMatrix::from_i64(2, &[1, 1, 1, 2]).unwrap(),
    )
}

/// Index pairing g -> g^-1 within a generator list.
fn inverse_pairing(mats: &[IntMatrix]) -> Vec<usize> {
    mats.iter()
        .map(|m| {
            mats.iter()
                .position(|n| m.mul(n).is_identity())
                .expect("generator list must be closed under inverses")
        })
        .collect()
}

fn random_letters(rng: &mut CounterRng, count: usize, len: usize) -> Vec<usize> {
    (0..len).map(|_| ((rng.next_unit() * count as f64) as usize).min(count - 1)).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

// ---------------------------------------------------------- criterion 1 ----

/// Exact integer identities of the symmetric-square construction: it is a
/// homomorphism on products of random generator words, preserves the
/// determinant, and fixes the associated integer vector.
fn c01_symbolic_algebra(seed: u64) -> Result<(Vec<Check>, Vec<String>)> {
    let (a, b) = sl2_pair();
    let gens = vec![
        a.clone(),
        a.inverse_unimodular()?,
        b.clone(),
        b.inverse_unimodular()?,
    ];
    let inv_of = inverse_pairing(&gens);
    let word = |rng: &mut CounterRng| -> IntMatrix {
        let len = 1 + (rng.next_unit() * 8.0) as usize;
        let mut m = IntMatrix::identity(2);
        let mut prev: Option<usize> = None;
        for _ in 0..len {
            let mut g = ((rng.next_unit() * 4.0) as usize).min(3);
            // Fresh draws rather than immediate-inverse letters, so the
            // product rarely collapses toward the identity.
            while prev == Some(inv_of[g]) {
                g = ((rng.next_unit() * 4.0) as usize).min(3);
            }
            m = m.mul(&gens[g]);
            prev = Some(g);
        }
        m
    };

    let mut hom_fail = 0u32;
    let mut det_fail = 0u32;
    let mut fix_fail = 0u32;
    let mut degenerate = 0u32;
    for i in 0..100u64 {
        let mut rng = CounterRng::from_path(seed, &[i]);
        let m1 = word(&mut rng);
        let m2 = word(&mut rng);
        let q1 = q_of(&m1)?;
        let q2 = q_of(&m2)?;
        if q_of(&m1.mul(&m2))? != q1.mul(&q2) {
            hom_fail += 1;
        }
        for (m, q) in [(&m1, &q1), (&m2, &q2)] {
            if q.det() != BigInt::one() {
                det_fail += 1;
            }
            let v = q_fixed_vector(m)?;
            if v.iter().all(|c| c.is_zero()) {
                // m = +-identity has no distinguished vector; skip.
                degenerate += 1;
            } else if q.matvec(&v) != v {
                fix_fail += 1;
            }
        }
    }
    let checks = vec![
        Check::eq_count("homomorphism mismatches over 100 word pairs", hom_fail as f64, 0.0),
        Check::eq_count("determinant-one failures", det_fail as f64, 0.0),
        Check::eq_count("fixed-vector mismatches", fix_fail as f64, 0.0),
    ];
    let notes = vec![format!("{degenerate} of 200 words were +-identity (fixed vector skipped)")];
    Ok((checks, notes))
}

// ---------------------------------------------------------- criterion 2 ----

/// Group laws of H_7 = R^3 x R^3 x R and the automorphism property of the
/// lattice-preserving maps (Dx, D^-t y, z).
fn c02_heisenberg_laws(seed: u64) -> Result<(Vec<Check>, Vec<String>)> {
    let (a, b) = sl2_pair();
    let mut autos = Vec::new();
    for m in [&a, &b] {
        let q = q_of(m)?;
        autos.push(HeisAuto::new(&q)?);
        autos.push(HeisAuto::new(&q.inverse_unimodular()?)?);
    }
    let dist = |p: &HeisPoint, q: &HeisPoint| -> f64 {
        let mut m = (p.z - q.z).abs();
        for i in 0..3 {
            m = m.max((p.x[i] - q.x[i]).abs()).max((p.y[i] - q.y[i]).abs());
        }
        m
    };
    let draw = |rng: &mut CounterRng| -> HeisPoint {
        let c = |r: &mut CounterRng| 4.0 * r.next_unit() - 2.0;
        HeisPoint {
            x: (0..3).map(|_| c(rng)).collect(),
            y: (0..3).map(|_| c(rng)).collect(),
            z: 2.0 * (4.0 * rng.next_unit() - 2.0),
        }
    };

    let mut assoc_err = 0.0f64;
    let mut inv_err = 0.0f64;
    let mut auto_err = 0.0f64;
    let e = HeisPoint::identity(3);
    for i in 0..10_000u64 {
        let mut rng = CounterRng::from_path(seed, &[i]);
        let p = draw(&mut rng);
        let q = draw(&mut rng);
        let r = draw(&mut rng);
        assoc_err = assoc_err.max(dist(&p.mul(&q).mul(&r), &p.mul(&q.mul(&r))));
        inv_err = inv_err.max(dist(&p.mul(&p.inv()), &e));
        let phi = &autos[(i as usize) % autos.len()];
        auto_err = auto_err.max(dist(&phi.apply(&p.mul(&q)), &phi.apply(&p).mul(&phi.apply(&q))));
    }
    let checks = vec![
        Check::le("associativity error over 1e4 triples", assoc_err, 1e-12),
        Check::le("inverse error over 1e4 elements", inv_err, 1e-12),
        Check::le("automorphism error over 1e4 pairs", auto_err, 1e-12),
    ];
    Ok((checks, vec![]))
}

// ---------------------------------------------------------- criterion 3 ----

/// Concatenation: summing a split word in two stages reproduces the one-shot
/// sum bit for bit.  Coboundary displacements: sums telescope, so they are
/// path-independent and equal the endpoint difference.
fn c03_cocycle_identities(seed: u64) -> Result<(Vec<Check>, Vec<String>)> {
    let sys = scenario_torus_sl2();
    let gcount = sys.generator_count();
    let mut concat_mismatch = 0u32;
    for i in 0..100u64 {
        let mut rng = CounterRng::from_path(seed, &[1, i]);
        let x0 = sys.sample_point(&mut rng);
        let len1 = 1 + (rng.next_unit() * 20.0) as usize;
        let w1 = random_letters(&mut rng, gcount, len1);
        let len2 = 1 + (rng.next_unit() * 20.0) as usize;
        let w2 = random_letters(&mut rng, gcount, len2);
        let whole: Vec<usize> = w1.iter().chain(&w2).cloned().collect();
        let one_shot = cocycle_sum(&sys, &x0, &whole);
        // Two-stage route: continue the first stage's accumulator along the
        // second word from the moved start point.  The addition order is
        // identical, so agreement must be exact.
        let mut sum = cocycle_sum(&sys, &x0, &w1);
        let mut x = apply_word(&sys, &x0, &w1);
        let mut scratch = vec![0.0; sys.dim()];
        for &g in &w2 {
            sys.displacement(g, &mut x, &mut scratch);
            for (s, d) in sum.iter_mut().zip(&scratch) {
                *s += d;
            }
            sys.apply(g, &mut x);
        }
        if one_shot.iter().zip(&sum).any(|(a, b)| a.to_bits() != b.to_bits()) {
            concat_mismatch += 1;
        }
    }

    let poly = TrigPoly {
        dim_in: 2,
        terms: vec![
            vec![
                (vec![1, 0], 0.11, 0.3),
                (vec![0, 1], 0.07, 1.2),
                (vec![1, 1], 0.05, -0.7),
            ],
            vec![(vec![0, 1], 0.09, 2.1), (vec![1, -1], 0.06, 0.4)],
        ],
    };
    let cosys = TorusSystem::new(
        "coboundary-check",
        sys.matrices.clone(),
        vec![0.25; 4],
        TorusDisplacement::Coboundary(poly.clone()),
    )?;
    let inv_of = inverse_pairing(&cosys.matrices);
    // The splice perturbs the state by rounding (~1 ulp), and the hyperbolic
    // maps amplify that by their spectral norm per remaining step, so the
    // tolerance must scale with lam^(letters after the splice).
    let lam = (3.0 + 5f64.sqrt()) / 2.0;
    let mut worst_ratio = 0.0f64;
    let mut tele_dev = 0.0f64;
    let mut out0 = vec![0.0; 2];
    let mut out1 = vec![0.0; 2];
    for i in 0..1000u64 {
        let mut rng = CounterRng::from_path(seed, &[2, i]);
        let x0 = cosys.sample_point(&mut rng);
        let len = 5 + (rng.next_unit() * 25.0) as usize;
        let w = random_letters(&mut rng, gcount, len);
        // Same group element, different path: splice g g^-1 into the word.
        let pos = ((rng.next_unit() * (w.len() + 1) as f64) as usize).min(w.len());
        let g = ((rng.next_unit() * gcount as f64) as usize).min(gcount - 1);
        let mut w2: Vec<usize> = w[..pos].to_vec();
        w2.push(g);
        w2.push(inv_of[g]);
        w2.extend_from_slice(&w[pos..]);

        let s1 = cocycle_sum(&cosys, &x0, &w);
        let s2 = cocycle_sum(&cosys, &x0, &w2);
        let dev = max_abs(&s1.iter().zip(&s2).map(|(a, b)| a - b).collect::<Vec<_>>());
        let allowance = (1e-13 * lam.powi((len - pos) as i32)).clamp(1e-12, 0.05);
        worst_ratio = worst_ratio.max(dev / allowance);

        let y = apply_word(&cosys, &x0, &w);
        poly.eval(&y.coords, &mut out1);
        poly.eval(&x0.coords, &mut out0);
        let diff: Vec<f64> = out1.iter().zip(&out0).zip(&s1).map(|((d1, d0), s)| d1 - d0 - s).collect();
        tele_dev = tele_dev.max(max_abs(&diff));
    }

    let checks = vec![
        Check::eq_count("bitwise concatenation mismatches over 100 splits", concat_mismatch as f64, 0.0),
        Check::le("path deviation over forward-error allowance, 1e3 spliced pairs", worst_ratio, 1.0),
        Check::le("telescoping deviation against endpoint difference", tele_dev, 1e-12),
    ];
    let notes = vec![format!(
        "allowance per pair = 1e-13 * {lam:.4}^m clamped to [1e-12, 0.05], m = letters after the splice"
    )];
    Ok((checks, notes))
}

// ---------------------------------------------------------- criterion 4 ----

/// The restricted dual operator contracts strictly at every tested ball
/// radius, and no small character has a periodic orbit under any generator.
fn c04_dual_radius_orbits(seed: u64) -> Result<(Vec<Check>, Vec<String>)> {
    let sys = scenario_torus_sl2();
    let mut checks = Vec::new();
    for radius in [10.0, 20.0, 40.0] {
        let ball = FrequencyBall::new(2, radius)?;
        let op = build_dual_operator(&sys.matrices, sys.weights(), &ball)?;
        let rep = spectral_radius(&op, 300, 1e-4, 3, seed);
        checks.push(Check::le(
            format!("dual radius estimate at R = {radius}"),
            rep.radius,
            0.999,
        ));
    }

    let mut repeats = 0u32;
    let mut tested = 0u32;
    for p1 in -5i64..=5 {
        for p2 in -5i64..=5 {
            if p1 == 0 && p2 == 0 || p1 * p1 + p2 * p2 > 25 {
                continue;
            }
            for m in &sys.matrices {
                tested += 1;
                let orbit = dual_orbit(&m.transpose(), &[p1, p2], 50)?;
                if !matches!(orbit.status, OrbitStatus::Escapes) {
                    repeats += 1;
                }
            }
        }
    }
    checks.push(Check::eq_count(
        format!("repeating character orbits over {tested} (point, generator) pairs"),
        repeats as f64,
        0.0,
    ));
    Ok((checks, vec![]))
}

// ---------------------------------------------------------- criterion 5 ----

/// The truncated Poisson solve leaves a tiny residual, and the resulting
/// modified displacement has conditional mean ~0 at sampled states.
fn c05_poisson_centering(seed: u64) -> Result<(Vec<Check>, Vec<String>)> {
    let sys = scenario_torus_sl2();
    let ball = FrequencyBall::new(2, 40.0)?;
    let md = ModifiedDisplacement::new(&sys, &ball, 1e-13, 4000)?;
    let resid = max_abs(md.residual());

    let mut cond = 0.0f64;
    for i in 0..1000u64 {
        let mut rng = CounterRng::from_path(seed, &[i]);
        let x = sys.sample_point(&mut rng);
        cond = cond.max(max_abs(&md.conditional_mean_at(&x.coords)));
    }
    let checks = vec![
        Check::le("Poisson residual at R = 40", resid, 1e-8),
        Check::le("conditional mean sup over 1e3 points", cond, 1e-6),
    ];
    let notes = vec![format!("series terms used: {}", md.terms())];
    Ok((checks, notes))
}

// ---------------------------------------------------------- criterion 6 ----

/// First-order expansion of the dominant twisted eigenvalue: the decay
/// 1 - Re k at small frequencies matches the quadratic variance form.
fn c06_variance_form_match(seed: u64, quick: bool) -> Result<(Vec<Check>, Vec<String>)> {
    let sys = scenario_torus_sl2();
    let (radius, samples, lo, hi) = if quick {
        (16.0, 4_000u64, 0.6, 1.4)
    } else {
        (40.0, 20_000u64, 0.8, 1.2)
    };
    let ball = FrequencyBall::new(2, radius)?;
    let md = ModifiedDisplacement::new(&sys, &ball, 1e-12, 4000)?;
    let sigma = sigma_form(&sys, &md, samples, derive(seed, 1))?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let r = 0.05;
    let lambdas: Vec<Vec<f64>> = vec![
        vec![r, 0.0],
        vec![0.0, r],
        vec![r * s, r * s],
        vec![r * s, -r * s],
    ];
    let table = perturbation_check(&sys, &ball, &sigma.dmatrix(), &lambdas, 1e-10, 3000)?;
    let mut checks = Vec::new();
    let mut notes = vec![format!(
        "sigma entries max stderr {:.2e}, min eigenvalue {:.3}",
        sigma.max_stderr(),
        sigma.min_eigenvalue
    )];
    for row in &table.rows {
        push_band(
            &mut checks,
            &format!("expansion ratio at lambda = ({:.4}, {:.4})", row.lambda[0], row.lambda[1]),
            row.ratio,
            lo,
            hi,
        );
        if !row.converged || row.tie {
            checks.push(Check::eq_count(
                format!("eigen solve clean at ({:.4}, {:.4})", row.lambda[0], row.lambda[1]),
                1.0,
                0.0,
            ));
        }
        notes.push(format!(
            "lambda ({:+.4}, {:+.4}): k = {:.8} + {:.1e}i, ratio {:.4}",
            row.lambda[0], row.lambda[1], row.k_re, row.k_im, row.ratio
        ));
    }
    Ok((checks, notes))
}

// ---------------------------------------------------------- criterion 7 ----

/// Normalized sums are asymptotically Gaussian with the covariance given by
/// the variance form: KS on projections, Frobenius match of covariances.
fn c07_clt(seed: u64, quick: bool) -> Result<(Vec<Check>, Vec<String>)> {
    let sys = scenario_torus_sl2();
    let (radius, samples, paths) = if quick {
        (16.0, 5_000u64, 4_000usize)
    } else {
        (40.0, 20_000u64, 20_000usize)
    };
    let ball = FrequencyBall::new(2, radius)?;
    let md = ModifiedDisplacement::new(&sys, &ball, 1e-12, 4000)?;
    let sigma = sigma_form(&sys, &md, samples, derive(seed, 1))?.dmatrix();
    let rep = clt_test(&sys, derive(seed, 2), 4096, paths, &sigma, 2)?;

    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let d = rep.covariance[i][j] - sigma[(i, j)];
            num += d * d;
            den += sigma[(i, j)] * sigma[(i, j)];
        }
    }
    let frob = (num / den).sqrt();
    // Quick mode cuts the ensemble 5x; widen the sampling-noise bounds
    // accordingly (the run is marked advisory).
    let (ks_tol, frob_tol) = if quick { (0.045, 0.12) } else { (0.02, 0.05) };
    let checks = vec![
        Check::le("max KS distance over 4 projections", rep.ks_max, ks_tol),
        Check::le("relative Frobenius gap, empirical vs form", frob, frob_tol),
    ];
    let notes = vec![
        format!("ks per direction: {:?}", rep.ks_per_direction),
        format!(
            "covariance diag ({:.4}, {:.4}) vs form diag ({:.4}, {:.4})",
            rep.covariance[0][0],
            rep.covariance[1][1],
            sigma[(0, 0)],
            sigma[(1, 1)]
        ),
    ];
    Ok((checks, notes))
}

// ---------------------------------------------------------- criterion 8 ----

/// In D = 2 the walk keeps returning: the median running minimum of |S_n|
/// shrinks by a definite factor as the horizon grows 100-fold.
fn c08_recurrence_contrast(seed: u64, quick: bool) -> Result<(Vec<Check>, Vec<String>)> {
    let sys = scenario_torus_sl2();
    let paths = if quick { 200 } else { 1000 };
    let rep = recurrence_profile(&sys, seed, paths, &[1_000, 10_000, 100_000])?;
    let ratio = rep.median_min[0] / rep.median_min[2];
    // 200-path medians are noisy; a transient walk would still sit near 1.
    let tol = if quick { 1.05 } else { 1.2 };
    let checks = vec![Check::ge("median running-min ratio N=1e3 over N=1e5", ratio, tol)];
    let notes = vec![format!(
        "median running minima at (1e3, 1e4, 1e5): ({:.4}, {:.4}, {:.4})",
        rep.median_min[0], rep.median_min[1], rep.median_min[2]
    )];
    Ok((checks, notes))
}

// ---------------------------------------------------------- criterion 9 ----

/// In D = 3 the scenery sums escape: almost no path is near the origin at
/// n = 1e4, and the growth of |S_n| is diffusive.
fn c09_scenery_transience(seed: u64, quick: bool) -> Result<(Vec<Check>, Vec<String>)> {
    let sys = scenario_scenery_free_group(2)?;
    let paths = if quick { 200 } else { 1000 };
    let rep = transience_profile(&sys, seed, paths, &[100, 316, 1_000, 3_162, 10_000], 5.0)?;
    let near = *rep.near_origin_fraction.last().unwrap();
    let mut checks = vec![Check::le("fraction with |S_1e4| <= 5", near, 0.02)];
    push_band(&mut checks, "diffusive exponent", rep.growth_exponent, 0.4, 0.6);
    let notes = vec![format!(
        "mean |S_N| at horizons {:?}: {:?}",
        rep.horizons,
        rep.mean_norm.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>()
    )];
    Ok((checks, notes))
}

// --------------------------------------------------------- criterion 10 ----

/// Box-hit frequencies at CLT scale: the exactly solvable coin walk against
/// its binomial oracle, and the torus walk against Gaussian box mass.
fn c10_local_limit(seed: u64, quick: bool) -> Result<(Vec<Check>, Vec<String>)> {
    let scale = if quick { 4 } else { 1 };
    let mut checks = Vec::new();
    let mut notes = Vec::new();

    // Part 1: i.i.d. +-1 coin, exact lattice reference.
    let coin = coin_system();
    let n = 4096;
    let window = 512;
    let paths = 2000 / scale;
    let sigma1 = DMatrix::from_element(1, 1, 1.0);
    let boxes = [BoxSpec::new(vec![-8.5], vec![8.5])?];
    let rep = llt_estimate(&coin, derive(seed, 1), paths, n, window, &boxes, &sigma1)?;
    let oracle = binomial_window_mass(n, window, -8.5, 8.5);
    let ratio = rep.empirical[0] / oracle;
    push_band(&mut checks, "coin empirical over binomial oracle", ratio, 0.9, 1.1);
    notes.push(format!(
        "coin: empirical {:.6}, binomial {:.6}, gaussian {:.6}, pooled {}",
        rep.empirical[0],
        oracle,
        rep.predicted[0],
        paths * window
    ));

    // Part 2: torus walk against Gaussian mass with the variance form.
    let sys = scenario_torus_sl2();
    let ball = FrequencyBall::new(2, 16.0)?;
    let md = ModifiedDisplacement::new(&sys, &ball, 1e-12, 4000)?;
    let sigma = sigma_form(&sys, &md, 10_000, derive(seed, 2))?.dmatrix();
    for (n, window, paths) in [(1024usize, 1024usize, 1000usize), (4096, 512, 2000)] {
        let paths = paths / scale;
        let half: Vec<f64> = (0..2)
            .map(|j| 0.75 * (n as f64 * sigma[(j, j)]).sqrt())
            .collect();
        let boxes = [BoxSpec::new(half.iter().map(|h| -h).collect(), half.clone())?];
        let rep = llt_estimate(&sys, derive(seed, 3 + n as u64), paths, n, window, &boxes, &sigma)?;
        push_band(
            &mut checks,
            &format!("torus box-mass ratio at n = {n}"),
            rep.ratio[0],
            0.8,
            1.2,
        );
        notes.push(format!(
            "torus n = {n}: empirical {:.5}, gaussian {:.5}, pooled {}",
            rep.empirical[0],
            rep.predicted[0],
            paths * window
        ));
    }
    Ok((checks, notes))
}

// --------------------------------------------------------- criterion 11 ----

/// Return probabilities on the free group of rank 2: the 2n-step root
/// approaches sqrt(3)/2, computed by the exact birth-death recursion.
fn c11_free_group_radius(seed: u64) -> Result<(Vec<Check>, Vec<String>)> {
    let _ = seed; // fully deterministic
    let rep = kesten_return_estimate(2, 2000)?;
    let checks = vec![Check::le("relative error of p^(1/2n) at n = 2000", rep.rel_error, 0.03)];
    let notes = vec![format!(
        "estimate {:.6} vs sqrt(3)/2 = {:.6}; checkpoints {:?}",
        rep.final_estimate,
        rep.formula,
        rep.estimates
            .iter()
            .map(|(n, v)| (*n, (v * 1e4).round() / 1e4))
            .collect::<Vec<_>>()
    )];
    Ok((checks, notes))
}

// --------------------------------------------------------- criterion 12 ----

/// Degenerate-frequency scans (advisory): the torus scan flags only the
/// origin on axis grids inside (0, 2pi); the integral-scenery proxy flags
/// exactly the 2pi Z^3 grid points.
fn c12_degenerate_frequency_scan(seed: u64, quick: bool) -> Result<(Vec<Check>, Vec<String>)> {
    let mut checks = Vec::new();
    let mut notes = Vec::new();

    let sys = scenario_torus_sl2();
    let step = if quick { 0.5 } else { 0.1 };
    let grid = axis_grid(2, 6.2, step);
    let ball = FrequencyBall::new(2, 16.0)?;
    let scan = scan_r_mu_torus(&sys, &grid, &ball, SCAN_ITERATES, SCAN_TOL, derive(seed, 1))?;
    let spurious = scan
        .rows
        .iter()
        .filter(|r| r.flagged && r.lambda.iter().any(|&c| c != 0.0))
        .count();
    let origin_flagged = scan
        .rows
        .iter()
        .any(|r| r.flagged && r.lambda.iter().all(|&c| c == 0.0));
    checks.push(Check::eq_count(
        format!("torus spurious flags over {} grid points", grid.len()),
        spurious as f64,
        0.0,
    ));
    checks.push(Check::eq_count("torus origin flagged", origin_flagged as u32 as f64, 1.0));
    let worst = scan
        .rows
        .iter()
        .filter(|r| r.lambda.iter().any(|&c| c != 0.0))
        .map(|r| r.estimate)
        .fold(0.0f64, f64::max);
    notes.push(format!(
        "largest non-origin estimate {:.4} against threshold {:.2}",
        worst,
        1.0 - SCAN_TOL
    ));
    notes.push(
        "iterate-growth estimates are lower-biased by the start overlap; the origin row is \
         flagged by rule because the bias also hides its trivial eigenvalue"
            .into(),
    );

    let scenery = scenario_scenery_free_group(2)?;
    let tau = std::f64::consts::TAU;
    let sgrid = axis_and_diagonal_grid(3, 2.0 * tau, std::f64::consts::FRAC_PI_2);
    let paths = if quick { 2000 } else { 4000 };
    let proxy = scan_lattice_proxy(&scenery, &sgrid, 24, paths, SCAN_TOL, derive(seed, 2))?;
    let is_lattice = |l: &[f64]| l.iter().all(|&c| (c / tau - (c / tau).round()).abs() < 1e-9);
    let mut wrong = 0u32;
    for row in &proxy.rows {
        if row.flagged != is_lattice(&row.lambda) {
            wrong += 1;
        }
    }
    let expected = sgrid.iter().filter(|l| is_lattice(l)).count();
    checks.push(Check::eq_count(
        format!("scenery misflagged grid points over {}", sgrid.len()),
        wrong as f64,
        0.0,
    ));
    checks.push(Check::eq_count(
        "scenery flag count",
        proxy.flagged_count as f64,
        expected as f64,
    ));
    Ok((checks, notes))
}

// --------------------------------------------------------- criterion 13 ----

/// Motion group (advisory): the one-step mean vanishes within Monte Carlo
/// error, and the n^d-normalized box-hit estimate is stable in n.
fn c13_motion_local_limit(seed: u64, quick: bool) -> Result<(Vec<Check>, Vec<String>)> {
    let sys = scenario_motion_group(2)?;
    let (csamples, paths) = if quick { (20_000u64, 5_000usize) } else { (100_000, 100_000) };
    let centering = check_centering(&sys, csamples, derive(seed, 1));
    let worst = centering
        .estimate
        .iter()
        .zip(&centering.stderr)
        .map(|(&e, &s)| e.abs() / s.max(1e-15))
        .fold(0.0f64, f64::max);
    let mut checks = vec![Check::le("centering |mean| over stderr", worst, 4.0)];
    let mut notes = vec![format!(
        "centering estimate {:?}",
        centering.estimate.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>()
    )];

    // Covariance for the Gaussian side-notes; the stability check itself
    // compares raw normalized frequencies.
    let pre: Vec<Vec<f64>> = par_map_paths(&sys, derive(seed, 2), 2000, |mut w| {
        for _ in 0..256 {
            w.step();
        }
        w.sum.iter().map(|s| s / 16.0).collect()
    });
    let (_, sigma) = crate::stats::empirical_covariance(&pre)?;

    let boxes = [BoxSpec::new(vec![-4.0; 4], vec![4.0; 4])?];
    let mut normalized = Vec::new();
    for (n, window) in [(1024usize, 64usize), (4096, 128)] {
        let rep = llt_estimate(&sys, derive(seed, 3 + n as u64), paths, n, window, &boxes, &sigma)?;
        let norm = rep.empirical[0] * (n as f64).powi(2);
        normalized.push(norm);
        notes.push(format!(
            "n = {n}: hits {}, pooled {}, normalized estimate {:.1}, gaussian ratio {:.3}",
            rep.hits[0],
            paths * window,
            norm,
            rep.ratio[0]
        ));
    }
    let stab = (normalized[1] / normalized[0] - 1.0).abs();
    // With 20x fewer paths each window holds only tens of hits; a wrong
    // volume normalization would still drift by a factor of about 4.
    let tol = if quick { 0.45 } else { 0.25 };
    checks.push(Check::le("normalized box-hit drift 1024 -> 4096", stab, tol));
    Ok((checks, notes))
}

// --------------------------------------------------------- criterion 14 ----

/// Runs the same batch under 1-thread and 4-thread local pools and demands
/// bitwise-identical sums and identical CSV bytes.
fn c14_thread_determinism(seed: u64) -> Result<(Vec<Check>, Vec<String>)> {
    let sys = scenario_torus_sl2();
    let batch = |threads: usize| -> Result<(Vec<u64>, Vec<u8>)> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| {
            let sums: Vec<u64> = par_map_paths(&sys, seed, 256, |mut w| {
                for _ in 0..512 {
                    w.step();
                }
                w.sum
            })
            .into_iter()
            .flatten()
            .map(f64::to_bits)
            .collect();
            let t = run(&sys, seed, 3, 200, Thinning::Stride(50));
            let mut csv = Vec::new();
            write_sums_csv(&t, &mut csv).map_err(|e| Error::Config(e.to_string()))?;
            Ok((sums, csv))
        })
    };
    let (bits1, csv1) = batch(1)?;
    let (bits4, csv4) = batch(4)?;
    let sum_diffs = bits1.iter().zip(&bits4).filter(|(a, b)| a != b).count();
    let checks = vec![
        Check::eq_count("bitwise sum differences, 1 vs 4 threads", sum_diffs as f64, 0.0),
        Check::eq_count("CSV byte equality", (csv1 == csv4) as u32 as f64, 1.0),
        Check::eq_count("CSV line endings are LF", csv1.iter().filter(|&&b| b == b'\r').count() as f64, 0.0),
    ];
    Ok((checks, vec![]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_constructors() {
        assert!(Check::le("x", 1.0, 2.0).passed);
        assert!(!Check::le("x", 3.0, 2.0).passed);
        assert!(Check::ge("x", 3.0, 2.0).passed);
        assert!(Check::eq_count("x", 0.0, 0.0).passed);
        assert!(!Check::eq_count("x", 1.0, 0.0).passed);
    }

    #[test]
    fn info_table_is_consistent() {
        assert_eq!(INFO.len(), CRITERION_COUNT);
        assert_eq!(criterion_name(1), "symbolic-algebra");
        assert_eq!(criterion_name(14), "thread-determinism");
        // Exactly the two statistical-structure criteria are always advisory.
        let advisory: Vec<usize> = (1..=CRITERION_COUNT).filter(|&i| INFO[i - 1].2).collect();
        assert_eq!(advisory, vec![12, 13]);
    }

    #[test]
    fn index_out_of_range_is_config_error() {
        let opts = VerifyOptions::default();
        assert!(run_criterion(0, &opts).is_err());
        assert!(run_criterion(15, &opts).is_err());
    }

    #[test]
    fn exact_criteria_pass() {
        let opts = VerifyOptions::default();
        for i in [1usize, 2, 3, 11, 14] {
            let r = run_criterion(i, &opts).unwrap();
            assert!(r.passed, "criterion {i} failed: {:?}", r.checks);
            assert!(!r.advisory);
        }
    }

    #[test]
    fn quick_mode_demotes_reduced_criteria() {
        let opts = VerifyOptions { quick: true, seed: 11 };
        let r = run_criterion(8, &opts).unwrap();
        assert!(r.reduced);
        assert!(r.advisory);
        // Unreduced criteria keep their mandatory status.
        let r1 = run_criterion(1, &opts).unwrap();
        assert!(!r1.reduced && !r1.advisory);
    }

    #[test]
    fn failure_counting_ignores_advisory() {
        let mk = |advisory: bool, passed: bool| CriterionResult {
            index: 1,
            name: "x",
            title: "x",
            advisory,
            reduced: false,
            seed: 0,
            runtime_sec: 0.0,
            passed,
            checks: vec![],
            notes: vec![],
        };
        let rs = vec![mk(false, true), mk(true, false), mk(false, false)];
        assert_eq!(count_mandatory_failures(&rs), 1);
    }
}
