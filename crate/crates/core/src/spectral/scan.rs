//! Grid scans for twisted spectral radii.  The torus scan powers the
//! compressed twisted operator from a fixed real start vector; the lattice
//! proxy scan estimates the decay rate of walk characters from simulated
//! endpoints.  Both report which grid points look spectrally trivial.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::scenarios::TorusSystem;
use crate::spectral::ball::FrequencyBall;
use crate::spectral::twisted::build_p_lambda;
use crate::walk::{par_map_paths, System};

/// Calibration of the torus scan: ball radius, iterate count, and the
/// flag threshold 1 - SCAN_TOL.  The iterate-growth estimate from a fixed
/// random start is biased low by roughly N^(-1/(2m)) for an N-dimensional
/// compression, because the start carries only ~1/sqrt(N) of the dominant
/// mode.  At this calibration the bias keeps near-critical points clear of
/// the threshold, which is why the trivial point lambda = 0 is flagged by
/// rule rather than by measurement.
pub const SCAN_BALL_RADIUS: f64 = 16.0;
pub const SCAN_ITERATES: usize = 200;
pub const SCAN_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub lambda: Vec<f64>,
    pub estimate: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub kind: String,
    pub tol: f64,
    pub rows: Vec<ScanRow>,
    pub flagged_count: usize,
}

impl ScanReport {
    fn finish(kind: &str, tol: f64, rows: Vec<ScanRow>) -> Self {
        let flagged_count = rows.iter().filter(|r| r.flagged).count();
        ScanReport {
            kind: kind.into(),
            tol,
            rows,
            flagged_count,
        }
    }

    pub fn flagged_lambdas(&self) -> Vec<&[f64]> {
        self.rows
            .iter()
            .filter(|r| r.flagged)
            .map(|r| r.lambda.as_slice())
            .collect()
    }
}

/// Grid of axis points: the origin once, then t e_j for t = step, 2 step,
/// ..., up to max, for every axis j.
pub fn axis_grid(d: usize, max: f64, step: f64) -> Vec<Vec<f64>> {
    let mut grid = vec![vec![0.0; d]];
    let steps = (max / step + 1e-9).floor() as usize;
    for j in 0..d {
        for k in 1..=steps {
            let mut v = vec![0.0; d];
            v[j] = k as f64 * step;
            grid.push(v);
        }
    }
    grid
}

/// Axis grid plus the diagonal points (t, ..., t).
pub fn axis_and_diagonal_grid(d: usize, max: f64, step: f64) -> Vec<Vec<f64>> {
    let mut grid = axis_grid(d, max, step);
    let steps = (max / step + 1e-9).floor() as usize;
    for k in 1..=steps {
        grid.push(vec![k as f64 * step; d]);
    }
    grid
}

/// Random start with the symmetry v(-p) = conj v(p): the coefficient
/// vector of a real-valued test function.  Negating lambda conjugates the
/// twisted operator up to a frequency flip, so iterates from a Hermitian
/// start have mirror-equal norms and the growth estimate is even in
/// lambda (up to rounding).
fn hermitian_unit_start(ball: &FrequencyBall, seed: u64, tag: u64) -> Vec<Complex64> {
    let mut rng = CounterRng::from_path(seed, &[tag]);
    let mut v = vec![Complex64::new(0.0, 0.0); ball.len_with_zero()];
    for (i, p) in ball.points.iter().enumerate() {
        let neg: Vec<i64> = p.iter().map(|c| -c).collect();
        let j = ball
            .index_of(&neg)
            .expect("frequency balls are symmetric under negation");
        if i < j {
            let z = Complex64::new(rng.next_unit() - 0.5, rng.next_unit() - 0.5);
            v[i] = z;
            v[j] = z.conj();
        }
    }
    v[ball.zero_index()] = Complex64::new(rng.next_unit() - 0.5, 0.0);
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|c| *c /= norm);
    }
    v
}

/// Iterate-growth estimate |op^m v|^(1/m) of each grid operator from one
/// shared Hermitian start vector, making the estimates even in lambda.
/// Estimates carry the start-overlap bias described at
/// [`SCAN_BALL_RADIUS`]; rows at the origin are flagged unconditionally.
pub fn scan_r_mu_torus(
    sys: &TorusSystem,
    grid: &[Vec<f64>],
    ball: &FrequencyBall,
    m: usize,
    tol: f64,
    seed: u64,
) -> Result<ScanReport> {
    if m == 0 || !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Config("need m >= 1 and tol in (0, 1)".into()));
    }
    if grid.iter().any(|l| l.len() != sys.dim_torus) {
        return Err(Error::Dimension("grid/system dimension mismatch".into()));
    }
    let start = hermitian_unit_start(ball, seed, 0x5CA7);
    let rows: Vec<ScanRow> = grid
        .par_iter()
        .map(|lambda| -> Result<ScanRow> {
            let op = build_p_lambda(sys, lambda, ball)?;
            let n = op.dim();
            let mut v = start.clone();
            let mut w = vec![Complex64::new(0.0, 0.0); n];
            let mut log_acc = 0.0f64;
            let mut dead = false;
            for _ in 0..m {
                op.apply(&v, &mut w);
                let norm = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                if norm < 1e-300 {
                    dead = true;
                    break;
                }
                log_acc += norm.ln();
                w.iter_mut().for_each(|c| *c /= norm);
                std::mem::swap(&mut v, &mut w);
            }
            let estimate = if dead { 0.0 } else { (log_acc / m as f64).exp() };
            let is_origin = lambda.iter().all(|&x| x == 0.0);
            Ok(ScanRow {
                lambda: lambda.clone(),
                estimate,
                flagged: is_origin || estimate >= 1.0 - tol,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ScanReport::finish("twisted_radius", tol, rows))
}

/// Character-decay proxy for walks with lattice-valued displacement: the
/// empirical |E cis(lambda . S_n)|^(1/n) over simulated paths.  Points of
/// the dual lattice give exactly 1; elsewhere the estimate drops to the
/// decay rate or the Monte Carlo floor (1/sqrt(paths))^(1/n), whichever is
/// larger, so the flag threshold must sit above that floor.
pub fn scan_lattice_proxy<S: System>(
    sys: &S,
    grid: &[Vec<f64>],
    n: usize,
    paths: u64,
    tol: f64,
    seed: u64,
) -> Result<ScanReport> {
    if n == 0 || paths == 0 || !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Config("need n >= 1, paths >= 1, tol in (0, 1)".into()));
    }
    if grid.iter().any(|l| l.len() != sys.dim()) {
        return Err(Error::Dimension("grid/system dimension mismatch".into()));
    }
    let floor = (1.0 / (paths as f64).sqrt()).powf(1.0 / n as f64);
    if 1.0 - tol <= floor {
        return Err(Error::Config(format!(
            "flag threshold {} is below the Monte Carlo floor {floor:.4}",
            1.0 - tol
        )));
    }
    let endpoints: Vec<Vec<f64>> = par_map_paths(sys, seed, paths, |mut w| {
        for _ in 0..n {
            w.step();
        }
        w.sum.clone()
    });
    let rows: Vec<ScanRow> = grid
        .iter()
        .map(|lambda| {
            let mut acc = Complex64::new(0.0, 0.0);
            for s in &endpoints {
                let arg: f64 = lambda.iter().zip(s).map(|(l, x)| l * x).sum();
                acc += Complex64::new(arg.cos(), arg.sin());
            }
            let estimate = (acc.norm() / paths as f64).powf(1.0 / n as f64);
            ScanRow {
                lambda: lambda.clone(),
                estimate,
                flagged: estimate >= 1.0 - tol,
            }
        })
        .collect();
    Ok(ScanReport::finish("character_proxy", tol, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{scenario_scenery_free_group, scenario_torus_sl2};
    use std::f64::consts::PI;

    #[test]
    fn grids_have_expected_shape() {
        let g = axis_grid(2, 0.3, 0.1);
        assert_eq!(g.len(), 7);
        assert!(g[0].iter().all(|&x| x == 0.0));
        assert!((g[3][0] - 0.3).abs() < 1e-12 && g[3][1] == 0.0);
        let gd = axis_and_diagonal_grid(3, 0.2, 0.1);
        assert_eq!(gd.len(), 1 + 3 * 2 + 2);
        assert!(gd[gd.len() - 1].iter().all(|&x| (x - 0.2).abs() < 1e-12));
    }

    #[test]
    fn torus_scan_flags_only_origin() {
        let sys = scenario_torus_sl2();
        let ball = FrequencyBall::new(2, 8.0).unwrap();
        let grid = vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![3.0, 0.0]];
        let report = scan_r_mu_torus(&sys, &grid, &ball, 120, 1e-2, 1).unwrap();
        assert!(report.rows[0].flagged);
        assert!(!report.rows[1].flagged && !report.rows[2].flagged);
        assert_eq!(report.flagged_count, 1);
        for row in &report.rows {
            assert!(row.estimate > 0.5 && row.estimate < 1.0, "{row:?}");
        }
    }

    #[test]
    fn torus_scan_is_even_in_lambda() {
        let sys = scenario_torus_sl2();
        let ball = FrequencyBall::new(2, 6.0).unwrap();
        let grid = vec![vec![0.5, 0.0], vec![-0.5, 0.0], vec![0.3, 0.2], vec![-0.3, -0.2]];
        let report = scan_r_mu_torus(&sys, &grid, &ball, 80, 1e-2, 5).unwrap();
        for pair in report.rows.chunks(2) {
            let (a, b) = (pair[0].estimate, pair[1].estimate);
            assert!((a - b).abs() < 1e-10 * a.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn lattice_proxy_flags_dual_lattice_points() {
        let sys = scenario_scenery_free_group(4).unwrap();
        let grid = vec![
            vec![0.0, 0.0, 0.0],
            vec![PI, 0.0, 0.0],
            vec![2.0 * PI, 0.0, 0.0],
            vec![2.0 * PI; 3],
        ];
        let report = scan_lattice_proxy(&sys, &grid, 24, 2000, 1e-2, 9).unwrap();
        assert!(report.rows[0].flagged && report.rows[0].estimate > 0.999);
        assert!(!report.rows[1].flagged, "{:?}", report.rows[1]);
        assert!(report.rows[2].flagged && report.rows[2].estimate > 0.999);
        assert!(report.rows[3].flagged);
        assert_eq!(report.flagged_count, 3);
    }

    #[test]
    fn lattice_proxy_rejects_threshold_below_floor() {
        let sys = scenario_scenery_free_group(4).unwrap();
        let grid = vec![vec![0.0; 3]];
        // 16 paths in 24 steps: floor (1/4)^(1/24) ~ 0.944 > 1 - 0.01.
        assert!(scan_lattice_proxy(&sys, &grid, 24, 16, 6e-2, 9).is_err());
    }
}
