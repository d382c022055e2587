//! Neumann-series solution of the frequency-space Poisson equation
//! (P - I) u = -h on a frequency ball, and the modified displacement it
//! induces: c'(g, x) = c(g, x) - u(A_g x) + u(x), whose conditional mean
//! given the state vanishes up to the reported residual.  The limit
//! covariance form is the average of c' c'^T over states and generators.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::phase::ToralPoint;
use crate::rng::CounterRng;
use crate::scenarios::{TorusDisplacement, TorusSystem};
use crate::spectral::ball::FrequencyBall;
use crate::spectral::dual::build_p_restricted;
use crate::spectral::op::{dominant_eigen, TruncatedOperator};
use crate::spectral::twisted::build_p_lambda;
use crate::walk::System;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

const TAG_SIGMA: u64 = 0x516A;

/// Fourier coefficients of the sawtooth displacement over the ball, one
/// vector per output component.  Component i is supported on frequencies
/// n e_i, where the circle coordinate t in [-1/2, 1/2) has coefficient
/// (-1)^n i / (2 pi n) at frequency n.
pub fn sawtooth_h_hat(ball: &FrequencyBall) -> Vec<Vec<Complex64>> {
    let d = ball.d;
    let mut h = vec![vec![Complex64::new(0.0, 0.0); ball.len()]; d];
    for (idx, p) in ball.points.iter().enumerate() {
        let mut axis = None;
        for (j, &c) in p.iter().enumerate() {
            if c != 0 {
                if axis.is_some() {
                    axis = None;
                    break;
                }
                axis = Some((j, c));
            }
        }
        if let Some((j, n)) = axis {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            h[j][idx] = Complex64::new(0.0, sign / (std::f64::consts::TAU * n as f64));
        }
    }
    h
}

#[derive(Debug, Clone)]
pub struct PoissonSolution {
    /// Ball-indexed coefficients of u, one vector per component.
    pub u_hat: Vec<Vec<Complex64>>,
    /// Ball-indexed coefficients of P u - u - h, one vector per component.
    pub resid_hat: Vec<Vec<Complex64>>,
    /// l2 norm of each residual vector, recomputed from u by one extra
    /// operator application rather than read off the series tail.
    pub residual: Vec<f64>,
    /// Largest number of Neumann terms consumed by any component.
    pub terms: usize,
    pub converged: bool,
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Sums u = -(h + P h + P^2 h + ...) per component until the increment
/// norm falls below `cutoff`, then reports the explicit equation residual.
pub fn solve_poisson(
    op: &TruncatedOperator,
    h_hat: &[Vec<Complex64>],
    cutoff: f64,
    max_terms: usize,
) -> Result<PoissonSolution> {
    let n = op.dim();
    if h_hat.iter().any(|h| h.len() != n) {
        return Err(Error::Dimension("h components must match the operator dimension".into()));
    }
    if !(cutoff > 0.0) || max_terms == 0 {
        return Err(Error::Config("cutoff must be positive and max_terms nonzero".into()));
    }
    let mut u_hat = Vec::with_capacity(h_hat.len());
    let mut terms = 0usize;
    let mut converged = true;
    for h in h_hat {
        let mut u: Vec<Complex64> = h.iter().map(|c| -c).collect();
        let mut term = h.clone();
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut used = 1usize;
        let mut ok = l2(&term) < cutoff;
        for _ in 1..max_terms {
            op.apply(&term, &mut buf);
            std::mem::swap(&mut term, &mut buf);
            for (ui, ti) in u.iter_mut().zip(&term) {
                *ui -= ti;
            }
            used += 1;
            let inc = l2(&term);
            if !inc.is_finite() || inc > 1e12 {
                return Err(Error::Numerical("Neumann series diverged".into()));
            }
            if inc < cutoff {
                ok = true;
                break;
            }
        }
        converged &= ok;
        terms = terms.max(used);
        u_hat.push(u);
    }
    let mut resid_hat = Vec::with_capacity(u_hat.len());
    let mut residual = Vec::with_capacity(u_hat.len());
    for (u, h) in u_hat.iter().zip(h_hat) {
        let mut pu = vec![Complex64::new(0.0, 0.0); n];
        op.apply(u, &mut pu);
        let r: Vec<Complex64> = pu
            .iter()
            .zip(u)
            .zip(h)
            .map(|((p, ui), hi)| p - ui - hi)
            .collect();
        residual.push(l2(&r));
        resid_hat.push(r);
    }
    Ok(PoissonSolution {
        u_hat,
        resid_hat,
        residual,
        terms,
        converged,
    })
}

/// The displacement corrected by the transfer coboundary of u, together
/// with everything needed to evaluate u and the leftover conditional mean
/// at torus points.
pub struct ModifiedDisplacement {
    ball: FrequencyBall,
    solution: PoissonSolution,
    mean_offset: Vec<f64>,
    dim: usize,
}

impl ModifiedDisplacement {
    pub fn new(
        sys: &TorusSystem,
        ball: &FrequencyBall,
        cutoff: f64,
        max_terms: usize,
    ) -> Result<Self> {
        if ball.d != sys.dim_torus {
            return Err(Error::Dimension("ball/system dimensions differ".into()));
        }
        let h_hat = match &sys.displacement {
            TorusDisplacement::Sawtooth => sawtooth_h_hat(ball),
            TorusDisplacement::Zero => {
                vec![vec![Complex64::new(0.0, 0.0); ball.len()]; sys.dim()]
            }
            TorusDisplacement::Coboundary(_) => {
                return Err(Error::Unsupported(
                    "modified displacement is built for the sawtooth family".into(),
                ));
            }
        };
        let op = build_p_restricted(&sys.matrices, sys.weights(), ball)?;
        let solution = solve_poisson(&op, &h_hat, cutoff, max_terms)?;
        if !solution.converged {
            return Err(Error::Numerical("Poisson series did not reach the cutoff".into()));
        }
        Ok(ModifiedDisplacement {
            ball: ball.clone(),
            solution,
            mean_offset: sys.mean_offset().to_vec(),
            dim: sys.dim(),
        })
    }

    pub fn residual(&self) -> &[f64] {
        &self.solution.residual
    }

    pub fn terms(&self) -> usize {
        self.solution.terms
    }

    /// Evaluates ball-supported coefficient vectors at a torus point via
    /// per-axis character tables; returns the real parts.
    fn eval_ball(&self, coeffs: &[Vec<Complex64>], x: &[f64]) -> Vec<f64> {
        let d = self.ball.d;
        let m = self.ball.radius.floor() as i64;
        let side = (2 * m + 1) as usize;
        let mut tables = vec![Complex64::new(0.0, 0.0); d * side];
        for j in 0..d {
            for n in -m..=m {
                let arg = std::f64::consts::TAU * n as f64 * x[j];
                tables[j * side + (n + m) as usize] = Complex64::new(arg.cos(), arg.sin());
            }
        }
        let mut out = vec![Complex64::new(0.0, 0.0); coeffs.len()];
        for (idx, p) in self.ball.points.iter().enumerate() {
            let mut prod = Complex64::new(1.0, 0.0);
            for j in 0..d {
                prod *= tables[j * side + (p[j] + m) as usize];
            }
            for (o, c) in out.iter_mut().zip(coeffs) {
                *o += c[idx] * prod;
            }
        }
        out.into_iter().map(|c| c.re).collect()
    }

    /// u evaluated at a torus point, one value per displacement component.
    pub fn u_at(&self, x: &[f64]) -> Vec<f64> {
        self.eval_ball(&self.solution.u_hat, x)
    }

    /// Conditional mean of c' given the state x, evaluated from the
    /// ball-resident residual coefficients.
    pub fn conditional_mean_at(&self, x: &[f64]) -> Vec<f64> {
        let ev = self.eval_ball(&self.solution.resid_hat, x);
        ev.iter()
            .zip(&self.mean_offset)
            .map(|(r, m)| -r - m)
            .collect()
    }

    fn c_prime_with_ux(
        &self,
        sys: &TorusSystem,
        g: usize,
        x: &ToralPoint,
        ux: &[f64],
    ) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let mut xm = x.clone();
        sys.displacement(g, &mut xm, &mut out);
        let ax = sys.action(g).apply(x);
        let uax = self.u_at(&ax.coords);
        for i in 0..out.len() {
            out[i] += ux[i] - uax[i];
        }
        out
    }

    /// c'(g, x) = c(g, x) - u(A_g x) + u(x).
    pub fn c_prime(&self, sys: &TorusSystem, g: usize, x: &ToralPoint) -> Vec<f64> {
        let ux = self.u_at(&x.coords);
        self.c_prime_with_ux(sys, g, x, &ux)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaReport {
    pub samples: u64,
    pub matrix: Vec<Vec<f64>>,
    pub entry_stderr: Vec<Vec<f64>>,
    pub min_eigenvalue: f64,
}

impl SigmaReport {
    pub fn dmatrix(&self) -> DMatrix<f64> {
        let d = self.matrix.len();
        DMatrix::from_fn(d, d, |i, j| self.matrix[i][j])
    }

    pub fn max_stderr(&self) -> f64 {
        self.entry_stderr
            .iter()
            .flatten()
            .fold(0.0f64, |a, &b| a.max(b))
    }

    /// Quadratic form lambda^T Sigma lambda.
    pub fn quad(&self, lambda: &[f64]) -> f64 {
        let d = self.matrix.len();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += lambda[i] * self.matrix[i][j] * lambda[j];
            }
        }
        acc
    }
}

/// Monte Carlo estimate of Sigma = E[sum_g w_g c'(g, x) c'(g, x)^T] over
/// uniform states x.  The inner generator average is exact; only the state
/// is sampled.  Sample order is fixed by the counter scheme, so the result
/// does not depend on the thread count.
pub fn sigma_form(
    sys: &TorusSystem,
    md: &ModifiedDisplacement,
    samples: u64,
    seed: u64,
) -> Result<SigmaReport> {
    if samples == 0 {
        return Err(Error::Config("sigma estimate needs samples".into()));
    }
    let d = sys.dim();
    let per: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = CounterRng::from_path(seed, &[TAG_SIGMA, s]);
            let x = sys.sample_point(&mut rng);
            let ux = md.u_at(&x.coords);
            let mut m = vec![0.0; d * d];
            for g in 0..sys.generator_count() {
                let w = sys.weights()[g];
                let cp = md.c_prime_with_ux(sys, g, &x, &ux);
                for i in 0..d {
                    for j in 0..d {
                        m[i * d + j] += w * cp[i] * cp[j];
                    }
                }
            }
            m
        })
        .collect();
    let n = samples as f64;
    let mut mean = vec![0.0; d * d];
    for row in &per {
        for (acc, v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
    }
    for v in &mut mean {
        *v /= n;
    }
    let mut var = vec![0.0; d * d];
    for row in &per {
        for ((acc, v), mu) in var.iter_mut().zip(row).zip(&mean) {
            let dv = v - mu;
            *acc += dv * dv;
        }
    }
    let denom = if samples > 1 { n * (n - 1.0) } else { 1.0 };
    let stderr: Vec<f64> = var.iter().map(|v| (v / denom).sqrt()).collect();
    // Symmetrize before the eigenvalue check; MC noise is not symmetric.
    let sym = DMatrix::from_fn(d, d, |i, j| 0.5 * (mean[i * d + j] + mean[j * d + i]));
    let min_eigenvalue = sym
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    let matrix: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| mean[i * d + j]).collect())
        .collect();
    let entry_stderr: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| stderr[i * d + j]).collect())
        .collect();
    Ok(SigmaReport {
        samples,
        matrix,
        entry_stderr,
        min_eigenvalue,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbRow {
    pub lambda: Vec<f64>,
    pub k_re: f64,
    pub k_im: f64,
    pub k_abs: f64,
    /// 1 - (lambda^T Sigma lambda) / 2.
    pub expansion: f64,
    /// (1 - Re k) / ((lambda^T Sigma lambda) / 2); NaN at lambda = 0.
    pub ratio: f64,
    pub converged: bool,
    pub tie: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationTable {
    pub ball_radius: f64,
    pub rows: Vec<PerturbRow>,
}

/// Compares the dominant twisted eigenvalue against the quadratic
/// approximation from Sigma, one row per direction.
pub fn perturbation_check(
    sys: &TorusSystem,
    ball: &FrequencyBall,
    sigma: &DMatrix<f64>,
    lambdas: &[Vec<f64>],
    tol: f64,
    max_iter: usize,
) -> Result<PerturbationTable> {
    let mut rows = Vec::with_capacity(lambdas.len());
    for lambda in lambdas {
        if lambda.len() != sys.dim_torus {
            return Err(Error::Dimension("lambda dimension mismatch".into()));
        }
        let op = build_p_lambda(sys, lambda, ball)?;
        let eig = dominant_eigen(&op, tol, max_iter, 7);
        let lv = DVector::from_column_slice(lambda);
        let quad = (sigma * &lv).dot(&lv);
        let half = 0.5 * quad;
        rows.push(PerturbRow {
            lambda: lambda.clone(),
            k_re: eig.value.re,
            k_im: eig.value.im,
            k_abs: eig.value.norm(),
            expansion: 1.0 - half,
            ratio: (1.0 - eig.value.re) / half,
            converged: eig.converged,
            tie: eig.tie,
        });
    }
    Ok(PerturbationTable {
        ball_radius: ball.radius,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::scenario_torus_sl2;
    use crate::spectral::op::random_unit;

    #[test]
    fn h_hat_matches_quadrature() {
        // Midpoint quadrature of int t e^{-2 pi i n t} dt on [-1/2, 1/2].
        let quad = |n: i64| -> Complex64 {
            let steps = 40_000;
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..steps {
                let t = -0.5 + (k as f64 + 0.5) / steps as f64;
                let arg = -std::f64::consts::TAU * n as f64 * t;
                acc += t * Complex64::new(arg.cos(), arg.sin());
            }
            acc / steps as f64
        };
        let ball = FrequencyBall::new(2, 3.0).unwrap();
        let h = sawtooth_h_hat(&ball);
        for (idx, p) in ball.points.iter().enumerate() {
            for comp in 0..2 {
                let want = if p.iter().enumerate().all(|(j, &c)| (c != 0) == (j == comp)) {
                    quad(p[comp])
                } else {
                    Complex64::new(0.0, 0.0)
                };
                let got = h[comp][idx];
                assert!(
                    (got - want).norm() < 1e-8,
                    "component {comp} at {p:?}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn zero_h_gives_zero_solution() {
        let sys = scenario_torus_sl2();
        let ball = FrequencyBall::new(2, 4.0).unwrap();
        let op = build_p_restricted(&sys.matrices, sys.weights(), &ball).unwrap();
        let h = vec![vec![Complex64::new(0.0, 0.0); ball.len()]; 2];
        let sol = solve_poisson(&op, &h, 1e-12, 100).unwrap();
        assert!(sol.converged);
        assert!(sol.u_hat.iter().flatten().all(|c| c.norm() == 0.0));
        assert!(sol.residual.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn constructed_coboundary_round_trip() {
        // Pick g on interior frequencies, feed h = P g - g back in, and
        // recover g: the decaying solution of the ball equation is unique.
        let sys = scenario_torus_sl2();
        let ball = FrequencyBall::new(2, 6.0).unwrap();
        let op = build_p_restricted(&sys.matrices, sys.weights(), &ball).unwrap();
        let n = ball.len();
        let v = random_unit(n, 3, 1);
        let mut g = vec![Complex64::new(0.0, 0.0); n];
        for (idx, p) in ball.points.iter().enumerate() {
            if p.iter().map(|c| c * c).sum::<i64>() <= 4 {
                g[idx] = v[idx];
            }
        }
        let mut pg = vec![Complex64::new(0.0, 0.0); n];
        op.apply(&g, &mut pg);
        let h: Vec<Complex64> = pg.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sol = solve_poisson(&op, &[h], 1e-13, 5000).unwrap();
        assert!(sol.converged);
        let err = sol.u_hat[0]
            .iter()
            .zip(&g)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-8, "round trip error {err}");
        assert!(sol.residual[0] < 1e-10);
    }

    #[test]
    fn sawtooth_solution_has_tiny_residual() {
        let sys = scenario_torus_sl2();
        let ball = FrequencyBall::new(2, 8.0).unwrap();
        let md = ModifiedDisplacement::new(&sys, &ball, 1e-12, 2000).unwrap();
        assert!(md.residual().iter().all(|&r| r < 1e-10), "{:?}", md.residual());
        let mut rng = CounterRng::from_path(5, &[0]);
        for _ in 0..100 {
            let x = sys.sample_point(&mut rng);
            let cm = md.conditional_mean_at(&x.coords);
            assert!(cm.iter().all(|v| v.abs() < 1e-9), "{cm:?}");
        }
    }

    #[test]
    fn modified_displacement_centers_the_generator_average() {
        // Direct check against the definition: average c' over generators
        // at fixed x using only u_at, independently of resid_hat.
        // The generator average of c' evaluated with the true sawtooth
        // keeps an out-of-ball tail; it shrinks as the ball grows.
        let sys = scenario_torus_sl2();
        let avg_size = |radius: f64| -> f64 {
            let ball = FrequencyBall::new(2, radius).unwrap();
            let md = ModifiedDisplacement::new(&sys, &ball, 1e-12, 3000).unwrap();
            let mut rng = CounterRng::from_path(11, &[0]);
            let mut total = 0.0;
            for _ in 0..20 {
                let mut x = sys.sample_point(&mut rng);
                // Stay clear of the sawtooth jump, where the Fourier tail
                // converges slowest.
                for c in &mut x.coords {
                    *c *= 0.6;
                }
                let mut avg = vec![0.0; 2];
                for g in 0..sys.generator_count() {
                    let cp = md.c_prime(&sys, g, &x);
                    for i in 0..2 {
                        avg[i] += sys.weights()[g] * cp[i];
                    }
                }
                total += avg.iter().map(|v| v.abs()).sum::<f64>();
            }
            total / 40.0
        };
        let coarse = avg_size(6.0);
        let fine = avg_size(24.0);
        assert!(fine < 0.2, "fine-ball residual mean {fine}");
        assert!(fine < 0.75 * coarse, "no shrink: {coarse} -> {fine}");
    }

    #[test]
    fn sigma_is_symmetric_positive_and_stable() {
        let sys = scenario_torus_sl2();
        let ball8 = FrequencyBall::new(2, 8.0).unwrap();
        let ball12 = FrequencyBall::new(2, 12.0).unwrap();
        let md8 = ModifiedDisplacement::new(&sys, &ball8, 1e-12, 2000).unwrap();
        let md12 = ModifiedDisplacement::new(&sys, &ball12, 1e-12, 2000).unwrap();
        let s8 = sigma_form(&sys, &md8, 4000, 42).unwrap();
        let s12 = sigma_form(&sys, &md12, 4000, 42).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((s8.matrix[i][j] - s8.matrix[j][i]).abs() < 1e-12);
                assert!((s8.matrix[i][j] - s12.matrix[i][j]).abs() < 0.02);
            }
        }
        assert!(s8.min_eigenvalue > 0.01, "{}", s8.min_eigenvalue);
        assert!(s8.max_stderr() < 0.01);
        let q = s8.quad(&[1.0, 0.0]);
        assert!((q - s8.matrix[0][0]).abs() < 1e-15);
    }

    #[test]
    fn perturbation_ratio_near_one_for_small_twists() {
        let sys = scenario_torus_sl2();
        let ball = FrequencyBall::new(2, 16.0).unwrap();
        let md = ModifiedDisplacement::new(&sys, &FrequencyBall::new(2, 12.0).unwrap(), 1e-12, 2000).unwrap();
        let sigma = sigma_form(&sys, &md, 4000, 9).unwrap();
        let table = perturbation_check(
            &sys,
            &ball,
            &sigma.dmatrix(),
            &[vec![0.1, 0.0], vec![0.0, 0.0]],
            1e-10,
            5000,
        )
        .unwrap();
        let row = &table.rows[0];
        assert!(row.converged && !row.tie);
        assert!(row.ratio > 0.8 && row.ratio < 1.2, "ratio {}", row.ratio);
        assert!(row.k_abs < 1.0);
        let zero = &table.rows[1];
        assert!(zero.ratio.is_nan());
        assert_eq!(zero.k_re, 1.0);
    }
}
