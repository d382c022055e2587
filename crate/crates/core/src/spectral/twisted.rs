//! The twisted transfer operator in frequency space: the character
//! permutation of the toral action composed with multiplication by the
//! sawtooth phase, both compressed to a frequency ball plus the zero mode.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::IntMatrix;
use crate::scenarios::{TorusDisplacement, TorusSystem};
use crate::spectral::ball::FrequencyBall;
use crate::spectral::op::{Applies, OpKind, TruncatedOperator};
use crate::walk::{check_weights, System};

/// Fourier coefficient at frequency n of t -> exp(i lambda {t}) on one
/// circle coordinate: the closed form of the defining integral is
/// sin(lambda/2 - pi n) / (lambda/2 - pi n), and expanding the sine makes
/// it (-1)^n sin(lambda/2) / (lambda/2 - pi n).  The expanded form is used
/// so that lambda = 0 yields an exact Kronecker delta.
pub fn sawtooth_phase_coeff(lambda: f64, n: i64) -> f64 {
    let x = 0.5 * lambda - std::f64::consts::PI * n as f64;
    if x.abs() < 1e-9 {
        return 1.0 - x * x / 6.0;
    }
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    sign * (0.5 * lambda).sin() / x
}

/// Factored form of the compressed twisted operator: scatter for the
/// permutation part, separable per-axis convolution on the enclosing cube
/// for the multiplication part.  The convolution kernel covers the full
/// difference range, so the composition equals the exact compression
/// Pi (M_lambda) Pi (C) Pi.
pub(crate) struct TwistedParts {
    n: usize,
    d: usize,
    m: i64,
    strides: Vec<usize>,
    cube_len: usize,
    /// perm[src] = images (dst, weight) of the character permutation.
    perm: Vec<Vec<(u32, f64)>>,
    /// Per-axis kernel over offsets [-2m, 2m]; empty when M is identity.
    kernels: Vec<Vec<f64>>,
    ball_to_cube: Vec<usize>,
    identity_mult: bool,
}

impl TwistedParts {
    fn convolve(&self, cube: &mut Vec<Complex64>, scratch: &mut Vec<Complex64>, reversed: bool) {
        let side = (2 * self.m + 1) as usize;
        for axis in 0..self.d {
            let stride = self.strides[axis];
            let kernel = &self.kernels[axis];
            scratch.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            // Lines along `axis`: iterate all cells, processing each line
            // once via its base cell (coordinate 0 on the axis).
            let outer = self.cube_len / side;
            for line in 0..outer {
                // Map the line index to the base flat offset by skipping
                // the axis dimension.
                let mut rest = line;
                let mut base = 0usize;
                for j in (0..self.d).rev() {
                    if j == axis {
                        continue;
                    }
                    let c = rest % side;
                    rest /= side;
                    base += c * self.strides[j];
                }
                for out_pos in 0..side {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for in_pos in 0..side {
                        let off = out_pos as i64 - in_pos as i64;
                        let k = if reversed { -off } else { off };
                        let ker = kernel[(k + 2 * self.m) as usize];
                        if ker != 0.0 {
                            acc += ker * cube[base + in_pos * stride];
                        }
                    }
                    scratch[base + out_pos * stride] = acc;
                }
            }
            std::mem::swap(cube, scratch);
        }
    }
}

impl Applies for TwistedParts {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        // Permutation part first: P phi has coefficient mass scattered
        // along gamma^t.
        y.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for (src, images) in self.perm.iter().enumerate() {
            let v = x[src];
            for &(dst, w) in images {
                y[dst as usize] += w * v;
            }
        }
        if self.identity_mult {
            return;
        }
        let mut cube = vec![Complex64::new(0.0, 0.0); self.cube_len];
        let mut scratch = cube.clone();
        for (i, &cell) in self.ball_to_cube.iter().enumerate() {
            cube[cell] = y[i];
        }
        self.convolve(&mut cube, &mut scratch, false);
        for (i, &cell) in self.ball_to_cube.iter().enumerate() {
            y[i] = cube[cell];
        }
    }

    fn apply_adjoint(&self, x: &[Complex64], y: &mut [Complex64]) {
        // (Pi M Pi C Pi)^H = Pi C^H M^H Pi; the kernels are real, so M^H
        // convolves with the reversed kernel.
        let mut mid = x.to_vec();
        if !self.identity_mult {
            let mut cube = vec![Complex64::new(0.0, 0.0); self.cube_len];
            let mut scratch = cube.clone();
            for (i, &cell) in self.ball_to_cube.iter().enumerate() {
                cube[cell] = x[i];
            }
            self.convolve(&mut cube, &mut scratch, true);
            for (i, &cell) in self.ball_to_cube.iter().enumerate() {
                mid[i] = cube[cell];
            }
        }
        for (src, images) in self.perm.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(dst, w) in images {
                acc += w * mid[dst as usize];
            }
            y[src] = acc;
        }
    }
}

/// Compressed twisted operator with explicitly provided per-axis phase
/// kernels (kernels[j][k + 2m] is the coefficient at offset k).
pub fn build_p_lambda_with_kernels(
    mats: &[IntMatrix],
    weights: &[f64],
    kernels: Vec<Vec<f64>>,
    ball: &FrequencyBall,
) -> Result<TruncatedOperator> {
    let d = ball.d;
    if mats.is_empty() || mats.len() != weights.len() {
        return Err(Error::Config("generators/weights length mismatch".into()));
    }
    check_weights(weights)?;
    let m = ball.radius.floor() as i64;
    if kernels.len() != d || kernels.iter().any(|k| k.len() != (4 * m + 1) as usize) {
        return Err(Error::Dimension("kernels must cover offsets [-2m, 2m] per axis".into()));
    }
    let transposes: Vec<Vec<i64>> = mats
        .iter()
        .map(|mat| {
            if mat.dim != d {
                return Err(Error::Dimension("generator/ball dimension mismatch".into()));
            }
            if !mat.is_unimodular() {
                return Err(Error::NotUnimodular("twisted operator needs unimodular generators".into()));
            }
            mat.transpose().to_i64()
        })
        .collect::<Result<_>>()?;

    let n = ball.len_with_zero();
    let zero = ball.zero_index();
    let zvec = vec![0i64; d];
    let mut perm: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    let mut image = vec![0i64; d];
    for src in 0..n {
        let p: &[i64] = if src == zero { &zvec } else { &ball.points[src] };
        for (mt, &w) in transposes.iter().zip(weights) {
            for (i, img) in image.iter_mut().enumerate() {
                let mut acc: i128 = 0;
                for j in 0..d {
                    acc += mt[i * d + j] as i128 * p[j] as i128;
                }
                *img = i64::try_from(acc)
                    .map_err(|_| Error::Numerical("frequency image overflows i64".into()))?;
            }
            let dst = if image.iter().all(|&c| c == 0) {
                Some(zero)
            } else {
                ball.index_of(&image)
            };
            if let Some(dst) = dst {
                perm[src].push((dst as u32, w));
            }
        }
    }

    let side = (2 * m + 1) as usize;
    let cube_len = side.pow(d as u32);
    let mut strides = vec![0usize; d];
    let mut s = 1usize;
    for j in (0..d).rev() {
        strides[j] = s;
        s *= side;
    }
    let mut ball_to_cube = Vec::with_capacity(n);
    for p in &ball.points {
        let mut flat = 0usize;
        for j in 0..d {
            flat += (p[j] + m) as usize * strides[j];
        }
        ball_to_cube.push(flat);
    }
    let mut center = 0usize;
    for j in 0..d {
        center += m as usize * strides[j];
    }
    ball_to_cube.push(center);

    let identity_mult = kernels.iter().all(|ker| {
        ker.iter().enumerate().all(|(i, &v)| {
            let off = i as i64 - 2 * m;
            if off == 0 { v == 1.0 } else { v == 0.0 }
        })
    });

    let parts = TwistedParts {
        n,
        d,
        m,
        strides,
        cube_len,
        perm,
        kernels,
        ball_to_cube,
        identity_mult,
    };
    Ok(TruncatedOperator::new(
        OpKind::PLambda,
        ball.radius,
        d,
        Some(zero),
        Box::new(parts),
    ))
}

/// Per-axis sawtooth phase kernels for a given lambda.
pub fn sawtooth_kernels(lambda: &[f64], m: i64) -> Vec<Vec<f64>> {
    lambda
        .iter()
        .map(|&l| {
            (-2 * m..=2 * m)
                .map(|k| sawtooth_phase_coeff(l, k))
                .collect()
        })
        .collect()
}

/// The twisted operator P_lambda of a torus scenario with sawtooth
/// displacement, compressed to ball + {0}.
pub fn build_p_lambda(
    sys: &TorusSystem,
    lambda: &[f64],
    ball: &FrequencyBall,
) -> Result<TruncatedOperator> {
    if ball.d != sys.dim_torus || lambda.len() != sys.dim_torus {
        return Err(Error::Dimension("lambda/ball/system dimensions differ".into()));
    }
    match sys.displacement {
        TorusDisplacement::Sawtooth => {}
        TorusDisplacement::Zero => {
            // c = 0 twists trivially; the identity kernel is exact.
            let m = ball.radius.floor() as i64;
            let mut kernels = vec![vec![0.0; (4 * m + 1) as usize]; ball.d];
            for ker in &mut kernels {
                ker[(2 * m) as usize] = 1.0;
            }
            return build_p_lambda_with_kernels(&sys.matrices, sys.weights(), kernels, ball);
        }
        TorusDisplacement::Coboundary(_) => {
            return Err(Error::Unsupported(
                "twisted operator needs the sawtooth displacement or explicit Fourier kernels"
                    .into(),
            ));
        }
    }
    let m = ball.radius.floor() as i64;
    let kernels = sawtooth_kernels(lambda, m);
    build_p_lambda_with_kernels(&sys.matrices, sys.weights(), kernels, ball)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::scenario_torus_sl2;
    use crate::spectral::op::{dominant_eigen, random_unit};

    fn l2(v: &[Complex64]) -> f64 {
        v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn coeff_matches_quadrature() {
        // Midpoint quadrature of the defining integral as an oracle.
        let quad = |lambda: f64, n: i64| -> Complex64 {
            let steps = 20_000;
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..steps {
                let t = -0.5 + (k as f64 + 0.5) / steps as f64;
                let arg = lambda * t - std::f64::consts::TAU * n as f64 * t;
                acc += Complex64::new(arg.cos(), arg.sin());
            }
            acc / steps as f64
        };
        for &(l, n) in &[(1.3, 0), (1.3, 1), (1.3, -3), (0.05, 2), (4.0, 5)] {
            let got = sawtooth_phase_coeff(l, n);
            let want = quad(l, n);
            assert!(want.im.abs() < 1e-7, "coefficient should be real");
            assert!((got - want.re).abs() < 1e-7, "coeff({l},{n}) {got} vs {}", want.re);
        }
    }

    #[test]
    fn coeff_closed_forms() {
        // n = 0 coefficient is 2 sin(lambda/2) / lambda.
        for &l in &[0.3f64, 1.0, 2.5] {
            let want = 2.0 * (0.5 * l).sin() / l;
            assert!((sawtooth_phase_coeff(l, 0) - want).abs() < 1e-14);
        }
        // lambda = 0 is an exact delta.
        assert_eq!(sawtooth_phase_coeff(0.0, 0), 1.0);
        for n in 1..10 {
            assert_eq!(sawtooth_phase_coeff(0.0, n), 0.0);
            assert_eq!(sawtooth_phase_coeff(0.0, -n), 0.0);
        }
    }

    #[test]
    fn lambda_zero_preserves_constants_exactly() {
        let sys = scenario_torus_sl2();
        let ball = FrequencyBall::new(2, 6.0).unwrap();
        let op = build_p_lambda(&sys, &[0.0, 0.0], &ball).unwrap();
        let zero = op.zero_index.unwrap();
        let mut e = vec![Complex64::new(0.0, 0.0); op.dim()];
        e[zero] = Complex64::new(1.0, 0.0);
        let mut y = e.clone();
        op.apply(&e.clone(), &mut y);
        assert_eq!(y[zero], Complex64::new(1.0, 0.0));
        assert!(y.iter().enumerate().all(|(i, c)| i == zero || c.norm() == 0.0));
        let eig = dominant_eigen(&op, 1e-12, 100, 3);
        assert_eq!(eig.value, Complex64::new(1.0, 0.0));
        assert!(eig.converged);
        assert!((eig.vector[zero].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn operator_is_contraction() {
        let sys = scenario_torus_sl2();
        let ball = FrequencyBall::new(2, 6.0).unwrap();
        for lambda in [[0.7, -0.3], [2.0, 1.0], [0.0, 0.9]] {
            let op = build_p_lambda(&sys, &lambda, &ball).unwrap();
            assert!(op.norm_upper(6, 4) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn lipschitz_in_lambda() {
        // |P_a - P_b| <= |a - b| sup|c| with sup|c| = sqrt(d)/2.
        let sys = scenario_torus_sl2();
        let ball = FrequencyBall::new(2, 5.0).unwrap();
        let a = [0.30, 0.70];
        let b = [0.35, 0.65];
        let bound = {
            let dl: f64 = (0..2).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum();
            dl.sqrt() * (2.0f64).sqrt() * 0.5
        };
        let opa = build_p_lambda(&sys, &a, &ball).unwrap();
        let opb = build_p_lambda(&sys, &b, &ball).unwrap();
        for t in 0..5 {
            let v = random_unit(opa.dim(), 100 + t, 9);
            let mut ya = vec![Complex64::new(0.0, 0.0); opa.dim()];
            let mut yb = ya.clone();
            opa.apply(&v, &mut ya);
            opb.apply(&v, &mut yb);
            let diff: f64 = l2(&ya.iter().zip(&yb).map(|(x, y)| x - y).collect::<Vec<_>>());
            assert!(diff <= bound + 1e-12, "diff {diff} exceeds bound {bound}");
        }
    }

    #[test]
    fn conjugation_symmetry() {
        let sys = scenario_torus_sl2();
        let ball = FrequencyBall::new(2, 8.0).unwrap();
        let lam = [0.4, 0.2];
        let neg = [-0.4, -0.2];
        let kp = dominant_eigen(&build_p_lambda(&sys, &lam, &ball).unwrap(), 1e-12, 2000, 5);
        let kn = dominant_eigen(&build_p_lambda(&sys, &neg, &ball).unwrap(), 1e-12, 2000, 5);
        assert!(kp.converged && kn.converged);
        assert!((kn.value - kp.value.conj()).norm() < 1e-10);
    }

    #[test]
    fn small_twist_contracts_strictly() {
        let sys = scenario_torus_sl2();
        let ball = FrequencyBall::new(2, 10.0).unwrap();
        let eig = dominant_eigen(&build_p_lambda(&sys, &[0.3, 0.0], &ball).unwrap(), 1e-12, 4000, 5);
        assert!(eig.converged);
        let k = eig.value.norm();
        assert!(k < 1.0 - 1e-5, "|k| = {k}");
        assert!(k > 0.9, "|k| = {k}");
    }

    #[test]
    fn adjoint_consistent_with_inner_products() {
        let sys = scenario_torus_sl2();
        let ball = FrequencyBall::new(2, 4.0).unwrap();
        let op = build_p_lambda(&sys, &[0.9, 0.1], &ball).unwrap();
        let x = random_unit(op.dim(), 21, 0);
        let y = random_unit(op.dim(), 22, 0);
        let mut ax = vec![Complex64::new(0.0, 0.0); op.dim()];
        let mut aty = ax.clone();
        op.apply(&x, &mut ax);
        op.apply_adjoint(&y, &mut aty);
        let lhs: Complex64 = y.iter().zip(&ax).map(|(a, b)| a.conj() * b).sum();
        let rhs: Complex64 = aty.iter().zip(&x).map(|(a, b)| a.conj() * b).sum();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn rejects_unsupported_displacement() {
        use crate::scenarios::{TrigPoly, TorusDisplacement, TorusSystem};
        let base = scenario_torus_sl2();
        let poly = TrigPoly {
            dim_in: 2,
            terms: vec![vec![(vec![1, 0], 0.5, 0.0)]],
        };
        let sys = TorusSystem::new(
            "cob",
            base.matrices.clone(),
            vec![0.25; 4],
            TorusDisplacement::Coboundary(poly),
        )
        .unwrap();
        let ball = FrequencyBall::new(2, 3.0).unwrap();
        assert!(matches!(
            build_p_lambda(&sys, &[0.1, 0.1], &ball),
            Err(Error::Unsupported(_))
        ));
    }
}
