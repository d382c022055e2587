//! The motion group SU(d) x C^d acting on itself: a generator (a, tau)
//! sends the rotation part x to a*x and displaces the translation part by
//! tau viewed from the current frame, c_(a,tau)(x) = x^-1(tau).
//!
//! Composition and inverse follow from reading (x, tau) as the map
//! "rotate by x, then translate by tau":
//!   (g h) has rotation x_g x_h and translation x_h^-1(tau_g) + tau_h,
//!   g^-1 has rotation x_g^-1 and translation -x_g(tau_g).

use nalgebra::{Complex, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::CMat;

#[derive(Debug, Clone)]
pub struct MotionElement {
    pub rot: CMat,
    pub tau: Vec<Complex64>,
}

impl MotionElement {
    pub fn new(rot: CMat, tau: Vec<Complex64>) -> Result<Self> {
        if rot.dim != tau.len() {
            return Err(Error::Dimension("rotation/translation dimension mismatch".into()));
        }
        if rot.unitarity_defect() > 1e-10 {
            return Err(Error::Config("rotation part is not unitary".into()));
        }
        Ok(MotionElement { rot, tau })
    }

    pub fn identity(d: usize) -> Self {
        MotionElement { rot: CMat::identity(d), tau: vec![Complex64::new(0.0, 0.0); d] }
    }

    pub fn d(&self) -> usize {
        self.tau.len()
    }

    pub fn compose(&self, rhs: &MotionElement) -> MotionElement {
        let rot = self.rot.mul(&rhs.rot);
        let mut tau = rhs.rot.adjoint_matvec(&self.tau);
        for (t, r) in tau.iter_mut().zip(&rhs.tau) {
            *t += r;
        }
        MotionElement { rot, tau }
    }

    pub fn inverse(&self) -> MotionElement {
        let tau = self.rot.matvec(&self.tau).iter().map(|t| -t).collect();
        MotionElement { rot: self.rot.adjoint(), tau }
    }

    /// Displacement seen from frame x: x^-1(tau).
    pub fn displacement_from(&self, x: &CMat) -> Vec<Complex64> {
        x.adjoint_matvec(&self.tau)
    }
}

/// Flattens a complex d-vector to 2d reals: [Re_1..Re_d, Im_1..Im_d].
pub fn complex_to_real(v: &[Complex64], out: &mut [f64]) {
    let d = v.len();
    debug_assert_eq!(out.len(), 2 * d);
    for (i, c) in v.iter().enumerate() {
        out[i] = c.re;
        out[d + i] = c.im;
    }
}

/// Least-squares check that the affine system { v : a_i v + tau_i = v } is
/// inconsistent.  Returns the residual norm of the best candidate; a
/// residual below tol means some v is (numerically) fixed by every
/// generator, which degenerates the translation walk.
pub fn affine_fixed_point_residual(gens: &[MotionElement]) -> f64 {
    let d = gens[0].d();
    let rows = gens.len() * d;
    let mut a = DMatrix::<Complex<f64>>::zeros(rows, d);
    let mut b = DVector::<Complex<f64>>::zeros(rows);
    for (k, g) in gens.iter().enumerate() {
        for i in 0..d {
            for j in 0..d {
                let mut e = g.rot[(i, j)];
                if i == j {
                    e -= Complex64::new(1.0, 0.0);
                }
                a[(k * d + i, j)] = Complex::new(e.re, e.im);
            }
            b[k * d + i] = Complex::new(-g.tau[i].re, -g.tau[i].im);
        }
    }
    let svd = a.clone().svd(true, true);
    match svd.solve(&b, 1e-12) {
        Ok(v) => (&a * &v - &b).norm(),
        Err(_) => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::haar_su;
    use crate::rng::CounterRng;

    fn rand_element(d: usize, rng: &mut CounterRng) -> MotionElement {
        use rand::Rng;
        let rot = haar_su(d, rng);
        let tau = (0..d)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        MotionElement::new(rot, tau).unwrap()
    }

    fn close(a: &MotionElement, b: &MotionElement) -> bool {
        let mut ok = true;
        for i in 0..a.d() {
            ok &= (a.tau[i] - b.tau[i]).norm() < 1e-12;
            for j in 0..a.d() {
                ok &= (a.rot[(i, j)] - b.rot[(i, j)]).norm() < 1e-12;
            }
        }
        ok
    }

    #[test]
    fn identity_laws() {
        let mut rng = CounterRng::new(81);
        let g = rand_element(2, &mut rng);
        let e = MotionElement::identity(2);
        assert!(close(&g.compose(&e), &g));
        assert!(close(&e.compose(&g), &g));
        assert!(close(&g.compose(&g.inverse()), &e));
        assert!(close(&g.inverse().compose(&g), &e));
    }

    #[test]
    fn associativity() {
        let mut rng = CounterRng::new(82);
        for _ in 0..100 {
            let (a, b, c) = (rand_element(2, &mut rng), rand_element(2, &mut rng), rand_element(2, &mut rng));
            assert!(close(&a.compose(&b).compose(&c), &a.compose(&b.compose(&c))));
        }
    }

    #[test]
    fn displacement_concatenates() {
        // c(g_b g_a, x) = c(g_b, a x) + c(g_a, x) where the walk applies
        // g_a first.  Composition order: the combined element is g_b . g_a
        // with "later on the left".
        let mut rng = CounterRng::new(83);
        for _ in 0..100 {
            let ga = rand_element(2, &mut rng);
            let gb = rand_element(2, &mut rng);
            let x = haar_su(2, &mut rng);
            let combined = gb.compose(&ga); // note: tau_{gh} = x_h^-1(tau_g) + tau_h
            let ax = ga.rot.mul(&x);
            let lhs = combined.displacement_from(&x);
            let mut rhs = gb.displacement_from(&ax);
            let first = ga.displacement_from(&x);
            for (r, f) in rhs.iter_mut().zip(&first) {
                *r += f;
            }
            for i in 0..2 {
                assert!((lhs[i] - rhs[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn displacement_preserves_norm() {
        let mut rng = CounterRng::new(84);
        let g = rand_element(3, &mut rng);
        let x = haar_su(3, &mut rng);
        let c = g.displacement_from(&x);
        let n1: f64 = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let n2: f64 = g.tau.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((n1 - n2).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_detection() {
        let mut rng = CounterRng::new(85);
        // Consistent system: tau_i = v - a_i v for a common v.
        let v = vec![Complex64::new(0.3, -0.2), Complex64::new(-0.1, 0.5)];
        let mut consistent = Vec::new();
        for _ in 0..3 {
            let rot = haar_su(2, &mut rng);
            let av = rot.matvec(&v);
            let tau = v.iter().zip(&av).map(|(vi, avi)| vi - avi).collect();
            consistent.push(MotionElement::new(rot, tau).unwrap());
        }
        assert!(affine_fixed_point_residual(&consistent) < 1e-10);
        // Perturbing one translation destroys consistency.
        let mut broken = consistent;
        broken[0].tau[0] += Complex64::new(0.05, 0.0);
        assert!(affine_fixed_point_residual(&broken) > 1e-3);
    }
}
