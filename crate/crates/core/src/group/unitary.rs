//! Small complex matrices and Haar sampling on SU(d).
//!
//! Sampling: fill a d x d matrix with standard complex Gaussians, QR-factor
//! by modified Gram-Schmidt (the R diagonal is then positive real, which is
//! the phase convention that makes Q Haar on U(d)), and divide by a d-th
//! root of the determinant to land in SU(d).

use num_complex::Complex64;
use rand::Rng;

use crate::rng::CounterRng;

#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub dim: usize,
    entries: Vec<Complex64>, // row-major
}

impl CMat {
    pub fn zero(dim: usize) -> Self {
        CMat { dim, entries: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = CMat::zero(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(dim: usize, entries: Vec<Complex64>) -> Self {
        assert_eq!(entries.len(), dim * dim);
        CMat { dim, entries }
    }

    pub fn mul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = CMat::zero(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                for j in 0..n {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.dim, v.len());
        let n = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                s += self[(i, j)] * v[j];
            }
            out[i] = s;
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        let n = self.dim;
        let mut out = CMat::zero(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// U^H v, without materializing the adjoint.
    pub fn adjoint_matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                out[j] += self[(i, j)].conj() * v[i];
            }
        }
        out
    }

    pub fn det(&self) -> Complex64 {
        // Gaussian elimination with partial pivoting; d <= 4 in practice.
        let n = self.dim;
        let mut m = self.entries.clone();
        let mut det = Complex64::new(1.0, 0.0);
        for k in 0..n {
            let piv = (k..n)
                .max_by(|&a, &b| {
                    m[a * n + k].norm_sqr().partial_cmp(&m[b * n + k].norm_sqr()).unwrap()
                })
                .unwrap();
            if m[piv * n + k].norm_sqr() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            if piv != k {
                for j in 0..n {
                    m.swap(k * n + j, piv * n + j);
                }
                det = -det;
            }
            let p = m[k * n + k];
            det *= p;
            for i in k + 1..n {
                let f = m[i * n + k] / p;
                for j in k..n {
                    let t = m[k * n + j];
                    m[i * n + j] -= f * t;
                }
            }
        }
        det
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Frobenius norm of U^H U - I.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint().mul(self);
        let n = self.dim;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                s += (p[(i, j)] - want).norm_sqr();
            }
        }
        s.sqrt()
    }

    /// Re-orthonormalizes the columns in place (modified Gram-Schmidt).
    /// Used to hold unitarity drift during long walks.
    pub fn reorthonormalize(&mut self) {
        let n = self.dim;
        for j in 0..n {
            for i in 0..j {
                let mut r = Complex64::new(0.0, 0.0);
                for row in 0..n {
                    r += self[(row, i)].conj() * self[(row, j)];
                }
                for row in 0..n {
                    let t = self[(row, i)];
                    self[(row, j)] -= r * t;
                }
            }
            let mut nrm = 0.0;
            for row in 0..n {
                nrm += self[(row, j)].norm_sqr();
            }
            let nrm = nrm.sqrt();
            for row in 0..n {
                self[(row, j)] /= nrm;
            }
        }
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.dim + j]
    }
}

/// Haar-distributed element of SU(d).
pub fn haar_su(d: usize, rng: &mut CounterRng) -> CMat {
    use rand_distr::StandardNormal;
    let mut g = CMat::zero(d);
    for i in 0..d {
        for j in 0..d {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            g[(i, j)] = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
        }
    }
    // Modified Gram-Schmidt on columns; dividing by the positive real column
    // norm pins the R-diagonal-positive phase convention.
    g.reorthonormalize();
    // Project U(d) -> SU(d): divide by the principal d-th root of det.
    let det = g.det();
    let theta = det.arg() / d as f64;
    let root = Complex64::from_polar(1.0, theta);
    for i in 0..d {
        for j in 0..d {
            g[(i, j)] /= root;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_su_is_special_unitary() {
        let mut rng = CounterRng::new(7);
        for d in 2..=3usize {
            for _ in 0..100 {
                let u = haar_su(d, &mut rng);
                assert!(u.unitarity_defect() < 1e-12);
                assert!((u.det() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn adjoint_inverts() {
        let mut rng = CounterRng::new(8);
        let u = haar_su(3, &mut rng);
        let p = u.adjoint().mul(&u);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn det_hand_value() {
        let m = CMat::from_rows(
            2,
            vec![
                Complex64::new(1.0, 1.0),
                Complex64::new(2.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(1.0, -1.0),
            ],
        );
        // (1+i)(1-i) - 2i = 2 - 2i
        assert!((m.det() - Complex64::new(2.0, -2.0)).norm() < 1e-14);
    }

    #[test]
    fn reorthonormalize_repairs_drift() {
        let mut rng = CounterRng::new(9);
        let mut u = haar_su(2, &mut rng);
        // Inject drift well above f64 roundoff.
        u[(0, 0)] += Complex64::new(1e-6, -1e-6);
        assert!(u.unitarity_defect() > 1e-7);
        u.reorthonormalize();
        assert!(u.unitarity_defect() < 1e-13);
    }

    #[test]
    fn trace_invariant_under_left_translation() {
        // Two-sample KS between tr(U) and tr(V U): the invariance that
        // characterizes Haar.  Full-size version runs in the group suite;
        // this is a smoke check at 10^4 samples.
        let mut rng = CounterRng::new(10);
        let v = haar_su(2, &mut rng);
        let mut a: Vec<f64> = Vec::new();
        let mut b: Vec<f64> = Vec::new();
        for _ in 0..10_000 {
            a.push(haar_su(2, &mut rng).trace().re);
            b.push(v.mul(&haar_su(2, &mut rng)).trace().re);
        }
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let ks = crate::stats::ks_two_sample(&a, &b);
        assert!(ks < 0.03, "ks = {ks}");
    }
}
