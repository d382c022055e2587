//! The compact nilmanifold H_{2d+1} / H_{2d+1}(Z), points kept in the
//! fundamental domain x, y in [0, 1)^d, z in [0, 1).
//!
//! Reduction is by right multiplication with a single integral element
//! delta = (m, n, k), chosen greedily: m = -floor(x), then n = -floor(y),
//! then k = -floor(z'') where z'' is the z-coordinate after the first two
//! right multiplications.  Affine maps p -> alpha * phi(p) (alpha a group
//! element, phi an integer automorphism) descend to the quotient because
//! phi preserves the integer lattice.

use crate::error::{Error, Result};
use crate::group::{HeisAuto, HeisPoint};
use crate::phase::torus::{frac01, frac_rep};

#[derive(Debug, Clone, PartialEq)]
pub struct NilPoint {
    g: HeisPoint,
}

impl NilPoint {
    pub fn rep(&self) -> &HeisPoint {
        &self.g
    }

    pub fn d(&self) -> usize {
        self.g.d()
    }

    pub fn in_domain(&self) -> bool {
        self.g.x.iter().chain(self.g.y.iter()).all(|&t| (0.0..1.0).contains(&t))
            && (0.0..1.0).contains(&self.g.z)
    }

    /// Projection to the torus factor T^d x T^d, as [-1/2, 1/2)
    /// representatives (the sawtooth displacement of this scenario).
    pub fn torus_factor(&self) -> Vec<f64> {
        self.g
            .x
            .iter()
            .chain(self.g.y.iter())
            .map(|&t| frac_rep(t))
            .collect()
    }
}

/// Reduces a group element to its fundamental-domain representative.
pub fn nil_reduce(g: &HeisPoint) -> NilPoint {
    let d = g.d();
    // Right-multiply by (m, 0, 0): x += m, z -= <m, y>.
    let m: Vec<f64> = g.x.iter().map(|&t| -t.floor()).collect();
    let x: Vec<f64> = g.x.iter().zip(&m).map(|(&t, &mi)| t + mi).collect();
    let mut z = g.z;
    for i in 0..d {
        z -= m[i] * g.y[i];
    }
    // Right-multiply by (0, n, 0): y += n, z += <x, n>.
    let n: Vec<f64> = g.y.iter().map(|&t| -t.floor()).collect();
    let y: Vec<f64> = g.y.iter().zip(&n).map(|(&t, &ni)| t + ni).collect();
    for i in 0..d {
        z += x[i] * n[i];
    }
    // Right-multiply by (0, 0, k): central, z += k.
    let z = frac01(z);
    let out = HeisPoint { x, y, z };
    debug_assert!(out.x.iter().chain(out.y.iter()).all(|&t| (0.0..1.0).contains(&t)));
    NilPoint { g: out }
}

/// An affine self-map of the nilmanifold: p -> reduce(alpha * phi(p)).
#[derive(Debug, Clone)]
pub struct NilAffine {
    pub alpha: HeisPoint,
    pub auto: HeisAuto,
}

impl NilAffine {
    pub fn new(alpha: HeisPoint, auto: HeisAuto) -> Result<Self> {
        let probe = auto.apply(&HeisPoint::identity(alpha.d()));
        if probe.d() != alpha.d() {
            return Err(Error::Dimension("automorphism/translation dimension mismatch".into()));
        }
        Ok(NilAffine { alpha, auto })
    }

    pub fn apply(&self, p: &NilPoint) -> NilPoint {
        nil_reduce(&self.alpha.mul(&self.auto.apply(&p.g)))
    }
}
