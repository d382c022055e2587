//! The torus T^d as [-1/2, 1/2)^d with integer-matrix actions.
//!
//! Points are stored by their fractional representative, so the sawtooth
//! displacement {x} is literally the coordinate vector.

use crate::error::Result;
use crate::group::IntMatrix;

/// Representative of t mod 1 in [-1/2, 1/2).
#[inline]
pub fn frac_rep(t: f64) -> f64 {
    t - (t + 0.5).floor()
}

/// Representative of t mod 1 in [0, 1).
#[inline]
pub fn frac01(t: f64) -> f64 {
    t - t.floor()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToralPoint {
    pub coords: Vec<f64>,
}

impl ToralPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        ToralPoint { coords: coords.into_iter().map(frac_rep).collect() }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Distance on the torus, coordinatewise circle metric, sup over coords.
    pub fn circle_dist(&self, other: &ToralPoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| {
                let d = (a - b).abs() % 1.0;
                d.min(1.0 - d)
            })
            .fold(0.0, f64::max)
    }
}

/// Action of an integer matrix on the torus.  Only generator matrices are
/// ever applied (products stay in exact BigInt form elsewhere), so i64
/// entries suffice and the conversion is checked at build time.
#[derive(Debug, Clone)]
pub struct TorusAction {
    pub dim: usize,
    m: Vec<i64>, // row-major
}

impl TorusAction {
    pub fn new(m: &IntMatrix) -> Result<Self> {
        Ok(TorusAction { dim: m.dim, m: m.to_i64()? })
    }

    pub fn apply(&self, x: &ToralPoint) -> ToralPoint {
        debug_assert_eq!(self.dim, x.dim());
        let d = self.dim;
        let mut out = vec![0.0; d];
        for i in 0..d {
            let mut s = 0.0;
            for j in 0..d {
                s += self.m[i * d + j] as f64 * x.coords[j];
            }
            out[i] = frac_rep(s);
        }
        ToralPoint { coords: out }
    }

    pub fn entries(&self) -> &[i64] {
        &self.m
    }
}
