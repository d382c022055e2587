//! Heisenberg group H_{2d+1} = R^d x R^d x R with the symplectic product
//!
//!   (x, y, z) * (x', y', z') = (x + x', y + y', z + z' + <x, y'> - <x', y>).
//!
//! Inverses are coordinate negation.  For D in GL(d, Z) the map
//! (x, y, z) -> (D x, D^-t y, z) is an automorphism because the pairing
//! <D x, D^-t y'> = <x, y'> is preserved.

use crate::error::{Error, Result};
use crate::group::int_matrix::IntMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct HeisPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: f64,
}

impl HeisPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Dimension(format!("x has dim {}, y has dim {}", x.len(), y.len())));
        }
        Ok(HeisPoint { x, y, z })
    }

    pub fn identity(d: usize) -> Self {
        HeisPoint { x: vec![0.0; d], y: vec![0.0; d], z: 0.0 }
    }

    pub fn d(&self) -> usize {
        self.x.len()
    }

    pub fn mul(&self, rhs: &HeisPoint) -> HeisPoint {
        assert_eq!(self.d(), rhs.d(), "Heisenberg dimension mismatch");
        let d = self.d();
        let mut x = vec![0.0; d];
        let mut y = vec![0.0; d];
        let mut twist = 0.0;
        for i in 0..d {
            x[i] = self.x[i] + rhs.x[i];
            y[i] = self.y[i] + rhs.y[i];
            twist += self.x[i] * rhs.y[i] - rhs.x[i] * self.y[i];
        }
        HeisPoint { x, y, z: self.z + rhs.z + twist }
    }

    pub fn inv(&self) -> HeisPoint {
        HeisPoint {
            x: self.x.iter().map(|v| -v).collect(),
            y: self.y.iter().map(|v| -v).collect(),
            z: -self.z,
        }
    }
}

/// Automorphism (x, y, z) -> (D x, D^-t y, z) with exact integer D^-t,
/// precomputed as f64 tables for the walk's hot path.
#[derive(Debug, Clone)]
pub struct HeisAuto {
    d: usize,
    dmat: Vec<f64>,  // D, row-major
    dinvt: Vec<f64>, // transpose of D^-1, row-major
}

impl HeisAuto {
    pub fn new(m: &IntMatrix) -> Result<Self> {
        let inv = m.inverse_unimodular()?;
        Ok(HeisAuto {
            d: m.dim,
            dmat: m.to_f64(),
            dinvt: inv.transpose().to_f64(),
        })
    }

    pub fn identity(d: usize) -> Self {
        HeisAuto::new(&IntMatrix::identity(d)).expect("identity is unimodular")
    }

    pub fn apply(&self, p: &HeisPoint) -> HeisPoint {
        assert_eq!(self.d, p.d(), "automorphism dimension mismatch");
        let d = self.d;
        let mut x = vec![0.0; d];
        let mut y = vec![0.0; d];
        for i in 0..d {
            let mut sx = 0.0;
            let mut sy = 0.0;
            for j in 0..d {
                sx += self.dmat[i * d + j] * p.x[j];
                sy += self.dinvt[i * d + j] * p.y[j];
            }
            x[i] = sx;
            y[i] = sy;
        }
        HeisPoint { x, y, z: p.z }
    }
}
