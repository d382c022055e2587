//! Exact integer matrices.
//!
//! All entries are arbitrary-precision integers so that long products of
//! generators never overflow; the algebraic identities tested downstream
//! (homomorphism, fixed vectors, unimodular inverses) are checked with `==`,
//! not with tolerances.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    pub dim: usize,
    entries: Vec<BigInt>, // row-major, dim * dim
}

impl IntMatrix {
    pub fn from_bigint(dim: usize, entries: Vec<BigInt>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "expected {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Ok(IntMatrix { dim, entries })
    }

    pub fn from_i64(dim: usize, entries: &[i64]) -> Result<Self> {
        Self::from_bigint(dim, entries.iter().map(|&e| BigInt::from(e)).collect())
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![BigInt::zero(); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = BigInt::one();
        }
        IntMatrix { dim, entries }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.dim + j]
    }

    pub fn mul(&self, rhs: &IntMatrix) -> IntMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let n = self.dim;
        let mut out = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * rhs.get(k, j);
                }
            }
        }
        IntMatrix { dim: n, entries: out }
    }

    pub fn matvec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.dim, v.len(), "vector dimension mismatch");
        let n = self.dim;
        let mut out = vec![BigInt::zero(); n];
        for i in 0..n {
            for j in 0..n {
                out[i] += self.get(i, j) * &v[j];
            }
        }
        out
    }

    pub fn transpose(&self) -> IntMatrix {
        let n = self.dim;
        let mut out = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                out[j * n + i] = self.get(i, j).clone();
            }
        }
        IntMatrix { dim: n, entries: out }
    }

    pub fn pow(&self, mut e: u64) -> IntMatrix {
        let mut base = self.clone();
        let mut acc = IntMatrix::identity(self.dim);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        let n = self.dim;
        if n == 0 {
            return BigInt::one();
        }
        let mut m = self.entries.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n.saturating_sub(1) {
            if m[k * n + k].is_zero() {
                let Some(r) = (k + 1..n).find(|&r| !m[r * n + k].is_zero()) else {
                    return BigInt::zero();
                };
                for j in 0..n {
                    m.swap(k * n + j, r * n + j);
                }
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    // Bareiss update: the division by the previous pivot is exact.
                    let t = &m[i * n + j] * &m[k * n + k] - &m[i * n + k] * &m[k * n + j];
                    m[i * n + j] = t / &prev;
                }
                m[i * n + k] = BigInt::zero();
            }
            prev = m[k * n + k].clone();
        }
        sign * m[(n - 1) * n + (n - 1)].clone()
    }

    fn minor(&self, row: usize, col: usize) -> IntMatrix {
        let n = self.dim;
        let mut entries = Vec::with_capacity((n - 1) * (n - 1));
        for i in 0..n {
            if i == row {
                continue;
            }
            for j in 0..n {
                if j == col {
                    continue;
                }
                entries.push(self.get(i, j).clone());
            }
        }
        IntMatrix { dim: n - 1, entries }
    }

    /// Adjugate: `adj(M) * M = det(M) * I` exactly.
    pub fn adjugate(&self) -> IntMatrix {
        let n = self.dim;
        if n == 1 {
            return IntMatrix::identity(1);
        }
        let mut out = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let c = self.minor(j, i).det();
                out[i * n + j] = if (i + j) % 2 == 0 { c } else { -c };
            }
        }
        IntMatrix { dim: n, entries: out }
    }

    /// Exact inverse, defined only when `det = +-1`.
    pub fn inverse_unimodular(&self) -> Result<IntMatrix> {
        let d = self.det();
        if !d.abs().is_one() {
            return Err(Error::NotUnimodular(d.to_string()));
        }
        let adj = self.adjugate();
        if d.is_one() {
            Ok(adj)
        } else {
            let n = self.dim;
            Ok(IntMatrix {
                dim: n,
                entries: adj.entries.into_iter().map(|e| -e).collect(),
            })
        }
    }

    pub fn is_unimodular(&self) -> bool {
        self.det().abs().is_one()
    }

    pub fn is_identity(&self) -> bool {
        *self == IntMatrix::identity(self.dim)
    }

    /// Entries as i64, error if any entry does not fit.
    pub fn to_i64(&self) -> Result<Vec<i64>> {
        self.entries
            .iter()
            .map(|e| {
                i64::try_from(e.clone())
                    .map_err(|_| Error::Numerical(format!("entry {e} exceeds i64")))
            })
            .collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        // Only used for generator matrices with small entries; big products
        // stay in BigInt form.
        self.entries
            .iter()
            .map(|e| {
                let (sign, digits) = e.to_u64_digits();
                let mut v = 0.0f64;
                for &d in digits.iter().rev() {
                    v = v * 1.8446744073709552e19 + d as f64;
                }
                match sign {
                    num_bigint::Sign::Minus => -v,
                    _ => v,
                }
            })
            .collect()
    }
}

/// Symmetric-square embedding of a 2x2 integer matrix into 3x3:
/// ```text
/// [[a, b], [c, d]] -> [[a^2, 2ab, b^2], [ac, ad+bc, bd], [c^2, 2cd, d^2]]
/// ```
/// Multiplicative: `q(AB) = q(A) q(B)`.  Its eigenvalues are det A and the
/// squares of the eigenvalues of A; for det A = 1 the vector
/// `(2b, d - a, -2c)` is fixed.
pub fn q_of(m: &IntMatrix) -> Result<IntMatrix> {
    if m.dim != 2 {
        return Err(Error::Dimension(format!("q_of needs a 2x2 matrix, got {}x{}", m.dim, m.dim)));
    }
    let (a, b, c, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
    IntMatrix::from_bigint(
        3,
        vec![
            a * a,
            2 * (a * b),
            b * b,
            a * c,
            a * d + b * c,
            b * d,
            c * c,
            2 * (c * d),
            d * d,
        ],
    )
}

/// The vector `(2b, d - a, -2c)`, fixed by `q_of(m)` when det m = 1.
pub fn q_fixed_vector(m: &IntMatrix) -> Result<Vec<BigInt>> {
    if m.dim != 2 {
        return Err(Error::Dimension("q_fixed_vector needs a 2x2 matrix".into()));
    }
    let (a, b, c, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
    Ok(vec![2 * b, d - a, -2 * c])
}
