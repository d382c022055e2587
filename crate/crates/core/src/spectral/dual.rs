//! Exact dual orbits of lattice characters and the truncated dual
//! convolution operator.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::IntMatrix;
use crate::spectral::ball::FrequencyBall;
use crate::spectral::op::{Csr, OpKind, TruncatedOperator};
use crate::walk::check_weights;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrbitStatus {
    /// The iterate at `again` equals the earlier iterate at `first`.
    Repeats { first: usize, again: usize },
    /// No repetition within the requested length.
    Escapes,
}

#[derive(Debug, Clone)]
pub struct DualOrbit {
    /// p, Mp, M^2 p, ... (exact integers), cut at the first repetition.
    pub prefix: Vec<Vec<BigInt>>,
    pub norms_sq: Vec<BigInt>,
    pub status: OrbitStatus,
}

/// Iterates p under the exact integer matrix, up to `k_max` steps, and
/// reports whether any lattice vector recurs.  Exactness means a reported
/// repetition is a genuine equality.
pub fn dual_orbit(m: &IntMatrix, p: &[i64], k_max: usize) -> Result<DualOrbit> {
    if p.len() != m.dim {
        return Err(Error::Dimension("orbit start has wrong dimension".into()));
    }
    if p.iter().all(|&c| c == 0) {
        return Err(Error::Config("orbit start must be a nonzero character".into()));
    }
    let mut cur: Vec<BigInt> = p.iter().map(|&c| BigInt::from(c)).collect();
    let mut seen: HashMap<Vec<BigInt>, usize> = HashMap::new();
    let mut prefix = Vec::with_capacity(k_max + 1);
    let mut norms_sq = Vec::with_capacity(k_max + 1);
    for step in 0..=k_max {
        if let Some(&first) = seen.get(&cur) {
            return Ok(DualOrbit {
                prefix,
                norms_sq,
                status: OrbitStatus::Repeats { first, again: step },
            });
        }
        seen.insert(cur.clone(), step);
        norms_sq.push(cur.iter().map(|c| c * c).sum());
        prefix.push(cur.clone());
        cur = m.matvec(&cur);
    }
    Ok(DualOrbit { prefix, norms_sq, status: OrbitStatus::Escapes })
}

/// Applies the transpose of `m` to a small lattice vector, exactly.
fn transpose_matvec_i64(mt: &[i64], dim: usize, p: &[i64]) -> Result<Vec<i64>> {
    let mut out = vec![0i64; dim];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc: i128 = 0;
        for j in 0..dim {
            acc += mt[i * dim + j] as i128 * p[j] as i128;
        }
        *o = i64::try_from(acc)
            .map_err(|_| Error::Numerical("frequency image overflows i64".into()))?;
    }
    Ok(out)
}

fn validated_transposes(mats: &[IntMatrix], weights: &[f64], d: usize) -> Result<Vec<Vec<i64>>> {
    if mats.is_empty() || mats.len() != weights.len() {
        return Err(Error::Config("generators/weights length mismatch".into()));
    }
    check_weights(weights)?;
    mats.iter()
        .map(|m| {
            if m.dim != d {
                return Err(Error::Dimension("generator/ball dimension mismatch".into()));
            }
            if !m.is_unimodular() {
                return Err(Error::NotUnimodular("dual operator needs unimodular generators".into()));
            }
            m.transpose().to_i64()
        })
        .collect()
}

/// The convolution operator (Lf)(p) = sum_gamma mu(gamma) f(gamma^t p),
/// compressed to the ball; images outside the ball are annihilated.
pub fn build_dual_operator(
    mats: &[IntMatrix],
    weights: &[f64],
    ball: &FrequencyBall,
) -> Result<TruncatedOperator> {
    let d = ball.d;
    let transposes = validated_transposes(mats, weights, d)?;
    let n = ball.len();
    let mut triplets = Vec::with_capacity(n * mats.len());
    for (row, p) in ball.points.iter().enumerate() {
        for (mt, &w) in transposes.iter().zip(weights) {
            let q = transpose_matvec_i64(mt, d, p)?;
            if let Some(col) = ball.index_of(&q) {
                triplets.push((row, col, Complex64::new(w, 0.0)));
            }
        }
    }
    Ok(TruncatedOperator::new(
        OpKind::DualL,
        ball.radius,
        d,
        None,
        Box::new(Csr::from_triplets(n, &triplets)),
    ))
}

/// The compression of the Markov operator P to the mean-zero characters in
/// the ball: coefficient-wise, mass at p is scattered to gamma^t p.  This
/// is exactly the transpose of `build_dual_operator`.
pub fn build_p_restricted(
    mats: &[IntMatrix],
    weights: &[f64],
    ball: &FrequencyBall,
) -> Result<TruncatedOperator> {
    let d = ball.d;
    let transposes = validated_transposes(mats, weights, d)?;
    let n = ball.len();
    let mut triplets = Vec::with_capacity(n * mats.len());
    for (col, p) in ball.points.iter().enumerate() {
        for (mt, &w) in transposes.iter().zip(weights) {
            let q = transpose_matvec_i64(mt, d, p)?;
            if let Some(row) = ball.index_of(&q) {
                triplets.push((row, col, Complex64::new(w, 0.0)));
            }
        }
    }
    Ok(TruncatedOperator::new(
        OpKind::PRestricted,
        ball.radius,
        d,
        None,
        Box::new(Csr::from_triplets(n, &triplets)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{q_fixed_vector, q_of};
    use crate::spectral::op::spectral_radius;

    fn a1() -> IntMatrix {
        IntMatrix::from_i64(2, &[2, 1, 1, 1]).unwrap()
    }

    fn sl2_gens() -> (Vec<IntMatrix>, Vec<f64>) {
        let a = a1();
        let b = IntMatrix::from_i64(2, &[1, 1, 1, 2]).unwrap();
        let ai = a.inverse_unimodular().unwrap();
        let bi = b.inverse_unimodular().unwrap();
        (vec![a, b, ai, bi], vec![0.25; 4])
    }

    #[test]
    fn identity_orbit_repeats_immediately() {
        let orb = dual_orbit(&IntMatrix::identity(2), &[3, -1], 50).unwrap();
        assert_eq!(orb.status, OrbitStatus::Repeats { first: 0, again: 1 });
        assert_eq!(orb.prefix.len(), 1);
    }

    #[test]
    fn hyperbolic_orbit_escapes_with_growing_norms() {
        let orb = dual_orbit(&a1().transpose(), &[1, 0], 50).unwrap();
        assert_eq!(orb.status, OrbitStatus::Escapes);
        assert_eq!(orb.prefix.len(), 51);
        for k in 2..orb.norms_sq.len() - 1 {
            assert!(orb.norms_sq[k + 1] > orb.norms_sq[k], "norms stall at {k}");
        }
    }

    #[test]
    fn symmetric_square_fixed_vector_repeats() {
        use num_traits::ToPrimitive;
        let q = q_of(&a1()).unwrap();
        let v: Vec<i64> = q_fixed_vector(&a1())
            .unwrap()
            .iter()
            .map(|b| b.to_i64().unwrap())
            .collect();
        let orb = dual_orbit(&q, &v, 10).unwrap();
        assert_eq!(orb.status, OrbitStatus::Repeats { first: 0, again: 1 });
    }

    #[test]
    fn zero_start_rejected() {
        assert!(dual_orbit(&IntMatrix::identity(2), &[0, 0], 5).is_err());
    }

    #[test]
    fn identity_generator_gives_identity_operator() {
        let ball = FrequencyBall::new(2, 3.0).unwrap();
        let op =
            build_dual_operator(&[IntMatrix::identity(2)], &[1.0], &ball).unwrap();
        let v = crate::spectral::op::random_unit(ball.len(), 7, 1);
        let mut y = vec![Complex64::new(0.0, 0.0); ball.len()];
        op.apply(&v, &mut y);
        for (a, b) in v.iter().zip(&y) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn dual_operator_is_contraction_with_sparse_columns() {
        let (mats, weights) = sl2_gens();
        let ball = FrequencyBall::new(2, 6.0).unwrap();
        let op = build_dual_operator(&mats, &weights, &ball).unwrap();
        assert!(op.norm_upper(8, 3) <= 1.0 + 1e-9);
        // Column occupancy: at most one image per generator.
        let transposes =
            validated_transposes(&mats, &weights, 2).unwrap();
        let mut col_count = vec![0usize; ball.len()];
        for p in &ball.points {
            for mt in &transposes {
                let q = transpose_matvec_i64(mt, 2, p).unwrap();
                if let Some(c) = ball.index_of(&q) {
                    col_count[c] += 1;
                }
            }
        }
        assert!(col_count.iter().all(|&c| c <= mats.len()));
    }

    #[test]
    fn p_restricted_is_transpose_of_dual() {
        let (mats, weights) = sl2_gens();
        let ball = FrequencyBall::new(2, 5.0).unwrap();
        let l = build_dual_operator(&mats, &weights, &ball).unwrap();
        let p = build_p_restricted(&mats, &weights, &ball).unwrap();
        let v = crate::spectral::op::random_unit(ball.len(), 11, 2);
        let mut y1 = vec![Complex64::new(0.0, 0.0); ball.len()];
        let mut y2 = y1.clone();
        p.apply(&v, &mut y1);
        // Real entries: the adjoint of L is its transpose, which is P.
        l.apply_adjoint(&v, &mut y2);
        for (a, b) in y1.iter().zip(&y2) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn sl2_dual_radius_strictly_below_one() {
        let (mats, weights) = sl2_gens();
        let ball = FrequencyBall::new(2, 6.0).unwrap();
        let op = build_dual_operator(&mats, &weights, &ball).unwrap();
        let rep = spectral_radius(&op, 400, 1e-10, 3, 17);
        assert!(rep.radius < 0.999, "radius estimate {}", rep.radius);
        assert!(rep.radius > 0.1);
        assert!(rep.radius <= rep.norm_upper + 1e-9);
    }
}
