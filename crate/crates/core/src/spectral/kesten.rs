//! Return-probability decay on the free group F_k: the distance from the
//! identity under the uniform walk on 2k letters is a birth-death chain,
//! so p_2n = P(S_2n = e) comes from an exact dynamic program, and
//! p_2n^(1/2n) climbs toward the known radius sqrt(2k-1)/k.
//!
//! The raw probabilities decay like r^2n and leave the f64 range near
//! n ~ 1000, so the DP runs on the Doob transform by the r-harmonic
//! function u(l) = (1 + l (k-1)/k) (2k-1)^(-l/2).  The transformed chain
//! is stochastic, its return probability q_2n decays only polynomially,
//! and p_2n = r^2n q_2n holds as an algebraic identity, so no rescaling
//! is ever needed.

use serde::Serialize;

use crate::error::{Error, Result};

/// Spectral radius of the uniform walk operator on F_k.
pub fn kesten_radius_formula(k: usize) -> f64 {
    (2.0 * k as f64 - 1.0).sqrt() / k as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct KestenReport {
    pub k: usize,
    pub formula: f64,
    /// (n, p_2n^(1/2n)) at a few checkpoints up to n_max.
    pub estimates: Vec<(usize, f64)>,
    pub final_estimate: f64,
    pub rel_error: f64,
}

/// Plain probability DP on the distance chain; only usable while p_2n
/// stays inside the normal f64 range.
#[cfg(test)]
fn return_probability_naive(k: usize, n: usize) -> f64 {
    let steps = 2 * n;
    let back = 1.0 / (2.0 * k as f64);
    let away = 1.0 - back;
    let mut mass = vec![0.0f64; steps + 2];
    let mut next = mass.clone();
    mass[0] = 1.0;
    for t in 1..=steps {
        next[0] = mass[1] * back;
        next[1] = mass[0] + mass[2] * back;
        for l in 2..=t {
            next[l] = mass[l - 1] * away + mass[l + 1] * back;
        }
        for v in next.iter_mut().skip(t + 1) {
            *v = 0.0;
        }
        std::mem::swap(&mut mass, &mut next);
    }
    mass[0]
}

/// Doob-transformed distance-chain DP up to 2 n_max steps.
pub fn kesten_return_estimate(k: usize, n_max: usize) -> Result<KestenReport> {
    if k == 0 || n_max == 0 {
        return Err(Error::Config("need k >= 1 and n_max >= 1".into()));
    }
    let steps = 2 * n_max;
    let r = kesten_radius_formula(k);
    let log_r = r.ln();
    let back = 1.0 / (2.0 * k as f64);
    let away = 1.0 - back;
    let beta = (k as f64 - 1.0) / k as f64;
    let x = 1.0 / (2.0 * k as f64 - 1.0).sqrt();
    // Transition probabilities of the transformed chain; the u-ratio form
    // keeps every factor of moderate size.
    let lin = |l: usize| 1.0 + l as f64 * beta;
    let q_up: Vec<f64> = (0..=steps + 1)
        .map(|l| {
            if l == 0 {
                1.0
            } else {
                away * x * lin(l + 1) / (r * lin(l))
            }
        })
        .collect();
    let q_down: Vec<f64> = (0..=steps + 1)
        .map(|l| {
            if l == 0 {
                0.0
            } else {
                back * lin(l - 1) / (x * r * lin(l))
            }
        })
        .collect();

    let mut checkpoints: Vec<usize> = [16, 8, 4, 2, 1]
        .iter()
        .map(|d| n_max / d)
        .filter(|&n| n > 0)
        .collect();
    checkpoints.dedup();
    let mut estimates = Vec::with_capacity(checkpoints.len());

    let mut mass = vec![0.0f64; steps + 2];
    let mut next = mass.clone();
    mass[0] = 1.0;
    for t in 1..=steps {
        next[0] = mass[1] * q_down[1];
        for l in 1..=t {
            next[l] = mass[l - 1] * q_up[l - 1] + mass[l + 1] * q_down[l + 1];
        }
        for v in next.iter_mut().skip(t + 1) {
            *v = 0.0;
        }
        std::mem::swap(&mut mass, &mut next);
        if t % 2 == 0 && checkpoints.contains(&(t / 2)) {
            // p_t = r^t q_t, so the exponent estimate is exact in logs.
            let log_p = t as f64 * log_r + mass[0].ln();
            estimates.push((t / 2, (log_p / t as f64).exp()));
        }
    }
    let final_estimate = estimates.last().map(|&(_, e)| e).unwrap_or(0.0);
    let formula = kesten_radius_formula(k);
    Ok(KestenReport {
        k,
        formula,
        estimates,
        final_estimate,
        rel_error: (final_estimate - formula).abs() / formula,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_values() {
        assert_eq!(kesten_radius_formula(1), 1.0);
        assert!((kesten_radius_formula(2) - 3.0f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((kesten_radius_formula(3) - 5.0f64.sqrt() / 3.0).abs() < 1e-15);
    }

    #[test]
    fn transformed_rows_are_stochastic() {
        for k in [1usize, 2, 5] {
            let r = kesten_radius_formula(k);
            let back = 1.0 / (2.0 * k as f64);
            let away = 1.0 - back;
            let beta = (k as f64 - 1.0) / k as f64;
            let x = 1.0 / (2.0 * k as f64 - 1.0).sqrt();
            for l in 1..200usize {
                let lin = |l: usize| 1.0 + l as f64 * beta;
                let up = away * x * lin(l + 1) / (r * lin(l));
                let down = back * lin(l - 1) / (x * r * lin(l));
                assert!((up + down - 1.0).abs() < 1e-14, "k={k} l={l}");
                assert!(up > 0.0 && down >= 0.0);
            }
        }
    }

    #[test]
    fn small_return_probabilities_by_hand() {
        // k = 2: p_2 = 1/4 (step out, step straight back).
        let rep = kesten_return_estimate(2, 1).unwrap();
        assert_eq!(rep.estimates.len(), 1);
        let (n, est) = rep.estimates[0];
        assert_eq!(n, 1);
        assert!((est - 0.5).abs() < 1e-12);
    }

    #[test]
    fn transform_agrees_with_naive_dp() {
        for k in [1usize, 2, 3] {
            for n in [5usize, 50, 100] {
                let naive = return_probability_naive(k, n);
                let rep = kesten_return_estimate(k, n).unwrap();
                let p = rep.final_estimate.powi(2 * n as i32);
                assert!(
                    (p - naive).abs() / naive < 1e-10,
                    "k={k} n={n}: {p} vs {naive}"
                );
            }
        }
    }

    #[test]
    fn estimates_climb_toward_the_formula() {
        for k in [2usize, 3] {
            let rep = kesten_return_estimate(k, 2000).unwrap();
            for pair in rep.estimates.windows(2) {
                assert!(pair[1].1 >= pair[0].1 - 1e-12, "{:?}", rep.estimates);
            }
            assert!(rep.final_estimate < rep.formula);
            assert!(rep.rel_error < 0.03, "k={k} rel error {}", rep.rel_error);
        }
    }

    #[test]
    fn rank_one_free_group_is_the_integer_walk() {
        let rep = kesten_return_estimate(1, 2000).unwrap();
        // p_2n = C(2n, n)/4^n ~ 1/sqrt(pi n): the exponent estimate drags
        // slightly below the radius 1.
        assert!(rep.final_estimate > 0.997 && rep.final_estimate < 1.0);
    }
}
