//! Random scenery on the free group: X = C^{F_k} with product measure
//! eta^{F_k}, shifted by left multiplication.  The observable reads the
//! scenery value at the identity, so after k steps the walk has collected
//! the values along its own trajectory.
//!
//! Sceneries are never materialized.  The value at a reduced word w is a
//! pure function of (scenery seed, canonical bytes of w): a stable hash
//! keys one categorical draw from eta.  A walker maintains the hash of its
//! current word incrementally (one FNV fold per letter, undone exactly on
//! cancellation), so stepping is O(1) regardless of word length.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::group::FreeWord;
use crate::rng::{hash_bytes, mix64, to_unit, value_at};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01B3;

/// The step-value law eta: finitely many points of R^dim with weights.
#[derive(Debug, Clone)]
pub struct SceneryLaw {
    pub support: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    cum: Vec<f64>,
    pub dim: usize,
}

impl SceneryLaw {
    pub fn new(support: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != weights.len() {
            return Err(Error::Config("scenery support/weights size mismatch".into()));
        }
        let dim = support[0].len();
        if support.iter().any(|v| v.len() != dim) {
            return Err(Error::Config("scenery support points of mixed dimension".into()));
        }
        for i in 0..support.len() {
            for j in 0..i {
                if support[i] == support[j] {
                    return Err(Error::Config("duplicate scenery support point".into()));
                }
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 || weights.iter().any(|&w| w < 0.0) {
            return Err(Error::Config(format!("scenery weights must sum to 1, got {total}")));
        }
        let mut mean = vec![0.0; dim];
        for (v, &w) in support.iter().zip(&weights) {
            for (m, &c) in mean.iter_mut().zip(v) {
                *m += w * c;
            }
        }
        if mean.iter().any(|&m| m.abs() > 1e-12) {
            return Err(Error::Config(format!("scenery law must be centered, mean = {mean:?}")));
        }
        let mut cum = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for &w in &weights {
            acc += w;
            cum.push(acc);
        }
        *cum.last_mut().unwrap() = 1.0;
        Ok(SceneryLaw { support, weights, cum, dim })
    }

    pub fn uniform(support: Vec<Vec<f64>>) -> Result<Self> {
        let n = support.len();
        Self::new(support, vec![1.0 / n as f64; n])
    }

    /// All support points integral (Z^dim-valued).
    pub fn is_integral(&self) -> bool {
        self.support.iter().flatten().all(|&c| c == c.round())
    }

    /// Characteristic function of eta at frequency lambda.
    pub fn char_fn(&self, lambda: &[f64]) -> num_complex::Complex64 {
        let mut s = num_complex::Complex64::new(0.0, 0.0);
        for (v, &w) in self.support.iter().zip(&self.weights) {
            let phase: f64 = v.iter().zip(lambda).map(|(a, b)| a * b).sum();
            s += num_complex::Complex64::from_polar(w, phase);
        }
        s
    }

    fn index_from_key(&self, key: u64) -> usize {
        let u = to_unit(value_at(key, 0));
        match self.cum.iter().position(|&c| u < c) {
            Some(i) => i,
            None => self.cum.len() - 1,
        }
    }
}

/// True when the differences of the support points generate all of Z^dim.
/// Only meaningful for integral laws; this is the condition under which the
/// only unflagged obstruction frequencies are the trivial 2*pi*Z^dim grid.
pub fn differences_generate_lattice(support: &[Vec<f64>]) -> bool {
    let dim = support[0].len();
    if support.len() < 2 {
        return false;
    }
    let diffs: Vec<Vec<BigInt>> = support[1..]
        .iter()
        .map(|v| {
            v.iter()
                .zip(&support[0])
                .map(|(a, b)| BigInt::from((a - b).round() as i64))
                .collect()
        })
        .collect();
    // The lattice is full iff the gcd of all dim x dim minors is 1.
    let n = diffs.len();
    let mut idx = vec![0usize; dim];
    let mut gcd = BigInt::zero();
    fn minors(
        diffs: &[Vec<BigInt>],
        dim: usize,
        start: usize,
        depth: usize,
        idx: &mut Vec<usize>,
        gcd: &mut BigInt,
    ) {
        if depth == dim {
            let m = crate::group::IntMatrix::from_bigint(
                dim,
                idx.iter().flat_map(|&i| diffs[i].iter().cloned()).collect(),
            )
            .unwrap();
            let d = m.det().abs();
            *gcd = num_integer_gcd(gcd.clone(), d);
            return;
        }
        for i in start..diffs.len() {
            idx[depth] = i;
            minors(diffs, dim, i + 1, depth + 1, idx, gcd);
        }
    }
    fn num_integer_gcd(a: BigInt, b: BigInt) -> BigInt {
        let (mut a, mut b) = (a.abs(), b.abs());
        while !b.is_zero() {
            let r = &a % &b;
            a = b;
            b = r;
        }
        a
    }
    if n < dim {
        return false;
    }
    minors(&diffs, dim, 0, 0, &mut idx, &mut gcd);
    gcd.is_one()
}

/// Affine span of the support is all of R^dim (rank of differences = dim).
pub fn affine_span_is_full(support: &[Vec<f64>]) -> bool {
    let dim = support[0].len();
    if support.len() < 2 {
        return false;
    }
    let mut rows: Vec<Vec<f64>> = support[1..]
        .iter()
        .map(|v| v.iter().zip(&support[0]).map(|(a, b)| a - b).collect())
        .collect();
    // Gaussian elimination rank with a fixed pivot tolerance.
    let mut rank = 0;
    for col in 0..dim {
        let Some(p) = (rank..rows.len()).max_by(|&a, &b| {
            rows[a][col].abs().partial_cmp(&rows[b][col].abs()).unwrap()
        }) else {
            break;
        };
        if rows[p][col].abs() < 1e-9 {
            continue;
        }
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank {
                let f = rows[r][col] / rows[rank][col];
                for c in col..dim {
                    let t = rows[rank][c];
                    rows[r][c] -= f * t;
                }
            }
        }
        rank += 1;
        if rank == dim {
            return true;
        }
    }
    false
}

/// Pure scenery lookup: the value index at reduced word `w`.
pub fn scenery_value_index(seed: u64, w: &FreeWord, law: &SceneryLaw) -> usize {
    law.index_from_key(hash_bytes(seed, &w.canonical_bytes()))
}

/// A point of the scenery phase space from the walker's perspective: the
/// scenery seed plus the current reduced word, with the word's byte-stream
/// hash maintained incrementally.
#[derive(Debug, Clone)]
pub struct SceneryPoint {
    pub seed: u64,
    rev_letters: Vec<i32>, // rightmost letter first; last entry = leftmost
    fnv_stack: Vec<u64>,   // raw FNV states; fnv_stack[k] covers k letters
    cache: Option<HashMap<u64, usize>>,
}

impl SceneryPoint {
    pub fn at_identity(seed: u64, cache: bool) -> Self {
        SceneryPoint {
            seed,
            rev_letters: Vec::new(),
            fnv_stack: vec![FNV_OFFSET ^ seed],
            cache: if cache { Some(HashMap::new()) } else { None },
        }
    }

    /// Word length = tree distance from the identity.
    pub fn distance(&self) -> usize {
        self.rev_letters.len()
    }

    /// Current word in natural (leftmost-first) order.
    pub fn word(&self) -> FreeWord {
        let letters: Vec<i32> = self.rev_letters.iter().rev().cloned().collect();
        FreeWord::from_letters(&letters)
    }

    /// Site key of the current word; equals
    /// `hash_bytes(seed, word.canonical_bytes())` by construction.
    pub fn site_key(&self) -> u64 {
        mix64(*self.fnv_stack.last().unwrap())
    }

    /// Left-multiplies the current word by a letter.
    pub fn push_left(&mut self, letter: i32) {
        debug_assert!(letter != 0);
        if self.rev_letters.last() == Some(&-letter) {
            self.rev_letters.pop();
            self.fnv_stack.pop();
        } else {
            let mut h = *self.fnv_stack.last().unwrap();
            for b in letter.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(FNV_PRIME);
            }
            self.rev_letters.push(letter);
            self.fnv_stack.push(h);
        }
    }

    /// Scenery value index at the current word, via the cache if enabled.
    pub fn value_index(&mut self, law: &SceneryLaw) -> usize {
        let key = self.site_key();
        if let Some(cache) = &mut self.cache {
            if let Some(&v) = cache.get(&key) {
                return v;
            }
            let v = law.index_from_key(key);
            cache.insert(key, v);
            v
        } else {
            law.index_from_key(key)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use rand::Rng;

    fn octa_law() -> SceneryLaw {
        SceneryLaw::uniform(vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![-1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 1.0, -1.0],
            vec![-1.0, -1.0, 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn law_validation() {
        assert!(SceneryLaw::uniform(vec![vec![1.0], vec![-1.0]]).is_ok());
        // Not centered.
        assert!(SceneryLaw::uniform(vec![vec![1.0], vec![0.0]]).is_err());
        // Bad weights.
        assert!(SceneryLaw::new(vec![vec![1.0], vec![-1.0]], vec![0.6, 0.6]).is_err());
        // Duplicate point.
        assert!(SceneryLaw::uniform(vec![vec![1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn incremental_hash_matches_canonical() {
        let law = octa_law();
        let mut rng = CounterRng::new(55);
        let mut p = SceneryPoint::at_identity(99, false);
        for _ in 0..2000 {
            let mut l = 0;
            while l == 0 {
                l = rng.gen_range(-2i32..=2);
            }
            p.push_left(l);
            assert_eq!(p.site_key(), hash_bytes(99, &p.word().canonical_bytes()));
            assert_eq!(p.word().len(), p.distance());
        }
        // And the value the walker sees equals the pure lookup.
        let mut p2 = p.clone();
        assert_eq!(p2.value_index(&law), scenery_value_index(99, &p.word(), &law));
    }

    #[test]
    fn cache_does_not_change_values() {
        let law = octa_law();
        let mut with = SceneryPoint::at_identity(7, true);
        let mut without = SceneryPoint::at_identity(7, false);
        let mut rng = CounterRng::new(56);
        for _ in 0..5000 {
            let mut l = 0;
            while l == 0 {
                l = rng.gen_range(-2i32..=2);
            }
            with.push_left(l);
            without.push_left(l);
            assert_eq!(with.value_index(&law), without.value_index(&law));
        }
    }

    #[test]
    fn empirical_law_matches_eta() {
        // Frequencies over many distinct words converge to the weights
        // (total variation), and the empirical mean is near 0.
        let law = octa_law();
        let n = 100_000u64;
        let mut counts = vec![0usize; law.support.len()];
        let mut mean = vec![0.0; 3];
        for i in 0..n {
            // Distinct words: spine of generator 1 with a varying tail.
            let w = FreeWord::from_letters(&[2, if i % 2 == 0 { 1 } else { -1 }]);
            let mut p = SceneryPoint::at_identity(1000 + i, false); // fresh sceneries
            for &l in w.letters().iter().rev() {
                p.push_left(l);
            }
            let idx = p.value_index(&law);
            counts[idx] += 1;
            for (m, &c) in mean.iter_mut().zip(&law.support[idx]) {
                *m += c;
            }
        }
        let tv: f64 = counts
            .iter()
            .zip(&law.weights)
            .map(|(&c, &w)| (c as f64 / n as f64 - w).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "tv = {tv}");
        // sd of one coordinate is ~0.66; 4 sigma / sqrt(n) bound.
        for m in mean.iter().map(|m| m / n as f64) {
            assert!(m.abs() < 4.0 * 0.8 / (n as f64).sqrt(), "mean drift {m}");
        }
    }

    #[test]
    fn lattice_and_span_checks() {
        let law = octa_law();
        assert!(law.is_integral());
        assert!(affine_span_is_full(&law.support));
        assert!(differences_generate_lattice(&law.support));
        // The {-1, +1}^3 cube: differences all even, lattice not full.
        let cube: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                (0..3)
                    .map(|b| if (i >> b) & 1 == 1 { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        assert!(affine_span_is_full(&cube));
        assert!(!differences_generate_lattice(&cube));
        // A planar set: affine span deficient.
        let flat = vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![-1.0, 0.0, 0.0]];
        assert!(!affine_span_is_full(&flat));
    }

    #[test]
    fn char_fn_at_trivial_frequencies() {
        let law = octa_law();
        let one = law.char_fn(&[0.0, 0.0, 0.0]);
        assert!((one - num_complex::Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let tau = std::f64::consts::TAU;
        let z = law.char_fn(&[tau, tau, tau]);
        assert!((z - num_complex::Complex64::new(1.0, 0.0)).norm() < 1e-12);
        // A generic frequency is strictly inside the unit disc.
        assert!(law.char_fn(&[1.0, 0.5, 0.25]).norm() < 0.999);
    }
}
