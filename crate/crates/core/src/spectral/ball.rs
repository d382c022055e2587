//! Finite frequency sets: lattice vectors of bounded norm, with and
//! without the zero frequency.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// All p in Z^d with 0 < |p| <= radius (Euclidean), enumerated in
/// lexicographic order so every construction on top is deterministic.
#[derive(Debug, Clone)]
pub struct FrequencyBall {
    pub d: usize,
    pub radius: f64,
    pub points: Vec<Vec<i64>>,
    index: HashMap<Vec<i64>, usize>,
}

impl FrequencyBall {
    pub fn new(d: usize, radius: f64) -> Result<Self> {
        if d == 0 || !(radius > 0.0) {
            return Err(Error::Config("ball needs d >= 1 and radius > 0".into()));
        }
        let m = radius.floor() as i64;
        let r2 = radius * radius + 1e-9;
        let mut points = Vec::new();
        let mut p = vec![-m; d];
        // Odometer with the last coordinate fastest: emits lexicographic
        // order directly.
        'outer: loop {
            let n2: i64 = p.iter().map(|&c| c * c).sum();
            let nonzero = p.iter().any(|&c| c != 0);
            if nonzero && (n2 as f64) <= r2 {
                points.push(p.clone());
                if points.len() > 2_000_000 {
                    return Err(Error::Config(format!(
                        "frequency ball d={d}, R={radius} exceeds 2e6 points"
                    )));
                }
            }
            for i in (0..d).rev() {
                if p[i] < m {
                    p[i] += 1;
                    continue 'outer;
                }
                p[i] = -m;
            }
            break;
        }
        let index = points
            .iter()
            .enumerate()
            .map(|(i, q)| (q.clone(), i))
            .collect();
        Ok(FrequencyBall { d, radius, points, index })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, p: &[i64]) -> Option<usize> {
        self.index.get(p).copied()
    }

    /// Index layout for ball plus the zero frequency: ball points keep
    /// their indices, zero goes last.
    pub fn zero_index(&self) -> usize {
        self.points.len()
    }

    /// Dimension of the span including the zero frequency.
    pub fn len_with_zero(&self) -> usize {
        self.points.len() + 1
    }
}
