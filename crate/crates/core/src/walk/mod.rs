//! The walk engine: given a system (weighted generators acting on a phase
//! space, with a displacement attached to each generator), simulate
//!
//!   x_k = a_k x_{k-1},   S_k = S_{k-1} + c(a_k, x_{k-1}),
//!
//! with every random choice a pure function of (seed, path, step).  Paths
//! are therefore independent of scheduling and can be distributed over any
//! number of threads with bitwise-identical results.

use rayon::prelude::*;
use serde::Serialize;

use crate::rng::{derive, uniform_at, CounterRng};

const TAG_INIT: u64 = 0xA11CE;
const TAG_LETTERS: u64 = 0x1E77E5;

/// A generator system with displacements: everything the engine needs.
///
/// `displacement` and `apply` take the point by `&mut` so that point types
/// with internal memoization stay cheap; both must behave as pure functions
/// of the point value.
pub trait System: Sync {
    type Point: Clone + Send;

    fn generator_count(&self) -> usize;
    /// Probability weights, summing to 1 within 1e-12 (checked at build).
    fn weights(&self) -> &[f64];
    /// Cumulative weights, last entry exactly 1.
    fn cum_weights(&self) -> &[f64];
    /// Dimension D of the displacement vectors.
    fn dim(&self) -> usize;
    /// Recorded bound sup_{a,x} |c(a, x)|_2, used by sanity checks.
    fn displacement_bound(&self) -> f64;

    /// Draws a base point from the invariant measure.
    fn sample_point(&self, rng: &mut CounterRng) -> Self::Point;
    /// Writes c(a_g, x) into `out` (length D).
    fn displacement(&self, g: usize, x: &mut Self::Point, out: &mut [f64]);
    /// Replaces x by a_g x.
    fn apply(&self, g: usize, x: &mut Self::Point);
    /// Optional periodic state maintenance (e.g. re-orthonormalization).
    fn maintain(&self, _step: usize, _x: &mut Self::Point) {}
}

/// Validates the weight vector every system must carry.
pub fn check_weights(weights: &[f64]) -> crate::Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(crate::Error::Config("empty generator set".into()));
    }
    if weights.iter().any(|&w| !(w > 0.0)) {
        return Err(crate::Error::Config("weights must be positive".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(crate::Error::Config(format!("weights sum to {total}, expected 1")));
    }
    let mut cum = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for &w in weights {
        acc += w;
        cum.push(acc);
    }
    *cum.last_mut().unwrap() = 1.0;
    Ok(cum)
}

/// Sequential view of one path.  All draws are random-access keyed, so a
/// walker can be reconstructed at any (seed, path) without history.
pub struct Walker<'a, S: System> {
    sys: &'a S,
    pub point: S::Point,
    pub sum: Vec<f64>,
    step: usize,
    letters_key: u64,
    scratch: Vec<f64>,
}

impl<'a, S: System> Walker<'a, S> {
    pub fn new(sys: &'a S, seed: u64, path: u64) -> Self {
        let mut init_rng = CounterRng::from_path(seed, &[path, TAG_INIT]);
        let point = sys.sample_point(&mut init_rng);
        Walker {
            sys,
            point,
            sum: vec![0.0; sys.dim()],
            step: 0,
            letters_key: derive(derive(seed, path), TAG_LETTERS),
            scratch: vec![0.0; sys.dim()],
        }
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// The letter the walker will use at step index `k` (0-based), a pure
    /// function of (seed, path, k).
    pub fn letter_at(&self, k: usize) -> usize {
        let u = uniform_at(self.letters_key, k as u64);
        let cum = self.sys.cum_weights();
        cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1)
    }

    /// Advances one step; returns the generator index used.
    #[inline]
    pub fn step(&mut self) -> usize {
        let g = self.letter_at(self.step);
        self.sys.displacement(g, &mut self.point, &mut self.scratch);
        for (s, d) in self.sum.iter_mut().zip(&self.scratch) {
            *s += d;
        }
        self.sys.apply(g, &mut self.point);
        self.step += 1;
        self.sys.maintain(self.step, &mut self.point);
        g
    }

    /// Squared Euclidean norm of the current cocycle sum.
    pub fn sum_norm_sq(&self) -> f64 {
        self.sum.iter().map(|s| s * s).sum()
    }
}

/// How many intermediate states a recorded trajectory keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Thinning {
    /// Initial and final state only.
    Endpoints,
    /// Every k-th state (1 = all states).
    Stride(usize),
}

/// One recorded path: letters, partial sums S_0..S_n, thinned states.
#[derive(Debug, Clone)]
pub struct Trajectory<P> {
    pub seed: u64,
    pub path: u64,
    pub dim: usize,
    pub letters: Vec<u32>,
    /// Row k is S_k; (n+1) rows of `dim` entries, row 0 all zeros.
    pub sums: Vec<f64>,
    pub states: Vec<(usize, P)>,
}

impl<P> Trajectory<P> {
    pub fn steps(&self) -> usize {
        self.letters.len()
    }

    pub fn sum_at(&self, k: usize) -> &[f64] {
        &self.sums[k * self.dim..(k + 1) * self.dim]
    }
}

/// Runs one path for `n` steps.
pub fn run<S: System>(sys: &S, seed: u64, path: u64, n: usize, thin: Thinning) -> Trajectory<S::Point> {
    let mut w = Walker::new(sys, seed, path);
    let dim = sys.dim();
    let mut letters = Vec::with_capacity(n);
    let mut sums = Vec::with_capacity((n + 1) * dim);
    sums.extend_from_slice(&w.sum);
    let mut states = Vec::new();
    let keep = |k: usize| match thin {
        Thinning::Endpoints => k == 0 || k == n,
        Thinning::Stride(s) => k % s.max(1) == 0 || k == n,
    };
    if keep(0) {
        states.push((0, w.point.clone()));
    }
    for k in 1..=n {
        let g = w.step();
        letters.push(g as u32);
        sums.extend_from_slice(&w.sum);
        if keep(k) {
            states.push((k, w.point.clone()));
        }
    }
    Trajectory { seed, path, dim, letters, sums, states }
}

/// Cocycle sum along an explicit letter sequence from an explicit start.
pub fn cocycle_sum<S: System>(sys: &S, x0: &S::Point, letters: &[usize]) -> Vec<f64> {
    let mut x = x0.clone();
    let mut sum = vec![0.0; sys.dim()];
    let mut scratch = vec![0.0; sys.dim()];
    for &g in letters {
        sys.displacement(g, &mut x, &mut scratch);
        for (s, d) in sum.iter_mut().zip(&scratch) {
            *s += d;
        }
        sys.apply(g, &mut x);
    }
    sum
}

/// Applies a letter sequence without accumulating displacements.
pub fn apply_word<S: System>(sys: &S, x0: &S::Point, letters: &[usize]) -> S::Point {
    let mut x = x0.clone();
    for &g in letters {
        sys.apply(g, &mut x);
    }
    x
}

/// Monte Carlo check of the centering condition
/// integral of sum_a mu(a) c(a, x) d nu(x) = 0.
#[derive(Debug, Clone, Serialize)]
pub struct CenteringReport {
    pub samples: u64,
    pub estimate: Vec<f64>,
    pub stderr: Vec<f64>,
    /// |estimate_i| <= 4 stderr_i in every coordinate.
    pub within_4_sigma: bool,
}

pub fn check_centering<S: System>(sys: &S, samples: u64, seed: u64) -> CenteringReport {
    let dim = sys.dim();
    let weights = sys.weights().to_vec();
    let chunk = |p: u64| -> (Vec<f64>, Vec<f64>) {
        let mut rng = CounterRng::from_path(seed, &[p, TAG_INIT]);
        let x = sys.sample_point(&mut rng);
        let mut scratch = vec![0.0; dim];
        let mut m = vec![0.0; dim];
        for (g, &wg) in weights.iter().enumerate() {
            let mut xg = x.clone();
            sys.displacement(g, &mut xg, &mut scratch);
            for (mi, &d) in m.iter_mut().zip(&scratch) {
                *mi += wg * d;
            }
        }
        let sq = m.iter().map(|v| v * v).collect();
        (m, sq)
    };
    let (sum, sumsq) = (0..samples)
        .into_par_iter()
        .map(chunk)
        .collect::<Vec<_>>()
        .into_iter()
        .fold((vec![0.0; dim], vec![0.0; dim]), |(mut a, mut b), (m, sq)| {
            for i in 0..dim {
                a[i] += m[i];
                b[i] += sq[i];
            }
            (a, b)
        });
    let nf = samples as f64;
    let estimate: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let stderr: Vec<f64> = sumsq
        .iter()
        .zip(&estimate)
        .map(|(&sq, &m)| ((sq / nf - m * m).max(0.0) / nf).sqrt())
        .collect();
    let within = estimate
        .iter()
        .zip(&stderr)
        .all(|(&e, &s)| e.abs() <= 4.0 * s.max(1e-15));
    CenteringReport { samples, estimate, stderr, within_4_sigma: within }
}

/// Time average of an observable along one path, over x_0 .. x_{n-1}.
pub fn birkhoff_average<S: System>(
    sys: &S,
    obs: impl Fn(&S::Point) -> f64,
    n: usize,
    seed: u64,
    path: u64,
) -> f64 {
    let mut w = Walker::new(sys, seed, path);
    let mut acc = obs(&w.point);
    for _ in 1..n {
        w.step();
        acc += obs(&w.point);
    }
    acc / n as f64
}

/// Maps `f` over paths 0..paths in parallel; result order is by path index,
/// so downstream reductions are deterministic under any thread count.
pub fn par_map_paths<S: System, T: Send>(
    sys: &S,
    seed: u64,
    paths: u64,
    f: impl Fn(Walker<'_, S>) -> T + Sync,
) -> Vec<T> {
    (0..paths)
        .into_par_iter()
        .map(|p| f(Walker::new(sys, seed, p)))
        .collect()
}

/// Writes partial sums as CSV: header `step,s1..sD`, one row per step,
/// 17 significant digits, LF line endings.
pub fn write_sums_csv<P, W: std::io::Write>(t: &Trajectory<P>, mut w: W) -> std::io::Result<()> {
    let mut header = String::from("step");
    for i in 1..=t.dim {
        header.push_str(&format!(",s{i}"));
    }
    w.write_all(header.as_bytes())?;
    w.write_all(b"\n")?;
    for k in 0..=t.steps() {
        let row = t.sum_at(k);
        let mut line = format!("{k}");
        for v in row {
            line.push_str(&format!(",{v:.16e}"));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}
