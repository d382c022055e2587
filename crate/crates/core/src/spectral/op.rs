//! Truncated operators on frequency space, spectral-radius estimation, and
//! dominant-eigenvalue extraction by power iteration.

use num_complex::Complex64;
use serde::Serialize;

use crate::rng::CounterRng;

/// Anything that can act (and co-act) on a complex vector.
pub trait Applies: Sync + Send {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
    fn apply_adjoint(&self, x: &[Complex64], y: &mut [Complex64]);
}

/// Compressed sparse rows plus the transpose structure for adjoints.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
    t_row_ptr: Vec<usize>,
    t_cols: Vec<usize>,
    t_vals: Vec<Complex64>,
}

impl Csr {
    /// Builds from triplets, merging duplicate (row, col) pairs.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, Complex64)]) -> Csr {
        let mut trip: Vec<(usize, usize, Complex64)> = triplets.to_vec();
        trip.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, Complex64)> = Vec::with_capacity(trip.len());
        for (r, c, v) in trip {
            match merged.last_mut() {
                Some((lr, lc, lv)) if *lr == r && *lc == c => *lv += v,
                _ => merged.push((r, c, v)),
            }
        }
        let pack = |items: &[(usize, usize, Complex64)]| {
            let mut row_ptr = vec![0usize; n + 1];
            for &(r, _, _) in items {
                row_ptr[r + 1] += 1;
            }
            for i in 0..n {
                row_ptr[i + 1] += row_ptr[i];
            }
            let cols = items.iter().map(|&(_, c, _)| c).collect();
            let vals = items.iter().map(|&(_, _, v)| v).collect();
            (row_ptr, cols, vals)
        };
        let (row_ptr, cols, vals) = pack(&merged);
        let mut tmerged: Vec<(usize, usize, Complex64)> =
            merged.iter().map(|&(r, c, v)| (c, r, v)).collect();
        tmerged.sort_by_key(|&(r, c, _)| (r, c));
        let (t_row_ptr, t_cols, t_vals) = pack(&tmerged);
        Csr { n, row_ptr, cols, vals, t_row_ptr, t_cols, t_vals }
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn max_row_nnz(&self) -> usize {
        (0..self.n)
            .map(|r| self.row_ptr[r + 1] - self.row_ptr[r])
            .max()
            .unwrap_or(0)
    }
}

impl Applies for Csr {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        for r in 0..self.n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[r] = acc;
        }
    }

    fn apply_adjoint(&self, x: &[Complex64], y: &mut [Complex64]) {
        for r in 0..self.n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.t_row_ptr[r]..self.t_row_ptr[r + 1] {
                acc += self.t_vals[k].conj() * x[self.t_cols[k]];
            }
            y[r] = acc;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    DualL,
    PRestricted,
    PLambda,
}

impl OpKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OpKind::DualL => "dual_L",
            OpKind::PRestricted => "P_restricted",
            OpKind::PLambda => "P_lambda",
        }
    }
}

/// A finite compression of one of the operators of interest.  The backing
/// is either an explicit sparse matrix or a structured factored form; both
/// expose deterministic matrix-vector products.
pub struct TruncatedOperator {
    pub kind: OpKind,
    pub ball_radius: f64,
    pub lattice_dim: usize,
    /// Index of the zero frequency, when the compression includes it.
    pub zero_index: Option<usize>,
    backing: Box<dyn Applies>,
}

impl TruncatedOperator {
    pub fn new(
        kind: OpKind,
        ball_radius: f64,
        lattice_dim: usize,
        zero_index: Option<usize>,
        backing: Box<dyn Applies>,
    ) -> Self {
        TruncatedOperator { kind, ball_radius, lattice_dim, zero_index, backing }
    }

    pub fn dim(&self) -> usize {
        self.backing.dim()
    }

    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.backing.apply(x, y)
    }

    pub fn apply_adjoint(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.backing.apply_adjoint(x, y)
    }

    /// Largest singular value of op^m, to the power 1/m: an upper estimate
    /// for the spectral radius at finite m, via power iteration on
    /// (op^m)* (op^m).
    pub fn norm_upper(&self, m: usize, seed: u64) -> f64 {
        let n = self.dim();
        let mut w = random_unit(n, seed, 0xB0);
        let mut z = vec![Complex64::new(0.0, 0.0); n];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut sigma2 = 0.0f64;
        for _ in 0..60 {
            // z = op^m w
            z.copy_from_slice(&w);
            for _ in 0..m {
                self.apply(&z, &mut buf);
                std::mem::swap(&mut z, &mut buf);
            }
            // w' = (op^H)^m z
            for _ in 0..m {
                self.apply_adjoint(&z, &mut buf);
                std::mem::swap(&mut z, &mut buf);
            }
            let prev = sigma2;
            sigma2 = z.iter().zip(&w).map(|(a, b)| (a * b.conj()).re).sum::<f64>();
            let norm = l2(&z);
            if norm == 0.0 {
                return 0.0;
            }
            for (wi, zi) in w.iter_mut().zip(&z) {
                *wi = zi / norm;
            }
            if (sigma2 - prev).abs() <= 1e-12 * sigma2.abs().max(1e-300) {
                break;
            }
        }
        sigma2.max(0.0).powf(0.5 / m as f64)
    }
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Random complex unit vector from the named stream.
pub(crate) fn random_unit(n: usize, seed: u64, tag: u64) -> Vec<Complex64> {
    let mut rng = CounterRng::from_path(seed, &[tag]);
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| {
            let u1 = rng.next_unit().max(1e-300);
            let u2 = rng.next_unit();
            let r = (-2.0 * u1.ln()).sqrt();
            Complex64::new(
                r * (std::f64::consts::TAU * u2).cos(),
                r * (std::f64::consts::TAU * u2).sin(),
            )
        })
        .collect();
    let norm = l2(&v).max(1e-300);
    for c in &mut v {
        *c /= norm;
    }
    v
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimatePoint {
    pub m: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub kind: String,
    pub ball_radius: f64,
    pub dim: usize,
    pub size: usize,
    /// Iterate-growth curve |op^m v|^(1/m) of the best restart.
    pub estimates: Vec<EstimatePoint>,
    /// Final iterate-growth estimate, maximized over restarts (lower-biased).
    pub radius: f64,
    /// |op^m|^(1/m) at fixed m: an upper estimate at that m.
    pub norm_upper: f64,
    pub norm_upper_m: usize,
    pub converged: bool,
    pub flags: Vec<String>,
}

/// Estimates the spectral radius by iterate growth from random starts,
/// together with a norm-based upper estimate.  The growth estimate is
/// systematically lower-biased at finite m (the random start carries
/// ~1/sqrt(N) weight on the dominant mode).
pub fn spectral_radius(
    op: &TruncatedOperator,
    m_max: usize,
    tol: f64,
    restarts: usize,
    seed: u64,
) -> SpectralReport {
    let n = op.dim();
    let mut best: Option<(f64, Vec<EstimatePoint>, bool)> = None;
    for r in 0..restarts.max(1) {
        let mut v = random_unit(n, seed, 0xE5 + r as u64);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut log_acc = 0.0f64;
        let mut curve = Vec::new();
        let mut prev = f64::NAN;
        let mut converged = false;
        let mut est = 0.0;
        for m in 1..=m_max {
            op.apply(&v, &mut buf);
            let norm = l2(&buf);
            if norm == 0.0 {
                est = 0.0;
                curve.push(EstimatePoint { m, value: 0.0 });
                converged = true;
                break;
            }
            log_acc += norm.ln();
            for (vi, bi) in v.iter_mut().zip(&buf) {
                *vi = bi / norm;
            }
            est = (log_acc / m as f64).exp();
            curve.push(EstimatePoint { m, value: est });
            if m >= 10 && (est - prev).abs() < tol {
                converged = true;
                break;
            }
            prev = est;
        }
        if best.as_ref().map_or(true, |(b, _, _)| est > *b) {
            best = Some((est, curve, converged));
        }
    }
    let (radius, estimates, converged) = best.unwrap();
    let norm_upper_m = 24.min(m_max.max(1));
    let norm_upper = op.norm_upper(norm_upper_m, seed);
    let mut flags = Vec::new();
    if !converged {
        flags.push("growth_estimate_not_converged".into());
    }
    SpectralReport {
        kind: op.kind.as_str().into(),
        ball_radius: op.ball_radius,
        dim: op.lattice_dim,
        size: n,
        estimates,
        radius,
        norm_upper,
        norm_upper_m,
        converged,
        flags,
    }
}

#[derive(Debug, Clone)]
pub struct DominantEigen {
    pub value: Complex64,
    pub vector: Vec<Complex64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Growth-rate estimate for the second-largest modulus, from a
    /// deflated iteration against the left eigenvector.
    pub second_modulus: f64,
    /// Set when the two top moduli are too close to trust the split.
    pub tie: bool,
}

/// Power iteration for the largest-modulus eigenvalue, started from the
/// zero-frequency indicator when available (it overlaps the dominant mode
/// of every operator built here).
pub fn dominant_eigen(op: &TruncatedOperator, tol: f64, max_iter: usize, seed: u64) -> DominantEigen {
    let n = op.dim();
    let mut v = match op.zero_index {
        Some(z) => {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[z] = Complex64::new(1.0, 0.0);
            e
        }
        None => random_unit(n, seed, 0xD0),
    };
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut k = Complex64::new(0.0, 0.0);
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        op.apply(&v, &mut buf);
        k = v.iter().zip(&buf).map(|(a, b)| a.conj() * b).sum();
        let mut res2 = 0.0;
        for (bi, vi) in buf.iter().zip(&v) {
            res2 += (bi - k * vi).norm_sqr();
        }
        residual = res2.sqrt();
        let norm = l2(&buf);
        if norm == 0.0 {
            k = Complex64::new(0.0, 0.0);
            converged = true;
            break;
        }
        for (vi, bi) in v.iter_mut().zip(&buf) {
            *vi = bi / norm;
        }
        if residual <= tol * k.norm().max(1e-300) {
            converged = true;
            break;
        }
    }

    // Left eigenvector, for deflation.
    let mut w = match op.zero_index {
        Some(z) => {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[z] = Complex64::new(1.0, 0.0);
            e
        }
        None => random_unit(n, seed, 0xD1),
    };
    for _ in 0..iterations.max(40) {
        op.apply_adjoint(&w, &mut buf);
        let norm = l2(&buf);
        if norm == 0.0 {
            break;
        }
        for (wi, bi) in w.iter_mut().zip(&buf) {
            *wi = bi / norm;
        }
    }
    let wv: Complex64 = w.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
    let mut second_modulus = 0.0;
    if wv.norm() > 1e-12 {
        let mut u = random_unit(n, seed, 0xD2);
        let mut log_acc = 0.0;
        let mut steps = 0usize;
        for _ in 0..80 {
            let wu: Complex64 = w.iter().zip(&u).map(|(a, b)| a.conj() * b).sum();
            let coef = wu / wv;
            for (ui, vi) in u.iter_mut().zip(&v) {
                *ui -= coef * vi;
            }
            let norm_in = l2(&u);
            if norm_in < 1e-280 {
                break;
            }
            for ui in u.iter_mut() {
                *ui /= norm_in;
            }
            op.apply(&u, &mut buf);
            let g = l2(&buf);
            if g == 0.0 {
                break;
            }
            u.copy_from_slice(&buf);
            steps += 1;
            if steps > 20 {
                log_acc += g.ln();
            }
        }
        if steps > 20 {
            second_modulus = (log_acc / (steps - 20) as f64).exp();
        }
    }
    let tie = converged && (k.norm() - second_modulus).abs() <= 1e-6 * k.norm().max(1e-300);
    DominantEigen {
        value: k,
        vector: v,
        iterations,
        residual,
        converged,
        second_modulus,
        tie,
    }
}
