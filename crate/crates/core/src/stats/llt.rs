//! Local-limit estimates: empirical box-hit frequencies near the end of a
//! path, compared against the Gaussian (or exact binomial) prediction.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::walk::{par_map_paths, System};

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = n as f64 * (x * p0 - p1) / (x * x - 1.0);
            let dx = p0 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Mass of N(0, cov) over the axis-aligned box [lo, hi).  Tensor-product
/// Gauss-Legendre with per-axis panels about two sigma wide; bounds are
/// clamped to +-12 marginal sigma, beyond which the mass is negligible.
pub fn gaussian_box_mass(lo: &[f64], hi: &[f64], cov: &DMatrix<f64>) -> Result<f64> {
    let d = cov.nrows();
    if lo.len() != d || hi.len() != d || cov.ncols() != d {
        return Err(Error::Dimension("box/covariance shape mismatch".into()));
    }
    let chol = nalgebra::Cholesky::new(cov.clone())
        .ok_or_else(|| Error::Numerical("covariance is not positive definite".into()))?;
    let inv = chol.inverse();
    let mut logdet = 0.0;
    for i in 0..d {
        logdet += 2.0 * chol.l()[(i, i)].ln();
    }
    let log_norm = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + logdet);

    let (gl_x, gl_w) = gauss_legendre(12);
    let mut axis_nodes: Vec<Vec<(f64, f64)>> = Vec::with_capacity(d);
    for i in 0..d {
        let sigma = cov[(i, i)].sqrt();
        let a = lo[i].max(-12.0 * sigma);
        let b = hi[i].min(12.0 * sigma);
        if b <= a {
            return Ok(0.0);
        }
        let panels = ((b - a) / (2.0 * sigma)).ceil().max(1.0) as usize;
        let step = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * gl_x.len());
        for p in 0..panels {
            let (pa, pb) = (a + p as f64 * step, a + (p + 1) as f64 * step);
            let (mid, half) = (0.5 * (pa + pb), 0.5 * (pb - pa));
            for (&x, &w) in gl_x.iter().zip(&gl_w) {
                nodes.push((mid + half * x, half * w));
            }
        }
        axis_nodes.push(nodes);
    }

    // Odometer over the product grid.
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut total = 0.0;
    'outer: loop {
        let mut w = 1.0;
        for i in 0..d {
            let (xi, wi) = axis_nodes[i][idx[i]];
            x[i] = xi;
            w *= wi;
        }
        let mut q = 0.0;
        for i in 0..d {
            for j in 0..d {
                q += x[i] * inv[(i, j)] * x[j];
            }
        }
        total += w * (log_norm - 0.5 * q).exp();
        for i in 0..d {
            idx[i] += 1;
            if idx[i] < axis_nodes[i].len() {
                continue 'outer;
            }
            idx[i] = 0;
        }
        break;
    }
    Ok(total)
}

/// Exact mass of a +-1 coin walk after n steps on [lo, hi]: the sum of
/// binomial weights over lattice points of the right parity.
pub fn binomial_box_mass(n: usize, lo: f64, hi: f64) -> f64 {
    let nf = n as f64;
    let mut s = lo.ceil() as i64;
    if (s - n as i64).rem_euclid(2) != 0 {
        s += 1;
    }
    let mut total = 0.0;
    while (s as f64) <= hi {
        if s.abs() <= n as i64 {
            let k = ((n as i64 + s) / 2) as f64;
            let logp = libm::lgamma(nf + 1.0)
                - libm::lgamma(k + 1.0)
                - libm::lgamma(nf - k + 1.0)
                - nf * std::f64::consts::LN_2;
            total += logp.exp();
        }
        s += 2;
    }
    total
}

/// Mean of `binomial_box_mass(t, lo, hi)` over the window of the last
/// `window` times ending at n.
pub fn binomial_window_mass(n: usize, window: usize, lo: f64, hi: f64) -> f64 {
    let mut acc = 0.0;
    for t in (n - window + 1)..=n {
        acc += binomial_box_mass(t, lo, hi);
    }
    acc / window as f64
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(Error::Config("box must satisfy lo < hi componentwise".into()));
        }
        Ok(BoxSpec { lo, hi })
    }

    fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&v, (&a, &b))| a <= v && v < b)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LltReport {
    pub paths: usize,
    pub n: usize,
    pub window: usize,
    pub boxes: Vec<BoxSpec>,
    pub hits: Vec<u64>,
    /// Hit frequency over (paths x window) box checks.
    pub empirical: Vec<f64>,
    /// Window-averaged Gaussian mass with covariance t * sigma.
    pub predicted: Vec<f64>,
    pub ratio: Vec<f64>,
}

/// Pools the window of times {n-window+1, ..., n} over many paths and
/// compares box-hit frequencies of S_t against the local-limit prediction
/// (Gaussian of covariance t * sigma).
pub fn llt_estimate<S: System>(
    sys: &S,
    seed: u64,
    paths: usize,
    n: usize,
    window: usize,
    boxes: &[BoxSpec],
    sigma: &DMatrix<f64>,
) -> Result<LltReport> {
    let d = sys.dim();
    if window == 0 || window > n {
        return Err(Error::Config("window must satisfy 1 <= window <= n".into()));
    }
    if boxes.is_empty() || boxes.iter().any(|b| b.lo.len() != d) {
        return Err(Error::Config("boxes must be nonempty and D-dimensional".into()));
    }
    if sigma.nrows() != d || sigma.ncols() != d {
        return Err(Error::Dimension("sigma has wrong shape".into()));
    }

    let first = n - window + 1;
    let counts: Vec<Vec<u64>> = par_map_paths(sys, seed, paths as u64, |mut w| {
        let mut c = vec![0u64; boxes.len()];
        for k in 1..=n {
            w.step();
            if k >= first {
                for (b, cnt) in boxes.iter().zip(&mut c) {
                    if b.contains(&w.sum) {
                        *cnt += 1;
                    }
                }
            }
        }
        c
    });
    let mut hits = vec![0u64; boxes.len()];
    for c in &counts {
        for (h, &v) in hits.iter_mut().zip(c) {
            *h += v;
        }
    }
    let denom = (paths * window) as f64;
    let empirical: Vec<f64> = hits.iter().map(|&h| h as f64 / denom).collect();

    let mut predicted = Vec::with_capacity(boxes.len());
    for b in boxes {
        let mean = if window <= 32 {
            let mut acc = 0.0;
            for t in first..=n {
                acc += gaussian_box_mass(&b.lo, &b.hi, &(sigma * t as f64))?;
            }
            acc / window as f64
        } else {
            // The mass varies smoothly in t; integrate with a 9-point rule
            // over [first - 1/2, n + 1/2] instead of summing every time.
            let (gx, gw) = gauss_legendre(9);
            let (a, bnd) = (first as f64 - 0.5, n as f64 + 0.5);
            let (mid, half) = (0.5 * (a + bnd), 0.5 * (bnd - a));
            let mut acc = 0.0;
            for (&x, &wq) in gx.iter().zip(&gw) {
                let t = mid + half * x;
                acc += half * wq * gaussian_box_mass(&b.lo, &b.hi, &(sigma * t))?;
            }
            acc / window as f64
        };
        predicted.push(mean);
    }
    let ratio = empirical
        .iter()
        .zip(&predicted)
        .map(|(&e, &p)| if p > 0.0 { e / p } else { f64::NAN })
        .collect();
    Ok(LltReport {
        paths,
        n,
        window,
        boxes: boxes.to_vec(),
        hits,
        empirical,
        predicted,
        ratio,
    })
}
