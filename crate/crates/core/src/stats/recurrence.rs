//! Recurrence and transience diagnostics: running minimum of |S_k| across
//! horizons, near-origin occupation, and the diffusive growth exponent.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::walk::{par_map_paths, System};

/// Interpolated quantile of a sorted slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0 && (0.0..=1.0).contains(&q));
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceReport {
    pub paths: usize,
    pub horizons: Vec<usize>,
    /// Per horizon N: quartiles over paths of min_{1<=k<=N} |S_k|.
    pub median_min: Vec<f64>,
    pub q25_min: Vec<f64>,
    pub q75_min: Vec<f64>,
    pub mean_min: Vec<f64>,
}

/// Streams each path to the largest horizon, tracking the running minimum
/// of |S_k| (k >= 1; S_0 = 0 is excluded) and snapshotting it at every
/// horizon in `horizons` (must be strictly increasing).
pub fn recurrence_profile<S: System>(
    sys: &S,
    seed: u64,
    paths: usize,
    horizons: &[usize],
) -> Result<RecurrenceReport> {
    check_horizons(horizons)?;
    let per_path: Vec<Vec<f64>> = par_map_paths(sys, seed, paths as u64, |mut w| {
        let mut mins = Vec::with_capacity(horizons.len());
        let mut best = f64::INFINITY;
        let mut next = 0;
        for k in 1..=*horizons.last().unwrap() {
            w.step();
            best = best.min(w.sum_norm_sq().sqrt());
            if k == horizons[next] {
                mins.push(best);
                next += 1;
            }
        }
        mins
    });
    let mut median_min = Vec::new();
    let mut q25_min = Vec::new();
    let mut q75_min = Vec::new();
    let mut mean_min = Vec::new();
    for h in 0..horizons.len() {
        let mut col: Vec<f64> = per_path.iter().map(|p| p[h]).collect();
        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        median_min.push(quantile(&col, 0.5));
        q25_min.push(quantile(&col, 0.25));
        q75_min.push(quantile(&col, 0.75));
        mean_min.push(col.iter().sum::<f64>() / col.len() as f64);
    }
    Ok(RecurrenceReport {
        paths,
        horizons: horizons.to_vec(),
        median_min,
        q25_min,
        q75_min,
        mean_min,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TransienceReport {
    pub paths: usize,
    pub radius: f64,
    pub horizons: Vec<usize>,
    /// Fraction of paths with |S_N| <= radius at each horizon N.
    pub near_origin_fraction: Vec<f64>,
    /// Fraction of paths whose running minimum up to N is <= radius.
    pub ever_within_fraction: Vec<f64>,
    pub mean_norm: Vec<f64>,
    /// Least-squares slope of log mean |S_N| against log N over the upper
    /// half of the horizons; ~0.5 in the diffusive regime.
    pub growth_exponent: f64,
}

pub fn transience_profile<S: System>(
    sys: &S,
    seed: u64,
    paths: usize,
    horizons: &[usize],
    radius: f64,
) -> Result<TransienceReport> {
    check_horizons(horizons)?;
    if radius <= 0.0 {
        return Err(Error::Config("radius must be positive".into()));
    }
    // Per path and horizon: (|S_N|, running min up to N).
    let per_path: Vec<Vec<(f64, f64)>> = par_map_paths(sys, seed, paths as u64, |mut w| {
        let mut out = Vec::with_capacity(horizons.len());
        let mut best = f64::INFINITY;
        let mut next = 0;
        for k in 1..=*horizons.last().unwrap() {
            w.step();
            let norm = w.sum_norm_sq().sqrt();
            best = best.min(norm);
            if k == horizons[next] {
                out.push((norm, best));
                next += 1;
            }
        }
        out
    });
    let nf = paths as f64;
    let mut near = Vec::new();
    let mut ever = Vec::new();
    let mut mean_norm = Vec::new();
    for h in 0..horizons.len() {
        let mut cnt_near = 0usize;
        let mut cnt_ever = 0usize;
        let mut sum = 0.0;
        for p in &per_path {
            let (norm, best) = p[h];
            if norm <= radius {
                cnt_near += 1;
            }
            if best <= radius {
                cnt_ever += 1;
            }
            sum += norm;
        }
        near.push(cnt_near as f64 / nf);
        ever.push(cnt_ever as f64 / nf);
        mean_norm.push(sum / nf);
    }
    let start = horizons.len() / 2;
    let growth_exponent = ls_slope(
        &horizons[start..].iter().map(|&h| (h as f64).ln()).collect::<Vec<_>>(),
        &mean_norm[start..].iter().map(|&m| m.max(1e-300).ln()).collect::<Vec<_>>(),
    );
    Ok(TransienceReport {
        paths,
        radius,
        horizons: horizons.to_vec(),
        near_origin_fraction: near,
        ever_within_fraction: ever,
        mean_norm,
        growth_exponent,
    })
}

fn check_horizons(horizons: &[usize]) -> Result<()> {
    if horizons.is_empty() || horizons[0] == 0 {
        return Err(Error::Config("horizons must be nonempty and positive".into()));
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("horizons must be strictly increasing".into()));
    }
    Ok(())
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return f64::NAN;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
