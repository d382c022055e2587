//! Empirical covariance of rescaled endpoints and a directional
//! Kolmogorov-Smirnov test of asymptotic normality.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::stats::{ks_statistic, normal_cdf};
use crate::walk::{par_map_paths, System};

/// Mean and population covariance of a set of D-dimensional samples.
pub fn empirical_covariance(samples: &[Vec<f64>]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::Config("no samples".into()));
    }
    let d = samples[0].len();
    let mut mean = vec![0.0; d];
    for s in samples {
        if s.len() != d {
            return Err(Error::Dimension("ragged sample set".into()));
        }
        for (m, &v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov = DMatrix::zeros(d, d);
    for s in samples {
        for i in 0..d {
            let di = s[i] - mean[i];
            for j in i..d {
                cov[(i, j)] += di * (s[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[(i, j)] /= n as f64;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    Ok((mean, cov))
}

#[derive(Debug, Clone, Serialize)]
pub struct CltReport {
    pub paths: usize,
    pub steps: usize,
    pub dim: usize,
    pub mean: Vec<f64>,
    /// Row-major empirical covariance of S_n / sqrt(n).
    pub covariance: Vec<Vec<f64>>,
    /// KS distance to N(0,1) of each tested projection, coordinate axes
    /// first, then the extra random directions.
    pub ks_per_direction: Vec<f64>,
    pub ks_max: f64,
}

/// Simulates `paths` endpoints S_n / sqrt(n) and KS-tests their projections
/// (all coordinate axes plus `extra_directions` random unit vectors)
/// against N(0,1) after standardizing by the reference covariance.
pub fn clt_test<S: System>(
    sys: &S,
    seed: u64,
    steps: usize,
    paths: usize,
    sigma_ref: &DMatrix<f64>,
    extra_directions: usize,
) -> Result<CltReport> {
    let d = sys.dim();
    if sigma_ref.nrows() != d || sigma_ref.ncols() != d {
        return Err(Error::Dimension("reference covariance has wrong shape".into()));
    }
    let scale = 1.0 / (steps as f64).sqrt();
    let endpoints: Vec<Vec<f64>> = par_map_paths(sys, seed, paths as u64, |mut w| {
        for _ in 0..steps {
            w.step();
        }
        w.sum.iter().map(|s| s * scale).collect()
    });
    let (mean, cov) = empirical_covariance(&endpoints)?;

    let mut directions: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut rng = CounterRng::from_path(seed, &[0xD17EC7]);
    for _ in 0..extra_directions {
        // Box-Muller pairs give a rotation-invariant direction.
        let mut v = vec![0.0; d];
        for i in 0..d {
            let u1 = rng.next_unit().max(1e-300);
            let u2 = rng.next_unit();
            v[i] = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        for x in &mut v {
            *x /= norm;
        }
        directions.push(v);
    }

    let mut ks_per_direction = Vec::with_capacity(directions.len());
    for u in &directions {
        let mut var = 0.0;
        for i in 0..d {
            for j in 0..d {
                var += u[i] * sigma_ref[(i, j)] * u[j];
            }
        }
        if var <= 1e-14 {
            return Err(Error::Numerical(
                "reference covariance is degenerate along a tested direction".into(),
            ));
        }
        let sd = var.sqrt();
        let mut proj: Vec<f64> = endpoints
            .iter()
            .map(|e| e.iter().zip(u).map(|(x, c)| x * c).sum::<f64>() / sd)
            .collect();
        proj.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ks_per_direction.push(ks_statistic(&proj, normal_cdf));
    }
    let ks_max = ks_per_direction.iter().cloned().fold(0.0, f64::max);
    Ok(CltReport {
        paths,
        steps,
        dim: d,
        mean,
        covariance: (0..d).map(|i| (0..d).map(|j| cov[(i, j)]).collect()).collect(),
        ks_per_direction,
        ks_max,
    })
}
