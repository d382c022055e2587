//! Statistical test batteries over simulated paths: covariance and CLT
//! checks, recurrence/transience profiles, and local-limit estimates.

mod covariance;
mod llt;
mod recurrence;

pub use covariance::{clt_test, empirical_covariance, CltReport};
pub use llt::{
    binomial_box_mass, binomial_window_mass, gaussian_box_mass, llt_estimate, BoxSpec, LltReport,
};
pub use recurrence::{
    quantile, recurrence_profile, transience_profile, RecurrenceReport, TransienceReport,
};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Kolmogorov-Smirnov distance between a sorted sample and a CDF.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max((f - (i as f64 + 1.0) / n).abs());
    }
    d
}

/// Two-sample Kolmogorov-Smirnov distance (both inputs sorted).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}
