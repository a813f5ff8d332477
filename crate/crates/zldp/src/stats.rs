//! Estimators and the ordered parallel map used by every Monte Carlo loop.

use crate::scalar::{Compensated, Real};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

/// Evaluates `f(0..n)` in parallel and returns results in index order, so
/// any later sequential reduction is independent of the worker count.
pub fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

/// Mean and standard error with compensated accumulation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MeanEstimate<T> {
    pub mean: T,
    pub stderr: T,
    pub n: usize,
}

pub fn mean_estimate<T: Real>(xs: &[T]) -> MeanEstimate<T> {
    let n = xs.len();
    if n == 0 {
        return MeanEstimate { mean: T::nan(), stderr: T::nan(), n };
    }
    let nf = T::from_usize(n).expect("count");
    let mean = xs.iter().copied().collect::<Compensated<T>>().value() / nf;
    if n == 1 {
        return MeanEstimate { mean, stderr: T::infinity(), n };
    }
    let ss = xs.iter().map(|&x| (x - mean) * (x - mean)).collect::<Compensated<T>>().value();
    let var = ss / (nf - T::one());
    MeanEstimate { mean, stderr: (var / nf).sqrt(), n }
}

pub fn variance<T: Real>(xs: &[T]) -> T {
    let e = mean_estimate(xs);
    e.stderr * e.stderr * T::from_usize(e.n).expect("count")
}

/// Binomial proportion with its standard error and a 95% upper bound that
/// stays informative when no event is observed.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Proportion {
    pub hits: usize,
    pub n: usize,
    pub p_hat: f64,
    pub stderr: f64,
    pub upper95: f64,
}

pub fn proportion(hits: usize, n: usize) -> Proportion {
    let nf = n as f64;
    let p = if n == 0 { f64::NAN } else { hits as f64 / nf };
    let stderr = (p * (1.0 - p) / nf).sqrt();
    // Wilson upper limit, z = 1.96
    let z = 1.959963984540054;
    let denom = 1.0 + z * z / nf;
    let centre = p + z * z / (2.0 * nf);
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt();
    Proportion { hits, n, p_hat: p, stderr, upper95: ((centre + half) / denom).min(1.0) }
}

/// Kolmogorov–Smirnov distance between a sample and the standard normal.
pub fn ks_normal(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    let nd = Normal::standard();
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = nd.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// log of n!.
pub fn ln_factorial(n: u64) -> f64 {
    statrs::function::gamma::ln_gamma(n as f64 + 1.0)
}

/// (2q)! / (2^q q!), the 2q-th moment of a standard normal.
pub fn double_factorial_moment(q: u32) -> f64 {
    (1..=q).map(|i| (2 * i - 1) as f64).product()
}

/// Least-squares line; returns (intercept, slope).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}
