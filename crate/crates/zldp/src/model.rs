//! Random Euler-product model: IID uniform phases θ_p, block sums 𝒴_j,
//! their Gaussian surrogates, and the Monte Carlo checks run against them.

use crate::error::{domain, Error, Result};
use crate::ladder::LadderConfig;
use crate::primes::{factorize, primes_in_range, PrimeRange};
use crate::rng;
use crate::stats::{self, mean_estimate, par_map, proportion, Proportion};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use std::f64::consts::PI;

/// Phases θ_p ∈ [0, 2π) derived by hashing (seed, p).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PhaseAssignment {
    pub seed: u64,
}

impl PhaseAssignment {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// The assignment used by Monte Carlo sample `i` of a run seeded by `seed`.
    pub fn for_sample(seed: u64, i: u64) -> Self {
        Self { seed: rng::mix(seed, i) }
    }

    #[inline]
    pub fn theta(&self, p: u64) -> f64 {
        2.0 * PI * rng::unit(rng::mix(self.seed, p))
    }
}

/// Primes of one block with cached weights.
#[derive(Debug, Clone, Serialize)]
pub struct ModelBlock {
    pub j: usize,
    pub range: PrimeRange,
    #[serde(skip)]
    pub primes: Vec<u64>,
    #[serde(skip)]
    rsqrt: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlockSample {
    pub j: usize,
    pub value: f64,
    pub range: PrimeRange,
}

/// 𝒩_j: normal with the exact mean and variance of 𝒴_j.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GaussianSurrogate {
    pub j: usize,
    pub mean: f64,
    /// Σ 1/(2p) + Σ 1/(32p²).
    pub variance: f64,
    /// Σ 1/(2p).
    pub first_order_variance: f64,
}

impl GaussianSurrogate {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn prob(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let s = self.sd();
        stats::normal_cdf((b - self.mean) / s) - stats::normal_cdf((a - self.mean) / s)
    }
}

impl ModelBlock {
    pub fn new(j: usize, range: PrimeRange) -> Result<Self> {
        let primes = primes_in_range(&range)?;
        Ok(Self::from_primes(j, range, primes))
    }

    pub fn from_primes(j: usize, range: PrimeRange, primes: Vec<u64>) -> Self {
        let rsqrt = primes.iter().map(|&p| 1.0 / (p as f64).sqrt()).collect();
        Self { j, range, primes, rsqrt }
    }

    /// Block j of a ladder: primes in (t_{j-1}, t_j], all primes up to t_1 for j = 1.
    pub fn from_ladder(j: usize, cfg: &LadderConfig) -> Result<Self> {
        if j == 0 || j > cfg.l_count + 1 {
            return domain(format!("block {j} outside 1..={}", cfg.l_count + 1));
        }
        Self::new(j, crate::dirichlet::level_range(cfg, j)?)
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    #[inline]
    fn term(&self, i: usize, c: f64) -> f64 {
        let r = self.rsqrt[i];
        c * r + 0.5 * c * c * r * r
    }

    pub fn sample(&self, a: &PhaseAssignment) -> f64 {
        (0..self.len()).map(|i| self.term(i, a.theta(self.primes[i]).cos())).sum()
    }

    pub fn sample_block(&self, a: &PhaseAssignment) -> BlockSample {
        BlockSample { j: self.j, value: self.sample(a), range: self.range }
    }

    /// Value with every θ_p = 0.
    pub fn at_zero_phase(&self) -> f64 {
        (0..self.len()).map(|i| self.term(i, 1.0)).sum()
    }

    pub fn surrogate(&self) -> GaussianSurrogate {
        let mut mean = 0.0;
        let mut first = 0.0;
        let mut second = 0.0;
        for &p in &self.primes {
            let x = 1.0 / p as f64;
            mean += 0.25 * x;
            first += 0.5 * x;
            second += x * x / 32.0;
        }
        GaussianSurrogate { j: self.j, mean, variance: first + second, first_order_variance: first }
    }

    /// Σ 1/p, the prime-sum width of the block (≈ t_j - t_{j-1}).
    pub fn width(&self) -> f64 {
        self.primes.iter().map(|&p| 1.0 / p as f64).sum()
    }

    /// 𝒴_j for samples 0..n of a run.
    pub fn samples(&self, n: usize, seed: u64) -> Vec<f64> {
        par_map(n, |i| self.sample(&PhaseAssignment::for_sample(seed, i as u64)))
    }

    /// log E[e^{λ𝒴_j}], exact up to the per-prime quadrature.
    pub fn log_mgf(&self, lambda: f64) -> f64 {
        (0..self.len()).map(|i| prime_log_mgf(self.rsqrt[i], lambda)).sum()
    }

    /// d/dλ log E[e^{λ𝒴_j}], the mean under the λ-tilted law.
    pub fn tilted_mean(&self, lambda: f64) -> f64 {
        (0..self.len())
            .map(|i| {
                let (z, m) = prime_tilted_moments(self.rsqrt[i], lambda);
                m / z
            })
            .sum()
    }
}

const PHASE_NODES: usize = 256;

/// (E e^{λf}, E f e^{λf}) for f = cos θ r + cos²θ r²/2 under uniform θ.
/// The integrand is smooth and periodic, so the trapezoid rule converges
/// geometrically.
fn prime_tilted_moments(r: f64, lambda: f64) -> (f64, f64) {
    let fmax = r + 0.5 * r * r;
    let fmin = -r + 0.5 * r * r;
    let shift = if lambda >= 0.0 { lambda * fmax } else { lambda * fmin };
    let mut z = 0.0;
    let mut m = 0.0;
    for k in 0..PHASE_NODES {
        let c = (2.0 * PI * (k as f64 + 0.5) / PHASE_NODES as f64).cos();
        let f = c * r + 0.5 * c * c * r * r;
        let w = (lambda * f - shift).exp();
        z += w;
        m += f * w;
    }
    let n = PHASE_NODES as f64;
    (z / n * shift.exp(), m / n * shift.exp())
}

fn prime_log_mgf(r: f64, lambda: f64) -> f64 {
    let fmax = r + 0.5 * r * r;
    let fmin = -r + 0.5 * r * r;
    let shift = if lambda >= 0.0 { lambda * fmax } else { lambda * fmin };
    let z: f64 = (0..PHASE_NODES)
        .map(|k| {
            let c = (2.0 * PI * (k as f64 + 0.5) / PHASE_NODES as f64).cos();
            (lambda * (c * r + 0.5 * c * c * r * r) - shift).exp()
        })
        .sum();
    (z / PHASE_NODES as f64).ln() + shift
}

/// Z_n = Π e^{i a θ_p} over n = Π p^a.
pub fn sample_zn(n: u64, a: &PhaseAssignment) -> Result<Complex64> {
    if n == 0 {
        return domain("Z_n needs n >= 1");
    }
    let phase: f64 = factorize(n).iter().map(|&(p, e)| e as f64 * a.theta(p)).sum();
    Ok(Complex64::from_polar(1.0, phase))
}

#[derive(Debug, Clone, Serialize)]
pub struct MgfReport {
    pub j: usize,
    pub lambda: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// e^{λ²Δ/4} with Δ = Σ 1/p over the block.
    pub bound: f64,
    pub ratio: f64,
    /// E e^{λ𝒴} from the per-prime quadrature.
    pub exact: f64,
    pub n_samples: usize,
    pub seed: u64,
}

pub fn mgf_check(block: &ModelBlock, lambda: f64, n_samples: usize, seed: u64) -> Result<MgfReport> {
    let lmax = block.range.upper().sqrt();
    if !lambda.is_finite() || lambda.abs() >= lmax {
        return domain(format!("|λ| = {} must be below exp(e^t_j / 2) = {lmax:.4}", lambda.abs()));
    }
    let vals: Vec<f64> = block.samples(n_samples, seed).into_iter().map(|y| (lambda * y).exp()).collect();
    let e = mean_estimate(&vals);
    let bound = (lambda * lambda * block.width() / 4.0).exp();
    Ok(MgfReport {
        j: block.j,
        lambda,
        estimate: e.mean,
        stderr: e.stderr,
        bound,
        ratio: e.mean / bound,
        exact: block.log_mgf(lambda).exp(),
        n_samples,
        seed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct IntervalGap {
    pub a: f64,
    pub b: f64,
    pub empirical: f64,
    pub gaussian: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BerryEsseenReport {
    pub j: usize,
    pub saddle_point_regime: bool,
    pub distance: f64,
    pub worst: Option<IntervalGap>,
    pub n_samples: usize,
    pub seed: u64,
}

/// max over intervals [a, b] with endpoints on `grid` (±∞ allowed) of
/// |P̂(𝒴_j ∈ [a, b]) - P(𝒩_j ∈ [a, b])|.
pub fn berry_esseen_distance(block: &ModelBlock, grid: &[f64], n_samples: usize, seed: u64) -> BerryEsseenReport {
    let mut ys = block.samples(n_samples, seed);
    ys.sort_by(|a, b| a.total_cmp(b));
    let g = block.surrogate();
    let n = ys.len() as f64;
    let mut pts: Vec<f64> = grid.to_vec();
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup();
    // empirical and Gaussian CDF at each point, then all pairs
    let below = |x: f64| ys.partition_point(|&y| y < x) as f64 / n;
    let at_most = |x: f64| ys.partition_point(|&y| y <= x) as f64 / n;
    let gc = |x: f64| {
        if x == f64::INFINITY {
            1.0
        } else if x == f64::NEG_INFINITY {
            0.0
        } else {
            stats::normal_cdf((x - g.mean) / g.sd())
        }
    };
    let lo_e: Vec<f64> = pts.iter().map(|&x| below(x)).collect();
    let hi_e: Vec<f64> = pts.iter().map(|&x| at_most(x)).collect();
    let cdf: Vec<f64> = pts.iter().map(|&x| gc(x)).collect();
    let mut worst: Option<IntervalGap> = None;
    let mut dist = 0.0;
    for i in 0..pts.len() {
        for k in i..pts.len() {
            let emp = hi_e[k] - lo_e[i];
            let gauss = (cdf[k] - cdf[i]).max(0.0);
            let d = (emp - gauss).abs();
            if d > dist {
                dist = d;
                worst = Some(IntervalGap {
                    a: pts[i],
                    b: pts[k],
                    empirical: emp,
                    gaussian: gauss,
                    stderr: (emp * (1.0 - emp) / n).sqrt(),
                });
            }
        }
    }
    BerryEsseenReport { j: block.j, saddle_point_regime: block.j < 2, distance: dist, worst, n_samples, seed }
}

#[derive(Debug, Clone, Serialize)]
pub struct SaddleReport {
    pub v: f64,
    pub delta: f64,
    /// 2 Var(𝒴_1).
    pub r: f64,
    pub probability: Proportion,
    pub comparison: f64,
    pub ratio: f64,
    pub n_samples: usize,
    pub seed: u64,
}

pub fn saddle_scale(block: &ModelBlock) -> f64 {
    2.0 * block.surrogate().variance
}

/// P̂(𝒴_1 ∈ [v, v + Δ^{-1}]) against (1/Δ) r^{-1/2} e^{-v²/r}.
pub fn saddle_density_check(v: f64, delta: f64, block: &ModelBlock, n_samples: usize, seed: u64) -> Result<SaddleReport> {
    let r = saddle_scale(block);
    if !(delta >= 1.0) {
        return Err(Error::Precondition(format!("Δ = {delta} must be at least 1")));
    }
    if v.abs() > 100.0 * r {
        return Err(Error::Precondition(format!("|v| = {} exceeds 100 r = {}", v.abs(), 100.0 * r)));
    }
    let ys = block.samples(n_samples, seed);
    Ok(saddle_from_samples(&ys, v, delta, r, seed))
}

pub fn saddle_from_samples(ys: &[f64], v: f64, delta: f64, r: f64, seed: u64) -> SaddleReport {
    let hi = v + 1.0 / delta;
    let hits = ys.iter().filter(|&&y| y >= v && y <= hi).count();
    let probability = proportion(hits, ys.len());
    let comparison = (-v * v / r).exp() / (delta * r.sqrt());
    SaddleReport {
        v,
        delta,
        r,
        probability,
        comparison,
        ratio: probability.p_hat / comparison,
        n_samples: ys.len(),
        seed,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub q: u32,
    pub estimate: f64,
    pub stderr: f64,
    pub reference: f64,
    pub ratio: f64,
}

/// Centred moments E[(𝒴-μ)^{2q}] against (2q-1)!! σ^{2q}.
pub fn gaussian_moments(block: &ModelBlock, qs: &[u32], n_samples: usize, seed: u64) -> Vec<MomentRow> {
    let g = block.surrogate();
    let ys = block.samples(n_samples, seed);
    qs.iter()
        .map(|&q| {
            let v: Vec<f64> = ys.iter().map(|y| (y - g.mean).powi(2 * q as i32)).collect();
            let e = mean_estimate(&v);
            let reference = stats::double_factorial_moment(q) * g.variance.powi(q as i32);
            MomentRow { q, estimate: e.mean, stderr: e.stderr, reference, ratio: e.mean / reference }
        })
        .collect()
}

/// Draws of 𝒴_j under per-prime exponential tilting, with likelihood weights
/// w = E[e^{λ𝒴}] e^{-λ𝒴} so weighted means are unbiased for the plain law.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedSamples {
    pub lambda: f64,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub ess: f64,
}

impl WeightedSamples {
    pub fn weighted_mean(&self, f: impl Fn(f64) -> f64) -> (f64, f64) {
        let terms: Vec<f64> = self.values.iter().zip(&self.weights).map(|(&y, &w)| w * f(y)).collect();
        let e = mean_estimate(&terms);
        (e.mean, e.stderr)
    }
}

pub fn tilted_sampler(block: &ModelBlock, lambda: f64, n_samples: usize, seed: u64) -> Result<WeightedSamples> {
    let lmax = block.range.upper().sqrt();
    if !lambda.is_finite() || lambda.abs() >= lmax {
        return domain(format!("|λ| = {} must be below {lmax:.4}", lambda.abs()));
    }
    let log_z = block.log_mgf(lambda);
    let values: Vec<f64> = par_map(n_samples, |i| {
        let mut g = rng::stream(seed, i as u64);
        let mut y = 0.0;
        for k in 0..block.len() {
            let r = block.rsqrt[k];
            let fmax = r + 0.5 * r * r;
            let fmin = -r + 0.5 * r * r;
            let top = if lambda >= 0.0 { fmax } else { fmin };
            loop {
                let c = (2.0 * PI * g.random::<f64>()).cos();
                let f = c * r + 0.5 * c * c * r * r;
                if lambda == 0.0 || g.random::<f64>() <= (lambda * (f - top)).exp() {
                    y += f;
                    break;
                }
            }
        }
        y
    });
    let weights: Vec<f64> = values.iter().map(|&y| (log_z - lambda * y).exp()).collect();
    if let Some(bad) = weights.iter().position(|w| !w.is_finite()) {
        return Err(Error::Resource(format!(
            "likelihood weight overflow at sample {bad} (λ = {lambda}); resample with smaller λ"
        )));
    }
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    Ok(WeightedSamples { lambda, values, weights, ess: s * s / s2 })
}

/// λ whose tilted mean equals `target`, by bisection.
pub fn mean_matching_lambda(block: &ModelBlock, target: f64) -> Result<f64> {
    let lmax = block.range.upper().sqrt() * 0.999;
    let base = block.tilted_mean(0.0);
    let (mut lo, mut hi) = if target >= base { (0.0, 1.0) } else { (-1.0, 0.0) };
    while (block.tilted_mean(hi) < target || block.tilted_mean(lo) > target) && hi.abs().max(lo.abs()) < lmax {
        if target >= base {
            hi = (hi * 2.0).min(lmax);
        } else {
            lo = (lo * 2.0).max(-lmax);
        }
    }
    if block.tilted_mean(hi) < target || block.tilted_mean(lo) > target {
        return domain(format!("target {target} not reachable inside the MGF domain"));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if block.tilted_mean(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_phase_hand_sum() {
        let b = ModelBlock::from_primes(1, PrimeRange::up_to(3.5), vec![2, 3]);
        let oracle = 2f64.sqrt().recip() + 3f64.sqrt().recip() + 0.25 + 1.0 / 6.0;
        assert!((b.at_zero_phase() - oracle).abs() < 1e-15);
        assert!((b.at_zero_phase() - 1.70112).abs() < 1e-5);
    }

    #[test]
    fn empty_block_is_zero() {
        let b = ModelBlock::from_primes(1, PrimeRange::between(1.0, 1.0), vec![]);
        assert_eq!(b.sample(&PhaseAssignment::new(3)), 0.0);
    }

    #[test]
    fn zn_definition() {
        let a = PhaseAssignment::new(9);
        assert_eq!(sample_zn(1, &a).unwrap(), Complex64::new(1.0, 0.0));
        let z = sample_zn(12, &a).unwrap();
        let w = Complex64::from_polar(1.0, 2.0 * a.theta(2) + a.theta(3));
        assert!((z - w).norm() < 1e-14);
        assert!((z.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quadrature_mgf_matches_series() {
        // E e^{λ cos θ r} = I_0(λr); with the square term checked at λ = 0 and by difference
        let r = 0.3;
        let (z, m) = prime_tilted_moments(r, 0.0);
        assert!((z - 1.0).abs() < 1e-14);
        assert!((m - 0.25 * r * r).abs() < 1e-14);
        assert!((prime_log_mgf(r, 0.7) - prime_tilted_moments(r, 0.7).0.ln()).abs() < 1e-13);
    }

    #[test]
    fn zero_tilt_has_unit_weights() {
        let b = ModelBlock::from_primes(1, PrimeRange::up_to(10.0), vec![2, 3, 5, 7]);
        let w = tilted_sampler(&b, 0.0, 50, 1).unwrap();
        assert!(w.weights.iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }
}
