//! Monte Carlo drivers for the tail of log|ζ|, fractional and short-interval
//! moments, short-interval maxima, the critical window and the event ladder.
//!
//! Every driver draws heights through [`ZetaSamples::shared`], so two drivers
//! run on the same (T, n, seed) see the same heights.

use crate::dirichlet::{level_range, MollifierSpec, PrimeBlock, DD_PHASE_THRESHOLD};
use crate::error::{domain, Error, Result};
use crate::ladder::{self, corridor, decompose, BarrierParams, LadderConfig, PartitionReport};
use crate::ledger::ConstantsLedger;
use crate::model::{mean_matching_lambda, tilted_sampler, ModelBlock, PhaseAssignment};
use crate::primes::PrimeRange;
use crate::rng;
use crate::scalar::compensated_sum;
use crate::stats::{self, mean_estimate, par_map, proportion};
use crate::zeta::{log_abs_zeta, sample_tau, tau_at, zeta_critical, Height, LogModulus};
use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erf;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_T: f64 = 1e6;
pub const DEFAULT_SEED: u64 = 42;
/// Window grid spacing is `DEFAULT_GRID_A / log T`.
pub const DEFAULT_GRID_A: f64 = 1.0;

fn loglog(big_t: f64) -> f64 {
    big_t.ln().ln()
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..3.0).contains(&theta) {
        return domain(format!("theta = {theta} outside [0, 3)"));
    }
    Ok(())
}

/// β_c = 2√(1+θ).
pub fn beta_c(theta: f64) -> f64 {
    2.0 * (1.0 + theta).sqrt()
}

/// m(t) = (β_c/2) t - (1/(2β_c)) log t.
pub fn m_of_t(t: f64, theta: f64) -> f64 {
    let bc = beta_c(theta);
    0.5 * bc * t - t.ln() / (2.0 * bc)
}

/// e^{-V²/t}/√t.
pub fn gaussian_tail_ref(v: f64, t: f64) -> f64 {
    (-v * v / t).exp() / t.sqrt()
}

// ---------------------------------------------------------------------------
// shared height samples

/// log|ζ(1/2+iτ)| at τ_i uniform on [T, 2T]; near-zero samples hold -inf.
#[derive(Debug, Clone, Serialize)]
pub struct ZetaSamples {
    pub big_t: f64,
    pub seed: u64,
    pub taus: Vec<f64>,
    pub log_abs: Vec<f64>,
    pub near_zero: usize,
}

type CacheKey = (u64, u64);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<ZetaSamples>>> {
    static C: OnceLock<Mutex<HashMap<CacheKey, Arc<ZetaSamples>>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

impl ZetaSamples {
    pub fn compute(big_t: f64, n: usize, seed: u64) -> Result<Self> {
        let heights = sample_tau(big_t, n, seed)?;
        let vals: Vec<Result<LogModulus>> = par_map(n, |i| log_abs_zeta(&heights[i]));
        let mut log_abs = Vec::with_capacity(n);
        let mut near_zero = 0;
        for v in vals {
            let v = v?;
            if v.is_near_zero() {
                near_zero += 1;
            }
            log_abs.push(v.or_neg_inf());
        }
        Ok(Self { big_t, seed, taus: heights.iter().map(|h| h.t).collect(), log_abs, near_zero })
    }

    /// Cached samples; sample i depends only on (T, seed, i), so a request
    /// for fewer samples than cached is served by the prefix.
    pub fn shared(big_t: f64, n: usize, seed: u64) -> Result<Arc<Self>> {
        let key = (big_t.to_bits(), seed);
        if let Some(s) = cache().lock().expect("cache lock").get(&key) {
            if s.len() == n {
                return Ok(s.clone());
            }
            if s.len() > n {
                return Ok(Arc::new(s.prefix(n)));
            }
        }
        let s = Arc::new(Self::compute(big_t, n, seed)?);
        cache().lock().expect("cache lock").insert(key, s.clone());
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.log_abs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_abs.is_empty()
    }

    pub fn t(&self) -> f64 {
        loglog(self.big_t)
    }

    fn prefix(&self, n: usize) -> Self {
        let log_abs = self.log_abs[..n].to_vec();
        let near_zero = log_abs.iter().filter(|v| **v == f64::NEG_INFINITY).count();
        Self { big_t: self.big_t, seed: self.seed, taus: self.taus[..n].to_vec(), log_abs, near_zero }
    }
}

// ---------------------------------------------------------------------------
// tail

#[derive(Debug, Clone, Serialize)]
pub struct TailEstimate {
    pub big_t: f64,
    pub alpha: f64,
    pub v: f64,
    pub n_samples: usize,
    pub n_exceed: usize,
    pub near_zero: usize,
    pub p_hat: f64,
    pub stderr: f64,
    pub upper95: f64,
    pub gaussian_ref: f64,
    /// NaN when no sample exceeds V.
    pub ratio: f64,
    /// No exceedance: only `upper95 / gaussian_ref` is informative.
    pub wide_interval: bool,
    /// Set for estimates drawn from the random model instead of ζ.
    pub model_not_zeta: bool,
    pub seed: u64,
}

pub fn tail_at(samples: &ZetaSamples, alpha: f64, v: f64) -> TailEstimate {
    let t = samples.t();
    let n_exceed = samples.log_abs.iter().filter(|&&x| x > v).count();
    let p = proportion(n_exceed, samples.len());
    let gref = gaussian_tail_ref(v, t);
    TailEstimate {
        big_t: samples.big_t,
        alpha,
        v,
        n_samples: samples.len(),
        n_exceed,
        near_zero: samples.near_zero,
        p_hat: p.p_hat,
        stderr: p.stderr,
        upper95: p.upper95,
        gaussian_ref: gref,
        ratio: if n_exceed == 0 { f64::NAN } else { p.p_hat / gref },
        wide_interval: n_exceed == 0,
        model_not_zeta: false,
        seed: samples.seed,
    }
}

pub fn tail_experiment(big_t: f64, alpha_grid: &[f64], n_samples: usize, seed: u64) -> Result<Vec<TailEstimate>> {
    for &a in alpha_grid {
        if !(a > 0.0 && a < 2.0) {
            return domain(format!("alpha = {a} outside (0, 2)"));
        }
    }
    let s = ZetaSamples::shared(big_t, n_samples, seed)?;
    let t = s.t();
    Ok(alpha_grid.iter().map(|&a| tail_at(&s, a, a * t)).collect())
}

/// Tail of the random model over primes up to T^{cutoff}, by exponential
/// tilting so that V sits at the tilted mean.
pub fn model_tail_experiment(
    big_t: f64,
    alpha_grid: &[f64],
    cutoff: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<TailEstimate>> {
    if !(cutoff > 0.0 && cutoff <= 1.0) {
        return domain(format!("cutoff exponent {cutoff} outside (0, 1]"));
    }
    let t = loglog(big_t);
    let block = ModelBlock::new(1, PrimeRange::up_to(big_t.powf(cutoff)))?;
    let mut out = Vec::with_capacity(alpha_grid.len());
    for (k, &a) in alpha_grid.iter().enumerate() {
        if !(a > 0.0 && a < 2.0) {
            return domain(format!("alpha = {a} outside (0, 2)"));
        }
        let v = a * t;
        let lambda = mean_matching_lambda(&block, v)?;
        let ws = tilted_sampler(&block, lambda, n_samples, rng::mix(seed, k as u64))?;
        let (p, se) = ws.weighted_mean(|y| if y > v { 1.0 } else { 0.0 });
        let n_exceed = ws.values.iter().filter(|&&y| y > v).count();
        let gref = gaussian_tail_ref(v, t);
        out.push(TailEstimate {
            big_t,
            alpha: a,
            v,
            n_samples,
            n_exceed,
            near_zero: 0,
            p_hat: p,
            stderr: se,
            upper95: p + 1.96 * se,
            gaussian_ref: gref,
            ratio: if n_exceed == 0 { f64::NAN } else { p / gref },
            wide_interval: n_exceed == 0,
            model_not_zeta: true,
            seed,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// fractional moments

/// Pieces of β∫e^{βV}Ŝ(V)dV split at 0, β_-t/2 and β_+t/2, with
/// β_- = β/4 and β_+ = 3 + β/4, and the a-priori bounds of the outer pieces.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LayeredPieces {
    pub negative: f64,
    pub small: f64,
    pub dominant: f64,
    pub upper: f64,
    /// ≤ 1.
    pub negative_bound: f64,
    /// e^{β²t/8}.
    pub small_bound: f64,
    /// e^{t(ββ_+/2 - 2β_+ + 4)}/(4-β), from the fourth-moment Markov bound.
    pub upper_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentEstimate {
    pub big_t: f64,
    pub beta: f64,
    /// (1/n) Σ |ζ(1/2+iτ_i)|^β.
    pub m_hat: f64,
    pub stderr: f64,
    /// (log T)^{β²/4}.
    pub reference: f64,
    pub ratio: f64,
    /// β∫e^{βV}Ŝ(V)dV on the same samples.
    pub layered: f64,
    pub layered_rel_diff: f64,
    pub pieces: LayeredPieces,
    pub n_samples: usize,
    pub seed: u64,
}

/// β∫_a^b e^{βV}Ŝ(V)dV for the empirical tail Ŝ of sorted values, exactly:
/// on [x_(k), x_(k+1)) the tail is (n-k)/n.
fn layered_integral(sorted: &[f64], beta: f64, a: f64, b: f64) -> f64 {
    let n = sorted.len();
    let nf = n as f64;
    let mut terms = Vec::with_capacity(n);
    let mut lo = f64::NEG_INFINITY;
    for (k, &x) in sorted.iter().enumerate() {
        // Ŝ = (n-k)/n on [lo, x)
        let l = lo.max(a);
        let h = x.min(b);
        if h > l {
            terms.push((n - k) as f64 / nf * ((beta * h).exp() - (beta * l).exp()));
        }
        lo = x;
    }
    compensated_sum(terms)
}

pub fn moment_from_samples(s: &ZetaSamples, beta: f64) -> Result<MomentEstimate> {
    if !(beta > 0.0 && beta < 4.0) {
        return domain(format!("beta = {beta} outside (0, 4)"));
    }
    let t = s.t();
    let vals: Vec<f64> = s.log_abs.iter().map(|&x| (beta * x).exp()).collect();
    let e = mean_estimate(&vals);
    let mut sorted = s.log_abs.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let layered = layered_integral(&sorted, beta, f64::NEG_INFINITY, f64::INFINITY);
    let b_minus = beta / 4.0;
    let b_plus = 3.0 + beta / 4.0;
    let c1 = 0.5 * b_minus * t;
    let c2 = 0.5 * b_plus * t;
    let pieces = LayeredPieces {
        negative: layered_integral(&sorted, beta, f64::NEG_INFINITY, 0.0),
        small: layered_integral(&sorted, beta, 0.0, c1),
        dominant: layered_integral(&sorted, beta, c1, c2),
        upper: layered_integral(&sorted, beta, c2, f64::INFINITY),
        negative_bound: 1.0,
        small_bound: (beta * beta * t / 8.0).exp(),
        upper_bound: (t * (beta * b_plus / 2.0 - 2.0 * b_plus + 4.0)).exp() / (4.0 - beta),
    };
    let reference = s.big_t.ln().powf(beta * beta / 4.0);
    Ok(MomentEstimate {
        big_t: s.big_t,
        beta,
        m_hat: e.mean,
        stderr: e.stderr,
        reference,
        ratio: e.mean / reference,
        layered,
        layered_rel_diff: (layered - e.mean).abs() / e.mean,
        pieces,
        n_samples: s.len(),
        seed: s.seed,
    })
}

pub fn fractional_moment(big_t: f64, beta: f64, n_samples: usize, seed: u64) -> Result<MomentEstimate> {
    if !(beta > 0.0 && beta < 4.0) {
        return domain(format!("beta = {beta} outside (0, 4)"));
    }
    moment_from_samples(&*ZetaSamples::shared(big_t, n_samples, seed)?, beta)
}

/// 1/(2π²).
pub const FOURTH_MOMENT_CONSTANT: f64 = 1.0 / (2.0 * PI * PI);

#[derive(Debug, Clone, Serialize)]
pub struct FourthMomentReport {
    pub big_t: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// (log T)⁴/(2π²).
    pub reference: f64,
    pub ratio: f64,
    pub n_samples: usize,
    pub seed: u64,
}

pub fn fourth_moment_anchor(big_t: f64, n_samples: usize, seed: u64) -> Result<FourthMomentReport> {
    if !(big_t >= 1e5) {
        return domain(format!("T = {big_t} below 1e5"));
    }
    let s = ZetaSamples::shared(big_t, n_samples, seed)?;
    let vals: Vec<f64> = s.log_abs.iter().map(|&x| (4.0 * x).exp()).collect();
    let e = mean_estimate(&vals);
    let reference = FOURTH_MOMENT_CONSTANT * big_t.ln().powi(4);
    Ok(FourthMomentReport {
        big_t,
        estimate: e.mean,
        stderr: e.stderr,
        reference,
        ratio: e.mean / reference,
        n_samples: s.len(),
        seed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CltReport {
    pub big_t: f64,
    /// √(½ log log T).
    pub scale: f64,
    pub ks: f64,
    pub mean: f64,
    pub sd: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Kolmogorov–Smirnov distance of log|ζ|/√(½ log log T) from N(0,1).
pub fn selberg_clt(big_t: f64, n_samples: usize, seed: u64) -> Result<CltReport> {
    let s = ZetaSamples::shared(big_t, n_samples, seed)?;
    let scale = (0.5 * s.t()).sqrt();
    let z: Vec<f64> = s.log_abs.iter().map(|&x| x / scale).collect();
    let finite: Vec<f64> = z.iter().copied().filter(|x| x.is_finite()).collect();
    let e = mean_estimate(&finite);
    Ok(CltReport {
        big_t,
        scale,
        ks: stats::ks_normal(&z),
        mean: e.mean,
        sd: e.stderr * (e.n as f64).sqrt(),
        n_samples: s.len(),
        seed,
    })
}

// ---------------------------------------------------------------------------
// short intervals

/// log|ζ| on a uniform grid over [τ - L, τ + L] with trapezoid weights that
/// sum to one.
#[derive(Debug, Clone)]
struct Window {
    center: f64,
    log_abs: Vec<f64>,
    weights: Vec<f64>,
}

impl Window {
    fn new(center: f64, half: f64, n_int: usize) -> Result<Self> {
        let h = 2.0 * half / n_int as f64;
        let mut log_abs = Vec::with_capacity(n_int + 1);
        for k in 0..=n_int {
            log_abs.push(log_abs_zeta(&Height::fast(center - half + k as f64 * h))?.or_neg_inf());
        }
        let w = 1.0 / n_int as f64;
        let weights = (0..=n_int).map(|k| if k == 0 || k == n_int { 0.5 * w } else { w }).collect();
        Ok(Self { center, log_abs, weights })
    }

    fn max(&self) -> f64 {
        self.log_abs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Maximum over every `step`-th grid point.
    fn max_every(&self, step: usize) -> f64 {
        self.log_abs.iter().step_by(step).copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Normalized 𝒵_β; β = 0 gives the total weight.
    fn z_beta(&self, beta: f64) -> f64 {
        compensated_sum(self.log_abs.iter().zip(&self.weights).map(|(&x, &w)| {
            if beta == 0.0 {
                w
            } else {
                w * (beta * x).exp()
            }
        }))
    }

    fn level_set(&self, v: f64) -> f64 {
        compensated_sum(self.log_abs.iter().zip(&self.weights).filter(|(&x, _)| x > v).map(|(_, &w)| w))
    }

    /// ∫_a^b e^{βV} 𝒮(V) dV: each grid point contributes w ∫_a^{min(b,x)} e^{βV}.
    fn layered(&self, beta: f64, a: f64, b: f64) -> f64 {
        compensated_sum(self.log_abs.iter().zip(&self.weights).filter_map(|(&x, &w)| {
            let h = x.min(b);
            (h > a).then(|| w * ((beta * h).exp() - (beta * a).exp()) / beta)
        }))
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WindowGrid {
    /// Half-width (log T)^θ.
    pub half: f64,
    pub spacing: f64,
    pub n_int: usize,
}

pub fn window_grid(big_t: f64, theta: f64, grid_a: f64) -> WindowGrid {
    let half = big_t.ln().powf(theta);
    let target = grid_a / big_t.ln();
    let n_int = (2.0 * half / target).ceil().max(1.0) as usize;
    WindowGrid { half, spacing: 2.0 * half / n_int as f64, n_int }
}

fn windows(big_t: f64, grid: &WindowGrid, n_windows: usize, seed: u64) -> Result<Vec<Window>> {
    if 2.0 * big_t + grid.half > crate::zeta::MAX_HEIGHT {
        return Err(Error::Resource(format!("window heights beyond {:e}", crate::zeta::MAX_HEIGHT)));
    }
    par_map(n_windows, |i| Window::new(tau_at(big_t, seed, i as u64), grid.half, grid.n_int))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ShortIntervalResult {
    pub big_t: f64,
    pub theta: f64,
    /// None for the maximum.
    pub beta: Option<f64>,
    /// Per window: max log|ζ| on the grid, or 𝒵_β.
    pub per_window: Vec<f64>,
    pub centers: Vec<f64>,
    /// (V, mean 𝒮(V) over windows).
    pub level_set: Vec<(f64, f64)>,
    pub m_t: f64,
    pub beta_c: f64,
    pub grid: WindowGrid,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExceedanceRow {
    pub y: f64,
    /// log of e^y (log T)^{√(1+θ)} / (log log T)^{1/(4√(1+θ))} = m(t) + y.
    pub log_bound: f64,
    pub hits: usize,
    pub freq: f64,
    pub stderr: f64,
    pub upper95: f64,
    /// e^{-2√(1+θ)y} e^{-y²/t}.
    pub reference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShortIntervalMax {
    pub result: ShortIntervalResult,
    pub exceedance: Vec<ExceedanceRow>,
    /// Per window, log(max on the fine grid) - log(max on the doubled spacing).
    pub refinement_gain: Vec<f64>,
}

fn level_grid(ws: &[Window], lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    (0..=n)
        .map(|k| {
            let v = lo + (hi - lo) * k as f64 / n as f64;
            let s: Vec<f64> = ws.iter().map(|w| w.level_set(v)).collect();
            (v, mean_estimate(&s).mean)
        })
        .collect()
}

pub fn short_interval_max(
    big_t: f64,
    theta: f64,
    y_grid: &[f64],
    n_windows: usize,
    seed: u64,
    grid_a: f64,
) -> Result<ShortIntervalMax> {
    check_theta(theta)?;
    let t = loglog(big_t);
    // the reported grid has spacing ≈ grid_a/log T; the half-spacing grid
    // is evaluated too and the coarse max read off its even points
    let coarse = window_grid(big_t, theta, grid_a);
    let fine = WindowGrid { half: coarse.half, spacing: coarse.spacing / 2.0, n_int: 2 * coarse.n_int };
    let ws = windows(big_t, &fine, n_windows, seed)?;
    let maxima: Vec<f64> = ws.iter().map(|w| w.max_every(2)).collect();
    let gain: Vec<f64> = ws.iter().map(|w| w.max() - w.max_every(2)).collect();
    let m_t = m_of_t(t, theta);
    let sq = (1.0 + theta).sqrt();
    let exceedance = y_grid
        .iter()
        .map(|&y| {
            let hits = maxima.iter().filter(|&&m| m > m_t + y).count();
            let p = proportion(hits, maxima.len());
            ExceedanceRow {
                y,
                log_bound: m_t + y,
                hits,
                freq: p.p_hat,
                stderr: p.stderr,
                upper95: p.upper95,
                reference: (-2.0 * sq * y - y * y / t).exp(),
            }
        })
        .collect();
    Ok(ShortIntervalMax {
        result: ShortIntervalResult {
            big_t,
            theta,
            beta: None,
            centers: ws.iter().map(|w| w.center).collect(),
            per_window: maxima,
            level_set: level_grid(&ws, -2.0, m_t + 2.0, 40),
            m_t,
            beta_c: beta_c(theta),
            grid: coarse,
            seed,
        },
        exceedance,
        refinement_gain: gain,
    })
}

/// One interval [V_j, V_{j+1}] of the level mesh with its weight a_j, the
/// Gaussian reference ∫e^{βV}e^{-V²/t}/√t and the window statistics of I_j.
#[derive(Debug, Clone, Serialize)]
pub struct MeshRow {
    pub beta: f64,
    pub j: usize,
    pub v_lo: f64,
    pub v_hi: f64,
    pub a_j: f64,
    pub gaussian_integral: f64,
    /// Mean over windows of I_j = ∫ e^{βV}𝒮(V)dV.
    pub mean_i: f64,
    /// Fraction of windows with I_j <= a_j × reference.
    pub holds_freq: f64,
}

/// ∫_a^b e^{βV} e^{-V²/t}/√t dV in closed form.
pub fn gaussian_layer_integral(beta: f64, t: f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * beta * t;
    let s = t.sqrt();
    (beta * beta * t / 4.0).exp() * 0.5 * PI.sqrt() * (erf((b - c) / s) - erf((a - c) / s))
}

/// Mesh points V_0..V_{J+1} of [lo, hi] ∩ hℤ, padded by one mesh step on
/// each side.
fn mesh(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    let first = (lo / h).ceil() as i64;
    let last = (hi / h).floor() as i64;
    if last < first {
        return Vec::new();
    }
    let mut v: Vec<f64> = (first - 1..=last + 1).map(|k| k as f64 * h).collect();
    v.dedup();
    v
}

/// Subcritical mesh √tℤ ∩ [βt/8, m(t)+A] and weights
/// a_j = A((β/2)√t - V/√t)² + A/100, V the mesh end nearer βt/2,
/// and A/100 on the interval containing βt/2.
pub fn subcritical_weights(beta: f64, t: f64, theta: f64, a: f64) -> Vec<(f64, f64, f64)> {
    let v = mesh(beta * t / 8.0, m_of_t(t, theta) + a, t.sqrt());
    let peak = beta * t / 2.0;
    let q = |x: f64| {
        let d = 0.5 * beta * t.sqrt() - x / t.sqrt();
        d * d + 0.01
    };
    v.windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let aj = if lo > peak {
                a * q(lo)
            } else if hi <= peak {
                a * q(hi)
            } else {
                a * 0.01
            };
            (lo, hi, aj)
        })
        .collect()
}

/// Supercritical mesh ℤ ∩ [β_c t/4, m(t)+A] and weights, with y = V - m(t):
/// A(1+y_j²) if y_j >= 0, A(1+y_{j+1}²) if y_{j+1} <= 0, A otherwise.
pub fn supercritical_weights(t: f64, theta: f64, a: f64) -> Vec<(f64, f64, f64)> {
    let m = m_of_t(t, theta);
    let v = mesh(beta_c(theta) * t / 4.0, m + a, 1.0);
    v.windows(2)
        .map(|w| {
            let (y0, y1) = (w[0] - m, w[1] - m);
            let aj = if y0 >= 0.0 {
                a * (1.0 + y0 * y0)
            } else if y1 <= 0.0 {
                a * (1.0 + y1 * y1)
            } else {
                a
            };
            (w[0], w[1], aj)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SubcriticalRow {
    pub beta: f64,
    pub a: f64,
    /// log of A (log T)^{β²/4+θ}/(2e^{θt}).
    pub log_bound: f64,
    pub exceed_freq: f64,
    pub stderr: f64,
    /// 1/A.
    pub reference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SupercriticalRow {
    pub beta: f64,
    /// log of (log log T)^{-β/(2β_c)} (log T)^{β_cβ/2-1}/(2e^{θt}).
    pub log_reference: f64,
    pub median_log_z: f64,
    pub mean_log_z: f64,
    pub median_ratio: f64,
}

/// C¹ fit of f(β) = mean log 𝒵_β / t by c₀ + qβ² up to a break b and the
/// tangent line after it.
#[derive(Debug, Clone, Serialize)]
pub struct FreezingFit {
    pub betas: Vec<f64>,
    pub f: Vec<f64>,
    pub c0: f64,
    pub q: f64,
    pub break_point: f64,
    pub sse: f64,
    pub beta_c: f64,
    /// |b - β_c| / β_c.
    pub rel_dev: f64,
}

fn freezing_basis(beta: f64, b: f64) -> f64 {
    if beta <= b {
        beta * beta
    } else {
        b * b + 2.0 * b * (beta - b)
    }
}

pub fn fit_freezing(betas: &[f64], f: &[f64], theta: f64) -> Result<FreezingFit> {
    if betas.len() < 3 || betas.len() != f.len() {
        return domain("freezing fit needs at least three (β, f) pairs");
    }
    let lo = betas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = betas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let steps = 2000;
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for k in 0..=steps {
        let b = lo + (hi - lo) * k as f64 / steps as f64;
        let x: Vec<f64> = betas.iter().map(|&be| freezing_basis(be, b)).collect();
        let (c0, q) = stats::linear_fit(&x, f);
        let sse: f64 = x.iter().zip(f).map(|(xi, yi)| (c0 + q * xi - yi).powi(2)).sum();
        if best.is_none_or(|(s, ..)| sse < s) {
            best = Some((sse, b, c0, q));
        }
    }
    let (sse, b, c0, q) = best.expect("grid non-empty");
    let bc = beta_c(theta);
    Ok(FreezingFit { betas: betas.to_vec(), f: f.to_vec(), c0, q, break_point: b, sse, beta_c: bc, rel_dev: (b - bc).abs() / bc })
}

#[derive(Debug, Clone, Serialize)]
pub struct ShortMoments {
    pub results: Vec<ShortIntervalResult>,
    pub subcritical: Vec<SubcriticalRow>,
    pub supercritical: Vec<SupercriticalRow>,
    pub mesh: Vec<MeshRow>,
    /// Fraction of windows on E = {max log|ζ| <= m(t) + A}.
    pub e_freq: f64,
    pub freezing: Option<FreezingFit>,
}

pub const A_GRID: [f64; 4] = [2.0, 5.0, 10.0, 20.0];
/// A in the event E and in the a_j weights.
pub const MESH_A: f64 = 1.0;

pub fn short_interval_moments(
    big_t: f64,
    theta: f64,
    beta_grid: &[f64],
    n_windows: usize,
    seed: u64,
    grid_a: f64,
) -> Result<ShortMoments> {
    check_theta(theta)?;
    if beta_grid.iter().any(|b| !(*b >= 0.0) || !b.is_finite()) {
        return domain("beta grid must be finite and non-negative");
    }
    let t = loglog(big_t);
    let grid = window_grid(big_t, theta, grid_a);
    let ws = windows(big_t, &grid, n_windows, seed)?;
    let m_t = m_of_t(t, theta);
    let bc = beta_c(theta);
    let ln_norm = (2.0f64).ln() + theta * t;
    let level_set = level_grid(&ws, -2.0, m_t + 2.0, 40);
    let mut results = Vec::new();
    let mut subcritical = Vec::new();
    let mut supercritical = Vec::new();
    let mut mesh_rows = Vec::new();
    let mut f = Vec::new();
    for &beta in beta_grid {
        let z: Vec<f64> = ws.iter().map(|w| w.z_beta(beta)).collect();
        let logs: Vec<f64> = z.iter().map(|v| v.ln()).collect();
        f.push(mean_estimate(&logs).mean / t);
        for &a in &A_GRID {
            let log_bound = a.ln() + (beta * beta / 4.0 + theta) * t - ln_norm;
            let hits = logs.iter().filter(|&&l| l > log_bound).count();
            let p = proportion(hits, logs.len());
            subcritical.push(SubcriticalRow { beta, a, log_bound, exceed_freq: p.p_hat, stderr: p.stderr, reference: 1.0 / a });
        }
        if beta > bc {
            let log_ref = -beta / (2.0 * bc) * t.ln() + (bc * beta / 2.0 - 1.0) * t - ln_norm;
            let mut sorted = logs.clone();
            sorted.sort_by(|a, b| a.total_cmp(b));
            let med = sorted[sorted.len() / 2];
            supercritical.push(SupercriticalRow {
                beta,
                log_reference: log_ref,
                median_log_z: med,
                mean_log_z: mean_estimate(&logs).mean,
                median_ratio: (med - log_ref).exp(),
            });
        }
        if beta > 0.0 {
            let mesh = if beta > bc { supercritical_weights(t, theta, MESH_A) } else { subcritical_weights(beta, t, theta, MESH_A) };
            for (j, &(lo, hi, aj)) in mesh.iter().enumerate() {
                let g = gaussian_layer_integral(beta, t, lo, hi);
                let is: Vec<f64> = ws.iter().map(|w| beta * w.layered(beta, lo, hi)).collect();
                let holds = is.iter().filter(|&&i| i <= aj * g).count();
                mesh_rows.push(MeshRow {
                    beta,
                    j,
                    v_lo: lo,
                    v_hi: hi,
                    a_j: aj,
                    gaussian_integral: g,
                    mean_i: mean_estimate(&is).mean,
                    holds_freq: holds as f64 / is.len() as f64,
                });
            }
        }
        results.push(ShortIntervalResult {
            big_t,
            theta,
            beta: Some(beta),
            per_window: z,
            centers: ws.iter().map(|w| w.center).collect(),
            level_set: level_set.clone(),
            m_t,
            beta_c: bc,
            grid,
            seed,
        });
    }
    let e_freq = ws.iter().filter(|w| w.max() <= m_t + MESH_A).count() as f64 / ws.len().max(1) as f64;
    let positive: Vec<(f64, f64)> = beta_grid.iter().zip(&f).filter(|(b, _)| **b > 0.0).map(|(b, v)| (*b, *v)).collect();
    let freezing = if positive.len() >= 3 {
        let (b, v): (Vec<f64>, Vec<f64>) = positive.into_iter().unzip();
        Some(fit_freezing(&b, &v, theta)?)
    } else {
        None
    };
    Ok(ShortMoments { results, subcritical, supercritical, mesh: mesh_rows, e_freq, freezing })
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalRow {
    pub y: f64,
    pub level_set: f64,
    pub stderr: f64,
    /// |y| e^{-2y} e^{-y²/(2t)}.
    pub shape: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalReport {
    pub big_t: f64,
    pub t: f64,
    /// t - (3/4) log t.
    pub m_t: f64,
    pub rows: Vec<CriticalRow>,
    /// Mean over windows of 𝒵_2 √t / e^t.
    pub z2_scaled: f64,
    pub z2_scaled_stderr: f64,
    pub n_windows: usize,
    pub seed: u64,
}

pub fn critical_check(big_t: f64, y_grid: &[f64], n_windows: usize, seed: u64, grid_a: f64) -> Result<CriticalReport> {
    let t = loglog(big_t);
    let grid = window_grid(big_t, 0.0, grid_a);
    let ws = windows(big_t, &grid, n_windows, seed)?;
    let m_t = t - 0.75 * t.ln();
    let rows = y_grid
        .iter()
        .map(|&y| {
            let s: Vec<f64> = ws.iter().map(|w| w.level_set(m_t + y)).collect();
            let e = mean_estimate(&s);
            CriticalRow { y, level_set: e.mean, stderr: e.stderr, shape: y.abs() * (-2.0 * y - y * y / (2.0 * t)).exp() }
        })
        .collect();
    let scale = t.sqrt() / t.exp();
    let z: Vec<f64> = ws.iter().map(|w| w.z_beta(2.0) * scale).collect();
    let e = mean_estimate(&z);
    Ok(CriticalReport { big_t, t, m_t, rows, z2_scaled: e.mean, z2_scaled_stderr: e.stderr, n_windows, seed })
}

// ---------------------------------------------------------------------------
// event ladder

#[derive(Debug, Clone, Serialize)]
pub struct PieceRow {
    /// "first", "middle", "last".
    pub piece: String,
    pub level: usize,
    pub count: usize,
    pub p_hat: f64,
    pub upper95: f64,
    /// e^{-V²/t}/√t.
    pub reference: f64,
    pub iter_log: f64,
    /// -log(p̂/reference)/log(log_ℓ t), when defined.
    pub implied_delta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub big_t: f64,
    pub alpha: f64,
    pub v: f64,
    pub l_count: usize,
    pub partition: PartitionReport,
    pub pieces: Vec<PieceRow>,
    pub n_samples: usize,
    pub seed: u64,
    pub profile: String,
}

/// Primes and Ω caps per ladder level, reused across heights.
struct LevelPlan {
    blocks: Vec<PrimeBlock>,
    caps: Vec<usize>,
}

impl LevelPlan {
    fn new(cfg: &LadderConfig, max_tau: f64) -> Result<Self> {
        let mut blocks = Vec::new();
        let mut caps = Vec::new();
        for l in 1..=cfg.l_count {
            blocks.push(PrimeBlock::from_range(&level_range(cfg, l)?, max_tau > DD_PHASE_THRESHOLD)?);
            caps.push(MollifierSpec::for_level(cfg, l)?.omega_cap.min(usize::MAX as u64) as usize);
        }
        Ok(Self { blocks, caps })
    }

    fn inputs(&self, tau: f64, zeta_abs: f64) -> Vec<ladder::LevelInputs> {
        let mut s = 0.0;
        let mut mollified = zeta_abs;
        self.blocks
            .iter()
            .zip(&self.caps)
            .map(|(b, &cap)| {
                let v = b.level_values(tau, cap);
                s += v.ds_tilde.re;
                mollified *= v.mollifier.norm();
                ladder::LevelInputs {
                    s,
                    increment_abs: v.ds_tilde.norm(),
                    zeta_damped: zeta_abs * (-s).exp(),
                    zeta_mollified: mollified,
                }
            })
            .collect()
    }
}

pub fn event_traces(
    big_t: f64,
    cfg: &LadderConfig,
    params: &BarrierParams<f64>,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<ladder::EventTrace>> {
    let plan = LevelPlan::new(cfg, 2.0 * big_t)?;
    let cor = corridor(cfg, params);
    let heights = sample_tau(big_t, n_samples, seed)?;
    par_map(n_samples, |i| {
        let h = heights[i];
        let z = zeta_critical(&h)?;
        let la = log_abs_zeta(&h)?.or_neg_inf();
        let levels = plan.inputs(h.t, z.abs());
        ladder::classify(h.t, la, &levels, cfg, params, &cor)
    })
    .into_iter()
    .collect()
}

pub fn event_pipeline(
    big_t: f64,
    alpha: f64,
    n_samples: usize,
    seed: u64,
    ledger: &ConstantsLedger,
) -> Result<PipelineReport> {
    let t = loglog(big_t);
    let v = alpha * t;
    let cfg = ladder::build_ladder(big_t, alpha, v, ledger)?;
    let params = ladder::barrier_params(&alpha, ledger)?;
    let traces = event_traces(big_t, &cfg, &params, n_samples, seed)?;
    let partition = decompose(&traces, cfg.l_count)?;
    let reference = gaussian_tail_ref(v, t);
    let n = traces.len();
    let row = |piece: &str, level: usize, count: usize| {
        let p = proportion(count, n);
        let il = cfg.iter_log(level.min(cfg.l_count));
        PieceRow {
            piece: piece.to_string(),
            level,
            count,
            p_hat: p.p_hat,
            upper95: p.upper95,
            reference,
            iter_log: il,
            implied_delta: if count > 0 && il > 1.0 { -(p.p_hat / reference).ln() / il.ln() } else { f64::NAN },
        }
    };
    let mut pieces = vec![row("first", 0, partition.first)];
    for (k, &c) in partition.middle.iter().enumerate() {
        pieces.push(row("middle", k + 1, c));
    }
    pieces.push(row("last", cfg.l_count, partition.last));
    Ok(PipelineReport {
        big_t,
        alpha,
        v,
        l_count: cfg.l_count,
        partition,
        pieces,
        n_samples: n,
        seed,
        profile: ledger.profile.to_string(),
    })
}

/// Law of the increments fed to the inclusion check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum IncrementSource {
    /// Block sums 𝒴_j of the random model.
    Model,
    /// Independent N(κΔ_j, Δ_j/2): the Gaussian surrogate tilted to the
    /// corridor midline, for ladders whose primes are out of reach.
    TiltedGaussian,
}

#[derive(Debug, Clone, Serialize)]
pub struct InclusionReport {
    pub source: IncrementSource,
    pub t: f64,
    pub ell: usize,
    pub w: f64,
    /// Σ_{j<=ℓ} 1/Δ_j; the inclusion is only guaranteed when it is <= 1,
    /// since the grid rounding of ℓ coordinates must fit in the ±1 slack.
    pub inverse_width_sum: f64,
    pub n_tuples: usize,
    pub tuple_bound_violations: usize,
    pub attempts: usize,
    pub accepted: usize,
    pub violations: usize,
    /// Increments of the first few uncovered samples.
    pub violation_examples: Vec<Vec<f64>>,
}

/// Draws increments (y_1..y_ℓ), keeps those with S_{t_j} ∈ [L_j, U_j] for
/// j <= ℓ and S_{t_ℓ} ∈ (w, w+1], and checks each kept tuple lies in the
/// cell of an emitted grid tuple.
pub fn inclusion_check(
    cfg: &LadderConfig,
    params: &BarrierParams<f64>,
    ell: usize,
    w: f64,
    source: IncrementSource,
    n_target: usize,
    max_attempts: usize,
    seed: u64,
) -> Result<InclusionReport> {
    let ts = ladder::tuple_set(ell, w, cfg, params)?;
    let index = ts.index();
    let cor = corridor(cfg, params);
    let blocks: Vec<ModelBlock> = match source {
        IncrementSource::Model => (1..=ell).map(|j| ModelBlock::from_ladder(j, cfg)).collect::<Result<_>>()?,
        IncrementSource::TiltedGaussian => Vec::new(),
    };
    let draw = |i: usize| -> Vec<f64> {
        match source {
            IncrementSource::Model => {
                let a = PhaseAssignment::for_sample(seed, i as u64);
                blocks.iter().map(|b| b.sample(&a)).collect()
            }
            IncrementSource::TiltedGaussian => {
                let mut g = rng::stream(seed, i as u64);
                (1..=ell)
                    .map(|j| {
                        let d = cfg.width(j);
                        let n = Normal::new(cfg.kappa * d, (0.5 * d).sqrt()).expect("positive width");
                        n.inverse_cdf(g.random::<f64>().clamp(1e-300, 1.0 - 1e-16))
                    })
                    .collect()
            }
        }
    };
    let keep = |ys: &[f64]| -> bool {
        let mut s = 0.0;
        for (k, &y) in ys.iter().enumerate() {
            s += y;
            if s < cor.lower[k + 1] || s > cor.upper[k + 1] {
                return false;
            }
        }
        s > w && s <= w + 1.0
    };
    let mut accepted = 0;
    let mut violations = 0;
    let mut examples = Vec::new();
    let mut attempts = 0;
    let batch = 4096;
    while accepted < n_target && attempts < max_attempts {
        let m = batch.min(max_attempts - attempts);
        let start = attempts;
        let drawn: Vec<Option<(bool, Vec<f64>)>> = par_map(m, |k| {
            let ys = draw(start + k);
            keep(&ys).then(|| (ts.covers(&index, &ys), ys))
        });
        attempts += m;
        for (covered, ys) in drawn.into_iter().flatten() {
            if accepted == n_target {
                break;
            }
            accepted += 1;
            if !covered {
                violations += 1;
                if examples.len() < 10 {
                    examples.push(ys);
                }
            }
        }
    }
    Ok(InclusionReport {
        source,
        t: cfg.t,
        ell,
        w,
        inverse_width_sum: ts.widths.iter().map(|d| 1.0 / d).sum(),
        n_tuples: ts.tuples.len(),
        tuple_bound_violations: ts.bound_violations,
        attempts,
        accepted,
        violations,
        violation_examples: examples,
    })
}
