//! Band-limited majorant G of an interval indicator, built as the indicator
//! of a slightly enlarged interval convolved with K(y) ∝ sinc(πλy)^{2m}, and
//! its truncated-exponential Dirichlet polynomial 𝒟.
//!
//! K̂ is the cardinal B-spline of order 2m stretched to [-band, band], so Ĝ
//! vanishes outside the band and 0 <= G <= 1 holds exactly.

use crate::error::{Error, Result};
use crate::ledger::{ConstantsLedger, Profile};
use crate::model::ModelBlock;
use crate::stats::{mean_estimate, par_map, proportion, Proportion};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::{E, PI};

const GL_NODES: usize = 16;
/// Kernel mass ignored past the last tabulated panel.
const TAIL_TARGET: f64 = 1e-22;
const MAX_PANELS: usize = 2_000_000;
/// Largest admissible ln|c_k| before the coefficient table is refused.
const MAX_LOG_COEFF: f64 = 700.0;
const SANDWICH_GRID: usize = 1000;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn gl() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: std::sync::OnceLock<(Vec<f64>, Vec<f64>)> = std::sync::OnceLock::new();
    GL.get_or_init(|| gauss_legendre(GL_NODES))
}

/// Centred cardinal B-spline of order n (support [-n/2, n/2], unit mass).
pub fn bspline(n: usize, x: f64) -> f64 {
    if x.abs() >= n as f64 / 2.0 {
        return 0.0;
    }
    let mut vals: Vec<f64> = (0..n)
        .map(|i| {
            let y = x - (n as f64 - 1.0) / 2.0 + i as f64;
            if (-0.5..0.5).contains(&y) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    for k in 2..=n {
        let half = (n - k) as f64 / 2.0;
        vals = (0..=(n - k))
            .map(|i| {
                let y = x - half + i as f64;
                let kf = k as f64;
                ((kf / 2.0 + y) * vals[i + 1] + (kf / 2.0 - y) * vals[i]) / (kf - 1.0)
            })
            .collect();
    }
    vals[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelShape {
    /// K̂ is supported on [-band, band].
    pub band: f64,
    /// K ∝ sinc^{2m}.
    pub order: usize,
}

impl KernelShape {
    /// Full band, with m minimising the envelope (m/(πΛy))^{2m} at y = ε/2.
    pub fn sharpest(band: f64, eps: f64) -> Self {
        let m = (PI * band * eps / (2.0 * E)).round().max(3.0) as usize;
        Self { band, order: m }
    }

    fn lambda(&self) -> f64 {
        self.band / self.order as f64
    }
}

/// Cumulative tail masses of K at uniform panel boundaries.
#[derive(Debug, Clone)]
struct KernelTable {
    lambda: f64,
    two_m: i32,
    norm: f64,
    h: f64,
    /// tails[k] = ∫_{k h}^∞ K.
    tails: Vec<f64>,
}

impl KernelTable {
    fn new(shape: KernelShape) -> Result<Self> {
        let m = shape.order;
        let lambda = shape.lambda();
        let b0 = bspline(2 * m, 0.0);
        let norm = lambda / b0;
        let two_m = 2 * m as i32;
        let sigma = (3.0 / (2.0 * m as f64)).sqrt() / (PI * lambda);
        let h = (0.5 / lambda).min(0.5 * sigma);
        // ∫_R^∞ K <= norm (πλ)^{-2m} R^{1-2m} / (2m-1)
        let mf = two_m as f64;
        let r = ((norm / ((mf - 1.0) * TAIL_TARGET)).ln() / (mf - 1.0) - mf / (mf - 1.0) * (PI * lambda).ln()).exp();
        let n = (r / h).ceil() as usize + 1;
        if n > MAX_PANELS {
            return Err(Error::Resource(format!(
                "kernel of order {m} needs {n} quadrature panels (cap {MAX_PANELS}); raise the order"
            )));
        }
        let mut t = Self { lambda, two_m, norm, h, tails: vec![0.0; n + 1] };
        let mut acc = 0.0;
        let mut comp = 0.0;
        for k in (0..n).rev() {
            let piece = t.panel(k as f64 * h, (k + 1) as f64 * h);
            let y = piece - comp;
            let s = acc + y;
            comp = (s - acc) - y;
            acc = s;
            t.tails[k] = acc;
        }
        Ok(t)
    }

    #[inline]
    fn k(&self, y: f64) -> f64 {
        let u = PI * self.lambda * y;
        let s = if u == 0.0 { 1.0 } else { u.sin() / u };
        self.norm * s.powi(self.two_m)
    }

    fn panel(&self, a: f64, b: f64) -> f64 {
        let (x, w) = gl();
        let c = 0.5 * (a + b);
        let hw = 0.5 * (b - a);
        x.iter().zip(w).map(|(&xi, &wi)| wi * self.k(c + hw * xi)).sum::<f64>() * hw
    }

    /// ∫_s^∞ K for s >= 0.
    fn tail(&self, s: f64) -> f64 {
        let k = (s / self.h).ceil() as usize;
        if k >= self.tails.len() {
            return 0.0;
        }
        self.tails[k] + self.panel(s, k as f64 * self.h)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyResiduals {
    /// min G on the grid (>= -1e-12 required).
    pub min_g: f64,
    /// max G on the grid (<= 1 + 1e-12 required).
    pub max_g: f64,
    /// ∫|Ĝ| by quadrature.
    pub l1_fourier: f64,
    /// 2 · band limit.
    pub l1_bound: f64,
    /// |Ĝ| just outside the band (zero by construction).
    pub outside_band: f64,
    /// max over [0, Δ^{-1}] of (1/G - 1) e^{Δ^{A-1}}.
    pub c_lower: f64,
    /// max outside the enlarged interval of G e^{Δ^{A-1}}.
    pub c_upper: f64,
    /// 1 - 2∫_0^∞ K, a check of the B-spline normalisation.
    pub kernel_mass_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MajorantSpec {
    pub delta: f64,
    pub a: f64,
    pub nu: u64,
    pub band_limit: f64,
    pub kernel: KernelShape,
    /// Enlarged interval [lo, hi] = [-ε/2, Δ^{-1} + ε/2], ε = Δ^{-A/2}.
    pub lo: f64,
    pub hi: f64,
    pub eps: f64,
    /// e^{-Δ^{A-1}}.
    pub decay: f64,
    pub residuals: PropertyResiduals,
    #[serde(skip)]
    table: KernelTable,
    #[serde(skip)]
    nodes: Vec<(f64, f64)>,
}

pub fn build_majorant(delta: f64, a: f64, ledger: &ConstantsLedger) -> Result<MajorantSpec> {
    let band = delta.powf(ledger.band_exponent * a);
    let eps = delta.powf(-a / 2.0);
    build_majorant_with(delta, a, ledger, KernelShape::sharpest(band, eps))
}

pub fn build_majorant_with(delta: f64, a: f64, ledger: &ConstantsLedger, kernel: KernelShape) -> Result<MajorantSpec> {
    let min_a = if ledger.profile == Profile::Paper { 10.0 } else { 1.0 };
    if !(delta >= 3.0) || !(a >= min_a) {
        return Err(Error::Config(format!("need Δ >= 3 and A >= {min_a}, got Δ = {delta}, A = {a}")));
    }
    let band_limit = delta.powf(ledger.band_exponent * a);
    let nu_real = delta.powf(ledger.nu_exponent * a).ceil();
    if !band_limit.is_finite() || band_limit > 1e6 || nu_real > 1e12 {
        return Err(Error::Resource(format!(
            "band limit {band_limit:e} and ν = {nu_real:e} are not representable; use the desk ledger"
        )));
    }
    if !(kernel.band > 0.0 && kernel.band <= band_limit && kernel.order >= 1) {
        return Err(Error::Config(format!("kernel band {} must lie in (0, {band_limit}]", kernel.band)));
    }
    let eps = delta.powf(-a / 2.0);
    let table = KernelTable::new(kernel)?;
    let nodes = fourier_nodes(kernel);
    let mut spec = MajorantSpec {
        delta,
        a,
        nu: nu_real as u64,
        band_limit,
        kernel,
        lo: -eps / 2.0,
        hi: 1.0 / delta + eps / 2.0,
        eps,
        decay: (-delta.powf(a - 1.0)).exp(),
        residuals: PropertyResiduals {
            min_g: 0.0,
            max_g: 0.0,
            l1_fourier: 0.0,
            l1_bound: 2.0 * band_limit,
            outside_band: 0.0,
            c_lower: 0.0,
            c_upper: 0.0,
            kernel_mass_defect: 1.0 - 2.0 * table.tails[0],
        },
        table,
        nodes,
    };
    spec.residuals.l1_fourier = spec.nodes.iter().map(|&(xi, w)| w * spec.g_hat(xi).norm()).sum();
    spec.residuals.outside_band = spec.g_hat(kernel.band * (1.0 + 1e-9)).norm();
    let grid = spec.check_grid(4001);
    spec.residuals.min_g = grid.iter().map(|&x| spec.g(x)).fold(f64::INFINITY, f64::min);
    spec.residuals.max_g = grid.iter().map(|&x| spec.g(x)).fold(f64::NEG_INFINITY, f64::max);
    let inner = 1.0 / delta;
    let mut c_lower: f64 = 0.0;
    for i in 0..=4000 {
        let x = inner * i as f64 / 4000.0;
        c_lower = c_lower.max(spec.one_minus_g(x) / spec.g(x));
    }
    let mut c_upper: f64 = 0.0;
    for &x in &grid {
        if !spec.in_enlarged(x) {
            c_upper = c_upper.max(spec.g(x));
        }
    }
    spec.residuals.c_lower = c_lower / spec.decay;
    spec.residuals.c_upper = c_upper / spec.decay;
    let r = &spec.residuals;
    if r.min_g < -1e-12 || r.max_g > 1.0 + 1e-12 {
        return Err(Error::Internal(format!("property 2 failed: G range [{}, {}]", r.min_g, r.max_g)));
    }
    if r.l1_fourier > r.l1_bound {
        return Err(Error::Internal(format!("property 5 failed: ∫|Ĝ| = {} > {}", r.l1_fourier, r.l1_bound)));
    }
    if r.outside_band != 0.0 {
        return Err(Error::Internal(format!("property 1 failed: |Ĝ| = {} outside the band", r.outside_band)));
    }
    Ok(spec)
}

/// Gauss nodes on each B-spline knot interval of K̂, subdivided for the
/// oscillation of the interval transform.
fn fourier_nodes(k: KernelShape) -> Vec<(f64, f64)> {
    let (x, w) = gl();
    let lambda = k.lambda();
    let sub = (2.0 * lambda).ceil().max(2.0) as usize;
    let mut out = Vec::new();
    for j in 0..2 * k.order {
        let a = -k.band + j as f64 * lambda;
        let step = lambda / sub as f64;
        for s in 0..sub {
            let lo = a + s as f64 * step;
            let c = lo + 0.5 * step;
            for (xi, wi) in x.iter().zip(w) {
                out.push((c + 0.5 * step * xi, 0.5 * step * wi));
            }
        }
    }
    out
}

impl MajorantSpec {
    fn check_grid(&self, n: usize) -> Vec<f64> {
        let w = 1.0 / self.delta + 2.0;
        (0..n).map(|i| -1.0 + w * i as f64 / (n - 1) as f64).collect()
    }

    /// G(x) = ∫_{x-hi}^{x-lo} K.
    pub fn g(&self, x: f64) -> f64 {
        let lo = x - self.hi;
        let hi = x - self.lo;
        if lo >= 0.0 {
            self.table.tail(lo) - self.table.tail(hi)
        } else if hi <= 0.0 {
            self.table.tail(-hi) - self.table.tail(-lo)
        } else {
            1.0 - self.one_minus_g(x)
        }
    }

    /// 1 - G(x), accurate when G is close to 1.
    pub fn one_minus_g(&self, x: f64) -> f64 {
        let lo = x - self.hi;
        let hi = x - self.lo;
        if lo < 0.0 && hi > 0.0 {
            self.table.tail(-lo) + self.table.tail(hi)
        } else {
            1.0 - self.g(x)
        }
    }

    pub fn kernel_hat(&self, xi: f64) -> f64 {
        let m2 = 2 * self.kernel.order;
        bspline(m2, xi / self.kernel.lambda()) / bspline(m2, 0.0)
    }

    /// Ĝ(ξ) = K̂(ξ) ∫_lo^hi e^{-2πiξx} dx.
    pub fn g_hat(&self, xi: f64) -> Complex64 {
        if xi.abs() >= self.kernel.band {
            return Complex64::new(0.0, 0.0);
        }
        let len = self.hi - self.lo;
        let mid = 0.5 * (self.hi + self.lo);
        let u = PI * xi * len;
        let sinc = if u == 0.0 { 1.0 } else { u.sin() / u };
        Complex64::from_polar(len * sinc * self.kernel_hat(xi), -2.0 * PI * xi * mid)
    }

    /// G(x) through its Fourier integral, an independent route to `g`.
    pub fn g_fourier(&self, x: f64) -> f64 {
        self.nodes
            .iter()
            .map(|&(xi, w)| w * (self.g_hat(xi) * Complex64::from_polar(1.0, 2.0 * PI * xi * x)))
            .sum::<Complex64>()
            .re
    }

    pub fn indicator(&self, x: f64) -> bool {
        (0.0..=1.0 / self.delta).contains(&x)
    }

    pub fn in_enlarged(&self, x: f64) -> bool {
        x >= -self.eps && x <= 1.0 / self.delta + self.eps
    }
}

/// Σ_{k>ν} z^k / k! for z = iy.
fn exp_remainder(nu: u64, y: f64) -> Complex64 {
    let z = Complex64::new(0.0, y);
    let ay = y.abs();
    if ay == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let n1 = (nu + 1) as f64;
    if ay < n1 + 1.0 {
        let ln_mag = n1 * ay.ln() - ln_factorial(nu + 1);
        if ln_mag < -745.0 {
            return Complex64::new(0.0, 0.0);
        }
        // i^{ν+1} sign(y)^{ν+1}
        let quarter = ((nu + 1) % 4) as f64;
        let sgn = if y < 0.0 && (nu + 1) % 2 == 1 { -1.0 } else { 1.0 };
        let mut term = Complex64::from_polar(sgn * ln_mag.exp(), quarter * PI / 2.0);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut k = nu + 1;
        loop {
            sum += term;
            k += 1;
            term = term * z / k as f64;
            if term.norm() <= 1e-17 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        let mut term = Complex64::new(1.0, 0.0);
        let mut part = term;
        for k in 1..=nu {
            term = term * z / k as f64;
            part += term;
        }
        Complex64::from_polar(1.0, y) - part
    }
}

fn ln_factorial(n: u64) -> f64 {
    crate::stats::ln_factorial(n)
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationPolynomial {
    pub nu: u64,
    /// c_k = (2πi)^k/k! ∫ξ^k Ĝ for k until they underflow; later ones are 0.
    pub coeffs: Vec<Complex64>,
    /// ln of (100^ν/ν^ν) Δ^{3Aν}.
    pub ln_error_bound: f64,
    /// ln of (2π)^ν/ν! · 2Δ^{2A(ν+1)}.
    pub ln_error_bound_sharp: f64,
    /// max over [0, Δ^{-1}] of (1/|𝒟|² - 1) e^{Δ^{A-1}}, with a rounding floor.
    pub c_sandwich: f64,
}

pub fn truncate(spec: &MajorantSpec, nu: u64) -> Result<TruncationPolynomial> {
    let band = spec.kernel.band;
    let y_max = 2.0 * PI * band / spec.delta;
    if y_max >= (nu + 2) as f64 {
        return Err(Error::Precondition(format!(
            "ν = {nu} leaves the exponential tail unbounded on [0, Δ^-1]; need ν + 2 > 2π·band/Δ = {y_max:.1}"
        )));
    }
    // largest k with (2π band)^k / k! · ∫|Ĝ| above the f64 floor
    let l1 = spec.residuals.l1_fourier.max(1e-300);
    let ln_rate = (2.0 * PI * band).ln();
    let mut kmax = 0u64;
    let mut peak: f64 = 0.0;
    while kmax < nu {
        let next = kmax + 1;
        let lm = next as f64 * ln_rate - ln_factorial(next) + l1.ln();
        peak = peak.max(lm);
        if lm < -745.0 && next as f64 > 2.0 * PI * band {
            break;
        }
        kmax = next;
    }
    if peak > MAX_LOG_COEFF {
        return Err(Error::Resource(format!("coefficients reach e^{peak:.0}; use the desk ledger")));
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); kmax as usize + 1];
    for &(xi, w) in &spec.nodes {
        let gh = spec.g_hat(xi) * w;
        if gh.norm() == 0.0 {
            continue;
        }
        let ln_x = (2.0 * PI * xi.abs()).ln();
        let sign = if xi < 0.0 { -1.0 } else { 1.0 };
        for (k, c) in coeffs.iter_mut().enumerate() {
            let lm = if k == 0 { 0.0 } else { k as f64 * ln_x - ln_factorial(k as u64) };
            if lm < -745.0 && k > 0 {
                continue;
            }
            let s = if k % 2 == 1 { sign } else { 1.0 };
            *c += gh * Complex64::from_polar(s * lm.exp(), (k % 4) as f64 * PI / 2.0);
        }
    }
    let nuf = nu as f64;
    let lnd = spec.delta.ln();
    let mut poly = TruncationPolynomial {
        nu,
        coeffs,
        ln_error_bound: nuf * 100f64.ln() - nuf * nuf.max(1.0).ln() + 3.0 * spec.a * nuf * lnd,
        ln_error_bound_sharp: nuf * (2.0 * PI).ln() - ln_factorial(nu) + 2f64.ln() + 2.0 * spec.a * (nuf + 1.0) * lnd,
        c_sandwich: 0.0,
    };
    let inner = 1.0 / spec.delta;
    let worst = par_map(SANDWICH_GRID + 1, |i| {
        let x = inner * i as f64 / SANDWICH_GRID as f64;
        1.0 / poly.eval(spec, x).norm_sqr() - 1.0
    })
    .into_iter()
    .fold(0.0f64, f64::max);
    poly.c_sandwich = (worst + 8.0 * f64::EPSILON) / spec.decay;
    Ok(poly)
}

impl TruncationPolynomial {
    /// 𝒟(x) = G(x) - ∫Ĝ(ξ) R_ν(2πiξx) dξ, R_ν the exponential tail.
    pub fn eval(&self, spec: &MajorantSpec, x: f64) -> Complex64 {
        let g = Complex64::new(spec.g(x), 0.0);
        if self.remainder_bound(spec, x) < 1e-18 {
            return g;
        }
        let corr: Complex64 = spec
            .nodes
            .iter()
            .map(|&(xi, w)| spec.g_hat(xi) * exp_remainder(self.nu, 2.0 * PI * xi * x) * w)
            .sum();
        g - corr
    }

    /// Upper bound for |𝒟(x) - G(x)|.
    pub fn remainder_bound(&self, spec: &MajorantSpec, x: f64) -> f64 {
        let y = 2.0 * PI * spec.kernel.band * x.abs();
        let n1 = (self.nu + 1) as f64;
        if y == 0.0 {
            return 0.0;
        }
        if y >= n1 + 1.0 {
            return f64::INFINITY;
        }
        let ln = n1 * y.ln() - ln_factorial(self.nu + 1) - (1.0 - y / (n1 + 1.0)).ln();
        spec.residuals.l1_fourier * ln.exp()
    }

    /// Σ c_k x^k by Horner; accurate only while the terms do not cancel.
    pub fn eval_coeffs(&self, x: f64) -> Complex64 {
        let top = (self.nu as usize).min(self.coeffs.len() - 1);
        self.coeffs[..=top].iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichViolation {
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub n_points: usize,
    pub c: f64,
    pub violations: Vec<SandwichViolation>,
}

/// 1(x ∈ [0, Δ^{-1}]) <= |𝒟(x)|² (1 + c e^{-Δ^{A-1}}) at each x.
pub fn sandwich_check(spec: &MajorantSpec, poly: &TruncationPolynomial, xs: &[f64]) -> SandwichReport {
    let factor = 1.0 + poly.c_sandwich * spec.decay;
    let rows: Vec<Option<SandwichViolation>> = par_map(xs.len(), |i| {
        let x = xs[i];
        let lhs = if spec.indicator(x) { 1.0 } else { 0.0 };
        if lhs == 0.0 {
            return None;
        }
        let rhs = poly.eval(spec, x).norm_sqr() * factor;
        (lhs > rhs).then_some(SandwichViolation { x, lhs, rhs })
    });
    SandwichReport { n_points: xs.len(), c: poly.c_sandwich, violations: rows.into_iter().flatten().collect() }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReverseReport {
    pub u: f64,
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub p_enlarged: f64,
    pub rhs: f64,
    /// stderr of the per-sample difference |𝒟|² - 1(enlarged).
    pub diff_stderr: f64,
    /// max of |𝒟|² e^{Δ^{A-1}} off the enlarged interval, over the sample range.
    pub c_reverse: f64,
    pub holds: bool,
    /// P̂(|𝒴 - u| > Δ^{6A}).
    pub chernoff_tail: Proportion,
    pub n_samples: usize,
    pub seed: u64,
}

/// Measured c with |𝒟(x)|² <= 1(x ∈ enlarged) + c e^{-Δ^{A-1}} on a grid
/// covering the given points.
pub fn reverse_constant(spec: &MajorantSpec, poly: &TruncationPolynomial, xs: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = xs.fold((-1.0f64, 1.0f64), |(a, b), x| (a.min(x), b.max(x)));
    let n = 2000;
    par_map(n + 1, |i| {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        if spec.in_enlarged(x) {
            0.0
        } else {
            poly.eval(spec, x).norm_sqr()
        }
    })
    .into_iter()
    .fold(0.0f64, f64::max)
        / spec.decay
}

/// E|𝒟(𝒴-u)|² against P(𝒴-u ∈ enlarged) + c e^{-Δ^{A-1}}.
pub fn reverse_check(
    spec: &MajorantSpec,
    poly: &TruncationPolynomial,
    block: &ModelBlock,
    u: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ReverseReport> {
    if u.abs() >= 4.0 * spec.delta + 2.0 {
        return Err(Error::Precondition(format!("|u| = {} must be below 4Δ + 2 = {}", u.abs(), 4.0 * spec.delta + 2.0)));
    }
    let ys = block.samples(n_samples, seed);
    let d2: Vec<f64> = par_map(ys.len(), |i| poly.eval(spec, ys[i] - u).norm_sqr());
    let ind: Vec<f64> = ys.iter().map(|&y| if spec.in_enlarged(y - u) { 1.0 } else { 0.0 }).collect();
    let diff: Vec<f64> = d2.iter().zip(&ind).map(|(a, b)| a - b).collect();
    let l = mean_estimate(&d2);
    let p = mean_estimate(&ind).mean;
    let de = mean_estimate(&diff);
    let c_reverse = reverse_constant(spec, poly, ys.iter().map(|y| y - u));
    let rhs = p + c_reverse * spec.decay;
    let far = spec.delta.powf(6.0 * spec.a);
    let tail_hits = ys.iter().filter(|&&y| (y - u).abs() > far).count();
    Ok(ReverseReport {
        u,
        lhs: l.mean,
        lhs_stderr: l.stderr,
        p_enlarged: p,
        rhs,
        diff_stderr: de.stderr,
        c_reverse,
        holds: l.mean <= rhs + 3.0 * de.stderr,
        chernoff_tail: proportion(tail_hits, ys.len()),
        n_samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        let s: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(30)).sum();
        assert!((s - 2.0 / 31.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn bspline_known_values() {
        assert_eq!(bspline(1, 0.2), 1.0);
        assert!((bspline(2, 0.25) - 0.75).abs() < 1e-15);
        // cubic B-spline at the centre is 2/3
        assert!((bspline(4, 0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(bspline(4, 2.0), 0.0);
    }

    #[test]
    fn remainder_series_matches_direct_difference() {
        for &(nu, y) in &[(5u64, 0.7), (10, 3.0), (20, -4.5)] {
            let z = Complex64::new(0.0, y);
            let mut part = Complex64::new(0.0, 0.0);
            let mut term = Complex64::new(1.0, 0.0);
            for k in 0..=nu {
                if k > 0 {
                    term = term * z / k as f64;
                }
                part += term;
            }
            let direct = z.exp() - part;
            assert!((exp_remainder(nu, y) - direct).norm() < 1e-13, "nu {nu} y {y}");
        }
    }
}
