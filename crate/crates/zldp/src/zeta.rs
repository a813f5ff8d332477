//! ζ(1/2+it): Riemann–Siegel with corrections C0..C4, Euler–Maclaurin as the
//! checked evaluator, and uniform height sampling.

use crate::dd::{DD, TWO_PI};
use crate::error::{domain, resource, Result};
use crate::rng;
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

pub const MAX_HEIGHT: f64 = 1e13;
pub const MIN_HEIGHT: f64 = 2.0;
/// Riemann–Siegel is used from here up; below, Euler–Maclaurin.
pub const RS_THRESHOLD: f64 = 200.0;
/// The checked profile keeps Euler–Maclaurin up to this height.
pub const CHECKED_EM_LIMIT: f64 = 1e5;
/// Above this height phases are formed in double-double.
pub const DD_THRESHOLD: f64 = 1e8;
pub const NEAR_ZERO_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Fast,
    Checked,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Height {
    pub t: f64,
    pub precision: Precision,
}

impl Height {
    pub fn fast(t: f64) -> Self {
        Self { t, precision: Precision::Fast }
    }

    pub fn checked(t: f64) -> Self {
        Self { t, precision: Precision::Checked }
    }

    fn validate(&self) -> Result<()> {
        if !self.t.is_finite() {
            return domain(format!("height {} is not finite", self.t));
        }
        if self.t < MIN_HEIGHT {
            return domain(format!("height {} below {MIN_HEIGHT}", self.t));
        }
        if self.t > MAX_HEIGHT {
            return resource(format!("height {:e} above max height {MAX_HEIGHT:e}", self.t));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ZetaValue {
    pub re: f64,
    pub im: f64,
    pub abs_log: f64,
    pub err_bound: f64,
}

impl ZetaValue {
    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn is_near_zero(&self) -> bool {
        self.abs() < self.err_bound.max(NEAR_ZERO_FLOOR)
    }
}

/// log|ζ|, or a flag when |ζ| is below the resolvable threshold.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum LogModulus {
    Finite(f64),
    NearZero { modulus: f64, threshold: f64 },
}

impl LogModulus {
    pub fn value(&self) -> Option<f64> {
        match self {
            LogModulus::Finite(v) => Some(*v),
            LogModulus::NearZero { .. } => None,
        }
    }

    /// Value with near-zero samples sent to -inf, for tail statistics.
    pub fn or_neg_inf(&self) -> f64 {
        self.value().unwrap_or(f64::NEG_INFINITY)
    }

    pub fn is_near_zero(&self) -> bool {
        matches!(self, LogModulus::NearZero { .. })
    }
}

pub fn zeta_critical(h: &Height) -> Result<ZetaValue> {
    h.validate()?;
    let t = h.t;
    let use_em = t < RS_THRESHOLD || (h.precision == Precision::Checked && t < CHECKED_EM_LIMIT);
    if use_em {
        let (z, err) = euler_maclaurin(t);
        return Ok(ZetaValue { re: z.re, im: z.im, abs_log: z.norm().ln(), err_bound: err });
    }
    let (z, err) = riemann_siegel(t);
    let th = theta(t);
    // ζ = Z e^{-iθ}
    Ok(ZetaValue {
        re: z * th.cos(),
        im: -z * th.sin(),
        abs_log: z.abs().ln(),
        err_bound: err,
    })
}

pub fn log_abs_zeta(h: &Height) -> Result<LogModulus> {
    let v = zeta_critical(h)?;
    let threshold = v.err_bound.max(NEAR_ZERO_FLOOR);
    let modulus = v.abs();
    Ok(if modulus < threshold {
        LogModulus::NearZero { modulus, threshold }
    } else {
        LogModulus::Finite(v.abs_log)
    })
}

/// n heights uniform on [T, 2T]; sample i depends only on (seed, i).
pub fn sample_tau(big_t: f64, n: usize, seed: u64) -> Result<Vec<Height>> {
    if !(big_t >= 10.0) || !big_t.is_finite() {
        return domain(format!("T = {big_t} must be at least 10"));
    }
    if 2.0 * big_t > MAX_HEIGHT {
        return resource(format!("2T = {:e} exceeds max height", 2.0 * big_t));
    }
    Ok((0..n as u64).map(|i| Height::fast(tau_at(big_t, seed, i))).collect())
}

pub fn tau_at(big_t: f64, seed: u64, i: u64) -> f64 {
    let u: f64 = rng::stream(seed, i).random();
    big_t + big_t * u
}

/// Riemann–Siegel θ(t), not reduced.
pub fn theta(t: f64) -> f64 {
    if t < 50.0 {
        return ln_gamma(Complex64::new(0.25, 0.5 * t)).im - 0.5 * t * PI.ln();
    }
    0.5 * t * (t / (2.0 * PI)).ln() - 0.5 * t - PI / 8.0 + theta_tail(t)
}

fn theta_tail(t: f64) -> f64 {
    let r = 1.0 / t;
    let r2 = r * r;
    r * (1.0 / 48.0 + r2 * (7.0 / 5760.0 + r2 * (31.0 / 80640.0 + r2 * 127.0 / 430080.0)))
}

/// θ(t) in double-double.
pub fn theta_dd(t: f64) -> DD {
    let half_t = 0.5 * t;
    let l = DD::new(t).div(TWO_PI).ln();
    l.mul_f64(half_t) - DD::new(half_t) - TWO_PI.ldexp(-4) + DD::new(theta_tail(t))
}

/// (θ(t) - t log n) mod 2π with double-double intermediates.
pub fn phase_dd(t: f64, ln_n: DD) -> f64 {
    (theta_dd(t) - ln_n.mul_f64(t)).rem_two_pi()
}

/// ln Γ(z) for Re z > 0, continuous branch.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    const SHIFT: usize = 12;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut w = z;
    for _ in 0..SHIFT {
        acc += w.ln();
        w += 1.0;
    }
    // Stirling series, B_2k / (2k(2k-1))
    const C: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360360.0,
        1.0 / 156.0,
        -3617.0 / 122400.0,
    ];
    let inv = 1.0 / w;
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut p = inv;
    for c in C {
        series += p * c;
        p *= inv2;
    }
    (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + series - acc
}

/// Z(t) by Riemann–Siegel with corrections C0..C4, and an error bound.
pub fn riemann_siegel(t: f64) -> (f64, f64) {
    let a = (t / (2.0 * PI)).sqrt();
    let n = a.floor() as usize;
    let p = a - n as f64;
    let mut sum = 0.0;
    let roundoff;
    if t > DD_THRESHOLD {
        let th = theta_dd(t);
        let logs = ln_dd_table(n);
        for k in 1..=n {
            let ph = (th - logs[k].mul_f64(t)).rem_two_pi();
            sum += ph.cos() / (k as f64).sqrt();
        }
        roundoff = 4.0 * (n as f64).sqrt() * 1e-15;
    } else {
        let th = theta(t);
        let tab = log_table(n);
        for k in 1..=n {
            let (ln_k, rsqrt) = tab[k];
            sum += (th - t * ln_k).cos() * rsqrt;
        }
        roundoff = 4.0 * (n as f64).sqrt() * 4.0 * f64::EPSILON * t * t.ln().max(1.0);
    }
    let z0 = 2.0 * sum;
    let w = p - 0.5;
    let c = correction_polys();
    let inv_a = 1.0 / a;
    let mut corr = 0.0;
    let mut scale = 1.0;
    for poly in c.iter() {
        corr += scale * horner(poly, w);
        scale *= inv_a;
    }
    let sign = if (n - 1) % 2 == 0 { 1.0 } else { -1.0 };
    let z = z0 + sign * corr / a.sqrt();
    let trunc = 2e-3 * a.powf(-5.5);
    (z, trunc + roundoff)
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

const PSI_TERMS: usize = 64;

/// Taylor coefficients of Ψ(1/2 + w) = cos(2π(w² - 5/16)) / cos(2π(1/2 + w)),
/// from a trapezoid Cauchy integral on |w| = 1.
fn psi_taylor() -> Vec<f64> {
    const M: usize = 512;
    let mut coef = vec![0.0; PSI_TERMS];
    for m in 0..M {
        let phi = 2.0 * PI * m as f64 / M as f64;
        let w = Complex64::from_polar(1.0, phi);
        let num = (2.0 * PI * (w * w - 5.0 / 16.0)).cos();
        let den = (2.0 * PI * (w + 0.5)).cos();
        let f = num / den;
        for (k, ck) in coef.iter_mut().enumerate() {
            *ck += (f * Complex64::from_polar(1.0, -(k as f64) * phi)).re;
        }
    }
    coef.iter_mut().for_each(|c| *c /= M as f64);
    // the function is even in w and the aliasing noise floor is ~1e-14
    for (k, c) in coef.iter_mut().enumerate() {
        if k % 2 == 1 || c.abs() < 1e-17 {
            *c = 0.0;
        }
    }
    coef
}

fn derivative(coef: &[f64], j: usize) -> Vec<f64> {
    (0..coef.len().saturating_sub(j))
        .map(|i| coef[i + j] * ((i + 1)..=(i + j)).map(|x| x as f64).product::<f64>())
        .collect()
}

fn combine(terms: &[(f64, &[f64])]) -> Vec<f64> {
    let len = terms.iter().map(|(_, c)| c.len()).max().unwrap_or(0);
    let mut out = vec![0.0; len];
    for (w, c) in terms {
        for (o, x) in out.iter_mut().zip(c.iter()) {
            *o += w * x;
        }
    }
    out
}

/// C0..C4 as polynomials in w = p - 1/2.
fn correction_polys() -> &'static [Vec<f64>; 5] {
    static C: OnceLock<[Vec<f64>; 5]> = OnceLock::new();
    C.get_or_init(|| {
        let psi = psi_taylor();
        let d: Vec<Vec<f64>> = (0..=12).map(|j| derivative(&psi, j)).collect();
        let p2 = PI * PI;
        let p4 = p2 * p2;
        let p6 = p4 * p2;
        let p8 = p4 * p4;
        [
            d[0].clone(),
            combine(&[(-1.0 / (96.0 * p2), &d[3])]),
            combine(&[(1.0 / (64.0 * p2), &d[2]), (1.0 / (18432.0 * p4), &d[6])]),
            combine(&[
                (-1.0 / (64.0 * p2), &d[1]),
                (-1.0 / (3840.0 * p4), &d[5]),
                (-1.0 / (5308416.0 * p6), &d[9]),
            ]),
            combine(&[
                (1.0 / (128.0 * p2), &d[0]),
                (19.0 / (24576.0 * p4), &d[4]),
                (11.0 / (5898240.0 * p6), &d[8]),
                (1.0 / (2038431744.0 * p8), &d[12]),
            ]),
        ]
    })
}

/// Shared table of (ln k, k^{-1/2}) for k <= n.
fn log_table(n: usize) -> Arc<Vec<(f64, f64)>> {
    grow_table(
        {
            static T: OnceLock<RwLock<Arc<Vec<(f64, f64)>>>> = OnceLock::new();
            &T
        },
        n,
        |k| {
            let kf = k as f64;
            (kf.ln(), 1.0 / kf.sqrt())
        },
    )
}

/// Shared table of ln k in double-double.
fn ln_dd_table(n: usize) -> Arc<Vec<DD>> {
    grow_table(
        {
            static T: OnceLock<RwLock<Arc<Vec<DD>>>> = OnceLock::new();
            &T
        },
        n,
        |k| if k == 0 { DD::ZERO } else { DD::new(k as f64).ln() },
    )
}

fn grow_table<T: Clone + Send + Sync>(
    cell: &'static OnceLock<RwLock<Arc<Vec<T>>>>,
    n: usize,
    f: impl Fn(usize) -> T,
) -> Arc<Vec<T>> {
    let lock = cell.get_or_init(|| RwLock::new(Arc::new(Vec::new())));
    {
        let cur = lock.read().expect("table lock");
        if cur.len() > n {
            return cur.clone();
        }
    }
    let mut w = lock.write().expect("table lock");
    if w.len() <= n {
        let target = (n + 1).max(2 * w.len());
        let mut v = (**w).clone();
        v.extend((v.len()..target).map(&f));
        *w = Arc::new(v);
    }
    w.clone()
}

/// B_{2k}/(2k)! for k = 1..=K, via ζ(2k).
fn bernoulli_ratios() -> &'static [f64] {
    static B: OnceLock<Vec<f64>> = OnceLock::new();
    B.get_or_init(|| {
        (1..=40)
            .map(|k| {
                let s = 2 * k;
                let z = if k == 1 {
                    PI * PI / 6.0
                } else {
                    let n = 200;
                    let head: f64 = (1..n).map(|m| (m as f64).powi(-(s as i32))).sum();
                    head + (n as f64).powi(1 - s as i32) / (s as f64 - 1.0) + 0.5 * (n as f64).powi(-(s as i32))
                };
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * 2.0 * z / (2.0 * PI).powi(s as i32)
            })
            .collect()
    })
}

/// ζ(1/2+it) by Euler–Maclaurin summation, with an error bound.
pub fn euler_maclaurin(t: f64) -> (Complex64, f64) {
    let s = Complex64::new(0.5, t);
    let n = ((t / PI).ceil() as usize).max(30) + 10;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut comp = Complex64::new(0.0, 0.0);
    for k in 1..n {
        let kf = k as f64;
        let term = Complex64::from_polar(1.0 / kf.sqrt(), -t * kf.ln());
        // Neumaier per component
        let y = term - comp;
        let tt = sum + y;
        comp = (tt - sum) - y;
        sum = tt;
    }
    let nf = n as f64;
    let n_s = Complex64::from_polar(1.0 / nf.sqrt(), -t * nf.ln());
    sum += n_s * nf / (s - 1.0) + 0.5 * n_s;
    let b = bernoulli_ratios();
    // term_k = b_k s(s+1)...(s+2k-2) N^{-s-2k+1}
    let mut poch = s;
    let mut pow = n_s / nf;
    let mut last = f64::INFINITY;
    let mut err = f64::INFINITY;
    for (k, bk) in b.iter().enumerate() {
        let term = poch * pow * *bk;
        let mag = term.norm();
        if mag > last {
            err = last;
            break;
        }
        sum += term;
        last = mag;
        let j = 2.0 * k as f64 + 1.0;
        poch *= (s + j) * (s + j + 1.0);
        pow /= nf * nf;
        if mag < 1e-18 * sum.norm().max(1e-300) {
            err = mag;
            break;
        }
    }
    let roundoff = (n as f64) * 2.0 * f64::EPSILON * (1.0 + t * f64::EPSILON * nf.ln()).max(1.0);
    (sum, 2.0 * err.min(last) + roundoff)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_coefficients_reproduce_psi() {
        let c = psi_taylor();
        for &p in &[0.0, 0.1, 0.3, 0.5, 0.77, 0.99] {
            let direct = (2.0 * PI * (p * p - p - 1.0 / 16.0)).cos() / (2.0 * PI * p).cos();
            assert!((horner(&c, p - 0.5) - direct).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn theta_branches_agree() {
        for &t in &[50.0, 80.0, 200.0] {
            let g = ln_gamma(Complex64::new(0.25, 0.5 * t)).im - 0.5 * t * PI.ln();
            let s = 0.5 * t * (t / (2.0 * PI)).ln() - 0.5 * t - PI / 8.0 + theta_tail(t);
            assert!((g - s).abs() < 1e-12, "t={t}: {g} vs {s}");
        }
    }

    #[test]
    fn theta_dd_matches_f64_at_moderate_height() {
        let t = 12345.678;
        let a = theta_dd(t).to_f64();
        assert!((a - theta(t)).abs() < 1e-10);
    }

    #[test]
    fn em_at_small_height() {
        // ζ(1/2) = -1.4603545088095868
        let (z, err) = euler_maclaurin(1e-9);
        assert!((z.re + 1.4603545088095868).abs() < 1e-9);
        assert!(err < 1e-10);
    }
}

