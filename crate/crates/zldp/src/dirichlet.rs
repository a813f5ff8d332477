//! Prime partial sums, mollifiers, sparse Dirichlet polynomials and the
//! Monte Carlo checks of the mean-value, splitting and moment lemmas.

use crate::dd::DD;
use crate::error::{domain, resource, Error, Result};
use crate::ladder::LadderConfig;
use crate::ledger::ConstantsLedger;
use crate::primes::{factorize, PrimeRange, PrimeTable};
use crate::scalar::Real;
use crate::stats::{self, mean_estimate, par_map};
use crate::zeta::{self, Height};
use num_complex::{Complex, Complex64};
use serde::Serialize;
use std::collections::BTreeMap;

/// Heights above which phases τ log n are formed in double-double.
pub const DD_PHASE_THRESHOLD: f64 = 1e8;

/// Mean-value error constant C in |lhs/rhs - 1| <= C N/T.
pub const MEAN_VALUE_C: f64 = 5.0;

#[inline]
fn phase(tau: f64, ln: f64, ln_dd: Option<DD>) -> f64 {
    match ln_dd {
        Some(l) if tau.abs() > DD_PHASE_THRESHOLD => l.mul_f64(tau).rem_two_pi(),
        _ => tau * ln,
    }
}

/// Per-prime data for repeated evaluation at many heights.
#[derive(Debug, Clone)]
pub struct PrimeBlock {
    pub primes: Vec<u64>,
    ln: Vec<f64>,
    ln_dd: Vec<DD>,
    rsqrt: Vec<f64>,
}

impl PrimeBlock {
    pub fn new(primes: &[u64], high_precision: bool) -> Self {
        Self {
            primes: primes.to_vec(),
            ln: primes.iter().map(|&p| (p as f64).ln()).collect(),
            ln_dd: if high_precision { primes.iter().map(|&p| DD::new(p as f64).ln()).collect() } else { Vec::new() },
            rsqrt: primes.iter().map(|&p| 1.0 / (p as f64).sqrt()).collect(),
        }
    }

    pub fn from_range(range: &PrimeRange, high_precision: bool) -> Result<Self> {
        Ok(Self::new(&crate::primes::primes_in_range(range)?, high_precision))
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// p^{-iτ} for every prime.
    pub fn twists(&self, tau: f64) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.len()).map(move |i| {
            let ph = phase(tau, self.ln[i], self.ln_dd.get(i).copied());
            let (s, c) = ph.sin_cos();
            Complex64::new(c, -s)
        })
    }

    /// (Σ Re, Σ) of p^{-iτ}/√p (+ p^{-2iτ}/(2p)).
    pub fn sum(&self, tau: f64, squares: bool) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, z) in self.twists(tau).enumerate() {
            acc += z * self.rsqrt[i];
            if squares {
                acc += z * z * (0.5 * self.rsqrt[i] * self.rsqrt[i]);
            }
        }
        acc
    }

    /// Σ over squarefree m built from these primes with at most `cap`
    /// factors of μ(m) m^{-1/2-iτ}, via elementary symmetric polynomials.
    pub fn mollifier_value(&self, tau: f64, cap: usize) -> Complex64 {
        let k = cap.min(self.len());
        let mut e = vec![Complex64::new(0.0, 0.0); k + 1];
        e[0] = Complex64::new(1.0, 0.0);
        for (i, z) in self.twists(tau).enumerate() {
            let x = z * self.rsqrt[i];
            for j in (1..=k).rev() {
                let prev = e[j - 1];
                e[j] += prev * x;
            }
        }
        e.iter().enumerate().map(|(j, v)| if j % 2 == 0 { *v } else { -*v }).sum()
    }

    /// Sum, squares-included sum and mollifier in one pass over the primes.
    pub fn level_values(&self, tau: f64, cap: usize) -> LevelValues {
        let k = cap.min(self.len());
        let mut e = vec![Complex64::new(0.0, 0.0); k + 1];
        e[0] = Complex64::new(1.0, 0.0);
        let mut s = Complex64::new(0.0, 0.0);
        for (i, z) in self.twists(tau).enumerate() {
            let x = z * self.rsqrt[i];
            s += x + z * z * (0.5 * self.rsqrt[i] * self.rsqrt[i]);
            for j in (1..=k).rev() {
                let prev = e[j - 1];
                e[j] += prev * x;
            }
        }
        let m = e.iter().enumerate().map(|(j, v)| if j % 2 == 0 { *v } else { -*v }).sum();
        LevelValues { ds_tilde: s, mollifier: m }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LevelValues {
    /// S̃_{t_ℓ} - S̃_{t_{ℓ-1}}; its real part is the increment of S.
    pub ds_tilde: Complex64,
    pub mollifier: Complex64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PartialSums {
    pub tau: f64,
    /// (k, S_k, S̃_k), ordered by k.
    pub values: Vec<(f64, f64, Complex64)>,
    pub include_prime_squares: bool,
}

/// (S_k, S̃_k) over primes p <= exp(e^k).
pub fn partial_sum(tau: f64, k: f64, include_prime_squares: bool) -> Result<(f64, Complex64)> {
    let range = PrimeRange::new(f64::NEG_INFINITY, k)?;
    if range.upper() < 2.0 {
        return Ok((0.0, Complex64::new(0.0, 0.0)));
    }
    let block = PrimeBlock::from_range(&range, tau.abs() > DD_PHASE_THRESHOLD)?;
    let z = block.sum(tau, include_prime_squares);
    Ok((z.re, z))
}

pub fn partial_sums(tau: f64, ks: &[f64], include_prime_squares: bool) -> Result<PartialSums> {
    let mut sorted = ks.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut values = Vec::with_capacity(sorted.len());
    let mut acc = Complex64::new(0.0, 0.0);
    let mut lo = f64::NEG_INFINITY;
    for &k in &sorted {
        if k > lo {
            let range = PrimeRange::new(lo, k)?;
            if !range.is_empty() {
                acc += PrimeBlock::from_range(&range, tau.abs() > DD_PHASE_THRESHOLD)?.sum(tau, include_prime_squares);
            }
            lo = k;
        }
        values.push((k, acc.re, acc));
    }
    Ok(PartialSums { tau, values, include_prime_squares })
}

/// Prime range of ladder level ℓ >= 1; level 1 starts at the first prime.
pub fn level_range(cfg: &LadderConfig, l: usize) -> Result<PrimeRange> {
    let lo = if l <= 1 { f64::NEG_INFINITY } else { cfg.point(l - 1) };
    PrimeRange::new(lo, cfg.point(l))
}

/// Y_j = S_{t_j} - S_{t_{j-1}} (prime squares included).
pub fn increment(tau: f64, j: usize, cfg: &LadderConfig) -> Result<f64> {
    if j == 0 || j > cfg.l_count {
        return domain(format!("increment index {j} outside 1..={}", cfg.l_count));
    }
    let block = PrimeBlock::from_range(&level_range(cfg, j)?, tau.abs() > DD_PHASE_THRESHOLD)?;
    Ok(block.sum(tau, true).re)
}

/// Sparse Σ a(n) n^{-s} whose integers have all prime factors in `support`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirichletPolynomial<T: Real> {
    pub coeffs: BTreeMap<u64, Complex<T>>,
    pub support: PrimeRange,
}

impl<T: Real> DirichletPolynomial<T> {
    pub fn new(coeffs: BTreeMap<u64, Complex<T>>, support: PrimeRange) -> Result<Self> {
        for (&n, c) in &coeffs {
            if n == 0 {
                return domain("coefficient index 0");
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return domain(format!("non-finite coefficient at n = {n}"));
            }
            if let Some((p, _)) = factorize(n).into_iter().find(|&(p, _)| !support.contains(p)) {
                return domain(format!("n = {n} has prime factor {p} outside the support range"));
            }
        }
        Ok(Self { coeffs, support })
    }

    pub fn from_real(pairs: &[(u64, f64)], support: PrimeRange) -> Result<Self> {
        Self::new(pairs.iter().map(|&(n, a)| (n, Complex::new(T::lit(a), T::zero()))).collect(), support)
    }

    pub fn constant(c: Complex<T>) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(1, c);
        Self { coeffs, support: PrimeRange { t_lo: 0.0, t_hi: 0.0 } }
    }

    /// N = largest supported index.
    pub fn length(&self) -> u64 {
        self.coeffs.keys().next_back().copied().unwrap_or(0)
    }

    pub fn sum_sq(&self) -> T {
        self.coeffs.values().map(|c| c.norm_sqr()).fold(T::zero(), |a, b| a + b)
    }

    /// Σ a(n) n^{-1/2-iτ}.
    pub fn evaluate(&self, tau: f64) -> Complex<T> {
        self.eval_with(tau, true)
    }

    /// Σ a(n) n^{-iτ}, without the 1/2 shift.
    pub fn evaluate_raw(&self, tau: f64) -> Complex<T> {
        self.eval_with(tau, false)
    }

    fn eval_with(&self, tau: f64, half: bool) -> Complex<T> {
        let hp = tau.abs() > DD_PHASE_THRESHOLD;
        let mut re = T::zero();
        let mut im = T::zero();
        let mut cre = T::zero();
        let mut cim = T::zero();
        for (&n, a) in &self.coeffs {
            let nf = n as f64;
            let ph = phase(tau, nf.ln(), if hp { Some(DD::new(nf).ln()) } else { None });
            let (s, c) = ph.sin_cos();
            let w = if half { 1.0 / nf.sqrt() } else { 1.0 };
            let z = Complex::new(T::lit(c * w), T::lit(-s * w));
            let term = *a * z;
            // compensated in both components
            let y = term.re - cre;
            let t = re + y;
            cre = (t - re) - y;
            re = t;
            let y = term.im - cim;
            let t = im + y;
            cim = (t - im) - y;
            im = t;
        }
        Complex::new(re, im)
    }

    /// Dirichlet convolution; the support becomes the hull of both supports.
    pub fn product(&self, other: &Self) -> Self {
        let mut coeffs: BTreeMap<u64, Complex<T>> = BTreeMap::new();
        for (&n, a) in &self.coeffs {
            for (&m, b) in &other.coeffs {
                let e = coeffs.entry(n * m).or_insert(Complex::new(T::zero(), T::zero()));
                *e = *e + *a * *b;
            }
        }
        let support = hull(&self.support, &other.support, self.coeffs.len() <= 1 && self.length() <= 1, other.coeffs.len() <= 1 && other.length() <= 1);
        Self { coeffs, support }
    }

    pub fn primes_used(&self) -> Vec<u64> {
        let mut ps: Vec<u64> = self.coeffs.keys().flat_map(|&n| factorize(n).into_iter().map(|(p, _)| p)).collect();
        ps.sort_unstable();
        ps.dedup();
        ps
    }
}

/// Polynomial on up to `terms` distinct indices n <= max_len whose prime
/// factors lie in `range` (n = 1 included), coefficients uniform on [-1,1]².
pub fn random_polynomial(range: &PrimeRange, max_len: u64, terms: usize, seed: u64) -> Result<Polynomial> {
    use rand::seq::SliceRandom;
    use rand::Rng;
    let cap = PrimeRange { t_lo: range.t_lo, t_hi: range.t_hi.min((max_len.max(2) as f64).ln().ln()) };
    let primes = if cap.is_empty() { Vec::new() } else { crate::primes::primes_in_range(&cap)? };
    let mut pool = vec![1u64];
    fn rec(primes: &[u64], start: usize, n: u64, max: u64, out: &mut Vec<u64>) {
        for i in start..primes.len() {
            let Some(m) = n.checked_mul(primes[i]).filter(|&m| m <= max) else { break };
            out.push(m);
            rec(primes, i, m, max, out);
        }
    }
    rec(&primes, 0, 1, max_len, &mut pool);
    pool.sort_unstable();
    let terms = terms.min(pool.len());
    let mut g = crate::rng::stream(seed, 0);
    pool.shuffle(&mut g);
    let coeffs = pool[..terms]
        .iter()
        .map(|&n| (n, Complex64::new(g.random_range(-1.0..=1.0), g.random_range(-1.0..=1.0))))
        .collect();
    Polynomial::new(coeffs, *range)
}

fn hull(a: &PrimeRange, b: &PrimeRange, a_const: bool, b_const: bool) -> PrimeRange {
    match (a_const, b_const) {
        (true, _) => *b,
        (_, true) => *a,
        _ => PrimeRange { t_lo: a.t_lo.min(b.t_lo), t_hi: a.t_hi.max(b.t_hi) },
    }
}

pub type Polynomial = DirichletPolynomial<f64>;

#[derive(Debug, Clone, Serialize)]
pub struct MollifierSpec {
    pub ell: usize,
    pub range: PrimeRange,
    pub omega_cap: u64,
    /// Largest integer admitted in the explicit expansion.
    pub length_cap: u64,
}

impl MollifierSpec {
    /// Spec of ℳ_ℓ on the ladder: range (t_{ℓ-1}, t_ℓ], cap ⌊Δ_ℓ^{E_Ω}⌋.
    pub fn for_level(cfg: &LadderConfig, l: usize) -> Result<Self> {
        if l == 0 {
            return domain("mollifier level starts at 1");
        }
        let width = cfg.point(l) - cfg.point(l - 1);
        Ok(Self {
            ell: l,
            range: level_range(cfg, l)?,
            omega_cap: omega_cap(width, cfg.ledger.e_omega),
            length_cap: cfg.ledger.length_cap,
        })
    }
}

/// ⌊width^exponent⌋, saturating.
pub fn omega_cap(width: f64, exponent: f64) -> u64 {
    let x = exponent * width.ln();
    if width <= 0.0 {
        0
    } else if x > 62.0 {
        u64::MAX
    } else {
        width.powf(exponent).floor() as u64
    }
}

/// ℳ expanded as an explicit polynomial by depth-first enumeration.
pub fn mollifier(spec: &MollifierSpec) -> Result<Polynomial> {
    let primes = crate::primes::primes_in_range(&spec.range)?;
    let mut coeffs = BTreeMap::new();
    coeffs.insert(1u64, Complex64::new(1.0, 0.0));
    let mut overflow: Option<u64> = None;
    fn dfs(
        primes: &[u64],
        start: usize,
        m: u64,
        depth: u64,
        spec: &MollifierSpec,
        out: &mut BTreeMap<u64, Complex64>,
        overflow: &mut Option<u64>,
    ) {
        if depth >= spec.omega_cap || overflow.is_some() {
            return;
        }
        for i in start..primes.len() {
            let next = match m.checked_mul(primes[i]) {
                Some(x) if x <= spec.length_cap => x,
                Some(x) => {
                    *overflow = Some(x);
                    return;
                }
                None => {
                    *overflow = Some(u64::MAX);
                    return;
                }
            };
            let sign = if (depth + 1) % 2 == 0 { 1.0 } else { -1.0 };
            out.insert(next, Complex64::new(sign, 0.0));
            dfs(primes, i + 1, next, depth + 1, spec, out, overflow);
        }
    }
    dfs(&primes, 0, 1, 0, spec, &mut coeffs, &mut overflow);
    if let Some(x) = overflow {
        return resource(format!(
            "mollifier enumeration reached m = {x} above length cap {} after {} terms",
            spec.length_cap,
            coeffs.len()
        ));
    }
    Polynomial::new(coeffs, spec.range)
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub experiment: &'static str,
    pub big_t: f64,
    pub n_len: u64,
    pub estimate: f64,
    pub reference: f64,
    pub ratio: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Allowed |ratio - 1|.
    pub tolerance: f64,
}

impl CheckReport {
    pub fn rel_err(&self) -> f64 {
        (self.ratio - 1.0).abs()
    }

    pub fn within_tolerance(&self) -> bool {
        self.rel_err() <= self.tolerance
    }
}

fn sample_taus(big_t: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(zeta::sample_tau(big_t, n, seed)?.into_iter().map(|h| h.t).collect())
}

/// Dense evaluator for polynomials with modest length: n^{-iτ} is built
/// multiplicatively from the prime twists.
struct DenseTwists {
    len: usize,
    block: PrimeBlock,
    spf: Vec<u32>,
}

impl DenseTwists {
    fn new(len: u64, high_precision: bool) -> Result<Self> {
        let len = len as usize;
        let table = PrimeTable::shared(len.max(2) as u64)?;
        let primes: Vec<u64> = table.primes().iter().copied().take_while(|&p| p <= len as u64).collect();
        let mut spf = vec![0u32; len + 1];
        for (i, &p) in primes.iter().enumerate() {
            let mut k = p as usize;
            while k <= len {
                if spf[k] == 0 {
                    spf[k] = i as u32;
                }
                k += p as usize;
            }
        }
        Ok(Self { len, block: PrimeBlock::new(&primes, high_precision), spf })
    }

    fn twists(&self, tau: f64) -> Vec<Complex64> {
        let pt: Vec<Complex64> = self.block.twists(tau).collect();
        let mut out = vec![Complex64::new(1.0, 0.0); self.len + 1];
        for n in 2..=self.len {
            let i = self.spf[n] as usize;
            let p = self.block.primes[i] as usize;
            out[n] = pt[i] * out[n / p];
        }
        out
    }
}

fn raw_values(poly: &Polynomial, taus: &[f64]) -> Result<Vec<Complex64>> {
    let n = poly.length();
    let hp = taus.iter().any(|t| t.abs() > DD_PHASE_THRESHOLD);
    if n <= 4 * poly.coeffs.len() as u64 + 64 {
        let dense = DenseTwists::new(n, hp)?;
        let items: Vec<(usize, Complex64)> = poly.coeffs.iter().map(|(&k, &a)| (k as usize, a)).collect();
        Ok(par_map(taus.len(), |i| {
            let tw = dense.twists(taus[i]);
            items.iter().map(|&(k, a)| a * tw[k]).sum()
        }))
    } else {
        Ok(par_map(taus.len(), |i| poly.evaluate_raw(taus[i])))
    }
}

/// E_τ|Σ a(n) n^{iτ}|² against Σ|a(n)|².
pub fn mean_value_check(poly: &Polynomial, big_t: f64, n_samples: usize, seed: u64) -> Result<CheckReport> {
    let n = poly.length();
    if n as f64 > big_t {
        return Err(Error::Precondition(format!("length N = {n} exceeds T = {big_t}; bound is vacuous")));
    }
    let taus = sample_taus(big_t, n_samples, seed)?;
    let vals: Vec<f64> = raw_values(poly, &taus)?.iter().map(|z| z.norm_sqr()).collect();
    let est = mean_estimate(&vals);
    let rhs = poly.sum_sq();
    let ratio = est.mean / rhs;
    let stderr = est.stderr / rhs;
    Ok(CheckReport {
        experiment: "mean-value",
        big_t,
        n_len: n,
        estimate: est.mean,
        reference: rhs,
        ratio,
        stderr: est.stderr,
        n_samples,
        seed,
        tolerance: (MEAN_VALUE_C * n as f64 / big_t).max(3.0 * stderr),
    })
}

/// E[|A|²|B|²] against E|A|² E|B|² for A, B on disjoint prime sets.
pub fn splitting_check(a: &Polynomial, b: &Polynomial, big_t: f64, n_samples: usize, seed: u64) -> Result<CheckReport> {
    let pa = a.primes_used();
    let pb = b.primes_used();
    if let (Some(&amax), Some(&bmin)) = (pa.last(), pb.first()) {
        if amax >= bmin {
            return domain(format!("supports overlap: A uses prime {amax}, B uses prime {bmin}"));
        }
    }
    let quarter = big_t.powf(0.25);
    if a.length() as f64 > quarter || b.length() as f64 > quarter {
        return Err(Error::Precondition(format!(
            "lengths {} and {} must not exceed T^(1/4) = {quarter:.3}",
            a.length(),
            b.length()
        )));
    }
    let taus = sample_taus(big_t, n_samples, seed)?;
    let xa: Vec<f64> = raw_values(a, &taus)?.iter().map(|z| z.norm_sqr()).collect();
    let xb: Vec<f64> = raw_values(b, &taus)?.iter().map(|z| z.norm_sqr()).collect();
    let xy: Vec<f64> = xa.iter().zip(&xb).map(|(x, y)| x * y).collect();
    let ma = mean_estimate(&xa).mean;
    let mb = mean_estimate(&xb).mean;
    let mab = mean_estimate(&xy);
    let ratio = mab.mean / (ma * mb);
    // delta method for the ratio of means
    let infl: Vec<f64> = (0..taus.len()).map(|i| xy[i] / (ma * mb) - xa[i] / ma - xb[i] / mb).collect();
    let rse = mean_estimate(&infl).stderr;
    let n_len = a.length() * b.length();
    Ok(CheckReport {
        experiment: "splitting",
        big_t,
        n_len,
        estimate: mab.mean,
        reference: ma * mb,
        ratio,
        stderr: rse * ma * mb,
        n_samples,
        seed,
        tolerance: (MEAN_VALUE_C * n_len as f64 / big_t).max(3.0 * rse),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentVariant {
    Complex,
    Real,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub variant: MomentVariant,
    pub j: f64,
    pub k: f64,
    pub q: u32,
    pub estimate: f64,
    pub reference: f64,
    pub ratio: f64,
    pub stderr: f64,
    /// Σ 1/(2p) over the range, the exact variance of the first-order real sum.
    pub prime_variance: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// q = ⌈V²/(k-j+1)⌉, the moment order used for the Gaussian tail bound.
pub fn gaussian_tail_q(v: f64, j: f64, k: f64) -> u32 {
    (v * v / (k - j + 1.0)).ceil().max(0.0) as u32
}

pub fn moment_bound_check(
    j: f64,
    k: f64,
    q: u32,
    big_t: f64,
    n_samples: usize,
    seed: u64,
    variant: MomentVariant,
) -> Result<MomentReport> {
    let t = big_t.ln().ln();
    if !(j >= t / 2.0 && j < k) {
        return Err(Error::Precondition(format!("need t/2 <= j < k, got t = {t:.4}, j = {j}, k = {k}")));
    }
    if 2.0 * q as f64 > (t - k).exp() {
        return Err(Error::Precondition(format!("2q = {} exceeds e^(t-k) = {:.4}", 2 * q, (t - k).exp())));
    }
    let range = PrimeRange::new(j, k)?;
    let block = PrimeBlock::from_range(&range, 2.0 * big_t > DD_PHASE_THRESHOLD)?;
    let prime_variance: f64 = block.primes.iter().map(|&p| 0.5 / p as f64).sum();
    let taus = sample_taus(big_t, n_samples, seed)?;
    let vals: Vec<f64> = par_map(taus.len(), |i| {
        let z = block.sum(taus[i], true);
        match variant {
            MomentVariant::Complex => z.norm_sqr().powi(q as i32),
            MomentVariant::Real => z.re.powi(2 * q as i32),
        }
    });
    let est = mean_estimate(&vals);
    let reference = match variant {
        MomentVariant::Complex => stats::ln_factorial(q as u64).exp() * (k - j + 1.0).powi(q as i32),
        MomentVariant::Real => stats::double_factorial_moment(q) * ((k - j) / 2.0).powi(q as i32),
    };
    Ok(MomentReport {
        variant,
        j,
        k,
        q,
        estimate: est.mean,
        reference,
        ratio: est.mean / reference,
        stderr: est.stderr,
        prime_variance,
        n_samples,
        seed,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MollifierInequality {
    pub tau: f64,
    pub precondition_met: bool,
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// Precomputed primes and caps for checking e^{-(S_{t_{ℓ+1}}-S_{t_ℓ})} <=
/// (1+e^{-t_ℓ})|ℳ_{ℓ+1}| + e^{-E_M Δ} at many heights.
#[derive(Debug, Clone)]
pub struct MollifierInequalityPlan {
    pub ell: usize,
    block: PrimeBlock,
    cap: usize,
    t_l: f64,
    width: f64,
    a_const: f64,
    e_m: f64,
}

impl MollifierInequalityPlan {
    pub fn new(ell: usize, cfg: &LadderConfig, ledger: &ConstantsLedger, max_tau: f64) -> Result<Self> {
        if ell + 1 > cfg.l_count {
            return domain(format!("need ℓ + 1 <= ℒ = {}, got ℓ = {ell}", cfg.l_count));
        }
        let spec = MollifierSpec::for_level(cfg, ell + 1)?;
        let cap = omega_cap(cfg.point(ell + 1) - cfg.point(ell), ledger.e_omega);
        Ok(Self {
            ell,
            block: PrimeBlock::from_range(&spec.range, max_tau > DD_PHASE_THRESHOLD)?,
            cap: cap.min(usize::MAX as u64) as usize,
            t_l: cfg.point(ell),
            width: cfg.point(ell + 1) - cfg.point(ell),
            a_const: ledger.a_const,
            e_m: ledger.e_m,
        })
    }

    pub fn check(&self, tau: f64) -> MollifierInequality {
        let v = self.block.level_values(tau, self.cap);
        let precondition_met = v.ds_tilde.norm() <= self.a_const * self.width;
        let lhs = (-v.ds_tilde.re).exp();
        let rhs = (1.0 + (-self.t_l).exp()) * v.mollifier.norm() + (-self.e_m * self.width).exp();
        MollifierInequality { tau, precondition_met, holds: lhs <= rhs, lhs, rhs }
    }

    pub fn omega_cap(&self) -> usize {
        self.cap
    }

    pub fn n_primes(&self) -> usize {
        self.block.len()
    }
}

pub fn mollifier_inequality_check(
    tau: f64,
    ell: usize,
    cfg: &LadderConfig,
    ledger: &ConstantsLedger,
) -> Result<MollifierInequality> {
    Ok(MollifierInequalityPlan::new(ell, cfg, ledger, tau)?.check(tau))
}

/// Whether `polys[λ-1]` lives on slot λ with the Ω and coefficient caps.
pub fn well_factorable_check(polys: &[Polynomial], cfg: &LadderConfig, ledger: &ConstantsLedger) -> bool {
    let coeff_cap = ledger.coeff_fraction * cfg.t.exp();
    polys.iter().enumerate().all(|(i, q)| {
        let lam = i + 1;
        if lam > cfg.l_count + 1 {
            return false;
        }
        let range = match level_range(cfg, lam) {
            Ok(r) => r,
            Err(_) => return false,
        };
        let width = cfg.point(lam) - cfg.point(lam - 1);
        let cap = 10.0 * width.powf(ledger.e_q);
        q.coeffs.iter().all(|(&m, c)| {
            let f = factorize(m);
            f.iter().all(|&(p, _)| range.contains(p))
                && (f.iter().map(|&(_, e)| e as f64).sum::<f64>() <= cap)
                && c.norm().ln() <= coeff_cap
        })
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FourthMomentProbe {
    pub ell: usize,
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub q_mean_square: f64,
    pub ratio: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// E|ζ ℳ_1⋯ℳ_{ℓ+1}|⁴|Q|² against e^{4(t-t_{ℓ+1})} E|Q|².
pub fn twisted_fourth_moment_probe(
    q: &[Polynomial],
    ell: usize,
    cfg: &LadderConfig,
    big_t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<FourthMomentProbe> {
    if !well_factorable_check(q, cfg, &cfg.ledger) {
        return domain("Q is not well-factorable on this ladder");
    }
    let top = (ell + 1).min(cfg.l_count);
    let hp = 2.0 * big_t > DD_PHASE_THRESHOLD;
    let mut levels = Vec::new();
    for l in 1..=top {
        let spec = MollifierSpec::for_level(cfg, l)?;
        levels.push((PrimeBlock::from_range(&spec.range, hp)?, spec.omega_cap.min(usize::MAX as u64) as usize));
    }
    let taus = sample_taus(big_t, n_samples, seed)?;
    let pairs: Vec<Result<(f64, f64)>> = par_map(taus.len(), |i| {
        let tau = taus[i];
        let z = zeta::zeta_critical(&Height::fast(tau))?.complex();
        let m: Complex64 = levels.iter().map(|(b, c)| b.mollifier_value(tau, *c)).product();
        let qv: Complex64 = q.iter().map(|p| p.evaluate(tau)).product();
        Ok(((z * m).norm().powi(4) * qv.norm_sqr(), qv.norm_sqr()))
    });
    let pairs: Vec<(f64, f64)> = pairs.into_iter().collect::<Result<_>>()?;
    let l: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let r: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let le = mean_estimate(&l);
    let qm = mean_estimate(&r).mean;
    let rhs = (4.0 * (cfg.t - cfg.point(top))).exp() * qm;
    Ok(FourthMomentProbe {
        ell,
        lhs: le.mean,
        lhs_stderr: le.stderr,
        rhs,
        q_mean_square: qm,
        ratio: le.mean / rhs,
        n_samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_partial_sum() {
        assert_eq!(partial_sum(1.0, -1.0, true).unwrap().0, 0.0);
    }

    #[test]
    fn two_prime_hand_sum() {
        let k = 4f64.ln().ln();
        let (s, st) = partial_sum(0.0, k, false).unwrap();
        let oracle = 1.0 / 2f64.sqrt() + 1.0 / 3f64.sqrt();
        assert!((s - oracle).abs() < 1e-15);
        assert!((s - 1.28445).abs() < 1e-5);
        assert_eq!(st.re, s);
    }

    #[test]
    fn increment_over_five_and_seven() {
        let block = PrimeBlock::new(&[5, 7], false);
        let y = block.sum(0.0, true).re;
        let oracle = 1.0 / 5f64.sqrt() + 1.0 / 7f64.sqrt() + 0.1 + 1.0 / 14.0;
        assert!((y - oracle).abs() < 1e-15);
        assert!((y - 0.9966066).abs() < 1e-7);
    }

    #[test]
    fn mollifier_expansions() {
        let range = PrimeRange::up_to(3.5);
        let spec = |cap| MollifierSpec { ell: 1, range, omega_cap: cap, length_cap: 10_000_000 };
        let m = mollifier(&spec(2)).unwrap();
        let got: Vec<(u64, f64)> = m.coeffs.iter().map(|(&k, v)| (k, v.re)).collect();
        assert_eq!(got, vec![(1, 1.0), (2, -1.0), (3, -1.0), (6, 1.0)]);
        let m1 = mollifier(&spec(1)).unwrap();
        assert_eq!(m1.coeffs.len(), 3);
        assert!(!m1.coeffs.contains_key(&6));
        let e = mollifier(&MollifierSpec { ell: 1, range: PrimeRange { t_lo: 1.0, t_hi: 1.0 }, omega_cap: 5, length_cap: 10 }).unwrap();
        assert_eq!(e.coeffs.len(), 1);
        let over = mollifier(&MollifierSpec { ell: 1, range: PrimeRange::up_to(30.0), omega_cap: 5, length_cap: 100 });
        assert_eq!(over.unwrap_err().exit_code(), 3);
    }

    #[test]
    fn elementary_symmetric_matches_expansion() {
        let range = PrimeRange::up_to(40.0);
        for cap in 0..5 {
            let m = mollifier(&MollifierSpec { ell: 1, range, omega_cap: cap, length_cap: 1 << 40 }).unwrap();
            let block = PrimeBlock::from_range(&range, false).unwrap();
            for &tau in &[0.0, 3.7, 1234.5] {
                let a = m.evaluate(tau);
                let b = block.mollifier_value(tau, cap as usize);
                assert!((a - b).norm() < 1e-12, "cap {cap} tau {tau}");
            }
        }
    }

    #[test]
    fn evaluate_basics() {
        let one = Polynomial::constant(Complex64::new(1.0, 0.0));
        assert_eq!(one.evaluate(123.0), Complex64::new(1.0, 0.0));
        let p = Polynomial::from_real(&[(1, 1.0), (4, 1.0)], PrimeRange::up_to(2.5)).unwrap();
        assert!((p.evaluate(0.0).re - 1.5).abs() < 1e-15);
        assert!(Polynomial::from_real(&[(3, 1.0)], PrimeRange::up_to(2.5)).is_err());
    }

    #[test]
    fn mean_value_refusals_and_constant() {
        let p = Polynomial::from_real(&[(1, 2.0)], PrimeRange::up_to(2.5)).unwrap();
        let r = mean_value_check(&p, 1e6, 100, 1).unwrap();
        assert_eq!(r.estimate, 4.0);
        assert_eq!(r.reference, 4.0);
        let long = Polynomial::from_real(&[(2u64.pow(21), 1.0)], PrimeRange::up_to(2.5)).unwrap();
        assert!(matches!(mean_value_check(&long, 1e6, 10, 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn mollifier_inequality_trivial_range() {
        let mut l = ConstantsLedger::desk();
        l.s_multiplier = 1.0;
        let cfg = crate::ladder::build_ladder(1e6, 1.0, 2.6, &l).unwrap();
        assert!(mollifier_inequality_check(1e6, cfg.l_count, &cfg, &l).is_err());
        assert!(mollifier_inequality_check(1e6, 0, &cfg, &l).is_ok());
        // a block with no primes: lhs = 1, rhs = 2|1| + e^{-E_M Δ}
        let plan = MollifierInequalityPlan {
            ell: 0,
            block: PrimeBlock::new(&[], false),
            cap: 3,
            t_l: 0.0,
            width: 1.0,
            a_const: 10.0,
            e_m: 5.0,
        };
        let r = plan.check(5.0);
        assert_eq!(r.lhs, 1.0);
        assert!(r.rhs > 2.0 && r.holds && r.precondition_met);
    }
}
