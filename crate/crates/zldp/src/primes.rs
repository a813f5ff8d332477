//! Primes, Möbius values and prime-factor counts restricted to log-log ranges.

use crate::error::{domain, resource, Result};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock, RwLock};

pub const DEFAULT_SIEVE_CAP: u64 = 1 << 34;
pub const SEGMENT_THRESHOLD: u64 = 100_000_000;
pub const SPF_LIMIT: u64 = 10_000_000;
pub const CACHE_MAGIC: &[u8; 8] = b"ZLDPPRM1";
pub const CACHE_ENV: &str = "ZLDP_SIEVE_CACHE";

/// Primes p with log log p in (t_lo, t_hi]. `t_lo` may be `-inf`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PrimeRange {
    pub t_lo: f64,
    pub t_hi: f64,
}

impl PrimeRange {
    pub fn new(t_lo: f64, t_hi: f64) -> Result<Self> {
        if t_lo.is_nan() || t_hi.is_nan() || t_hi == f64::INFINITY {
            return domain(format!("invalid prime range ({t_lo}, {t_hi}]"));
        }
        if t_lo > t_hi {
            return domain(format!("prime range has t_lo {t_lo} > t_hi {t_hi}"));
        }
        Ok(Self { t_lo, t_hi })
    }

    /// All primes up to `x`.
    pub fn up_to(x: f64) -> Self {
        Self { t_lo: f64::NEG_INFINITY, t_hi: x.ln().ln() }
    }

    /// Primes in (a, b] given on the natural scale.
    pub fn between(a: f64, b: f64) -> Self {
        let lo = if a <= 1.0 { f64::NEG_INFINITY } else { a.ln().ln() };
        Self { t_lo: lo, t_hi: b.ln().ln() }
    }

    pub fn is_empty(&self) -> bool {
        self.t_lo >= self.t_hi || self.upper() < 2.0
    }

    pub fn contains(&self, p: u64) -> bool {
        let ll = (p as f64).ln().ln();
        ll > self.t_lo && ll <= self.t_hi
    }

    /// exp(e^{t_hi}).
    pub fn upper(&self) -> f64 {
        self.t_hi.exp().exp()
    }

    /// exp(e^{t_lo}), zero for an unbounded lower end.
    pub fn lower(&self) -> f64 {
        if self.t_lo == f64::NEG_INFINITY {
            0.0
        } else {
            self.t_lo.exp().exp()
        }
    }

    /// Largest integer that may belong to the range.
    pub fn int_upper(&self) -> Result<u64> {
        let u = self.upper();
        if !u.is_finite() || u > DEFAULT_SIEVE_CAP as f64 {
            return resource(format!(
                "range upper end exp(e^{}) = {u:e} exceeds sieve cap {DEFAULT_SIEVE_CAP}",
                self.t_hi
            ));
        }
        // tolerate the float landing just under an integer endpoint
        let mut n = u.floor() as u64 + 1;
        while n > 0 && !self.le_upper(n) {
            n -= 1;
        }
        Ok(n)
    }

    fn le_upper(&self, p: u64) -> bool {
        p < 2 || (p as f64).ln().ln() <= self.t_hi
    }
}

/// m together with its multiplicity-weighted prime count inside a range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactorCount {
    pub m: u64,
    pub count: u32,
}

/// All primes <= `limit`, ascending, subject to the default hard cap.
pub fn sieve_primes(limit: u64) -> Result<Vec<u64>> {
    sieve_primes_capped(limit, DEFAULT_SIEVE_CAP)
}

pub fn sieve_primes_capped(limit: u64, cap: u64) -> Result<Vec<u64>> {
    if limit > cap {
        return resource(format!("sieve limit {limit} exceeds hard cap {cap}"));
    }
    if limit < 2 {
        return Ok(Vec::new());
    }
    if limit <= SEGMENT_THRESHOLD {
        Ok(simple_sieve(limit))
    } else {
        Ok(segmented_sieve(limit))
    }
}

fn simple_sieve(limit: u64) -> Vec<u64> {
    // odd-only: index i stands for 2i+1
    let n = ((limit - 1) / 2 + 1) as usize;
    let mut composite = vec![false; n];
    let mut i = 1usize;
    while (2 * i + 1) * (2 * i + 1) <= limit as usize {
        if !composite[i] {
            let p = 2 * i + 1;
            let mut j = p * p / 2;
            while j < n {
                composite[j] = true;
                j += p;
            }
        }
        i += 1;
    }
    let mut out = Vec::with_capacity(approx_pi(limit));
    out.push(2);
    out.extend((1..n).filter(|&k| !composite[k]).map(|k| 2 * k as u64 + 1));
    out
}

fn segmented_sieve(limit: u64) -> Vec<u64> {
    let root = isqrt(limit);
    let base = simple_sieve(root);
    let mut out = Vec::with_capacity(approx_pi(limit));
    out.extend_from_slice(&base);
    const SEG: u64 = 1 << 21;
    let mut lo = root + 1;
    let mut marks = vec![false; SEG as usize];
    while lo <= limit {
        let hi = (lo + SEG - 1).min(limit);
        let len = (hi - lo + 1) as usize;
        marks[..len].iter_mut().for_each(|m| *m = false);
        for &p in &base {
            if p * p > hi {
                break;
            }
            let start = (lo.div_ceil(p) * p).max(p * p);
            let mut k = start;
            while k <= hi {
                marks[(k - lo) as usize] = true;
                k += p;
            }
        }
        out.extend((0..len).filter(|&i| !marks[i]).map(|i| lo + i as u64));
        lo = hi + 1;
    }
    out
}

fn approx_pi(x: u64) -> usize {
    if x < 17 {
        return 8;
    }
    let xf = x as f64;
    (1.26 * xf / xf.ln()) as usize
}

pub(crate) fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn spf_table() -> &'static [u32] {
    static SPF: OnceLock<Vec<u32>> = OnceLock::new();
    SPF.get_or_init(|| {
        let n = SPF_LIMIT as usize;
        let mut spf = vec![0u32; n + 1];
        for i in 2..=n {
            if spf[i] == 0 {
                let mut j = i;
                while j <= n {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        spf
    })
}

/// Prime factorization as (p, multiplicity), ascending.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out: Vec<(u64, u32)> = Vec::new();
    let push = |p: u64, out: &mut Vec<(u64, u32)>| match out.last_mut() {
        Some((q, e)) if *q == p => *e += 1,
        _ => out.push((p, 1)),
    };
    if n <= SPF_LIMIT {
        let spf = spf_table();
        while n > 1 {
            let p = spf[n as usize] as u64;
            push(p, &mut out);
            n /= p;
        }
        return out;
    }
    let mut d = 2u64;
    while d * d <= n {
        while n % d == 0 {
            push(d, &mut out);
            n /= d;
        }
        d += if d == 2 { 1 } else { 2 };
        if n <= SPF_LIMIT && n > 1 {
            for f in factorize(n) {
                for _ in 0..f.1 {
                    push(f.0, &mut out);
                }
            }
            return out;
        }
    }
    if n > 1 {
        push(n, &mut out);
    }
    out
}

pub fn mobius(n: u64) -> Result<i8> {
    if n == 0 {
        return domain("mobius(0) is undefined");
    }
    let f = factorize(n);
    if f.iter().any(|&(_, e)| e > 1) {
        return Ok(0);
    }
    Ok(if f.len() % 2 == 0 { 1 } else { -1 })
}

pub fn omega_in_range(m: u64, range: &PrimeRange) -> u32 {
    if m <= 1 {
        return 0;
    }
    factorize(m).into_iter().filter(|&(p, _)| range.contains(p)).map(|(_, e)| e).sum()
}

pub fn factor_count(m: u64, range: &PrimeRange) -> FactorCount {
    FactorCount { m, count: omega_in_range(m, range) }
}

/// Shared, growable table of primes; readers get an immutable snapshot.
pub struct PrimeTable {
    primes: Vec<u64>,
    limit: u64,
}

impl PrimeTable {
    pub fn build(limit: u64) -> Result<Self> {
        Ok(Self { primes: sieve_primes(limit)?, limit })
    }

    /// Process-wide table covering at least `limit`.
    pub fn shared(limit: u64) -> Result<Arc<PrimeTable>> {
        static TABLE: OnceLock<RwLock<Arc<PrimeTable>>> = OnceLock::new();
        let lock = TABLE.get_or_init(|| RwLock::new(Arc::new(PrimeTable { primes: vec![], limit: 1 })));
        {
            let cur = lock.read().expect("prime table lock");
            if cur.limit >= limit {
                return Ok(cur.clone());
            }
        }
        let mut w = lock.write().expect("prime table lock");
        if w.limit < limit {
            let target = limit.max(w.limit.saturating_mul(2)).min(DEFAULT_SIEVE_CAP).max(limit);
            *w = Arc::new(match std::env::var_os(CACHE_ENV) {
                Some(path) => load_or_build_cache(Path::new(&path), target)?,
                None => PrimeTable::build(target)?,
            });
        }
        Ok(w.clone())
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn in_range(&self, range: &PrimeRange) -> Result<&[u64]> {
        if range.is_empty() {
            return Ok(&[]);
        }
        let hi = range.int_upper()?;
        if hi > self.limit {
            return resource(format!("range reaches {hi} beyond sieve coverage {}", self.limit));
        }
        let a = self.primes.partition_point(|&p| (p as f64).ln().ln() <= range.t_lo);
        let b = self.primes.partition_point(|&p| range.le_upper(p));
        Ok(&self.primes[a..b.max(a)])
    }
}

/// Primes with log log p in the range, ascending.
pub fn primes_in_range(range: &PrimeRange) -> Result<Vec<u64>> {
    if range.is_empty() {
        return Ok(Vec::new());
    }
    let table = PrimeTable::shared(range.int_upper()?)?;
    Ok(table.in_range(range)?.to_vec())
}

pub fn default_cache_path() -> PathBuf {
    std::env::var_os(CACHE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("zldp_primes.bin"))
}

/// Reads the cache when it covers `limit`, otherwise sieves and rewrites it.
pub fn load_or_build_cache(path: &Path, limit: u64) -> Result<PrimeTable> {
    if let Some(t) = read_cache(path)? {
        if t.limit >= limit {
            let end = t.primes.partition_point(|&p| p <= limit);
            return Ok(PrimeTable { primes: t.primes[..end].to_vec(), limit });
        }
    }
    let t = PrimeTable::build(limit)?;
    write_cache(path, &t.primes)?;
    Ok(t)
}

/// Coverage of a cache file is its largest stored prime.
pub fn read_cache(path: &Path) -> Result<Option<PrimeTable>> {
    let mut f = match fs::File::open(path) {
        Ok(f) => f,
        Err(_) => return Ok(None),
    };
    let mut bytes = Vec::new();
    f.read_to_end(&mut bytes)
        .map_err(|e| crate::Error::Resource(format!("reading {}: {e}", path.display())))?;
    if bytes.len() < 8 || &bytes[..8] != CACHE_MAGIC || (bytes.len() - 8) % 8 != 0 {
        return Ok(None);
    }
    let primes: Vec<u64> = bytes[8..]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let limit = primes.last().copied().unwrap_or(1);
    Ok(Some(PrimeTable { primes, limit }))
}

pub fn write_cache(path: &Path, primes: &[u64]) -> Result<()> {
    let mut buf = Vec::with_capacity(8 + 8 * primes.len());
    buf.extend_from_slice(CACHE_MAGIC);
    for p in primes {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    let mut f = fs::File::create(path)
        .map_err(|e| crate::Error::Resource(format!("creating {}: {e}", path.display())))?;
    f.write_all(&buf)
        .map_err(|e| crate::Error::Resource(format!("writing {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_prime_trial(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    #[test]
    fn small_sieves() {
        assert_eq!(sieve_primes(10).unwrap(), vec![2, 3, 5, 7]);
        assert_eq!(sieve_primes(2).unwrap(), vec![2]);
        assert!(sieve_primes(1).unwrap().is_empty());
    }

    #[test]
    fn pi_of_a_million_matches_trial_division() {
        let count = (2..=1_000_000u64).filter(|&n| is_prime_trial(n)).count();
        assert_eq!(count, 78498);
        assert_eq!(sieve_primes(1_000_000).unwrap().len(), count);
    }

    #[test]
    fn segmented_agrees_with_simple() {
        let lim = 3_000_000;
        assert_eq!(segmented_sieve(lim), simple_sieve(lim));
        assert_eq!(segmented_sieve(97), simple_sieve(97));
    }

    #[test]
    fn cap_is_enforced() {
        let e = sieve_primes(DEFAULT_SIEVE_CAP + 1).unwrap_err();
        assert!(e.to_string().contains(&DEFAULT_SIEVE_CAP.to_string()));
        assert_eq!(e.exit_code(), 3);
        assert!(sieve_primes_capped(1000, 999).is_err());
    }

    #[test]
    fn mobius_values() {
        assert_eq!(mobius(1).unwrap(), 1);
        assert_eq!(mobius(4).unwrap(), 0);
        assert_eq!(mobius(30).unwrap(), -1);
        assert!(mobius(0).is_err());
        // above the table: 10000019 is prime, 2*10000019 squarefree
        assert_eq!(mobius(10_000_019).unwrap(), -1);
        assert_eq!(mobius(2 * 10_000_019).unwrap(), 1);
        assert_eq!(mobius(9 * 10_000_019).unwrap(), 0);
    }

    #[test]
    fn omega_counts() {
        let r = PrimeRange::up_to(3.5);
        assert_eq!(omega_in_range(12, &r), 3);
        assert_eq!(omega_in_range(1, &r), 0);
        let only7 = PrimeRange::between(6.0, 10.0);
        assert_eq!(omega_in_range(2 * 343, &only7), 3);
        assert_eq!(factor_count(12, &r), FactorCount { m: 12, count: 3 });
    }

    #[test]
    fn ranges() {
        let r = PrimeRange::new(f64::NEG_INFINITY, 10f64.ln().ln()).unwrap();
        assert_eq!(primes_in_range(&r).unwrap(), vec![2, 3, 5, 7]);
        let e = PrimeRange::new(1.0, 1.0).unwrap();
        assert!(primes_in_range(&e).unwrap().is_empty());
        let h = PrimeRange::new(f64::NEG_INFINITY, 100f64.ln().ln()).unwrap();
        assert_eq!(primes_in_range(&h).unwrap().len(), 25);
        assert!(PrimeRange::new(2.0, 1.0).is_err());
        let huge = PrimeRange::new(0.0, 4.0).unwrap();
        assert_eq!(primes_in_range(&huge).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn cache_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.bin");
        let t = load_or_build_cache(&path, 1000).unwrap();
        assert_eq!(t.primes().len(), 168);
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], CACHE_MAGIC);
        assert_eq!(bytes.len(), 8 + 8 * 168);
        let t2 = load_or_build_cache(&path, 500).unwrap();
        assert_eq!(t2.primes().len(), 95);
        let t3 = load_or_build_cache(&path, 2000).unwrap();
        assert_eq!(t3.primes().len(), 303);
        assert_eq!(read_cache(&path).unwrap().unwrap().primes().len(), 303);
    }
}
