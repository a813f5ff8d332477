use num_bigint::BigInt;
use num_traits::{Float, One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;
use std::f64::consts::PI;
use zldp::dd::DD;
use zldp::zeta::{self, Height, LogModulus};

/// Fixed-point reals with `P` fractional bits, used as an independent
/// high-precision oracle for the phase reduction.
const P: u32 = 256;

fn fx(x: f64) -> BigInt {
    let (mant, exp, sign) = x.integer_decode();
    let m = BigInt::from(mant) * sign;
    let e = exp as i64 + P as i64;
    if e >= 0 {
        m << e as usize
    } else {
        m >> (-e) as usize
    }
}

fn fx_int(n: u64) -> BigInt {
    BigInt::from(n) << P as usize
}

fn mul(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b) >> P as usize
}

fn div(a: &BigInt, b: &BigInt) -> BigInt {
    (a << P as usize) / b
}

fn to_f64(a: &BigInt) -> f64 {
    a.to_f64().unwrap() / 2f64.powi(P as i32)
}

/// atanh(y) for |y| <= 1/3.
fn atanh(y: &BigInt) -> BigInt {
    let y2 = mul(y, y);
    let mut pow = y.clone();
    let mut acc = BigInt::zero();
    let mut k = 1u64;
    while !pow.is_zero() {
        acc += &pow / BigInt::from(k);
        pow = mul(&pow, &y2);
        k += 2;
    }
    acc
}

/// atan(1/q) by its alternating series.
fn atan_inv(q: u64) -> BigInt {
    let q2 = BigInt::from(q * q);
    let mut pow = fx_int(1) / BigInt::from(q);
    let mut acc = BigInt::zero();
    let mut k = 1u64;
    let mut sign = 1;
    while !pow.is_zero() {
        acc += &pow / BigInt::from(k) * sign;
        pow /= &q2;
        k += 2;
        sign = -sign;
    }
    acc
}

fn pi() -> BigInt {
    atan_inv(5) * 16 - atan_inv(239) * 4
}

fn ln(x: &BigInt) -> BigInt {
    assert!(x.is_positive());
    let one = fx_int(1);
    let ln2 = atanh(&div(&one, &fx_int(3))) * 2;
    // x = m 2^k with m in [1, 2)
    let k = x.bits() as i64 - 1 - P as i64;
    let m = if k >= 0 { x >> k as usize } else { x << (-k) as usize };
    let y = div(&(&m - &one), &(&m + &one));
    ln2 * k + atanh(&y) * 2
}

/// (θ(t) - t ln n) reduced to (-π, π], computed at 256 bits.
fn phase_oracle(t: f64, n: u64) -> f64 {
    let pi = pi();
    let two_pi = &pi * 2;
    let tt = fx(t);
    let half_t = &tt >> 1usize;
    let l = ln(&div(&tt, &two_pi));
    let r = 1.0 / t;
    let r2 = r * r;
    let tail = r * (1.0 / 48.0 + r2 * (7.0 / 5760.0 + r2 * (31.0 / 80640.0 + r2 * 127.0 / 430080.0)));
    let theta = mul(&half_t, &l) - &half_t - (&pi >> 3usize) + fx(tail);
    let x = theta - mul(&tt, &ln(&fx_int(n)));
    let mut red = &x % &two_pi;
    if red > pi {
        red -= &two_pi;
    } else if red <= -&pi {
        red += &two_pi;
    }
    to_f64(&red)
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

#[test]
fn fixed_point_oracle_self_check() {
    assert!((to_f64(&pi()) - PI).abs() < 1e-15);
    assert!((to_f64(&ln(&fx_int(10))) - 10f64.ln()).abs() < 1e-15);
    assert!(BigInt::one().bits() == 1);
}

#[test]
fn phase_reduction_against_fixed_point_oracle() {
    let mut worst = 0.0f64;
    for (i, t) in [1e6 + 0.25, 3.7e8, 1e10 + 0.125, 5e11 + 0.5, 1e12].into_iter().enumerate() {
        let n_max = (t / (2.0 * PI)).sqrt() as u64;
        for n in [1, 2, 3, 97, n_max / 3 + i as u64, n_max] {
            let got = zeta::phase_dd(t, if n == 1 { DD::ZERO } else { DD::new(n as f64).ln() });
            let want = phase_oracle(t, n);
            worst = worst.max(circular_distance(got, want));
        }
    }
    assert!(worst < 1e-9, "worst phase error {worst:e}");
}

#[test]
fn z_is_real_on_the_critical_line() {
    for t in [20.0, 123.4, 987.6, 5000.25] {
        let (zeta, _) = zeta::euler_maclaurin(t);
        let th = zeta::theta(t);
        let z = zeta * num_complex::Complex64::from_polar(1.0, th);
        assert!(z.im.abs() < 1e-9 * z.re.abs().max(1.0), "t={t}: {z}");
        let (rs, _) = zeta::riemann_siegel(t);
        if t >= zeta::RS_THRESHOLD {
            assert!((rs - z.re).abs() < 1e-6, "t={t}: RS {rs} vs EM {}", z.re);
        }
    }
}

#[test]
fn riemann_siegel_matches_euler_maclaurin_at_a_million() {
    let t = 1e6 + 0.5;
    let (em, _) = zeta::euler_maclaurin(t);
    let v = zeta::zeta_critical(&Height::fast(t)).unwrap();
    assert!((v.complex() - em).norm() < 1e-6, "{} vs {em}", v.complex());
}

#[test]
fn first_zero_is_reported_near_zero() {
    let lm = zeta::log_abs_zeta(&Height::checked(14.134725141734693)).unwrap();
    assert!(lm.is_near_zero(), "{lm:?}");
    assert_eq!(lm.or_neg_inf(), f64::NEG_INFINITY);
    let lm = zeta::log_abs_zeta(&Height::fast(1000.0)).unwrap();
    assert!(matches!(lm, LogModulus::Finite(_)));
}

#[test]
fn heights_are_validated() {
    assert!(zeta::zeta_critical(&Height::fast(1.0)).is_err());
    assert!(zeta::zeta_critical(&Height::fast(f64::NAN)).is_err());
    assert!(zeta::zeta_critical(&Height::fast(2.0 * zeta::MAX_HEIGHT)).is_err());
    assert!(zeta::sample_tau(5.0, 10, 1).is_err());
}

#[test]
fn sampled_heights_are_uniform_on_t_2t() {
    let big_t = 1e6;
    let n = 10_000;
    let hs = zeta::sample_tau(big_t, n, 7).unwrap();
    assert!(hs.iter().all(|h| h.t >= big_t && h.t <= 2.0 * big_t));
    let mean = hs.iter().map(|h| h.t).sum::<f64>() / n as f64;
    let sigma = big_t / 12f64.sqrt() / (n as f64).sqrt();
    assert!((mean - 1.5 * big_t).abs() < 3.0 * sigma, "mean {mean}");
}

proptest! {
    #[test]
    fn sampling_is_index_addressable(seed in any::<u64>(), n in 1usize..50) {
        let a = zeta::sample_tau(1e5, n, seed).unwrap();
        let b = zeta::sample_tau(1e5, n + 5, seed).unwrap();
        prop_assert_eq!(&a[..], &b[..n]);
        for (i, h) in a.iter().enumerate() {
            prop_assert_eq!(h.t, zeta::tau_at(1e5, seed, i as u64));
        }
    }

    #[test]
    fn theta_dd_tracks_theta(t in 1e3f64..1e7) {
        let d = zeta::theta_dd(t).to_f64() - zeta::theta(t);
        prop_assert!(d.abs() < 1e-12 * zeta::theta(t).abs());
    }
}
