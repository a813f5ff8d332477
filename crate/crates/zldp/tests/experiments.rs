use proptest::prelude::*;
use zldp::experiments::{self as ex, ZetaSamples};
use zldp::ledger::ConstantsLedger;

fn synthetic(log_abs: Vec<f64>) -> ZetaSamples {
    let n = log_abs.len();
    ZetaSamples { big_t: 1e6, seed: 0, taus: vec![0.0; n], log_abs, near_zero: 0 }
}

/// Composite Simpson on [a, b] with n (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

#[test]
fn gaussian_layer_integral_matches_quadrature() {
    let t = 2.6;
    for (beta, a, b) in [(0.5, -3.0, 1.0), (1.0, 0.0, 2.0), (2.0, 1.5, 6.0), (3.5, -1.0, 8.0)] {
        let want = simpson(|v| (beta * v - v * v / t).exp() / t.sqrt(), a, b, 20_000);
        let got = ex::gaussian_layer_integral(beta, t, a, b);
        assert!((got / want - 1.0).abs() < 1e-9, "β={beta} [{a},{b}]: {got} vs {want}");
    }
}

#[test]
fn closed_form_references() {
    assert_eq!(ex::beta_c(0.0), 2.0);
    assert!((ex::beta_c(1.0) - 8f64.sqrt()).abs() < 1e-15);
    let t = 3.0;
    assert!((ex::m_of_t(t, 0.0) - (t - t.ln() / 4.0)).abs() < 1e-15);
    assert!((ex::gaussian_tail_ref(0.0, 4.0) - 0.5).abs() < 1e-15);
}

#[test]
fn window_grid_covers_the_window() {
    for (big_t, theta, a) in [(1e4, 0.0, 1.0), (1e6, 1.0, 1.0), (1e6, 0.5, 0.25)] {
        let g = ex::window_grid(big_t, theta, a);
        assert!((g.spacing * g.n_int as f64 - 2.0 * g.half).abs() < 1e-9 * g.half);
        assert!(g.spacing <= a / f64::ln(big_t) * (1.0 + 1e-12));
    }
}

#[test]
fn zero_beta_moment_is_one_and_level_sets_decrease() {
    let m = ex::short_interval_moments(1e5, 0.0, &[0.0, 1.0], 20, 3, 1.0).unwrap();
    for z in &m.results[0].per_window {
        assert!((z - 1.0).abs() < 1e-12, "𝒵_0 = {z}");
    }
    let ls = &m.results[0].level_set;
    assert!(ls.iter().all(|&(_, s)| (0.0..=1.0).contains(&s)));
    assert!(ls.windows(2).all(|w| w[1].1 <= w[0].1), "{ls:?}");
    assert!(ex::short_interval_moments(1e5, 3.0, &[1.0], 5, 3, 1.0).is_err());
}

#[test]
fn maxima_are_deterministic_per_seed() {
    let a = ex::short_interval_max(1e5, 0.0, &[0.0], 10, 5, 1.0).unwrap();
    let b = ex::short_interval_max(1e5, 0.0, &[0.0], 10, 5, 1.0).unwrap();
    assert_eq!(a.result.per_window, b.result.per_window);
    assert!(a.refinement_gain.iter().all(|&g| g >= 0.0));
}

#[test]
fn pipeline_pieces_partition_h() {
    for alpha in [0.5, 1.0] {
        let r = ex::event_pipeline(1e6, alpha, 500, 9, &ConstantsLedger::desk()).unwrap();
        assert_eq!(r.partition.pieces_total(), r.partition.count_h);
        assert_eq!(r.partition.n, 500);
    }
}

#[test]
fn freezing_fit_recovers_a_planted_break() {
    // c0 + qβ² up to b, then the tangent line
    let (c0, q, b) = (0.1, 0.25, 2.5);
    let betas: Vec<f64> = (1..=16).map(|k| k as f64 * 0.3).collect();
    let f: Vec<f64> = betas.iter().map(|&x| if x <= b { c0 + q * x * x } else { c0 + q * (b * b + 2.0 * b * (x - b)) }).collect();
    let fit = ex::fit_freezing(&betas, &f, 0.5).unwrap();
    assert!((fit.break_point - b).abs() < 0.01, "{}", fit.break_point);
    assert!((fit.q - q).abs() < 1e-3 && (fit.c0 - c0).abs() < 1e-3);
    assert!(ex::fit_freezing(&betas[..2], &f[..2], 0.5).is_err());
}

proptest! {
    #[test]
    fn layered_integral_reproduces_the_sample_moment(
        vals in prop::collection::vec(-6.0f64..6.0, 2..300),
        beta in 0.1f64..3.9,
    ) {
        let s = synthetic(vals);
        let m = ex::moment_from_samples(&s, beta).unwrap();
        prop_assert!(m.layered_rel_diff < 1e-10, "{} vs {}", m.layered, m.m_hat);
        let p = m.pieces;
        let total = p.negative + p.small + p.dominant + p.upper;
        prop_assert!((total / m.layered - 1.0).abs() < 1e-10);
        prop_assert!(p.negative <= p.negative_bound * (1.0 + 1e-12));
    }

    #[test]
    fn tail_frequency_decreases_in_v(
        vals in prop::collection::vec(-4.0f64..8.0, 1..200),
        v in -5.0f64..9.0,
        dv in 0.0f64..3.0,
    ) {
        let s = synthetic(vals);
        let a = ex::tail_at(&s, 1.0, v);
        let b = ex::tail_at(&s, 1.0, v + dv);
        prop_assert!(b.p_hat <= a.p_hat);
        prop_assert_eq!(a.n_exceed, s.log_abs.iter().filter(|&&x| x > v).count());
        prop_assert_eq!(a.wide_interval, a.n_exceed == 0);
    }
}
