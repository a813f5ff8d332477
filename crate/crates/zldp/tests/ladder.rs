use proptest::prelude::*;
use zldp::ladder::{self, build_ladder_from_t, BarrierParams, LadderConfig, LevelInputs};
use zldp::ledger::ConstantsLedger;

fn setup(t: f64, alpha: f64) -> (LadderConfig, BarrierParams<f64>) {
    let ledger = ConstantsLedger::desk();
    let cfg = build_ladder_from_t(t, alpha, alpha * t, &ledger).unwrap();
    let p = ladder::barrier_params(&alpha, &ledger).unwrap();
    (cfg, p)
}

fn inverse_width_sum(cfg: &LadderConfig, ell: usize) -> f64 {
    (1..=ell).map(|j| 1.0 / cfg.width(j)).sum()
}

#[test]
fn ladder_points_increase_below_t() {
    for t in [2.0, 2.63, 5.0, 20.0, 40.0] {
        for alpha in [0.25, 1.0, 1.75] {
            let Ok(cfg) = build_ladder_from_t(t, alpha, alpha * t, &ConstantsLedger::desk()) else { continue };
            assert!(cfg.l_count >= 1);
            assert_eq!(cfg.points.len(), cfg.l_count + 1);
            assert!(cfg.points.windows(2).all(|w| w[0] < w[1]), "{:?}", cfg.points);
            assert!(cfg.point(cfg.l_count) < t);
            assert!(cfg.next_point <= t && cfg.next_point > cfg.point(cfg.l_count));
            let total: f64 = (1..=cfg.l_count).map(|j| cfg.width(j)).sum();
            assert!((total - cfg.point(cfg.l_count)).abs() < 1e-12);
        }
    }
}

#[test]
fn alpha_outside_range_is_rejected() {
    for alpha in [0.0, 2.0, -1.0, f64::NAN] {
        assert!(build_ladder_from_t(5.0, alpha, 5.0, &ConstantsLedger::desk()).is_err());
    }
    assert!(ladder::build_ladder(2.0, 1.0, 1.0, &ConstantsLedger::desk()).is_err());
}

#[test]
fn corridor_brackets_the_mean_path() {
    for (t, alpha) in [(2.63, 1.0), (20.0, 0.5), (20.0, 1.0), (40.0, 1.5)] {
        let (cfg, p) = setup(t, alpha);
        let cor = ladder::corridor(&cfg, &p);
        for l in 1..=cfg.l_count {
            let mid = cfg.kappa * cfg.points[l];
            assert!(cor.lower[l] < mid && mid < cor.upper[l], "t={t} α={alpha} ℓ={l}");
            assert!(cor.c_prod[l] >= cor.c_prod[l - 1]);
        }
    }
}

#[test]
fn level_one_tuples_match_direct_enumeration() {
    let (cfg, p) = setup(20.0, 1.0);
    let cor = ladder::corridor(&cfg, &p);
    let d = cfg.width(1);
    for w in [cor.lower[1], (cfg.kappa * cfg.points[1]).floor(), cor.upper[1] - 0.5] {
        let ts = ladder::tuple_set(1, w, &cfg, &p).unwrap();
        let lo = (cor.lower[1] - 1.0).max(w - 1.0);
        let hi = (cor.upper[1] + 1.0).min(w + 1.0);
        let want: Vec<Vec<i64>> = ((lo * d).floor() as i64 - 2..=(hi * d).ceil() as i64 + 2)
            .filter(|&k| {
                let u = k as f64 / d;
                u >= lo && u <= hi
            })
            .map(|k| vec![k])
            .collect();
        assert_eq!(ts.tuples, want, "w = {w}");
        assert_eq!(ts.bound_violations, 0);
    }
    assert!(ladder::tuple_set(1, cor.upper[1] + 5.0, &cfg, &p).is_err());
    assert!(ladder::tuple_set(0, 0.0, &cfg, &p).is_err());
}

#[test]
fn desk_ladder_at_t_twenty_breaks_the_width_premise_at_level_three() {
    let (cfg, _) = setup(20.0, 1.0);
    assert!(cfg.l_count >= 3);
    assert!(inverse_width_sum(&cfg, 2) <= 1.0);
    assert!(inverse_width_sum(&cfg, 3) > 1.0);
}

proptest! {
    #[test]
    fn good_sets_are_nested_and_partition_h(
        rows in prop::collection::vec(
            (prop::collection::vec((-5.0f64..25.0, 0.0f64..30.0, 0.0f64..2.0, 0.0f64..2.0), 3), 5.0f64..30.0),
            1..40,
        ),
    ) {
        let (cfg, p) = setup(20.0, 1.0);
        let cor = ladder::corridor(&cfg, &p);
        let traces: Vec<_> = rows
            .iter()
            .enumerate()
            .map(|(i, (lv, log_z))| {
                let levels: Vec<LevelInputs> = lv
                    .iter()
                    .map(|&(s, inc, zd, zm)| LevelInputs { s, increment_abs: inc, zeta_damped: zd, zeta_mollified: zm })
                    .collect();
                ladder::classify(i as f64, *log_z, &levels, &cfg, &p, &cor).unwrap()
            })
            .collect();
        for tr in &traces {
            for w in tr.membership.windows(2) {
                prop_assert!(!w[1].g || w[0].g);
                prop_assert!(!w[1].a || w[0].a);
                prop_assert!(!w[1].b || w[0].b);
            }
        }
        let r = ladder::decompose(&traces, cfg.l_count).unwrap();
        prop_assert_eq!(r.pieces_total(), r.count_h);
        prop_assert_eq!(r.count_h, traces.iter().filter(|t| t.h).count());
    }

    #[test]
    fn corridor_paths_land_in_tuple_cells(
        (t, ell) in prop_oneof![Just((2.63, 1usize)), Just((20.0, 1)), Just((20.0, 2))],
        fr in prop::collection::vec(0.0f64..1.0, 3),
        top in 0.0f64..1.0,
    ) {
        let (cfg, p) = setup(t, 1.0);
        prop_assert!(inverse_width_sum(&cfg, ell) <= 1.0);
        let cor = ladder::corridor(&cfg, &p);
        let w = (cfg.kappa * cfg.points[ell]).floor().clamp(cor.lower[ell].ceil(), cor.upper[ell].floor());
        // partial sums inside the corridor, the last one in (w, w+1]
        let mut s: Vec<f64> = (1..ell).map(|j| cor.lower[j] + fr[j - 1] * (cor.upper[j] - cor.lower[j])).collect();
        let hi = (w + 1.0).min(cor.upper[ell]);
        let lo = w.max(cor.lower[ell]);
        prop_assume!(hi > lo);
        s.push(lo + (1.0 - top) * (hi - lo));
        let inc: Vec<f64> = (0..ell).map(|j| s[j] - if j == 0 { 0.0 } else { s[j - 1] }).collect();
        let ts = ladder::tuple_set(ell, w, &cfg, &p).unwrap();
        prop_assert!(ts.covers(&ts.index(), &inc), "increments {:?} uncovered", inc);
    }
}
