use num_bigint::BigInt;
use zldp::ladder;
use zldp::ledger::{ConstantsLedger, Profile};
use zldp::Exact;

fn q(n: i64, d: i64) -> Exact {
    Exact::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn paper_barrier_constants_are_exact() {
    let ledger = ConstantsLedger::paper();
    let two = q(2, 1);
    let million = q(1_000_000, 1);
    for k in [1i64, 7, 20, 33, 39] {
        let a = q(k, 20);
        let b = &two - &a;
        let p = ladder::barrier_params(&a, &ledger).unwrap();
        let s = ladder::s_frak(&a, &ledger);
        assert_eq!(s, q(2_000_000, 1) / (&b * &b * &a * &a));
        assert_eq!(p.a_const, q(1000, 1));
        assert_eq!(p.d_const, q(10_000, 1));
        assert_eq!(p.b_const, q(3, 1) * &million / (q(2, 1) * &a * &b * &b) + q(1, 4) / &a);
        assert_eq!(p.c_const, q(3, 1) * &million / (q(2, 1) * &a * &a * &b) + q(1, 4) / &b);
    }
}

#[test]
fn both_profiles_check_the_same_six_inequalities() {
    let a = q(1, 1);
    let names = |l: &ConstantsLedger| -> Vec<&'static str> {
        let p = ladder::barrier_params(&a, l).unwrap();
        ladder::check_constraints(&p, &a, &ladder::s_frak(&a, l)).iter().map(|c| c.name).collect()
    };
    let paper = names(&ConstantsLedger::paper());
    assert_eq!(paper.len(), 6);
    assert_eq!(paper, names(&ConstantsLedger::desk()));
    assert_eq!(ConstantsLedger::for_profile(Profile::Desk).profile, Profile::Desk);
}
