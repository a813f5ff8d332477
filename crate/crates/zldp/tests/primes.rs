use proptest::prelude::*;
use zldp::primes::{self, PrimeRange};

fn is_prime_trial(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

#[test]
fn pi_of_one_hundred() {
    let oracle = (1..=100).filter(|&n| is_prime_trial(n)).count();
    assert_eq!(oracle, 25);
    assert_eq!(primes::sieve_primes(100).unwrap().len(), oracle);
}

#[test]
fn adjacent_ranges_partition_the_primes() {
    let cuts = [1.0, 10.0, 97.0, 1000.0, 5000.0];
    let mut joined = Vec::new();
    for w in cuts.windows(2) {
        joined.extend(primes::primes_in_range(&PrimeRange::between(w[0], w[1])).unwrap());
    }
    assert_eq!(joined, primes::sieve_primes(5000).unwrap());
}

#[test]
fn up_to_includes_prime_endpoint() {
    let ps = primes::primes_in_range(&PrimeRange::up_to(97.0)).unwrap();
    assert_eq!(ps.last(), Some(&97));
    assert!(PrimeRange::new(2.0, 1.0).is_err());
}

proptest! {
    #[test]
    fn sieve_matches_trial_division(n in 2u64..5000) {
        let ps = primes::sieve_primes(n).unwrap();
        prop_assert_eq!(ps.binary_search(&n).is_ok(), is_prime_trial(n));
    }

    #[test]
    fn factorization_multiplies_back(n in 1u64..50_000_000) {
        let f = primes::factorize(n);
        let prod: u64 = f.iter().map(|&(p, e)| p.pow(e)).product();
        prop_assert_eq!(prod, n);
        prop_assert!(f.iter().all(|&(p, _)| is_prime_trial(p)));
        prop_assert!(f.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn mobius_is_multiplicative(a in 1u64..20_000, b in 1u64..20_000) {
        let g = (1..=a.min(b)).rev().find(|d| a % d == 0 && b % d == 0).unwrap();
        prop_assume!(g == 1);
        let (ma, mb) = (primes::mobius(a).unwrap(), primes::mobius(b).unwrap());
        prop_assert_eq!(primes::mobius(a * b).unwrap(), ma * mb);
    }

    #[test]
    fn omega_adds_one_per_prime_factor(m in 1u64..100_000, i in 0usize..168) {
        let p = primes::sieve_primes(1000).unwrap()[i];
        let range = PrimeRange::between(1.0, 1000.0);
        prop_assert_eq!(primes::omega_in_range(m * p, &range), primes::omega_in_range(m, &range) + 1);
        let outside = PrimeRange::between(1000.0, 1e6);
        prop_assert_eq!(primes::omega_in_range(m * p, &outside), primes::omega_in_range(m, &outside));
    }
}
