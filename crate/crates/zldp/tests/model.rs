use proptest::prelude::*;
use zldp::model::{self, ModelBlock, PhaseAssignment};
use zldp::primes::{self, PrimeRange};

const N: usize = 200_000;

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

#[test]
fn surrogate_moments_match_prime_sums() {
    let block = ModelBlock::new(1, PrimeRange::between(10.0, 500.0)).unwrap();
    let ps: Vec<u64> = primes::sieve_primes(500).unwrap().into_iter().filter(|&p| p > 10).collect();
    assert_eq!(block.primes, ps);
    // E cos = 0, E cos² = 1/2, E cos³ = 0, E cos⁴ = 3/8
    let mean: f64 = ps.iter().map(|&p| 1.0 / (4.0 * p as f64)).sum();
    let var: f64 = ps.iter().map(|&p| 1.0 / (2.0 * p as f64) + (3.0 / 8.0 - 0.25) / (4.0 * (p * p) as f64)).sum();
    let g = block.surrogate();
    assert!((g.mean - mean).abs() < 1e-14);
    assert!((g.variance - var).abs() < 1e-14);
    assert!((block.width() - 4.0 * mean).abs() < 1e-13);

    let ys = block.samples(N, 5);
    let (m, v) = mean_var(&ys);
    assert!((m - mean).abs() < 4.0 * (var / N as f64).sqrt(), "mean {m} vs {mean}");
    assert!((v / var - 1.0).abs() < 0.02, "variance {v} vs {var}");
}

#[test]
fn disjoint_blocks_are_uncorrelated() {
    let a = ModelBlock::new(1, PrimeRange::up_to(100.0)).unwrap();
    let b = ModelBlock::new(2, PrimeRange::between(100.0, 1000.0)).unwrap();
    let xs = a.samples(N, 9);
    let ys = b.samples(N, 9);
    let (ma, va) = mean_var(&xs);
    let (mb, vb) = mean_var(&ys);
    let cov = xs.iter().zip(&ys).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / N as f64;
    let corr = cov / (va * vb).sqrt();
    assert!(corr.abs() < 4.0 / (N as f64).sqrt(), "corr {corr}");
}

#[test]
fn random_multiplicative_gram_matrix_is_identity() {
    let n = 100_000;
    let mut gram = vec![vec![num_complex::Complex64::new(0.0, 0.0); 12]; 12];
    for i in 0..n as u64 {
        let a = PhaseAssignment::for_sample(21, i);
        let z: Vec<_> = (1..=12).map(|k| model::sample_zn(k, &a).unwrap()).collect();
        for x in 0..12 {
            for y in 0..12 {
                gram[x][y] += z[x] * z[y].conj();
            }
        }
    }
    for x in 0..12 {
        for y in 0..12 {
            let g = gram[x][y] / n as f64;
            if x == y {
                assert!((g.re - 1.0).abs() < 1e-12 && g.im.abs() < 1e-12);
            } else {
                assert!(g.norm() < 5.0 / (n as f64).sqrt(), "⟨Z_{}, Z_{}⟩ = {g}", x + 1, y + 1);
            }
        }
    }
    assert!(model::sample_zn(0, &PhaseAssignment::new(1)).is_err());
}

#[test]
fn phases_depend_only_on_seed_and_prime() {
    let a = PhaseAssignment::for_sample(3, 17);
    assert_eq!(a.theta(101), PhaseAssignment::for_sample(3, 17).theta(101));
    assert_ne!(a.theta(101), a.theta(103));
    assert!((0.0..2.0 * std::f64::consts::PI).contains(&a.theta(7)));
    let block = ModelBlock::new(1, PrimeRange::up_to(50.0)).unwrap();
    assert_eq!(block.samples(10, 4), block.samples(10, 4));
}

#[test]
fn tilted_sampler_reweights_to_the_plain_law() {
    let block = ModelBlock::new(1, PrimeRange::between(100.0, 1000.0)).unwrap();
    let g = block.surrogate();
    let w = model::tilted_sampler(&block, 2.0, 100_000, 8).unwrap();
    let (one, se1) = w.weighted_mean(|_| 1.0);
    let (m, sem) = w.weighted_mean(|y| y);
    assert!((one - 1.0).abs() < 4.0 * se1, "{one} ± {se1}");
    assert!((m - g.mean).abs() < 4.0 * sem, "{m} ± {sem} vs {}", g.mean);
    assert!(model::tilted_sampler(&block, 1e6, 10, 1).is_err());
}

#[test]
fn mean_matching_lambda_hits_the_target() {
    let block = ModelBlock::new(1, PrimeRange::between(100.0, 1000.0)).unwrap();
    let g = block.surrogate();
    for target in [g.mean - 2.0 * g.sd(), g.mean + 3.0 * g.sd()] {
        let l = model::mean_matching_lambda(&block, target).unwrap();
        assert!((block.tilted_mean(l) - target).abs() < 1e-9);
    }
}

proptest! {
    #[test]
    fn log_mgf_is_convex_with_matching_derivative(lambda in -5.0f64..5.0) {
        let block = ModelBlock::new(1, PrimeRange::between(20.0, 200.0)).unwrap();
        let h = 1e-4;
        let d = (block.log_mgf(lambda + h) - block.log_mgf(lambda - h)) / (2.0 * h);
        prop_assert!((d - block.tilted_mean(lambda)).abs() < 1e-6);
        prop_assert!(block.tilted_mean(lambda + 0.1) > block.tilted_mean(lambda));
        prop_assert!(block.log_mgf(0.0).abs() < 1e-14);
    }
}
