mod support;

use aoi_core::phtype::{expm_action, ph_cdf, ph_moment, ph_pdf};
use aoi_core::{erlang_ph, PhaseType};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{adaptive_simpson, erlang_cdf_poisson, taylor_expm};

fn random_subgenerator(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut out = rng.random::<f64>() * 2.0 + 0.1;
        for j in 0..n {
            if i != j {
                s[(i, j)] = rng.random::<f64>();
                out += s[(i, j)];
            }
        }
        s[(i, i)] = -out;
    }
    s
}

fn random_ph(n: usize, seed: u64) -> PhaseType {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
    let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.01).collect();
    let total: f64 = w.iter().sum();
    let sigma = DVector::from_iterator(n, w.iter().map(|x| x / total));
    PhaseType::new(sigma, random_subgenerator(n, seed)).unwrap()
}

#[test]
fn expm_action_matches_taylor_reference() {
    let s = random_subgenerator(7, 11);
    let v = DVector::from_fn(7, |i, _| (i + 1) as f64 / 7.0);
    for x in [0.0, 0.01, 0.3, 1.0, 4.0, 25.0] {
        let reference = taylor_expm(&s, x).transpose() * &v;
        let ours = expm_action(&s, x, &v).unwrap();
        let err = (&ours - &reference).amax();
        assert!(err < 1e-12 * reference.amax().max(1e-300) + 1e-15, "x={x} err={err}");
    }
}

#[test]
fn erlang_ten_cdf_at_its_mean() {
    // per-phase rate 2, mean 5
    let e = erlang_ph(0.2, 10).unwrap();
    let x = 5.0;
    let reference = erlang_cdf_poisson(2.0, 10, x);
    assert!((reference - 0.542_070_285_5).abs() < 1e-9);
    assert!((e.cdf(x).unwrap() - reference).abs() < 1e-12);
    for x in [0.5, 2.0, 9.0, 30.0] {
        assert!((e.cdf(x).unwrap() - erlang_cdf_poisson(2.0, 10, x)).abs() < 1e-12);
    }
}

#[test]
fn pdf_is_derivative_of_cdf() {
    let ph = random_ph(5, 3);
    for x in [0.05, 0.4, 1.3, 3.0] {
        let h = 1e-5;
        let numeric = (ph.cdf(x + h).unwrap() - ph.cdf(x - h).unwrap()) / (2.0 * h);
        assert!((numeric - ph.pdf(x).unwrap()).abs() < 1e-7, "x={x}");
    }
}

#[test]
fn moments_match_quadrature() {
    let ph = random_ph(4, 8);
    let upper = 80.0 * ph.mean().unwrap();
    let mass = adaptive_simpson(&|x| ph.pdf(x).unwrap(), 0.0, upper, 1e-11);
    assert!((mass - 1.0).abs() < 1e-8, "mass {mass}");
    for i in 1..=3u32 {
        let q = adaptive_simpson(&|x| x.powi(i as i32) * ph.pdf(x).unwrap(), 0.0, upper, 1e-11);
        let m = ph.moment(i).unwrap();
        assert!(((q - m) / m).abs() < 1e-7, "moment {i}: {q} vs {m}");
    }
}

#[test]
fn free_functions_agree_with_methods() {
    let ph = random_ph(3, 21);
    assert_eq!(ph_pdf(&ph, 0.7).unwrap(), ph.pdf(0.7).unwrap());
    assert_eq!(ph_cdf(&ph, 0.7).unwrap(), ph.cdf(0.7).unwrap());
    assert_eq!(ph_moment(&ph, 2).unwrap(), ph.moment(2).unwrap());
}

#[test]
fn long_horizon_underflows_cleanly() {
    let s = random_subgenerator(6, 5);
    let v = DVector::from_element(6, 1.0);
    let out = expm_action(&s, 1e4, &v).unwrap();
    assert!(out.iter().all(|x| x.is_finite() && *x >= 0.0 && *x < 1e-100));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cdf_is_monotone_within_unit_interval(seed in 0u64..10_000, n in 1usize..6) {
        let ph = random_ph(n, seed);
        let mut prev = 0.0;
        for i in 0..40 {
            let x = 0.05 * i as f64 * i as f64;
            let c = ph.cdf(x).unwrap();
            prop_assert!((0.0..=1.0).contains(&c), "x={} cdf={:e}", x, c);
            prop_assert!(c >= prev - 1e-14);
            prop_assert!(ph.pdf(x).unwrap() >= 0.0);
            prev = c;
        }
    }

    #[test]
    fn erlang_mean_and_variance(rate in 0.05f64..20.0, k in 1u32..30) {
        let e = erlang_ph(rate, k).unwrap();
        let mean = e.mean().unwrap();
        let var = e.moment(2).unwrap() - mean * mean;
        prop_assert!((mean * rate - 1.0).abs() < 1e-10);
        prop_assert!((var * rate * rate * k as f64 - 1.0).abs() < 1e-8);
    }
}
