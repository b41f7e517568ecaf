mod common;

use common::{dual_oracle, fv, random_linear_set, random_noisy_set};
use proptest::prelude::*;
use wsn_hids::svm::{rbf_kernel, train, FeatureVector, KernelParams, Label, SvmModel};

fn assert_kkt(model: &SvmModel) {
    let c = model.c_param();
    let mut balance = 0.0;
    for (sv, &a) in model.support_vectors().iter().zip(model.alphas()) {
        assert!(a > 0.0 && a <= c, "alpha {a} outside (0, {c}]");
        balance += a * sv.y.sign();
    }
    assert!(balance.abs() <= 1e-6, "sum alpha*y = {balance}");
}

#[test]
fn separable_ten_point_sets_match_oracle() {
    let kernel = KernelParams::rbf(1.0);
    for seed in 0..20 {
        let data = random_linear_set(seed, 10, 2);
        let model = train(&data, 10.0, kernel).unwrap();
        let (_, oracle) = dual_oracle(&data, 10.0, &kernel, 20_000);
        let smo = model.dual_objective();
        assert!((smo - oracle).abs() <= 1e-4, "seed {seed}: smo {smo} oracle {oracle}");
        assert_kkt(&model);
    }
}

#[test]
fn noisy_sets_match_oracle_with_bounded_multipliers() {
    // Random labels force multipliers to the upper bound C.
    let kernel = KernelParams::rbf(0.5);
    for seed in 100..110 {
        let data = random_noisy_set(seed, 12, 3);
        let model = train(&data, 1.0, kernel).unwrap();
        let (_, oracle) = dual_oracle(&data, 1.0, &kernel, 20_000);
        assert!((model.dual_objective() - oracle).abs() <= 1e-4, "seed {seed}");
        assert_kkt(&model);
    }
}

#[test]
fn wide_margin_set_keeps_few_support_vectors() {
    // Two well separated blobs of 25 points each.
    let mut data = Vec::new();
    for i in 0..25 {
        let t = i as f64 / 25.0;
        data.push(wsn_hids::svm::Sample::new(
            i,
            fv(&[0.1 + 0.2 * t, 0.1 + 0.15 * (1.0 - t)]),
            Label::Positive,
        ));
        data.push(wsn_hids::svm::Sample::new(
            100 + i,
            fv(&[0.8 + 0.15 * t, 0.75 + 0.2 * t]),
            Label::Negative,
        ));
    }
    let kernel = KernelParams::rbf(1.0);
    let model = train(&data, 10.0, kernel).unwrap();
    assert!(model.support_vectors().len() < 50);

    let (oracle_alpha, _) = dual_oracle(&data, 10.0, &kernel, 20_000);
    let zeros = oracle_alpha.iter().filter(|a| **a < 1e-6).count();
    assert!(zeros > 0, "oracle should leave interior points at zero");
    for s in &data {
        assert_eq!(model.decide(&s.x).unwrap().0, s.y);
    }
}

#[test]
fn unbounded_support_vectors_sit_on_the_margin() {
    for seed in 0..20 {
        let data = random_linear_set(seed, 12, 3);
        let model = train(&data, 10.0, KernelParams::rbf(0.7)).unwrap();
        for (sv, &a) in model.support_vectors().iter().zip(model.alphas()) {
            if a < model.c_param() {
                let v = model.decision_value(&sv.x).unwrap();
                assert!(
                    (sv.y.sign() * v - 1.0).abs() <= 1e-3,
                    "seed {seed}: y*f = {}",
                    sv.y.sign() * v
                );
            }
        }
    }
}

#[test]
fn training_is_deterministic() {
    let data = random_noisy_set(7, 12, 2);
    let a = train(&data, 10.0, KernelParams::rbf(0.5)).unwrap();
    let b = train(&data, 10.0, KernelParams::rbf(0.5)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.bias().to_bits(), b.bias().to_bits());
}

#[test]
fn kernel_is_symmetric_on_seeded_pairs() {
    let k = KernelParams::rbf(0.8);
    for seed in 0..100u64 {
        let pts = random_noisy_set(seed, 2, 4);
        let ab = rbf_kernel(&pts[0].x, &pts[1].x, &k).unwrap();
        let ba = rbf_kernel(&pts[1].x, &pts[0].x, &k).unwrap();
        assert_eq!(ab, ba);
    }
}

proptest! {
    #[test]
    fn kernel_stays_in_unit_interval(
        a in proptest::collection::vec(-50.0f64..50.0, 3),
        b in proptest::collection::vec(-50.0f64..50.0, 3),
        sigma in 0.05f64..10.0,
        squared in any::<bool>(),
    ) {
        let k = KernelParams { sigma, squared_norm: squared };
        let x1 = FeatureVector::new(a.clone()).unwrap();
        let x2 = FeatureVector::new(b.clone()).unwrap();
        let v = rbf_kernel(&x1, &x2, &k).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        if a == b {
            prop_assert_eq!(v, 1.0);
        } else if x1.distance(&x2).unwrap() / sigma < 1.0 {
            // Far-apart points may underflow to zero; nearby ones must stay
            // strictly inside (0, 1).
            prop_assert!(v > 0.0 && v < 1.0);
        }
    }

    #[test]
    fn trained_models_satisfy_kkt_and_match_oracle(seed in 0u64..10_000, n in 4usize..=12, dim in 2usize..=3) {
        let data = random_noisy_set(seed, n, dim);
        let kernel = KernelParams::rbf(0.6);
        let model = train(&data, 2.0, kernel).unwrap();
        let c = model.c_param();
        let balance: f64 = model.support_vectors().iter().zip(model.alphas()).map(|(s, a)| a * s.y.sign()).sum();
        prop_assert!(balance.abs() <= 1e-6);
        prop_assert!(model.alphas().iter().all(|&a| a > 0.0 && a <= c));
        prop_assert!(model.support_vectors().len() <= data.len());
        let (_, oracle) = dual_oracle(&data, 2.0, &kernel, 20_000);
        prop_assert!((model.dual_objective() - oracle).abs() <= 1e-4);
    }
}
