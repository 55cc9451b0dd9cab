use mnlmix::choice::{oracle_table, random_instance, random_regular_instance};
use mnlmix::learn::{
    learn_from_estimates, learn_from_oracle, learn_from_samples, normalization_polynomial, query_constant,
    solve_normalization, trial_seed, LearnConfig, ModelOracle,
};
use mnlmix::poly::solve;
use mnlmix::reduction::PairSystemInput;
use mnlmix::{MixtureModel, Slate, WeightVector};
use proptest::prelude::*;

fn on_simplex(w: &[f64]) -> bool {
    (w.iter().sum::<f64>() - 1.0).abs() <= 1e-10 && w.iter().all(|&x| x > 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn oracle_round_trip(seed in any::<u64>(), n in 4usize..=8, li in 0usize..3) {
        let lambda = [0.5, 1.0, 2.0][li];
        let m = random_instance(n, lambda, seed, 1e-3).unwrap();
        let r = learn_from_oracle(&mut ModelOracle::new(m.clone()), &LearnConfig::default(), Some(&m)).unwrap();
        prop_assert!(r.max_rel_error.unwrap() <= 1e-8, "{:?}", r);
        prop_assert!(on_simplex(r.a_hat.as_ref().unwrap()) && on_simplex(r.b_hat.as_ref().unwrap()));
    }

    #[test]
    fn sampled_estimates_are_on_the_simplex(seed in any::<u64>()) {
        let m = random_instance(6, 2.0, seed, 1e-2).unwrap();
        let cfg = LearnConfig { seed, ..LearnConfig::default() };
        let r = learn_from_samples(&m, &cfg).unwrap();
        if let (Some(a), Some(b)) = (&r.a_hat, &r.b_hat) {
            prop_assert!(on_simplex(a) && on_simplex(b));
        }
    }
}

#[test]
fn queries_are_linear_in_n() {
    for n in 4..=12 {
        let m = random_instance(n, 2.0, n as u64, 1e-3).unwrap();
        let r = learn_from_oracle(&mut ModelOracle::new(m.clone()), &LearnConfig::default(), Some(&m)).unwrap();
        assert_eq!(r.queries as i64 - 3 * n as i64, query_constant(4), "n = {n}");
        assert_eq!(r.query_tally.block, 28);
    }
}

#[test]
fn exact_values_through_the_sample_pipeline() {
    for seed in 0..20 {
        let m = random_instance(6, 2.0, seed, 1e-3).unwrap();
        let cfg = LearnConfig::default();
        let exact = learn_from_oracle(&mut ModelOracle::new(m.clone()), &cfg, Some(&m)).unwrap();
        let noisy = learn_from_estimates(&mut ModelOracle::new(m.clone()), &cfg, Some(&m)).unwrap();
        let (a, b) = (exact.a_hat.unwrap(), exact.b_hat.unwrap());
        let (na, nb) = (noisy.a_hat.unwrap(), noisy.b_hat.unwrap());
        for (x, y) in a.iter().chain(&b).zip(na.iter().chain(&nb)) {
            assert!((x - y).abs() <= 1e-10, "seed {seed}: {x} vs {y}");
        }
    }
}

fn median_errors(mults: &[u64]) -> Vec<f64> {
    let n = 6;
    mults
        .iter()
        .map(|&mult| {
            let mut errs: Vec<f64> = (0..50u64)
                .map(|t| {
                    let m = random_regular_instance(n, 2.0, trial_seed(9, t), 0.5, 1.5).unwrap();
                    let cfg = LearnConfig {
                        samples: Some(LearnConfig::auto_samples(n, 0.05) * mult),
                        seed: trial_seed(10, t),
                        ..LearnConfig::default()
                    };
                    learn_from_samples(&m, &cfg).unwrap().max_rel_error.unwrap_or(f64::INFINITY)
                })
                .collect();
            errs.sort_by(f64::total_cmp);
            0.5 * (errs[24] + errs[25])
        })
        .collect()
}

#[test]
fn median_error_decreases_with_samples() {
    let med = median_errors(&[1, 4, 16, 64]);
    assert!(med.windows(2).all(|w| w[1] <= w[0]), "{med:?}");
}

#[test]
fn doubling_samples_shrinks_error_by_root_two() {
    let med = median_errors(&[64, 128]);
    let ratio = med[1] / med[0];
    assert!((0.6..=0.85).contains(&ratio), "{med:?}");
}

#[test]
fn normalization_rejects_inadmissible_roots() {
    let mut rejected = 0;
    for seed in 0..100 {
        let n = 6;
        let m = random_instance(n, 2.0, seed, 1e-3).unwrap();
        let slates = [Slate::full(n), Slate::without(n, 0), Slate::without(n, 4), Slate::without(n, 5)];
        let o = oracle_table(&m, &slates).unwrap();
        let tail: Vec<_> = (4..n).map(|j| PairSystemInput::from_oracle(&o, 0, j, false).unwrap()).collect();
        let mass: f64 = m.b().as_slice()[..4].iter().sum();
        let amass: f64 = m.a().as_slice()[..4].iter().sum();
        let b1_rel = m.b()[0] / mass;
        let s = solve_normalization(b1_rel, m.a()[0] / amass, &tail).unwrap();
        assert!((s - mass).abs() <= 1e-9, "seed {seed}");
        let poly = normalization_polynomial(b1_rel, &tail).unwrap();
        for r in solve(&poly).unwrap().real_roots_in(0.0, 1.0) {
            if (r - mass).abs() <= 1e-6 {
                continue;
            }
            let x = b1_rel * r;
            let inadmissible = tail.iter().any(|t| t.partner(&x).map_or(true, |bj| !(bj > 0.0 && bj < 1.0) || {
                let aj = t.full_j - t.lambda * bj;
                !(aj > 0.0 && aj < 1.0)
            }));
            if inadmissible {
                rejected += 1;
            }
        }
    }
    assert!(rejected > 0, "no instance exercised the rejection");
}

#[test]
fn three_item_block_violation_is_flagged() {
    // Symmetric 3-item instances have a second admissible solution.
    let a = WeightVector::new(vec![0.05, 0.05, 0.9]).unwrap();
    let b = WeightVector::new(vec![0.025, 0.025, 0.95]).unwrap();
    let m = MixtureModel::new(a, b, 0.5).unwrap();
    let cfg = LearnConfig { k: 3, ..LearnConfig::default() };
    let r = learn_from_oracle(&mut ModelOracle::new(m.clone()), &cfg, Some(&m)).unwrap();
    assert!(r.status.contains(&"k-identifiability-violation"), "{:?}", r.status);
    assert!(r.status.contains(&"k3-not-generally-identifiable"));
}
