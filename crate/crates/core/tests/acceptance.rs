//! Acceptance suite: one pass/fail line per criterion, non-zero exit if any fail.

use std::time::{Duration, Instant};

use mnlmix::choice::{random_instance, sample_empirical, slate_distribution};
use mnlmix::experiments::{
    counterexample, discriminant_max, identifiability_sweep, sample_complexity, success_rate, three_roots,
    DiscriminantConfig, SampleComplexityConfig, SweepConfig, THREE_ROOTS_TOL,
};
use mnlmix::learn::{learn_from_oracle, trial_seed, LearnConfig, ModelOracle};
use mnlmix::poly::{count_real_roots_sturm, max_relative_residual, solve, Polynomial, RealPolynomial};
use mnlmix::Slate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1() -> Outcome {
    let r = counterexample().expect("counterexample");
    outcome(
        r.exact_ok && r.double_ok,
        format!("exact solutions {}, double solutions {}, exact ok {}, double ok {}", r.exact_solutions.len(), r.double_solutions.len(), r.exact_ok, r.double_ok),
    )
}

fn criterion_2() -> Outcome {
    let r = three_roots().expect("three roots");
    outcome(r.matches, format!("roots {:?} (tolerance {THREE_ROOTS_TOL})", r.roots))
}

fn criterion_3() -> Outcome {
    let r = discriminant_max(&DiscriminantConfig { lambda: 2.0, restarts: 500, seed: 0, start_points: Vec::new() }).expect("search");
    let v = r.best_value;
    outcome((-0.0035..=-0.0029).contains(&v) && v < 0.0, format!("best discriminant {v:.6e} at {:?}", r.argmax))
}

fn criterion_4() -> Outcome {
    let mut worst = 0.0f64;
    let mut failures = 0;
    let mut offsets = std::collections::BTreeSet::new();
    for n in [4usize, 5, 6, 8] {
        for lambda in [0.5, 1.0, 2.0] {
            for t in 0..100u64 {
                let m = random_instance(n, lambda, trial_seed(n as u64 * 1000 + (lambda * 10.0) as u64, t), 1e-3).expect("instance");
                match learn_from_oracle(&mut ModelOracle::new(m.clone()), &LearnConfig::default(), Some(&m)) {
                    Ok(r) => {
                        let e = r.max_rel_error.unwrap_or(f64::INFINITY);
                        worst = worst.max(e);
                        if !(e <= 1e-8) {
                            failures += 1;
                        }
                        offsets.insert(r.queries as i64 - 3 * n as i64);
                    }
                    Err(_) => failures += 1,
                }
            }
        }
    }
    outcome(
        failures == 0 && offsets.len() == 1,
        format!("1200 runs, failures {failures}, worst error {worst:.3e}, queries - 3n in {offsets:?}"),
    )
}

fn criterion_5() -> Outcome {
    let (n, eps) = (6, 0.05);
    let cfg = SampleComplexityConfig { n, lambda: 2.0, trials: 50, ..SampleComplexityConfig::default() };
    let samples = LearnConfig::auto_samples(n, eps);
    let rate = success_rate(n, 2.0, eps, samples, 50, cfg.seed, (cfg.c_low, cfg.c_high)).expect("success rate");
    let sc = sample_complexity(&cfg).expect("sample complexity");
    let slope = sc.slope.unwrap_or(f64::NAN);
    let curve: Vec<String> = sc.rows.iter().map(|r| format!("eps {} N* {}", r.eps, r.n_star)).collect();
    outcome(
        rate >= 0.9 && (1.7..=2.3).contains(&slope),
        format!("success {:.0}% at N = {samples}; slope {slope:.3} [{}]", 100.0 * rate, curve.join(", ")),
    )
}

fn min_separation(p: &RealPolynomial) -> f64 {
    let r = solve(p).expect("solve").roots().to_vec();
    let mut best = f64::INFINITY;
    for i in 0..r.len() {
        for j in i + 1..r.len() {
            best = best.min((r[i] - r[j]).norm());
        }
    }
    best
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut checked, mut skipped, mut mismatches, mut worst) = (0, 0, 0, 0.0f64);
    for degree in [3usize, 4] {
        for _ in 0..10_000 {
            let mut c: Vec<f64> = (0..=degree).map(|_| rng.random_range(-1.0..1.0)).collect();
            if c[degree].abs() < 1e-3 {
                c[degree] = 1e-3f64.copysign(c[degree]);
            }
            let p = Polynomial::new(c);
            let roots = solve(&p).expect("solve");
            worst = worst.max(max_relative_residual(&p, &roots));
            if min_separation(&p) < 1e-6 {
                skipped += 1;
                continue;
            }
            checked += 1;
            let lead = p.leading().expect("degree").abs();
            let bound = 1.0 + p.coeffs().iter().map(|x| x.abs() / lead).fold(0.0, f64::max);
            if roots.real_roots_in(-bound, bound).len() != count_real_roots_sturm(&p, -bound, bound).expect("sturm") {
                mismatches += 1;
            }
        }
    }
    let skip_rate = skipped as f64 / 20_000.0;
    outcome(
        mismatches == 0 && skip_rate < 0.01 && worst <= 1e-10,
        format!("checked {checked}, mismatches {mismatches}, skip rate {:.3}%, worst residual {worst:.2e}", 100.0 * skip_rate),
    )
}

fn criterion_7() -> Outcome {
    let r = identifiability_sweep(&SweepConfig { n: 4, lambda: 2.0, trials: 1000, seed: 7, floor: 1e-3 }).expect("sweep");
    let gate_min = r.min_gate_w.min.unwrap_or(0.0);
    let below = r.min_gate_w.decades.iter().filter(|(d, _)| *d < -4).map(|(_, c)| c).sum::<usize>();
    let pair_gate = counterexample().expect("counterexample").pair_gate.abs();
    outcome(
        r.unique == 1000 && gate_min > 1e-4 && pair_gate <= 1e-8,
        format!(
            "unique {}/1000, min gate {gate_min:.2e} ({below} instances below 1e-4, median {:.2e}), counterexample pair gate {pair_gate:.2e}",
            r.unique,
            r.min_gate_w.median.unwrap_or(f64::NAN)
        ),
    )
}

fn criterion_8() -> Outcome {
    let n = 10;
    let samples = 10 * (n as u64).pow(3);
    let bound = (n as f64 / samples as f64).sqrt();
    let slate = Slate::full(n);
    let hits = (0..200u64)
        .filter(|&t| {
            let m = random_instance(n, 2.0, trial_seed(8, t), 1e-3).expect("instance");
            let p = slate_distribution(&m, &slate).expect("distribution");
            let row = sample_empirical(&m, &slate, samples, trial_seed(80, t)).expect("sample");
            let err = row.counts.iter().zip(&p).map(|(&c, q)| (c as f64 / samples as f64 - q).abs()).fold(0.0, f64::max);
            err <= bound
        })
        .count();
    outcome(hits >= 180, format!("{hits}/200 within {bound:.4}"))
}

fn main() {
    let criteria: [(u32, fn() -> Outcome, Duration); 8] = [
        (1, criterion_1, Duration::from_secs(1)),
        (2, criterion_2, Duration::from_secs(1)),
        (3, criterion_3, Duration::from_secs(120)),
        (4, criterion_4, Duration::from_secs(120)),
        (5, criterion_5, Duration::from_secs(900)),
        (6, criterion_6, Duration::from_secs(60)),
        (7, criterion_7, Duration::from_secs(300)),
        (8, criterion_8, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (id, run, budget) in criteria {
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let pass = o.pass && took <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id}: {} {} ({:.2}s of {}s)",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
