use mnlmix::choice::{oracle_table, random_instance, slate_values};
use mnlmix::experiments::counterexample_model;
use mnlmix::identify::{check_identifiability, check_slates, solve_3item, solve_full, CandidateSolution, SolveOptions};
use mnlmix::reduction::back_substitute;
use mnlmix::{OracleTable, Slate};
use proptest::prelude::*;

fn contains(sols: &[CandidateSolution], a: &[f64], b: &[f64], tol: f64) -> bool {
    sols.iter().any(|c| {
        c.residual <= 1e-10 && c.a.iter().zip(a).chain(c.b.iter().zip(b)).all(|(x, y)| (x - y).abs() <= tol)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generating_model_is_found(seed in any::<u64>(), n in 3usize..6, lambda in 0.2f64..6.0) {
        let m = random_instance(n, lambda, seed, 1e-3).unwrap();
        let slates = check_slates(n);
        let o = oracle_table(&m, &slates).unwrap();
        let opts = SolveOptions::default();
        let sols = if n == 3 { solve_3item(&o, &opts).unwrap() } else { solve_full(&o, &slates, &opts).unwrap() };
        prop_assert!(contains(&sols, m.a().as_slice(), m.b().as_slice(), 1e-8));
    }

    #[test]
    fn unit_lambda_solutions_close_under_swap(seed in any::<u64>()) {
        let m = random_instance(4, 1.0, seed, 1e-3).unwrap();
        let slates = check_slates(4);
        let o = oracle_table(&m, &slates).unwrap();
        let sols: Vec<_> = solve_full(&o, &slates, &SolveOptions::default())
            .unwrap()
            .into_iter()
            .filter(|c| c.is_solution(1e-8))
            .collect();
        for s in &sols {
            prop_assert!(sols.iter().any(|t| t.distance(&s.swapped()) <= 1e-6));
        }
    }
}

#[test]
fn non_uniqueness_implies_vanishing_gates() {
    let opts = SolveOptions::default();
    for seed in 0..200 {
        let m = random_instance(4, 2.0, seed, 1e-3).unwrap();
        let r = check_identifiability(&m, &opts).unwrap();
        if r.solutions.len() >= 2 {
            assert!(r.gates.iter().filter(|g| g.kind == "W").all(|g| g.value.is_some_and(|v| v.abs() <= 1e-6)));
        }
    }
    let r = check_identifiability(&counterexample_model().to_f64(), &opts).unwrap();
    assert!(!r.pair_unique);
    let pair = r.gates.iter().find(|g| g.kind == "pair").unwrap();
    assert!(pair.value.unwrap().abs() <= 1e-6);
}

fn residual_vector(o: &OracleTable, b1: f64, b2: f64) -> Option<Vec<f64>> {
    let lambda = *o.lambda();
    let (a1, a2, a3, b3) = back_substitute(&b1, &b2, o.row(&Slate::full(3)).unwrap(), &lambda).ok()?;
    let (a, b) = ([a1, a2, a3], [b1, b2, b3]);
    let mut r = Vec::new();
    for s in Slate::all_within(3) {
        for (x, y) in slate_values(&a, &b, &lambda, &s).iter().zip(o.row(&s).unwrap()) {
            r.push(x - y);
        }
    }
    r.iter().all(|v| v.is_finite()).then_some(r)
}

fn sse(o: &OracleTable, b1: f64, b2: f64) -> f64 {
    residual_vector(o, b1, b2).map_or(f64::INFINITY, |r| r.iter().map(|v| v * v).sum())
}

/// Gauss-Newton on the residual vector with finite-difference Jacobian and
/// backtracking.
fn gauss_newton(o: &OracleTable, mut x: [f64; 2]) -> ([f64; 2], f64) {
    let mut fx = sse(o, x[0], x[1]);
    for _ in 0..100 {
        let Some(r) = residual_vector(o, x[0], x[1]) else { break };
        let h = 1e-7;
        let cols: Vec<Vec<f64>> = (0..2)
            .map(|d| {
                let (mut p, mut m) = (x, x);
                p[d] += h;
                m[d] -= h;
                match (residual_vector(o, p[0], p[1]), residual_vector(o, m[0], m[1])) {
                    (Some(rp), Some(rm)) => rp.iter().zip(&rm).map(|(u, v)| (u - v) / (2.0 * h)).collect(),
                    _ => vec![0.0; r.len()],
                }
            })
            .collect();
        let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        let (g00, g01, g11) = (dot(&cols[0], &cols[0]), dot(&cols[0], &cols[1]), dot(&cols[1], &cols[1]));
        let (q0, q1) = (dot(&cols[0], &r), dot(&cols[1], &r));
        let det = g00 * g11 - g01 * g01;
        if det.abs() < 1e-300 {
            break;
        }
        let mut step = [(g11 * q0 - g01 * q1) / det, (g00 * q1 - g01 * q0) / det];
        let mut improved = false;
        for _ in 0..40 {
            let y = [x[0] - step[0], x[1] - step[1]];
            let fy = sse(o, y[0], y[1]);
            if fy < fx {
                x = y;
                fx = fy;
                improved = true;
                break;
            }
            step = [step[0] / 2.0, step[1] / 2.0];
        }
        if !improved || fx == 0.0 {
            break;
        }
    }
    (x, fx)
}

/// Admissible zeros of the 3-item equations by grid search over `(b_1, b_2)`
/// (step `2e-3`) and Gauss-Newton refinement of every local minimum.
fn brute_force_3item(o: &OracleTable) -> Vec<[f64; 2]> {
    let h = 2e-3;
    let m = (1.0 / h) as usize;
    let vals: Vec<Vec<f64>> = (0..=m).map(|i| (0..=m).map(|j| sse(o, i as f64 * h, j as f64 * h)).collect()).collect();
    let mut out: Vec<[f64; 2]> = Vec::new();
    for i in 1..m {
        for j in 1..m - i {
            let v = vals[i][j];
            let is_min = (-1i64..=1).all(|di| {
                (-1i64..=1).all(|dj| vals[(i as i64 + di) as usize][(j as i64 + dj) as usize] >= v)
            });
            if !is_min || v > 1e-2 {
                continue;
            }
            let (x, fx) = gauss_newton(o, [i as f64 * h, j as f64 * h]);
            let lambda = *o.lambda();
            let Ok((a1, a2, a3, b3)) = back_substitute(&x[0], &x[1], o.row(&Slate::full(3)).unwrap(), &lambda) else {
                continue;
            };
            let admissible = [a1, a2, a3, x[0], x[1], b3].iter().all(|&w| w > 0.0 && w < 1.0);
            if fx <= 1e-20 && admissible && !out.iter().any(|p| (p[0] - x[0]).abs() + (p[1] - x[1]).abs() <= 1e-4) {
                out.push(x);
            }
        }
    }
    out
}

#[test]
fn three_item_solutions_match_grid_search() {
    let opts = SolveOptions::default();
    for seed in 0..50 {
        let m = random_instance(3, 2.0, seed, 1e-2).unwrap();
        let o = oracle_table(&m, &Slate::all_within(3)).unwrap();
        let found: Vec<[f64; 2]> = solve_3item(&o, &opts)
            .unwrap()
            .into_iter()
            .filter(|c| c.is_solution(opts.tol) && c.admissible)
            .map(|c| [c.b[0], c.b[1]])
            .collect();
        let grid = brute_force_3item(&o);
        for g in &grid {
            assert!(found.iter().any(|f| (f[0] - g[0]).abs().max((f[1] - g[1]).abs()) <= 1e-4), "seed {seed}: grid {g:?} vs {found:?}");
        }
        for f in &found {
            assert!(grid.iter().any(|g| (f[0] - g[0]).abs().max((f[1] - g[1]).abs()) <= 1e-4), "seed {seed}: solver {f:?} vs {grid:?}");
        }
    }
}

