//! Reproducible numerical experiments.
//!
//! Each experiment is a pure function of its configuration (seed included)
//! and returns a serializable report tagged with a `schema` string. Restarts
//! and trials run in parallel on the ambient rayon pool; results are kept in
//! index order so reports do not depend on the worker count.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::choice::io::{ModelFile, ToNumber};
use crate::choice::{oracle_table, random_instance, random_regular_instance, MixtureModel, Slate, WeightVector};
use crate::error::{Error, Result};
use crate::identify::{check_identifiability, solve_pair_system, CandidateSolution, SolveOptions};
use crate::learn::{learn_from_samples, trial_seed, LearnConfig};
use crate::poly::{count_real_roots_sturm_exact, cubic_discriminant, solve, Polynomial, RealPolynomial, TOLERANCES};
use crate::reduction::{gate_pair, PairSystemInput};
use crate::rng::{derive_seed, stream};
use crate::scalar::{parse_rational, Rational, Scalar};

/// Distance kept from the boundary of the open triangles.
pub const DOMAIN_MARGIN: f64 = 1e-6;
/// Maximized discriminants above this count as positive.
pub const SIGN_TOL: f64 = 1e-12;
/// Initial pattern-search step.
const INITIAL_STEP: f64 = 0.1;
const MIN_STEP: f64 = 1e-9;
const MAX_EVALS: usize = 4000;

/// Mixing parameter of the three-real-roots instance.
pub const THREE_ROOTS_LAMBDA: i64 = 5;
/// `(a'_1, a'_2, b'_1, b'_2)` of the three-real-roots instance, as printed
/// (six significant figures).
pub const THREE_ROOTS_POINT: [&str; 4] = ["0.0389099", "0.000870832", "0.0565171", "0.943483"];
/// Real roots of its deflated cubic.
pub const THREE_ROOTS_EXPECTED: [f64; 3] = [0.043916, 0.164599, 0.281671];
/// Tolerance for matching them (the inputs are truncated).
pub const THREE_ROOTS_TOL: f64 = 1e-3;

/// The two-solution pair-level instance: `λ = 2`,
/// `a = (2/5, 2/5, 1/10, 1/10)`, `b = (3/10, 3/10, 1/5, 1/5)`.
pub fn counterexample_model() -> MixtureModel<Rational> {
    let q = Rational::from_ratio;
    let a = WeightVector::new(vec![q(2, 5), q(2, 5), q(1, 10), q(1, 10)]).expect("valid weights");
    let b = WeightVector::new(vec![q(3, 10), q(3, 10), q(1, 5), q(1, 5)]).expect("valid weights");
    MixtureModel::new(a, b, q(2, 1)).expect("valid model")
}

/// The second pair-level solution `(a_1, a_2, b_1, b_2)` of the counterexample.
pub fn counterexample_second() -> [Rational; 4] {
    let q = Rational::from_ratio;
    [q(5, 19), q(5, 19), q(7, 19), q(7, 19)]
}

/// The three-real-roots instance as a model file. Its third `b` coordinate,
/// `1 - b'_1 - b'_2`, is slightly negative, so the file is formal and does not
/// load as a model.
pub fn three_roots_file() -> ModelFile {
    use crate::choice::io::Number;
    let p: Vec<Rational> = THREE_ROOTS_POINT.iter().map(|s| parse_rational(s).expect("literal")).collect();
    let one = Rational::from_ratio(1, 1);
    let a3 = one.clone() - p[0].clone() - p[1].clone();
    let b3 = one - p[2].clone() - p[3].clone();
    ModelFile {
        n: 3,
        lambda: Some(Number::Text(THREE_ROOTS_LAMBDA.to_string())),
        mu: None,
        a: [p[0].clone(), p[1].clone(), a3].iter().map(ToNumber::to_number).collect(),
        b: [p[2].clone(), p[3].clone(), b3].iter().map(ToNumber::to_number).collect(),
    }
}

/// The `(1, 2)` system of the 3-item model with first coordinates
/// `(a'_1, a'_2)`, `(b'_1, b'_2)` and third coordinates `1 - sum`; the values
/// need not lie on the simplex.
pub fn formal_pair_system<T: Scalar>(point: &[T; 4], lambda: &T) -> PairSystemInput<T> {
    let [a1, a2, b1, b2] = point.clone();
    let a3 = T::one() - a1.clone() - a2.clone();
    let b3 = T::one() - b1.clone() - b2.clone();
    let l = lambda.clone();
    PairSystemInput {
        lambda: l.clone(),
        full_i: a1.clone() + l.clone() * b1.clone(),
        full_j: a2.clone() + l.clone() * b2.clone(),
        drop_j_i: a1.clone() / (a1 + a3.clone()) + l.clone() * b1.clone() / (b1 + b3.clone()),
        drop_i_j: a2.clone() / (a2 + a3) + l * b2.clone() / (b2 + b3),
        pair_i: None,
    }
}

/// `Q_12 = P_12 / (x - b'_1)` for the formal 3-item model. The division
/// remainder is returned alongside (zero in exact arithmetic).
pub fn q12<T: Scalar>(point: &[T; 4], lambda: &T) -> Result<(Polynomial<T>, T)> {
    let p = formal_pair_system(point, lambda).quartic()?;
    Ok(p.divide_linear(&point[2]))
}

/// Discriminant of the monic `Q_12`; `None` when `Q_12` is not a cubic.
pub fn q12_discriminant(point: &[f64; 4], lambda: f64) -> Option<f64> {
    let (q, _) = q12(point, &lambda).ok()?;
    let q = q.trim_relative(TOLERANCES.lead);
    if q.degree() != 3 {
        return None;
    }
    let lead = *q.leading()?;
    cubic_discriminant(&q.scale(&(1.0 / lead))).ok().filter(|d| d.is_finite())
}

fn project_triangle(x: f64, y: f64) -> (f64, f64) {
    let (mut x, mut y) = (x.max(DOMAIN_MARGIN), y.max(DOMAIN_MARGIN));
    let excess = x + y - (1.0 - DOMAIN_MARGIN);
    if excess > 0.0 {
        x -= excess / 2.0;
        y -= excess / 2.0;
        if x < DOMAIN_MARGIN {
            y -= DOMAIN_MARGIN - x;
            x = DOMAIN_MARGIN;
        } else if y < DOMAIN_MARGIN {
            x -= DOMAIN_MARGIN - y;
            y = DOMAIN_MARGIN;
        }
    }
    (x, y)
}

/// Projection of `(a'_1, a'_2, b'_1, b'_2)` onto the product of open
/// triangles `{x, y > 0, x + y < 1}` (shrunk by [`DOMAIN_MARGIN`]).
pub fn project_domain(p: [f64; 4]) -> [f64; 4] {
    let (a1, a2) = project_triangle(p[0], p[1]);
    let (b1, b2) = project_triangle(p[2], p[3]);
    [a1, a2, b1, b2]
}

fn triangle_point<R: Rng>(rng: &mut R) -> (f64, f64) {
    let (u, v): (f64, f64) = (rng.random(), rng.random());
    let (u, v) = if u + v > 1.0 { (1.0 - u, 1.0 - v) } else { (u, v) };
    project_triangle(u, v)
}

/// Compass search with projection: tries `±step` along each coordinate,
/// moves on improvement and halves the step otherwise.
fn pattern_search(start: [f64; 4], f: impl Fn(&[f64; 4]) -> f64) -> ([f64; 4], f64, usize) {
    let mut x = project_domain(start);
    let mut fx = f(&x);
    let mut step = INITIAL_STEP;
    let mut evals = 1;
    while step > MIN_STEP && evals < MAX_EVALS {
        let mut moved = false;
        for d in 0..4 {
            for sign in [1.0, -1.0] {
                let mut y = x;
                y[d] += sign * step;
                let y = project_domain(y);
                let fy = f(&y);
                evals += 1;
                if fy > fx {
                    x = y;
                    fx = fy;
                    moved = true;
                }
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    (x, fx, evals)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminantConfig {
    pub lambda: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Points evaluated as given and then used as extra starts.
    pub start_points: Vec<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartResult {
    pub start: [f64; 4],
    pub argmax: [f64; 4],
    pub value: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscriminantReport {
    pub schema: &'static str,
    pub lambda: f64,
    pub restarts: usize,
    pub seed: u64,
    pub best_value: f64,
    pub argmax: [f64; 4],
    pub positive: bool,
    /// Discriminant at each supplied start point, before projection.
    pub start_point_values: Vec<Option<f64>>,
    pub runs: Vec<RestartResult>,
}

/// Multistart maximization of the monic `Q_12` discriminant over the open
/// triangles for `(a'_1, a'_2)` and `(b'_1, b'_2)`.
pub fn discriminant_max(cfg: &DiscriminantConfig) -> Result<DiscriminantReport> {
    if cfg.restarts == 0 && cfg.start_points.is_empty() {
        return Err(Error::Parameter("need at least one restart".into()));
    }
    if !(cfg.lambda > 0.0) {
        return Err(Error::Parameter(format!("lambda = {} must be positive", cfg.lambda)));
    }
    let lambda = cfg.lambda;
    let objective = |p: &[f64; 4]| q12_discriminant(p, lambda).unwrap_or(f64::NEG_INFINITY);
    let mut starts = cfg.start_points.clone();
    starts.extend((0..cfg.restarts).map(|r| {
        let mut rng = stream(cfg.seed, r as u64);
        let (a1, a2) = triangle_point(&mut rng);
        let (b1, b2) = triangle_point(&mut rng);
        [a1, a2, b1, b2]
    }));
    let runs: Vec<RestartResult> = starts
        .par_iter()
        .map(|&start| {
            let (argmax, value, evaluations) = pattern_search(start, objective);
            RestartResult { start, argmax, value, evaluations }
        })
        .collect();
    let best = runs
        .iter()
        .max_by(|x, y| x.value.total_cmp(&y.value))
        .expect("at least one run");
    Ok(DiscriminantReport {
        schema: "mnlmix.discriminant-max/1",
        lambda,
        restarts: cfg.restarts,
        seed: cfg.seed,
        best_value: best.value,
        argmax: best.argmax,
        positive: best.value > SIGN_TOL,
        start_point_values: cfg.start_points.iter().map(|p| q12_discriminant(p, lambda)).collect(),
        runs,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdConfig {
    /// Ascending mixing parameters.
    pub grid: Vec<f64>,
    pub restarts: usize,
    pub seed: u64,
    /// Bisection steps inside the first sign change.
    pub refine: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdPoint {
    pub lambda: f64,
    pub best_value: f64,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub schema: &'static str,
    pub grid: Vec<ThresholdPoint>,
    pub refinements: Vec<ThresholdPoint>,
    /// `[λ_-, λ_+]` with a non-positive maximum at `λ_-` and a positive one at
    /// `λ_+`.
    pub interval: Option<[f64; 2]>,
}

/// Sign of the maximized discriminant along a `λ` grid, with bisection of
/// the first sign change.
pub fn lambda_threshold(cfg: &ThresholdConfig) -> Result<ThresholdReport> {
    if cfg.grid.is_empty() || cfg.grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("lambda grid must be non-empty and strictly ascending".into()));
    }
    let point = |lambda: f64| -> Result<ThresholdPoint> {
        let r = discriminant_max(&DiscriminantConfig { lambda, restarts: cfg.restarts, seed: cfg.seed, start_points: Vec::new() })?;
        Ok(ThresholdPoint { lambda, best_value: r.best_value, positive: r.positive })
    };
    let grid = cfg.grid.iter().map(|&l| point(l)).collect::<Result<Vec<_>>>()?;
    let mut interval = grid
        .windows(2)
        .find(|w| !w[0].positive && w[1].positive)
        .map(|w| [w[0].lambda, w[1].lambda]);
    let mut refinements = Vec::new();
    if let Some([mut lo, mut hi]) = interval {
        for _ in 0..cfg.refine {
            let mid = 0.5 * (lo + hi);
            let p = point(mid)?;
            if p.positive {
                hi = mid;
            } else {
                lo = mid;
            }
            refinements.push(p);
        }
        interval = Some([lo, hi]);
    }
    Ok(ThresholdReport { schema: "mnlmix.lambda-threshold/1", grid, refinements, interval })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThreeRootsReport {
    pub schema: &'static str,
    pub lambda: f64,
    pub point: [f64; 4],
    pub expected: [f64; 3],
    /// Coefficients of the deflated cubic (ascending, double mode).
    pub cubic: Vec<f64>,
    pub roots: Vec<f64>,
    pub discriminant: f64,
    /// All expected roots found within the tolerance (double mode).
    pub matches: bool,
    pub exact_remainder_zero: bool,
    pub exact_discriminant_positive: bool,
    pub exact_sturm_count: usize,
    /// Both modes report three real roots.
    pub consistent: bool,
}

/// Builds `P_12` of the three-real-roots instance, deflates it at `b'_1` and
/// solves the cubic, in double and exact arithmetic.
pub fn three_roots() -> Result<ThreeRootsReport> {
    let exact: Vec<Rational> = THREE_ROOTS_POINT.iter().map(|s| parse_rational(s).expect("literal")).collect();
    let exact: [Rational; 4] = exact.try_into().expect("four coordinates");
    let lambda_q = Rational::from_ratio(THREE_ROOTS_LAMBDA, 1);
    let (cubic_q, rem_q) = q12(&exact, &lambda_q)?;
    let disc_q = cubic_discriminant(&cubic_q)?;
    let sturm = count_real_roots_sturm_exact(&cubic_q, &Rational::from_ratio(0, 1), &Rational::from_ratio(1, 1))?;

    let point = exact.clone().map(|r| r.to_f64_lossy());
    let lambda = THREE_ROOTS_LAMBDA as f64;
    let sys = formal_pair_system(&point, &lambda);
    let cubic: RealPolynomial = sys.quartic()?.trim_relative(TOLERANCES.lead).deflate(&point[2], TOLERANCES.deflate)?;
    let mut roots = solve(&cubic)?.real_roots();
    roots.sort_by(f64::total_cmp);
    let discriminant = cubic_discriminant(&cubic.scale(&(1.0 / cubic.leading().copied().unwrap_or(1.0))))?;
    let matches = roots.len() == 3
        && THREE_ROOTS_EXPECTED.iter().all(|e| roots.iter().any(|r| (r - e).abs() <= THREE_ROOTS_TOL));
    let exact_positive = disc_q > Rational::from_ratio(0, 1);
    Ok(ThreeRootsReport {
        schema: "mnlmix.three-roots/1",
        lambda,
        point,
        expected: THREE_ROOTS_EXPECTED,
        cubic: cubic.coeffs().to_vec(),
        consistent: exact_positive == (roots.len() == 3) && (sturm == 3) == (roots.len() == 3),
        roots,
        discriminant,
        matches,
        exact_remainder_zero: rem_q == Rational::from_ratio(0, 1),
        exact_discriminant_positive: exact_positive,
        exact_sturm_count: sturm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub schema: &'static str,
    pub lambda: f64,
    pub exact_solutions: Vec<CandidateSolution<Rational>>,
    pub double_solutions: Vec<CandidateSolution>,
    /// Exact mode returns exactly the generating and the second solution.
    pub exact_ok: bool,
    /// Double mode matches both within `1e-9`.
    pub double_ok: bool,
    /// Gate between `P_12` and `P̃_12` deflated at the generating `b_1`.
    pub pair_gate: f64,
}

/// Solves the `(1, 2)` system with its pair slate on the counterexample, in
/// exact and double arithmetic.
pub fn counterexample() -> Result<CounterexampleReport> {
    let model = counterexample_model();
    let slates = [Slate::full(4), Slate::without(4, 0), Slate::without(4, 1), Slate::pair(0, 1)?];
    let opts = SolveOptions::default();
    let table_q = oracle_table(&model, &slates)?;
    let exact: Vec<_> = solve_pair_system(&PairSystemInput::from_oracle(&table_q, 0, 1, true)?, (0, 1), &opts)?
        .into_iter()
        .filter(|c| c.admissible && c.residual == 0.0)
        .collect();
    let table = table_q.to_f64();
    let double: Vec<_> = solve_pair_system(&PairSystemInput::from_oracle(&table, 0, 1, true)?, (0, 1), &opts)?
        .into_iter()
        .filter(|c| c.is_solution(opts.tol))
        .collect();

    let truth = [model.a()[0].clone(), model.a()[1].clone(), model.b()[0].clone(), model.b()[1].clone()];
    let targets = [truth, counterexample_second()];
    let tuple = |c: &CandidateSolution<Rational>| [c.a[0].clone(), c.a[1].clone(), c.b[0].clone(), c.b[1].clone()];
    let exact_ok = exact.len() == 2 && targets.iter().all(|t| exact.iter().any(|c| &tuple(c) == t));
    let double_ok = double.len() == 2
        && targets.iter().all(|t| {
            double.iter().any(|c| {
                let got = [c.a[0], c.a[1], c.b[0], c.b[1]];
                got.iter().zip(t).all(|(g, e)| (g - e.to_f64_lossy()).abs() <= 1e-9)
            })
        });
    let full_table = oracle_table(&model.to_f64(), &Slate::all_within(4))?;
    Ok(CounterexampleReport {
        schema: "mnlmix.counterexample/1",
        lambda: 2.0,
        exact_solutions: exact,
        double_solutions: double,
        exact_ok,
        double_ok,
        pair_gate: gate_pair(&full_table, 0, 1, 0.3)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n: usize,
    pub lambda: f64,
    pub trials: usize,
    pub seed: u64,
    /// Weight floor of the generated instances.
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateSummary {
    pub count: usize,
    pub min: Option<f64>,
    pub median: Option<f64>,
    pub max: Option<f64>,
    /// `(floor(log10 |W|), count)`, ascending.
    pub decades: Vec<(i32, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepHit {
    pub trial: usize,
    pub seed: u64,
    pub codes: Vec<&'static str>,
    pub model: ModelFile,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub schema: &'static str,
    pub n: usize,
    pub lambda: f64,
    pub trials: usize,
    pub seed: u64,
    pub unique: usize,
    pub full_non_unique: usize,
    pub pair_non_unique: usize,
    pub collapsed: usize,
    pub errors: usize,
    pub min_gate_w: GateSummary,
    /// Instances with more than one full solution class.
    pub counterexamples: Vec<SweepHit>,
}

fn summarize(mut v: Vec<f64>) -> GateSummary {
    v.sort_by(f64::total_cmp);
    let mut decades: Vec<(i32, usize)> = Vec::new();
    for x in &v {
        let d = if *x > 0.0 { x.log10().floor() as i32 } else { i32::MIN };
        match decades.last_mut() {
            Some((k, c)) if *k == d => *c += 1,
            _ => decades.push((d, 1)),
        }
    }
    GateSummary {
        count: v.len(),
        min: v.first().copied(),
        median: (!v.is_empty()).then(|| v[v.len() / 2]),
        max: v.last().copied(),
        decades,
    }
}

/// Runs the identifiability check on seeded random instances.
pub fn identifiability_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    let opts = SolveOptions::default();
    let results: Vec<(u64, Result<(MixtureModel, crate::identify::IdentifiabilityReport)>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(cfg.seed, t as u64);
            let run = random_instance(cfg.n, cfg.lambda, seed, cfg.floor)
                .and_then(|m| check_identifiability(&m, &opts).map(|r| (m, r)));
            (seed, run)
        })
        .collect();
    let mut report = SweepReport {
        schema: "mnlmix.identifiability-sweep/1",
        n: cfg.n,
        lambda: cfg.lambda,
        trials: cfg.trials,
        seed: cfg.seed,
        unique: 0,
        full_non_unique: 0,
        pair_non_unique: 0,
        collapsed: 0,
        errors: 0,
        min_gate_w: summarize(Vec::new()),
        counterexamples: Vec::new(),
    };
    let mut gates = Vec::new();
    for (trial, (seed, run)) in results.into_iter().enumerate() {
        let Ok((model, r)) = run else {
            report.errors += 1;
            continue;
        };
        if r.collapsed() {
            report.collapsed += 1;
            continue;
        }
        gates.extend(r.min_gate_w);
        if r.unique {
            report.unique += 1;
        } else {
            report.full_non_unique += 1;
            report.counterexamples.push(SweepHit { trial, seed, codes: r.codes.clone(), model: ModelFile::from_model(&model) });
        }
        if !r.pair_unique {
            report.pair_non_unique += 1;
        }
    }
    report.min_gate_w = summarize(gates);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleComplexityConfig {
    pub n: usize,
    pub lambda: f64,
    pub eps: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Required fraction of successful trials.
    pub target: f64,
    /// Regularity band of the generated instances.
    pub c_low: f64,
    pub c_high: f64,
    /// Bisection steps (in `log N`) after the doubling scan.
    pub refine: usize,
}

impl Default for SampleComplexityConfig {
    fn default() -> Self {
        SampleComplexityConfig {
            n: 6,
            lambda: 2.0,
            eps: vec![0.1, 0.05, 0.025],
            trials: 50,
            seed: 0,
            target: 0.9,
            c_low: 0.5,
            c_high: 1.5,
            refine: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleComplexityRow {
    pub eps: f64,
    /// Smallest `N` found with success rate at least the target.
    pub n_star: u64,
    pub success_rate: f64,
    /// `N* eps^2 / n^3`.
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleComplexityReport {
    pub schema: &'static str,
    pub n: usize,
    pub lambda: f64,
    pub trials: usize,
    pub seed: u64,
    pub rows: Vec<SampleComplexityRow>,
    /// Least-squares slope of `log N*` against `log(1/eps)`.
    pub slope: Option<f64>,
}

/// Largest sample size tried before giving up on an `eps`.
const MAX_SAMPLES: u64 = 1 << 50;

/// Fraction of seeded trials whose learned estimate has error at most `eps`.
/// Trial `t` always uses the same instance and sampling seed, so rates at
/// different `N` are directly comparable.
pub fn success_rate(n: usize, lambda: f64, eps: f64, samples: u64, trials: usize, seed: u64, band: (f64, f64)) -> Result<f64> {
    let hits = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<bool> {
            let s = trial_seed(seed, t as u64);
            let model = random_regular_instance(n, lambda, s, band.0, band.1)?;
            let cfg = LearnConfig {
                eps,
                samples: Some(samples),
                seed: derive_seed(s, 1),
                c_low: band.0,
                c_high: band.1,
                ..LearnConfig::default()
            };
            let r = learn_from_samples(&model, &cfg)?;
            Ok(r.max_rel_error.is_some_and(|e| e <= eps))
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&ok| ok)
        .count();
    Ok(if trials == 0 { 0.0 } else { hits as f64 / trials as f64 })
}

/// Least-squares slope of `y` on `x`; `None` without two distinct `x`.
pub fn fitted_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    (x.len() >= 2 && sxx > 0.0).then(|| sxy / sxx)
}

/// For each `eps`, the smallest `N` (doubling from `n^3/eps^2 / 16`, then
/// bisected in `log N`) whose success rate reaches the target.
pub fn sample_complexity(cfg: &SampleComplexityConfig) -> Result<SampleComplexityReport> {
    if cfg.eps.iter().any(|&e| !(e > 0.0 && e <= 0.2)) {
        return Err(Error::Parameter("every eps must lie in (0, 0.2]".into()));
    }
    if !(cfg.target > 0.0 && cfg.target <= 1.0) {
        return Err(Error::Parameter("target success rate must lie in (0, 1]".into()));
    }
    let band = (cfg.c_low, cfg.c_high);
    let n3 = (cfg.n as f64).powi(3);
    let mut rows = Vec::new();
    for &eps in &cfg.eps {
        let rate = |samples: u64| success_rate(cfg.n, cfg.lambda, eps, samples, cfg.trials, cfg.seed, band);
        let mut hi = ((n3 / (eps * eps)) / 16.0).ceil().max(1.0) as u64;
        let mut hi_rate = rate(hi)?;
        let mut lo = 0;
        while hi_rate < cfg.target && hi < MAX_SAMPLES {
            lo = hi;
            hi *= 2;
            hi_rate = rate(hi)?;
        }
        if hi_rate < cfg.target {
            return Err(Error::Convergence(format!("no sample size up to {MAX_SAMPLES} reaches the target at eps = {eps}")));
        }
        if lo > 0 {
            for _ in 0..cfg.refine {
                let mid = ((lo as f64) * (hi as f64)).sqrt().round() as u64;
                if mid <= lo || mid >= hi {
                    break;
                }
                let r = rate(mid)?;
                if r >= cfg.target {
                    hi = mid;
                    hi_rate = r;
                } else {
                    lo = mid;
                }
            }
        }
        rows.push(SampleComplexityRow { eps, n_star: hi, success_rate: hi_rate, constant: hi as f64 * eps * eps / n3 });
    }
    let x: Vec<f64> = rows.iter().map(|r| (1.0 / r.eps).ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| (r.n_star as f64).ln()).collect();
    Ok(SampleComplexityReport {
        schema: "mnlmix.sample-complexity/1",
        n: cfg.n,
        lambda: cfg.lambda,
        trials: cfg.trials,
        seed: cfg.seed,
        slope: fitted_slope(&x, &y),
        rows,
    })
}
