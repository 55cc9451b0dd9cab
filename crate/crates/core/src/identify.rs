//! Solution enumeration and identifiability reports.
//!
//! The pair system `(a_1, a_2, b_1, b_2)` is solved through its quartic in
//! `b_1`, together with the role-swapped quartic in `b_2` and the point where
//! both are pinned at `C_[n](i)/(1+λ)`. For `n >= 4` each pair-level
//! candidate is extended to all items through the `(1, j)` systems and kept
//! only if it satisfies every equation in the checked slate set.

use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::choice::io::ToNumber;
use crate::choice::{oracle_table, slate_values, MixtureModel, OracleTable, Slate};
use crate::error::{Error, Result};
use crate::poly::{solve, TOLERANCES};
use crate::reduction::{back_substitute, gate_pair, gate_w, PairSystemInput, PairWeights};
use crate::scalar::{rationalize, Scalar};

/// Admissibility margin on `[0, 1]` membership.
pub const ADMISSIBLE_MARGIN: f64 = 1e-9;
/// Default residual threshold for accepting a candidate.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Candidates closer than this (max-relative distance) are merged.
pub const DEDUP_DISTANCE: f64 = 1e-6;
/// `||a - b||_inf` below which a model is treated as collapsed.
pub const COLLAPSE_TOL: f64 = 1e-9;

/// Report schema tag.
pub const REPORT_SCHEMA: &str = "mnlmix.identify/1";

/// Which branch of the reduction produced a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Root of the quartic in `b_i`.
    Generic,
    /// Root of the role-swapped quartic in `b_j` (covers `b_i` pinned).
    Swapped,
    /// Both `b_i` and `b_j` pinned at `C_[n]/(1+λ)`.
    Pinned,
}

impl Branch {
    fn as_str(self) -> &'static str {
        match self {
            Branch::Generic => "generic",
            Branch::Swapped => "swapped",
            Branch::Pinned => "pinned",
        }
    }
}

/// A (partial or full) weight assignment that solves, or nearly solves, a
/// checked equation set.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSolution<T: Scalar = f64> {
    /// 0-based items the entries of `a` and `b` refer to.
    pub items: Vec<usize>,
    pub a: Vec<T>,
    pub b: Vec<T>,
    /// Max absolute violation over the checked equations.
    pub residual: f64,
    /// All entries within `[-τ, 1 + τ]` and partial sums at most `1 + τ`.
    pub admissible: bool,
    pub branch: Branch,
}

impl<T: Scalar> CandidateSolution<T> {
    fn new(items: Vec<usize>, a: Vec<T>, b: Vec<T>, residual: f64, branch: Branch, margin: f64) -> Self {
        let in_range = |v: &T| {
            let x = v.to_f64_lossy();
            x >= -margin && x <= 1.0 + margin
        };
        let sum = |w: &[T]| w.iter().map(Scalar::to_f64_lossy).sum::<f64>();
        let admissible = a.iter().chain(&b).all(in_range) && sum(&a) <= 1.0 + margin && sum(&b) <= 1.0 + margin;
        CandidateSolution { items, a, b, residual, admissible, branch }
    }

    /// Admissible and within `tol` of every checked equation.
    pub fn is_solution(&self, tol: f64) -> bool {
        self.admissible && self.residual <= tol
    }

    /// The same assignment with the two components exchanged.
    pub fn swapped(&self) -> Self {
        CandidateSolution { a: self.b.clone(), b: self.a.clone(), ..self.clone() }
    }

    /// Max-relative distance between the weight entries of two candidates.
    pub fn distance(&self, other: &Self) -> f64 {
        self.a
            .iter()
            .chain(&self.b)
            .zip(other.a.iter().chain(&other.b))
            .map(|(x, y)| {
                let (x, y) = (x.to_f64_lossy(), y.to_f64_lossy());
                (x - y).abs() / x.abs().max(y.abs()).max(1e-12)
            })
            .fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> CandidateSolution<f64> {
        CandidateSolution {
            items: self.items.clone(),
            a: self.a.iter().map(Scalar::to_f64_lossy).collect(),
            b: self.b.iter().map(Scalar::to_f64_lossy).collect(),
            residual: self.residual,
            admissible: self.admissible,
            branch: self.branch,
        }
    }
}

impl<T: Scalar + ToNumber> Serialize for CandidateSolution<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let nums = |w: &[T]| w.iter().map(ToNumber::to_number).collect::<Vec<_>>();
        let mut st = s.serialize_struct("CandidateSolution", 6)?;
        st.serialize_field("items", &self.items.iter().map(|i| i + 1).collect::<Vec<_>>())?;
        st.serialize_field("a", &nums(&self.a))?;
        st.serialize_field("b", &nums(&self.b))?;
        st.serialize_field("residual", &self.residual)?;
        st.serialize_field("admissible", &self.admissible)?;
        st.serialize_field("branch", self.branch.as_str())?;
        st.end()
    }
}

/// Thresholds used while enumerating solutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub margin: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: DEFAULT_TOL, margin: ADMISSIBLE_MARGIN }
    }
}

/// Imaginary parts below this (relative) mark a root worth refining.
const NEAR_REAL: f64 = 1e-3;
const REFINE_STEPS: usize = 60;

/// Newton refinement of a root of `P` on the drop-`j` equation itself,
/// which stays well conditioned when `P` has clustered roots.
fn refine_root(sys: &PairSystemInput<f64>, x0: f64) -> f64 {
    let g = |x: f64| sys.drop_residual(&x).ok().filter(|v| v.is_finite());
    let Some(mut gx) = g(x0) else { return x0 };
    let mut x = x0;
    for _ in 0..REFINE_STEPS {
        if gx == 0.0 {
            break;
        }
        let h = 1e-7 * (1.0 + x.abs());
        let (Some(gp), Some(gm)) = (g(x + h), g(x - h)) else { break };
        let d = (gp - gm) / (2.0 * h);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let mut step = (gx / d).clamp(-1e-2, 1e-2);
        let mut accepted = false;
        for _ in 0..20 {
            if let Some(gn) = g(x - step) {
                if gn.abs() < gx.abs() {
                    x -= step;
                    gx = gn;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted || step.abs() <= 1e-16 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

/// Candidate values of `b_i` for the pair system: real roots of `P` in
/// `(lo, hi]`. In floating point, near-real roots are included and every
/// candidate is refined; over rationals only roots that are exactly
/// rational (recovered from their float image) are returned.
fn branch_roots<T: Scalar>(sys: &PairSystemInput<T>, lo: f64, hi: f64) -> Result<Vec<T>> {
    let p = sys.quartic()?;
    let pf = p.to_f64().trim_relative(TOLERANCES.lead);
    if pf.degree() == 0 {
        return Ok(Vec::new());
    }
    let set = solve(&pf)?;
    if !T::EXACT {
        let fsys = PairSystemInput {
            lambda: sys.lambda.to_f64_lossy(),
            full_i: sys.full_i.to_f64_lossy(),
            full_j: sys.full_j.to_f64_lossy(),
            drop_j_i: sys.drop_j_i.to_f64_lossy(),
            drop_i_j: sys.drop_i_j.to_f64_lossy(),
            pair_i: None,
        };
        let mut out: Vec<f64> = Vec::new();
        for z in set.roots() {
            if z.im.abs() > NEAR_REAL * (1.0 + z.re.abs()) || !(z.re > lo - NEAR_REAL && z.re <= hi + NEAR_REAL) {
                continue;
            }
            let x = refine_root(&fsys, z.re);
            if x > lo && x <= hi && !out.iter().any(|y| (x - y).abs() <= 1e-12 * (1.0 + x.abs())) {
                out.push(x);
            }
        }
        return Ok(out.into_iter().map(T::from_f64_lossy).collect());
    }
    let roots = set.real_roots_in(lo, hi);
    Ok(roots
        .into_iter()
        .filter_map(|r| {
            (1..=9).find_map(|k| {
                let q = T::from_rational(&rationalize(r, 10i64.pow(k))?);
                p.eval(&q).is_zero().then_some(q)
            })
        })
        .collect())
}

fn push_unique<T: Scalar>(out: &mut Vec<CandidateSolution<T>>, c: CandidateSolution<T>) {
    if !out.iter().any(|o| o.distance(&c) <= DEDUP_DISTANCE) {
        out.push(c);
    }
}

/// All candidates of one pair system (with the two-item equation when
/// `sys.pair_i` is set). Each carries its residual over the system's
/// equations; callers filter with [`CandidateSolution::is_solution`].
pub fn solve_pair_system<T: Scalar>(
    sys: &PairSystemInput<T>,
    items: (usize, usize),
    opts: &SolveOptions,
) -> Result<Vec<CandidateSolution<T>>> {
    let (lo, hi) = (-opts.margin, 1.0 + opts.margin);
    let make = |w: PairWeights<T>, branch| {
        let residual = sys.max_residual(&w);
        CandidateSolution::new(
            vec![items.0, items.1],
            vec![w.a_i, w.a_j],
            vec![w.b_i, w.b_j],
            residual,
            branch,
            opts.margin,
        )
    };
    let mut out = Vec::new();
    for x in branch_roots(sys, lo, hi)? {
        if let Ok(w) = sys.weights_at(&x) {
            push_unique(&mut out, make(w, Branch::Generic));
        }
    }
    let sw = sys.swapped();
    for y in branch_roots(&sw, lo, hi)? {
        if let Ok(w) = sw.weights_at(&y) {
            push_unique(&mut out, make(w.swapped(), Branch::Swapped));
        }
    }
    let pinned = make(sys.complete(sys.pinned_value(), sw.pinned_value()), Branch::Pinned);
    if pinned.residual <= opts.tol {
        push_unique(&mut out, pinned);
    }
    Ok(out)
}

fn full_residual(oracle: &OracleTable<f64>, a: &[f64], b: &[f64], slates: &[Slate]) -> Result<f64> {
    let lambda = *oracle.lambda();
    let mut worst = (a.iter().sum::<f64>() - 1.0).abs().max((b.iter().sum::<f64>() - 1.0).abs());
    for slate in slates {
        let row = oracle.row(slate)?;
        for (x, y) in slate_values(a, b, &lambda, slate).iter().zip(row) {
            let d = (x - y).abs();
            worst = if d.is_nan() { f64::INFINITY } else { worst.max(d) };
        }
    }
    Ok(worst)
}

/// Slates whose equations are checked for a full solution: everything for
/// `n <= 4`; otherwise `[n]`, every `[n] \ {j}` and every pair.
pub fn check_slates(n: usize) -> Vec<Slate> {
    if n <= 4 {
        return Slate::all_within(n);
    }
    let mut out = vec![Slate::full(n)];
    out.extend((0..n).map(|j| Slate::without(n, j)));
    for i in 0..n {
        for j in i + 1..n {
            out.push(Slate::pair(i, j).expect("distinct items"));
        }
    }
    out
}

/// Full 3-item solutions from an oracle covering every slate of `[3]`.
pub fn solve_3item(oracle: &OracleTable<f64>, opts: &SolveOptions) -> Result<Vec<CandidateSolution>> {
    if oracle.n() != 3 {
        return Err(Error::Shape { expected: 3, actual: oracle.n() });
    }
    let slates = Slate::all_within(3);
    for s in &slates {
        oracle.row(s)?;
    }
    let lambda = *oracle.lambda();
    let c123 = oracle.row(&Slate::full(3))?.to_vec();
    let sys = PairSystemInput::from_oracle(oracle, 0, 1, false)?;
    let mut out = Vec::new();
    for pc in solve_pair_system(&sys, (0, 1), opts)? {
        let (a1, a2, a3, b3) = back_substitute(&pc.b[0], &pc.b[1], &c123, &lambda)?;
        let a = vec![a1, a2, a3];
        let b = vec![pc.b[0], pc.b[1], b3];
        let residual = full_residual(oracle, &a, &b, &slates)?;
        push_unique(&mut out, CandidateSolution::new(vec![0, 1, 2], a, b, residual, pc.branch, opts.margin));
    }
    Ok(out)
}

/// Full solutions for `n >= 4`: pair-level candidates of `(1, 2)` extended
/// through the `(1, j)` systems, checked against `slates`.
pub fn solve_full(oracle: &OracleTable<f64>, slates: &[Slate], opts: &SolveOptions) -> Result<Vec<CandidateSolution>> {
    let n = oracle.n();
    if n < 4 {
        return solve_3item(oracle, opts);
    }
    let lambda = *oracle.lambda();
    let full = Slate::full(n);
    let systems = (2..n)
        .map(|j| PairSystemInput::from_oracle(oracle, 0, j, false))
        .collect::<Result<Vec<_>>>()?;
    let base = PairSystemInput::from_oracle(oracle, 0, 1, false)?;
    let mut out = Vec::new();
    for pc in solve_pair_system(&base, (0, 1), opts)? {
        // Each partial assignment holds b for items 0..len.
        let mut partial: Vec<Vec<f64>> = vec![pc.b.clone()];
        for sys in &systems {
            let b0 = pc.b[0];
            let options: Vec<f64> = match sys.partner(&b0) {
                Ok(bj) => vec![bj],
                Err(Error::DegenerateBranch(_)) => solve_pair_system(sys, (0, 1), opts)?
                    .into_iter()
                    .filter(|c| (c.b[0] - b0).abs() <= 1e-7)
                    .map(|c| c.b[1])
                    .collect(),
                Err(e) => return Err(e),
            };
            partial = partial
                .into_iter()
                .flat_map(|p| {
                    options.iter().map(move |&bj| {
                        let mut q = p.clone();
                        q.push(bj);
                        q
                    })
                })
                .collect();
        }
        for b in partial {
            let a = (0..n)
                .map(|i| Ok(oracle.value(&full, i)? - lambda * b[i]))
                .collect::<Result<Vec<_>>>()?;
            let residual = full_residual(oracle, &a, &b, slates)?;
            push_unique(&mut out, CandidateSolution::new((0..n).collect(), a, b, residual, pc.branch, opts.margin));
        }
    }
    Ok(out)
}

/// Groups solutions into classes; with `swap` set a solution and its
/// component swap share a class. Returns the representatives and whether a
/// swap merge happened.
fn solution_classes(sols: Vec<CandidateSolution>, swap: bool) -> (Vec<CandidateSolution>, bool) {
    let mut reps: Vec<CandidateSolution> = Vec::new();
    let mut merged = false;
    for s in sols {
        if reps.iter().any(|r| r.distance(&s) <= DEDUP_DISTANCE) {
            continue;
        }
        if swap && reps.iter().any(|r| r.distance(&s.swapped()) <= DEDUP_DISTANCE) {
            merged = true;
            continue;
        }
        reps.push(s);
    }
    (reps, merged)
}

/// One resultant gate value.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GateValue {
    /// `"W"` for `Res(Q_1j, Q_1k)`, `"pair"` for `Res(Q_12, Q̃_12)`.
    pub kind: &'static str,
    /// 1-based items `(1, j, k)` or `(1, 2)`.
    pub items: Vec<usize>,
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl GateValue {
    fn from_result(kind: &'static str, items: Vec<usize>, r: Result<f64>) -> Self {
        match r {
            Ok(v) => GateValue { kind, items, value: Some(v), error: None },
            Err(e) => GateValue { kind, items, value: None, error: Some(e.to_string()) },
        }
    }
}

/// Outcome of [`check_identifiability`].
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct IdentifiabilityReport {
    pub schema: &'static str,
    pub n: usize,
    pub lambda: f64,
    /// Exactly one full solution class.
    pub unique: bool,
    pub solutions: Vec<CandidateSolution>,
    /// Exactly one solution class of the `(1, 2)` system with its pair slate.
    pub pair_unique: bool,
    pub pair_solutions: Vec<CandidateSolution>,
    pub gates: Vec<GateValue>,
    /// Smallest `|W_1jk|` among the computed gates.
    pub min_gate_w: Option<f64>,
    pub swap_note: bool,
    pub codes: Vec<&'static str>,
}

impl IdentifiabilityReport {
    pub fn collapsed(&self) -> bool {
        self.codes.contains(&"collapse")
    }

    /// 0 unique, 2 non-unique (full or pair level), 3 collapse.
    pub fn exit_code(&self) -> i32 {
        if self.collapsed() {
            3
        } else if !self.unique || !self.pair_unique {
            2
        } else {
            0
        }
    }
}

/// Builds the exact oracle for `model` and decides whether it is the only
/// solution of the checked equations.
pub fn check_identifiability(model: &MixtureModel, opts: &SolveOptions) -> Result<IdentifiabilityReport> {
    let n = model.n();
    let lambda = *model.lambda();
    let gap = model.a().as_slice().iter().zip(model.b().as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    if gap < COLLAPSE_TOL {
        return Ok(IdentifiabilityReport {
            schema: REPORT_SCHEMA,
            n,
            lambda,
            unique: false,
            solutions: Vec::new(),
            pair_unique: false,
            pair_solutions: Vec::new(),
            gates: Vec::new(),
            min_gate_w: None,
            swap_note: false,
            codes: vec!["collapse"],
        });
    }
    let swap = (lambda - 1.0).abs() <= 1e-12;
    let slates = check_slates(n);
    let oracle = oracle_table(model, &slates)?;

    let full = if n == 3 { solve_3item(&oracle, opts)? } else { solve_full(&oracle, &slates, opts)? };
    let (solutions, full_swap) = solution_classes(full.into_iter().filter(|c| c.is_solution(opts.tol)).collect(), swap);

    let pair_sys = PairSystemInput::from_oracle(&oracle, 0, 1, true)?;
    let pair = solve_pair_system(&pair_sys, (0, 1), opts)?;
    let (pair_solutions, pair_swap) =
        solution_classes(pair.into_iter().filter(|c| c.is_solution(opts.tol)).collect(), swap);

    let anchor = model.b()[0];
    let mut gates = Vec::new();
    for j in 1..n {
        for k in j + 1..n {
            gates.push(GateValue::from_result("W", vec![1, j + 1, k + 1], gate_w(&oracle, 0, j, k, anchor)));
        }
    }
    gates.push(GateValue::from_result("pair", vec![1, 2], gate_pair(&oracle, 0, 1, anchor)));
    let min_gate_w = gates
        .iter()
        .filter(|g| g.kind == "W")
        .filter_map(|g| g.value.map(f64::abs))
        .reduce(f64::min);

    let unique = solutions.len() == 1;
    let pair_unique = pair_solutions.len() == 1;
    let mut codes = vec![if unique { "unique" } else { "full-system-multiplicity" }];
    if !pair_unique {
        codes.push("pair-level-multiplicity");
    }
    let swap_note = full_swap || pair_swap;
    if swap_note {
        codes.push("swap-symmetry");
    }
    if gates.iter().any(|g| g.value.is_none()) {
        codes.push("gate-error");
    }
    Ok(IdentifiabilityReport {
        schema: REPORT_SCHEMA,
        n,
        lambda,
        unique,
        solutions,
        pair_unique,
        pair_solutions,
        gates,
        min_gate_w,
        swap_note,
        codes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{random_instance, WeightVector};
    use crate::scalar::Rational;

    fn q(p: i64, d: i64) -> Rational {
        Rational::from_ratio(p, d)
    }

    fn counterexample() -> MixtureModel<Rational> {
        let a = WeightVector::new(vec![q(2, 5), q(2, 5), q(1, 10), q(1, 10)]).unwrap();
        let b = WeightVector::new(vec![q(3, 10), q(3, 10), q(1, 5), q(1, 5)]).unwrap();
        MixtureModel::new(a, b, q(2, 1)).unwrap()
    }

    #[test]
    fn counterexample_pair_level_exact() {
        let o = oracle_table(&counterexample(), &Slate::all_within(4)).unwrap();
        let sys = PairSystemInput::from_oracle(&o, 0, 1, true).unwrap();
        let sols: Vec<_> = solve_pair_system(&sys, (0, 1), &SolveOptions::default())
            .unwrap()
            .into_iter()
            .filter(|c| c.is_solution(0.0))
            .collect();
        assert_eq!(sols.len(), 2);
        let tuples: Vec<Vec<Rational>> = sols.iter().map(|c| [c.a.clone(), c.b.clone()].concat()).collect();
        assert!(tuples.contains(&vec![q(2, 5), q(2, 5), q(3, 10), q(3, 10)]));
        assert!(tuples.contains(&vec![q(5, 19), q(5, 19), q(7, 19), q(7, 19)]));
    }

    #[test]
    fn counterexample_report() {
        let r = check_identifiability(&counterexample().to_f64(), &SolveOptions::default()).unwrap();
        assert!(r.unique);
        assert!(!r.pair_unique);
        assert_eq!(r.pair_solutions.len(), 2);
        assert_eq!(r.exit_code(), 2);
        let pg = r.gates.iter().find(|g| g.kind == "pair").unwrap();
        assert!(pg.value.unwrap().abs() <= 1e-8);
    }

    #[test]
    fn generic_instances_are_unique() {
        for seed in 0..20 {
            for n in [3, 4, 5] {
                let m = random_instance(n, 2.0, seed, 1e-3).unwrap();
                let r = check_identifiability(&m, &SolveOptions::default()).unwrap();
                assert!(r.unique, "n={n} seed={seed}: {:?}", r.codes);
                let s = &r.solutions[0];
                assert!(s.distance(&CandidateSolution::new(
                    (0..n).collect(),
                    m.a().as_slice().to_vec(),
                    m.b().as_slice().to_vec(),
                    0.0,
                    Branch::Generic,
                    0.0
                )) <= 1e-6);
            }
        }
    }

    #[test]
    fn uniform_mixture_swap() {
        let m = random_instance(3, 1.0, 11, 1e-3).unwrap();
        let r = check_identifiability(&m, &SolveOptions::default()).unwrap();
        assert!(r.unique);
        assert!(r.swap_note);
    }

    #[test]
    fn collapse_short_circuit() {
        let w = WeightVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        let m = MixtureModel::new(w.clone(), w, 3.0).unwrap();
        let r = check_identifiability(&m, &SolveOptions::default()).unwrap();
        assert_eq!(r.exit_code(), 3);
        assert!(!r.unique);
    }

    #[test]
    fn collapsed_pair_system_contains_truth() {
        let w = WeightVector::new(vec![0.25, 0.25, 0.25, 0.25]).unwrap();
        let m = MixtureModel::new(w.clone(), w, 1.7).unwrap();
        let o = oracle_table(&m, &Slate::all_within(4)).unwrap();
        let sys = PairSystemInput::from_oracle(&o, 0, 1, true).unwrap();
        let sols = solve_pair_system(&sys, (0, 1), &SolveOptions::default()).unwrap();
        // a = b leaves a curve of exact solutions through the truth.
        assert!(sols
            .iter()
            .any(|c| c.residual <= 1e-12 && c.a.iter().chain(&c.b).all(|x| (x - 0.25).abs() <= 1e-6)));
    }

    #[test]
    fn report_serializes() {
        let m = random_instance(4, 2.0, 3, 1e-3).unwrap();
        let r = check_identifiability(&m, &SolveOptions::default()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["schema"], REPORT_SCHEMA);
        assert_eq!(v["unique"], true);
        assert_eq!(v["solutions"][0]["items"][0], 1);
    }
}
