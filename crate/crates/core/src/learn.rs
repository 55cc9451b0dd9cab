//! The linear-query learner.
//!
//! 1. Solve the sub-universe `[k]` from every slate inside it.
//! 2. For each `j > k`, the `(1, j)` system expresses `b_j` as `N_j(b_1)/D(b_1)`
//!    with a denominator shared by all `j`.
//! 3. The block fixes `b_1` up to the unknown mass `s = Σ_{i<=k} b_i`; the
//!    normalization `s + Σ_j N_j(b_1 s)/D(b_1 s) = 1` is a quadratic in `s`.
//!
//! Queries are counted per `(slate, item)` value requested, so the block
//! costs `k 2^(k-1) - k` and the extension `1 + 3(n - k)`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::choice::{regularity_ratio, sample_empirical, slate_distribution, slate_values, MixtureModel, OracleTable, Slate};
use crate::error::{Error, Result};
use crate::identify::{solve_3item, solve_full, SolveOptions, DEDUP_DISTANCE};
use crate::poly::{solve, Polynomial, TOLERANCES};
use crate::reduction::PairSystemInput;
use crate::rng::derive_seed;

/// Report schema tag.
pub const REPORT_SCHEMA: &str = "mnlmix.learn/1";
/// Half-width of the least-squares search around a selected noisy root.
const REFINE_WIDTH: f64 = 0.02;
/// Tolerance on `Σ a = 1` after the extension step (oracle mode).
pub const SUM_CHECK_TOL: f64 = 1e-8;

/// Learner configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnConfig {
    /// Size of the solved sub-universe.
    pub k: usize,
    /// Target error, also used to pick the automatic sample size.
    pub eps: f64,
    /// Samples per queried slate; `None` uses `⌈8 n^3 / eps^2⌉`.
    pub samples: Option<u64>,
    pub seed: u64,
    /// Regularity band for `|S| P_S(i)` on the large slates.
    pub c_low: f64,
    pub c_high: f64,
    /// Residual threshold for oracle-mode block solutions.
    pub tol: f64,
    /// Relative gap under which two root selections count as tied.
    pub ambiguity_tol: f64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            k: 4,
            eps: 0.05,
            samples: None,
            seed: 0,
            c_low: 0.5,
            c_high: 1.5,
            tol: crate::identify::DEFAULT_TOL,
            ambiguity_tol: 1e-3,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k < 3 || self.k > n {
            return Err(Error::Parameter(format!("k = {} must satisfy 3 <= k <= n = {n}", self.k)));
        }
        if !(self.eps > 0.0 && self.eps <= 0.2) {
            return Err(Error::Parameter(format!("eps = {} must lie in (0, 0.2]", self.eps)));
        }
        if !(self.c_low > 0.0 && self.c_low < 1.0 && self.c_high > 1.0) {
            return Err(Error::Parameter("regularity band needs 0 < c_low < 1 < c_high".into()));
        }
        Ok(())
    }

    /// `⌈8 n^3 / eps^2⌉`.
    pub fn auto_samples(n: usize, eps: f64) -> u64 {
        (8.0 * (n as f64).powi(3) / (eps * eps)).ceil() as u64
    }

    pub fn samples_for(&self, n: usize) -> u64 {
        self.samples.unwrap_or_else(|| Self::auto_samples(n, self.eps))
    }
}

/// Value queries split by learner stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct QueryTally {
    pub block: u64,
    pub extension: u64,
}

impl QueryTally {
    pub fn total(&self) -> u64 {
        self.block + self.extension
    }
}

/// Fixed query overhead `Q0` with `queries = 3n + Q0`.
pub fn query_constant(k: usize) -> i64 {
    (k as i64) * (1 << (k - 1)) - 4 * k as i64 + 1
}

/// Source of scaled choice values `C_T(i)`.
pub trait ChoiceOracle {
    fn n(&self) -> usize;
    fn lambda(&self) -> f64;
    /// `C_T(item)` for an item of `slate`.
    fn query(&mut self, slate: &Slate, item: usize) -> Result<f64>;
    /// Choice samples drawn so far.
    fn samples_used(&self) -> u64 {
        0
    }
}

/// Exact values computed from a model.
#[derive(Debug, Clone)]
pub struct ModelOracle {
    model: MixtureModel,
}

impl ModelOracle {
    pub fn new(model: MixtureModel) -> Self {
        ModelOracle { model }
    }
}

impl ChoiceOracle for ModelOracle {
    fn n(&self) -> usize {
        self.model.n()
    }

    fn lambda(&self) -> f64 {
        *self.model.lambda()
    }

    fn query(&mut self, slate: &Slate, item: usize) -> Result<f64> {
        slate.check_within(self.model.n())?;
        let pos = slate
            .position(item)
            .ok_or_else(|| Error::Domain(format!("item {} not in slate {slate}", item + 1)))?;
        Ok((1.0 + self.lambda()) * slate_distribution(&self.model, slate)?[pos])
    }
}

/// Values read from a stored table.
#[derive(Debug, Clone)]
pub struct TableOracle {
    table: OracleTable<f64>,
}

impl TableOracle {
    pub fn new(table: OracleTable<f64>) -> Self {
        TableOracle { table }
    }
}

impl ChoiceOracle for TableOracle {
    fn n(&self) -> usize {
        self.table.n()
    }

    fn lambda(&self) -> f64 {
        *self.table.lambda()
    }

    fn query(&mut self, slate: &Slate, item: usize) -> Result<f64> {
        self.table.value(slate, item)
    }
}

/// Empirical values: each slate is sampled `samples` times on first use,
/// from its own stream of `seed`.
#[derive(Debug, Clone)]
pub struct SampledOracle {
    model: MixtureModel,
    samples: u64,
    seed: u64,
    rows: BTreeMap<Slate, Vec<f64>>,
}

impl SampledOracle {
    pub fn new(model: MixtureModel, samples: u64, seed: u64) -> Self {
        SampledOracle { model, samples, seed, rows: BTreeMap::new() }
    }
}

impl ChoiceOracle for SampledOracle {
    fn n(&self) -> usize {
        self.model.n()
    }

    fn lambda(&self) -> f64 {
        *self.model.lambda()
    }

    fn query(&mut self, slate: &Slate, item: usize) -> Result<f64> {
        let pos = slate
            .position(item)
            .ok_or_else(|| Error::Domain(format!("item {} not in slate {slate}", item + 1)))?;
        if !self.rows.contains_key(slate) {
            let row = sample_empirical(&self.model, slate, self.samples, self.seed)?;
            self.rows.insert(slate.clone(), row.scaled(self.lambda()));
        }
        Ok(self.rows[slate][pos])
    }

    fn samples_used(&self) -> u64 {
        self.samples * self.rows.len() as u64
    }
}

/// How the block solution is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Selection {
    /// All admissible solutions within `tol` of every block equation.
    Exact,
    /// Root of `P_12` with real part in `(0, 1)` and smallest `|Im|`.
    Noisy,
}

/// Outcome of a learning run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnReport {
    pub schema: &'static str,
    pub n: usize,
    pub k: usize,
    pub lambda: f64,
    pub a_hat: Option<Vec<f64>>,
    pub b_hat: Option<Vec<f64>>,
    pub queries: u64,
    pub query_tally: QueryTally,
    /// `Q0` in `queries = 3n + Q0`.
    pub query_constant: i64,
    pub samples: u64,
    pub samples_per_slate: Option<u64>,
    /// Mass `Σ_{i<=k} b_i` recovered by the normalization step.
    pub block_mass: Option<f64>,
    pub max_rel_error: Option<f64>,
    pub status: Vec<&'static str>,
}

impl LearnReport {
    pub fn succeeded(&self) -> bool {
        self.a_hat.is_some()
    }

    /// 0 clean, 4 estimate with a warning status, 5 no estimate.
    pub fn exit_code(&self) -> i32 {
        if !self.succeeded() {
            5
        } else if self.status.iter().any(|s| *s != "ok") {
            4
        } else {
            0
        }
    }
}

/// `max_i |â_i - a_i|/a_i + |b̂_i - b_i|/b_i`; with `swap` the better of the
/// two component orders.
pub fn max_rel_error(a_hat: &[f64], b_hat: &[f64], truth: &MixtureModel, swap: bool) -> f64 {
    let err = |x: &[f64], y: &[f64]| {
        x.iter()
            .zip(y)
            .zip(truth.a().as_slice().iter().zip(truth.b().as_slice()))
            .map(|((xa, yb), (a, b))| (xa - a).abs() / a + (yb - b).abs() / b)
            .fold(0.0, f64::max)
    };
    let e = err(a_hat, b_hat);
    if swap {
        e.min(err(b_hat, a_hat))
    } else {
        e
    }
}

struct Asker<'a, O: ChoiceOracle> {
    oracle: &'a mut O,
    tally: QueryTally,
    seen: Vec<Observation>,
}

impl<O: ChoiceOracle> Asker<'_, O> {
    fn block(&mut self, slate: &Slate, item: usize) -> Result<f64> {
        self.tally.block += 1;
        self.record(slate, item)
    }

    fn extension(&mut self, slate: &Slate, item: usize) -> Result<f64> {
        self.tally.extension += 1;
        self.record(slate, item)
    }

    fn record(&mut self, slate: &Slate, item: usize) -> Result<f64> {
        let value = self.oracle.query(slate, item)?;
        self.seen.push(Observation { slate: slate.clone(), item, value });
        Ok(value)
    }
}

/// Block weights on `[k]` (each summing to one).
struct Block {
    a: Vec<f64>,
    b: Vec<f64>,
}

/// The denominator-cleared normalization polynomial in `s`:
/// `s D(b1_rel s) + Σ_j N_j(b1_rel s) - D(b1_rel s)`.
pub fn normalization_polynomial(b1_rel: f64, tail: &[PairSystemInput]) -> Result<Polynomial> {
    let first = tail.first().ok_or_else(|| Error::Parameter("empty tail".into()))?;
    let f = |s: f64| {
        let x = b1_rel * s;
        let d = first.denominator(&x);
        s * d + tail.iter().map(|t| t.numerator(&x)).sum::<f64>() - d
    };
    let xs = [0.0, 0.5, 1.0];
    let ys: Vec<f64> = xs.iter().map(|&s| f(s)).collect();
    Polynomial::interpolate(&xs, &ys)
}

/// Solves `s + Σ_j f_j(b1_rel s) = 1` for the block mass `s ∈ (0, 1]`, where
/// `f_j` is the partner map of the `j`-th tail system (all anchored at item
/// 1). Roots giving any weight outside `(0, 1)` are rejected; ties go to the
/// smallest `|Σ a - 1|`, which needs `a1_rel`, the block's `a_1`.
pub fn solve_normalization(b1_rel: f64, a1_rel: f64, tail: &[PairSystemInput]) -> Result<f64> {
    if tail.is_empty() {
        return Ok(1.0);
    }
    let check = |s: f64| -> Option<f64> {
        if !(s > 0.0 && s <= 1.0 + 1e-12) {
            return None;
        }
        let x = b1_rel * s;
        let a1 = tail[0].full_i - tail[0].lambda * x;
        let mut a_sum = a1 / a1_rel;
        if !(x > 0.0 && x < 1.0 && a1 > 0.0) {
            return None;
        }
        for t in tail {
            let bj = t.partner(&x).ok()?;
            let aj = t.full_j - t.lambda * bj;
            if !(bj > 0.0 && bj < 1.0 && aj > 0.0 && aj < 1.0) {
                return None;
            }
            a_sum += aj;
        }
        Some((a_sum - 1.0).abs())
    };
    let poly = normalization_polynomial(b1_rel, tail)?.trim_relative(TOLERANCES.lead);
    let mut roots: Vec<f64> = if poly.degree() >= 1 { solve(&poly)?.real_roots_in(0.0, 1.0 + 1e-12) } else { Vec::new() };
    if roots.iter().all(|&s| check(s).is_none()) {
        roots = bisection_roots(|s| poly.eval(&s), 1e-9, 1.0, 1000);
    }
    roots
        .into_iter()
        .filter_map(|s| check(s).map(|r| (r, s)))
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .map(|(_, s)| s)
        .ok_or_else(|| Error::DegenerateInput("normalization has no admissible root".into()))
}

fn bisection_roots(f: impl Fn(f64) -> f64, lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let h = (hi - lo) / cells as f64;
    for c in 0..cells {
        let (mut l, mut r) = (lo + c as f64 * h, lo + (c + 1) as f64 * h);
        let (mut fl, fr) = (f(l), f(r));
        if fl == 0.0 {
            out.push(l);
            continue;
        }
        if fl * fr > 0.0 || !(fl * fr).is_finite() {
            continue;
        }
        for _ in 0..100 {
            let m = 0.5 * (l + r);
            let fm = f(m);
            if fm == 0.0 {
                l = m;
                r = m;
                break;
            }
            if fl * fm < 0.0 {
                r = m;
            } else {
                l = m;
                fl = fm;
            }
        }
        out.push(0.5 * (l + r));
    }
    out
}

fn block_sse(table: &OracleTable<f64>, x: f64) -> f64 {
    let Some(blk) = complete_block(table, x) else { return f64::INFINITY };
    let lambda = *table.lambda();
    let mut sse = 0.0;
    for (slate, row) in table.iter() {
        for (v, y) in slate_values(&blk.a, &blk.b, &lambda, slate).iter().zip(row) {
            sse += (v - y) * (v - y);
        }
    }
    if sse.is_finite() {
        sse
    } else {
        f64::INFINITY
    }
}

/// Least-squares refinement of a selected `b_1` against every block slate:
/// grid scan of `[x0 - w, x0 + w]`, then golden-section search.
fn refine_block_root(table: &OracleTable<f64>, x0: f64, w: f64) -> f64 {
    const GRID: usize = 40;
    let (lo, hi) = ((x0 - w).max(1e-12), (x0 + w).min(1.0 - 1e-12));
    let h = (hi - lo) / GRID as f64;
    let (mut best, mut best_f) = (x0, block_sse(table, x0));
    for g in 0..=GRID {
        let x = lo + g as f64 * h;
        let f = block_sse(table, x);
        if f < best_f {
            best = x;
            best_f = f;
        }
    }
    let (mut a, mut b) = ((best - h).max(lo), (best + h).min(hi));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    let (mut fc, mut fd) = (block_sse(table, c), block_sse(table, d));
    for _ in 0..100 {
        if (b - a).abs() <= 1e-14 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = block_sse(table, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = block_sse(table, d);
        }
    }
    let x = 0.5 * (a + b);
    if block_sse(table, x) <= best_f {
        x
    } else {
        best
    }
}

fn block_residual(table: &OracleTable<f64>, a: &[f64], b: &[f64]) -> f64 {
    let lambda = *table.lambda();
    let mut worst: f64 = 0.0;
    for (slate, row) in table.iter() {
        for (x, y) in slate_values(a, b, &lambda, slate).iter().zip(row) {
            let d = (x - y).abs();
            worst = if d.is_finite() { worst.max(d) } else { f64::INFINITY };
        }
    }
    worst
}

/// Completes a block solution from `b_1 = x` through the `(1, j)` systems
/// inside `[k]`.
fn complete_block(table: &OracleTable<f64>, x: f64) -> Option<Block> {
    let k = table.n();
    let lambda = *table.lambda();
    let full = Slate::full(k);
    let mut b = vec![x];
    for j in 1..k {
        let sys = PairSystemInput::from_oracle(table, 0, j, false).ok()?;
        b.push(sys.partner(&x).ok()?);
    }
    let a = (0..k)
        .map(|i| table.value(&full, i).ok().map(|c| c - lambda * b[i]))
        .collect::<Option<Vec<_>>>()?;
    Some(Block { a, b })
}

fn solve_block(table: &OracleTable<f64>, selection: Selection, cfg: &LearnConfig, status: &mut Vec<&'static str>) -> Result<Vec<Block>> {
    let k = table.n();
    match selection {
        Selection::Exact => {
            let opts = SolveOptions { tol: cfg.tol, ..SolveOptions::default() };
            let sols = if k == 3 { solve_3item(table, &opts)? } else { solve_full(table, &Slate::all_within(k), &opts)? };
            let swap = (*table.lambda() - 1.0).abs() <= 1e-12;
            let mut reps: Vec<_> = Vec::new();
            for s in sols.into_iter().filter(|c| c.is_solution(cfg.tol)) {
                let dup = reps.iter().any(|r: &crate::identify::CandidateSolution| {
                    r.distance(&s) <= DEDUP_DISTANCE || (swap && r.distance(&s.swapped()) <= DEDUP_DISTANCE)
                });
                if !dup {
                    reps.push(s);
                }
            }
            match reps.len() {
                0 => Err(Error::InconsistentOracle(format!("no admissible solution on the {k}-item block"))),
                1 => Ok(vec![Block { a: reps[0].a.clone(), b: reps[0].b.clone() }]),
                _ => {
                    status.push("k-identifiability-violation");
                    reps.sort_by(|x, y| x.residual.total_cmp(&y.residual));
                    Ok(vec![Block { a: reps[0].a.clone(), b: reps[0].b.clone() }])
                }
            }
        }
        Selection::Noisy => {
            let sys = PairSystemInput::from_oracle(table, 0, 1, false)?;
            let p = sys.quartic()?.trim_relative(TOLERANCES.lead);
            if p.degree() == 0 {
                return Ok(Vec::new());
            }
            let mut cands: Vec<(f64, f64, Block)> = solve(&p)?
                .roots()
                .iter()
                .filter(|z| z.re > 0.0 && z.re < 1.0)
                .filter_map(|z| {
                    let blk = complete_block(table, z.re)?;
                    let admissible = blk.a.iter().chain(&blk.b).all(|&w| w > 0.0 && w < 1.0);
                    admissible.then(|| (z.im.abs(), block_residual(table, &blk.a, &blk.b), blk))
                })
                .collect();
            cands.sort_by(|x, y| x.0.total_cmp(&y.0));
            if let Some(lead) = cands.first().map(|c| c.0) {
                let tied = cands.iter().filter(|c| c.0 - lead < cfg.ambiguity_tol * (1.0 + lead)).count();
                if tied > 1 {
                    status.push("ambiguous-root");
                    cands[..tied].sort_by(|x, y| x.1.total_cmp(&y.1));
                }
            }
            Ok(cands
                .into_iter()
                .map(|(im, _, blk)| {
                    let x = refine_block_root(table, blk.b[0], REFINE_WIDTH.max(2.0 * im));
                    complete_block(table, x).unwrap_or(blk)
                })
                .collect())
        }
    }
}

/// Block item with the largest relative gap `|a_i - b_i| / (a_i + b_i)`;
/// the partner maps divide by a multiple of `b_i - a_i`.
fn best_anchor(block: &Block) -> usize {
    (0..block.a.len())
        .max_by(|&i, &j| {
            let gap = |t: usize| (block.a[t] - block.b[t]).abs() / (block.a[t] + block.b[t]);
            gap(i).total_cmp(&gap(j))
        })
        .unwrap_or(0)
}

/// The same table with item `perm[i]` renamed to `i`.
fn relabel(table: &OracleTable<f64>, perm: &[usize]) -> OracleTable<f64> {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut out = OracleTable::new(table.n(), *table.lambda());
    for (slate, row) in table.iter() {
        let items: Vec<usize> = slate.items().iter().map(|&i| inv[i]).collect();
        let renamed = Slate::new(items).expect("relabelling keeps slates valid");
        let values = renamed.items().iter().map(|&i| row[slate.position(perm[i]).expect("same members")]).collect();
        out.insert_unchecked(renamed, values);
    }
    out
}

/// One queried value `C_T(item)`.
struct Observation {
    slate: Slate,
    item: usize,
    value: f64,
}

/// Damped Gauss-Newton fit of log-weights to every queried value, each
/// residual scaled by its binomial standard deviation. Returns the fitted
/// weights and the final cost, or `None` for an invalid start.
fn polish(obs: &[Observation], lambda: f64, a0: &[f64], b0: &[f64]) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    use nalgebra::{DMatrix, DVector};
    let n = a0.len();
    let scale = 1.0 + lambda;
    let weights: Vec<f64> = obs
        .iter()
        .map(|o| {
            let p = (o.value / scale).clamp(1e-6, 1.0 - 1e-6);
            1.0 / (p * (1.0 - p)).sqrt()
        })
        .collect();
    let cost_and_jac = |u: &[f64], want_jac: bool| -> (f64, DVector<f64>, DMatrix<f64>) {
        let a: Vec<f64> = u[..n].iter().map(|x| x.exp()).collect();
        let b: Vec<f64> = u[n..].iter().map(|x| x.exp()).collect();
        let mut r = DVector::zeros(obs.len());
        let mut jac = DMatrix::zeros(if want_jac { obs.len() } else { 0 }, 2 * n);
        for (row, o) in obs.iter().enumerate() {
            let sa: f64 = o.slate.items().iter().map(|&m| a[m]).sum();
            let sb: f64 = o.slate.items().iter().map(|&m| b[m]).sum();
            let (pa, pb) = (a[o.item] / sa, b[o.item] / sb);
            r[row] = weights[row] * (pa + lambda * pb - o.value) / scale;
            if want_jac {
                for &m in o.slate.items() {
                    let d = if m == o.item { 1.0 } else { 0.0 };
                    jac[(row, m)] = weights[row] * pa * (d - a[m] / sa) / scale;
                    jac[(row, n + m)] = weights[row] * lambda * pb * (d - b[m] / sb) / scale;
                }
            }
        }
        (r.norm_squared(), r, jac)
    };
    let mut u: Vec<f64> = a0.iter().chain(b0).map(|w| w.ln()).collect();
    if u.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let (mut cost, _, _) = cost_and_jac(&u, false);
    if !cost.is_finite() {
        return None;
    }
    let mut mu = 1e-3;
    for _ in 0..100 {
        let (_, r, jac) = cost_and_jac(&u, true);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * r;
        let mut improved = false;
        for _ in 0..20 {
            let mut m = jtj.clone();
            for d in 0..2 * n {
                m[(d, d)] += mu * (jtj[(d, d)] + 1e-12);
            }
            let Some(step) = m.cholesky().map(|c| c.solve(&(-&g))) else {
                mu *= 10.0;
                continue;
            };
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(x, d)| x + d).collect();
            let (c, _, _) = cost_and_jac(&trial, false);
            if c.is_finite() && c < cost {
                let rel = (cost - c) / cost.max(f64::MIN_POSITIVE);
                u = trial;
                cost = c;
                mu = (mu * 0.3).max(1e-12);
                improved = rel > 1e-12;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let a: Vec<f64> = u[..n].iter().map(|x| x.exp()).collect();
    let b: Vec<f64> = u[n..].iter().map(|x| x.exp()).collect();
    Some((normalize(&a), normalize(&b), cost))
}

fn normalize(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// Extension data anchored at one block item.
struct Extension {
    anchor: usize,
    c_anchor: f64,
    tail: Vec<PairSystemInput>,
}

/// Full weight vectors from a block solution, with the block mass `s`.
/// Failures in noisy mode come back as a status code.
fn assemble(
    block: &Block,
    ext: &Extension,
    selection: Selection,
    cfg: &LearnConfig,
) -> Result<std::result::Result<(Vec<f64>, Vec<f64>, f64, bool), &'static str>> {
    let (anchor, lambda) = (ext.anchor, block_lambda(ext));
    let noisy = selection == Selection::Noisy;
    let s = match solve_normalization(block.b[anchor], block.a[anchor], &ext.tail) {
        Ok(s) => s,
        Err(_) if noisy => return Ok(Err("sampling-too-noisy")),
        Err(e) => return Err(e),
    };
    let b1 = block.b[anchor] * s;
    let sigma_a = (ext.c_anchor - lambda * b1) / block.a[anchor];
    let mut a: Vec<f64> = block.a.iter().map(|x| x * sigma_a).collect();
    let mut b: Vec<f64> = block.b.iter().map(|x| x * s).collect();
    let mut extension_residual: f64 = 0.0;
    for t in &ext.tail {
        let bj = match t.partner(&b1) {
            Ok(v) => v,
            Err(_) if noisy => return Ok(Err("sampling-too-noisy")),
            Err(e) => return Err(e),
        };
        if !noisy {
            extension_residual = extension_residual.max(t.max_residual(&t.complete(b1, bj)));
        }
        b.push(bj);
        a.push(t.full_j - lambda * bj);
    }
    let a_sum: f64 = a.iter().sum();
    let sum_ok = noisy || ((a_sum - 1.0).abs() <= SUM_CHECK_TOL && extension_residual <= cfg.tol);
    if a.iter().chain(&b).any(|&w| w <= 0.0) || !a_sum.is_finite() {
        return Ok(Err("sampling-too-noisy"));
    }
    Ok(Ok((normalize(&a), normalize(&b), s, sum_ok)))
}

fn block_lambda(ext: &Extension) -> f64 {
    ext.tail.first().map_or(f64::NAN, |t| t.lambda)
}

fn run<O: ChoiceOracle>(
    oracle: &mut O,
    cfg: &LearnConfig,
    selection: Selection,
    truth: Option<&MixtureModel>,
) -> Result<LearnReport> {
    let n = oracle.n();
    cfg.validate(n)?;
    let lambda = oracle.lambda();
    let k = cfg.k;
    let mut status: Vec<&'static str> = Vec::new();
    if k == 3 {
        status.push("k3-not-generally-identifiable");
    }
    let mut ask = Asker { oracle, tally: QueryTally::default(), seen: Vec::new() };

    let mut table = OracleTable::new(k, lambda);
    for slate in Slate::all_within(k) {
        let row = slate.items().iter().map(|&i| ask.block(&slate, i)).collect::<Result<Vec<_>>>()?;
        table.insert_unchecked(slate, row);
    }
    let mut blocks = solve_block(&table, selection, cfg, &mut status)?;
    let anchor = blocks.first().map_or(0, best_anchor);
    if selection == Selection::Noisy && anchor != 0 {
        let mut perm: Vec<usize> = (0..k).collect();
        perm.swap(0, anchor);
        let mut extra = Vec::new();
        let relabelled = solve_block(&relabel(&table, &perm), selection, cfg, &mut extra)?;
        if !relabelled.is_empty() {
            blocks = relabelled
                .into_iter()
                .map(|blk| {
                    let mut a = vec![0.0; k];
                    let mut b = vec![0.0; k];
                    for (new, &old) in perm.iter().enumerate() {
                        a[old] = blk.a[new];
                        b[old] = blk.b[new];
                    }
                    Block { a, b }
                })
                .collect();
        }
    }

    let full = Slate::full(n);
    let drop_anchor = Slate::without(n, anchor);
    let c_anchor = ask.extension(&full, anchor)?;
    let mut tail = Vec::with_capacity(n - k);
    for j in k..n {
        tail.push(PairSystemInput {
            lambda,
            full_i: c_anchor,
            full_j: ask.extension(&full, j)?,
            drop_j_i: ask.extension(&Slate::without(n, j), anchor)?,
            drop_i_j: ask.extension(&drop_anchor, j)?,
            pair_i: None,
        });
    }
    let ext = Extension { anchor, c_anchor, tail };

    let mut report = LearnReport {
        schema: REPORT_SCHEMA,
        n,
        k,
        lambda,
        a_hat: None,
        b_hat: None,
        queries: ask.tally.total(),
        query_tally: ask.tally,
        query_constant: query_constant(k),
        samples: ask.oracle.samples_used(),
        samples_per_slate: None,
        block_mass: None,
        max_rel_error: None,
        status: Vec::new(),
    };

    // Oracle mode uses the unique block solution; noisy mode fits every
    // candidate to all queried values and keeps the lowest cost.
    let mut best: Option<(Vec<f64>, Vec<f64>, f64, f64)> = None;
    let mut failure = None;
    for block in &blocks {
        let (a, b, s, sum_ok) = if ext.tail.is_empty() {
            (normalize(&block.a), normalize(&block.b), 1.0, true)
        } else {
            match assemble(block, &ext, selection, cfg)? {
                Ok(v) => v,
                Err(code) => {
                    failure = Some(code);
                    continue;
                }
            }
        };
        match selection {
            Selection::Exact => {
                if !sum_ok {
                    status.push("sum-check-failed");
                }
                best = Some((a, b, s, 0.0));
                break;
            }
            Selection::Noisy => {
                let Some((pa, pb, cost)) = polish(&ask.seen, lambda, &a, &b) else { continue };
                if best.as_ref().is_none_or(|c| cost < c.3) {
                    best = Some((pa, pb, s, cost));
                }
            }
        }
    }
    let Some((a, b, s, _)) = best else {
        status.push(failure.unwrap_or("sampling-too-noisy"));
        report.status = status;
        return Ok(report);
    };
    if status.is_empty() {
        status.push("ok");
    }
    report.max_rel_error = truth.map(|m| max_rel_error(&a, &b, m, (lambda - 1.0).abs() <= 1e-12));
    report.block_mass = Some(s);
    report.a_hat = Some(a);
    report.b_hat = Some(b);
    report.status = status;
    Ok(report)
}

/// Learns `(a, b)` from exact oracle values. `truth`, when given, fills in
/// `max_rel_error` (up to swap when `λ = 1`).
pub fn learn_from_oracle<O: ChoiceOracle>(
    oracle: &mut O,
    cfg: &LearnConfig,
    truth: Option<&MixtureModel>,
) -> Result<LearnReport> {
    run(oracle, cfg, Selection::Exact, truth)
}

/// Runs the sample-mode pipeline (root selection and least-squares polish) on
/// values from any source, such as stored estimates.
pub fn learn_from_estimates<O: ChoiceOracle>(
    oracle: &mut O,
    cfg: &LearnConfig,
    truth: Option<&MixtureModel>,
) -> Result<LearnReport> {
    run(oracle, cfg, Selection::Noisy, truth)
}

/// Learns from `N` samples per queried slate drawn from `model`, using the
/// smallest-imaginary-part root rule.
pub fn learn_from_samples(model: &MixtureModel, cfg: &LearnConfig) -> Result<LearnReport> {
    let n = model.n();
    cfg.validate(n)?;
    let samples = cfg.samples_for(n);
    let mut oracle = SampledOracle::new(model.clone(), samples, cfg.seed);
    let mut report = run(&mut oracle, cfg, Selection::Noisy, Some(model))?;
    report.samples_per_slate = Some(samples);
    let (lo, hi) = regularity_ratio(model);
    if lo < cfg.c_low || hi > cfg.c_high {
        report.status.push("irregular-instance");
    }
    Ok(report)
}

/// Seed of trial `t` under a master seed.
pub fn trial_seed(master: u64, t: u64) -> u64 {
    derive_seed(master, t)
}
