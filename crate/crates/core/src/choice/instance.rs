use rand_distr::{Distribution, Exp1};

use super::{slate_distribution, MixtureModel, Slate, WeightVector};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream, StreamRng};

/// Default entrywise floor on generated weights.
pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-9;

const MAX_REGULAR_ATTEMPTS: u64 = 100_000;

/// Uniform point of the simplex by normalised exponential spacings, mixed
/// with the uniform vector so every entry is at least `floor`.
fn simplex_point(n: usize, floor: f64, rng: &mut StreamRng) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = e.iter().sum();
    let scale = 1.0 - n as f64 * floor;
    let mut w: Vec<f64> = e.iter().map(|x| floor + scale * x / total).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

/// Random 2-MNL with `a` and `b` drawn independently and uniformly from the
/// simplex. Reproducible from `seed`.
pub fn random_instance(n: usize, lambda: f64, seed: u64, floor: f64) -> Result<MixtureModel> {
    if n < 3 {
        return Err(Error::Parameter(format!("need at least 3 items, got {n}")));
    }
    if !(floor > 0.0 && floor * (n as f64) < 1.0) {
        return Err(Error::Parameter(format!("weight floor {floor} infeasible for {n} items")));
    }
    let a = simplex_point(n, floor, &mut stream(seed, 0));
    let b = simplex_point(n, floor, &mut stream(seed, 1));
    MixtureModel::new(WeightVector::new(a)?, WeightVector::new(b)?, lambda)
}

/// Range of `|S| * P(u | S)` over the full slate and every slate missing
/// one item: the quantities bounded by the large-slate regularity condition.
pub fn regularity_ratio(model: &MixtureModel) -> (f64, f64) {
    let n = model.n();
    let slates = std::iter::once(Slate::full(n)).chain((0..n).map(|j| Slate::without(n, j)));
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for s in slates {
        let k = s.len() as f64;
        for p in slate_distribution(model, &s).expect("slates lie inside the universe") {
            lo = lo.min(k * p);
            hi = hi.max(k * p);
        }
    }
    (lo, hi)
}

/// Random instance whose large-slate choice probabilities all lie in
/// `[c_low/|S|, c_high/|S|]`, by rejection over seeds derived from `seed`.
pub fn random_regular_instance(
    n: usize,
    lambda: f64,
    seed: u64,
    c_low: f64,
    c_high: f64,
) -> Result<MixtureModel> {
    if !(0.0 < c_low && c_low < 1.0 && c_high > 1.0) {
        return Err(Error::Parameter(format!(
            "regularity bounds need 0 < c_low < 1 < c_high, got ({c_low}, {c_high})"
        )));
    }
    for attempt in 0..MAX_REGULAR_ATTEMPTS {
        let m = random_instance(n, lambda, derive_seed(seed, attempt), DEFAULT_WEIGHT_FLOOR)?;
        let (lo, hi) = regularity_ratio(&m);
        if lo >= c_low && hi <= c_high {
            return Ok(m);
        }
    }
    Err(Error::Parameter(format!(
        "no regular instance with bounds ({c_low}, {c_high}) after {MAX_REGULAR_ATTEMPTS} draws"
    )))
}
