//! Model types for mixtures of two MNLs and their slate distributions.

mod instance;
pub mod io;
mod oracle;
mod sample;

pub use instance::{random_instance, random_regular_instance, regularity_ratio, DEFAULT_WEIGHT_FLOOR};
pub use oracle::{oracle_table, slate_distribution, slate_values, OracleTable};
pub use sample::{sample_counts, sample_empirical, EmpiricalTable};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Tolerance on the simplex sum of a floating weight vector.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// One MNL component: a strictly positive point of the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T: Scalar = f64> {
    w: Vec<T>,
}

impl<T: Scalar> WeightVector<T> {
    /// Validates positivity and the unit sum (exact for rationals).
    pub fn new(w: Vec<T>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Domain("empty weight vector".into()));
        }
        if let Some(pos) = w.iter().position(|x| !(*x > T::zero())) {
            return Err(Error::Domain(format!("weight {} is not strictly positive", pos + 1)));
        }
        let sum = w.iter().fold(T::zero(), |acc, x| acc + x.clone());
        if !(sum - T::one()).is_negligible(SIMPLEX_TOL) {
            return Err(Error::Domain("weights do not sum to 1".into()));
        }
        Ok(Self { w })
    }

    /// Rescales positive weights onto the simplex; a weight vector and any
    /// positive multiple of it induce the same choice probabilities.
    pub fn normalized(w: Vec<T>) -> Result<Self> {
        if let Some(pos) = w.iter().position(|x| !(*x > T::zero())) {
            return Err(Error::Domain(format!("weight {} is not strictly positive", pos + 1)));
        }
        let sum = w.iter().fold(T::zero(), |acc, x| acc + x.clone());
        Self::new(w.into_iter().map(|x| x / sum.clone()).collect())
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.w
    }

    pub fn to_f64(&self) -> WeightVector<f64> {
        WeightVector { w: self.w.iter().map(Scalar::to_f64_lossy).collect() }
    }
}

impl<T: Scalar> std::ops::Index<usize> for WeightVector<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.w[i]
    }
}

/// A 2-MNL `(a, b, lambda)`: weights `a` are used with probability
/// `1/(1+lambda)` and `b` with probability `lambda/(1+lambda)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel<T: Scalar = f64> {
    a: WeightVector<T>,
    b: WeightVector<T>,
    lambda: T,
}

impl<T: Scalar> MixtureModel<T> {
    pub fn new(a: WeightVector<T>, b: WeightVector<T>, lambda: T) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Domain(format!(
                "weight vectors have lengths {} and {}",
                a.len(),
                b.len()
            )));
        }
        if a.len() < 3 {
            return Err(Error::Parameter(format!("need at least 3 items, got {}", a.len())));
        }
        if !(lambda > T::zero()) {
            return Err(Error::Parameter("lambda must be positive".into()));
        }
        Ok(Self { a, b, lambda })
    }

    /// Builds the model from the mixing weight `mu = 1/(1+lambda)` of `a`.
    pub fn from_mu(a: WeightVector<T>, b: WeightVector<T>, mu: T) -> Result<Self> {
        if !(mu > T::zero() && mu < T::one()) {
            return Err(Error::Parameter("mu must lie in (0, 1)".into()));
        }
        let lambda = (T::one() - mu.clone()) / mu;
        Self::new(a, b, lambda)
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &WeightVector<T> {
        &self.a
    }

    pub fn b(&self) -> &WeightVector<T> {
        &self.b
    }

    pub fn lambda(&self) -> &T {
        &self.lambda
    }

    pub fn mu(&self) -> T {
        T::one() / (T::one() + self.lambda.clone())
    }

    /// The model with components exchanged and `lambda` inverted; it induces
    /// the same slate distributions.
    pub fn swapped(&self) -> Self {
        Self {
            a: self.b.clone(),
            b: self.a.clone(),
            lambda: T::one() / self.lambda.clone(),
        }
    }

    pub fn to_f64(&self) -> MixtureModel<f64> {
        MixtureModel { a: self.a.to_f64(), b: self.b.to_f64(), lambda: self.lambda.to_f64_lossy() }
    }
}

/// A slate: a sorted set of at least two distinct item indices (0-based).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Slate {
    items: Vec<usize>,
}

impl Slate {
    pub fn new(mut items: Vec<usize>) -> Result<Self> {
        items.sort_unstable();
        items.dedup();
        if items.len() < 2 {
            return Err(Error::Domain("a slate needs at least two distinct items".into()));
        }
        Ok(Self { items })
    }

    /// The full universe `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        Self { items: (0..n).collect() }
    }

    /// The universe without item `j`.
    pub fn without(n: usize, j: usize) -> Self {
        Self { items: (0..n).filter(|&i| i != j).collect() }
    }

    pub fn pair(i: usize, j: usize) -> Result<Self> {
        Self::new(vec![i, j])
    }

    /// Every slate inside `{0, .., k-1}`, ordered by size then
    /// lexicographically.
    pub fn all_within(k: usize) -> Vec<Slate> {
        let mut out: Vec<Slate> = (0u64..(1u64 << k))
            .filter(|m| m.count_ones() >= 2)
            .map(|m| Slate { items: (0..k).filter(|i| m & (1 << i) != 0).collect() })
            .collect();
        out.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.items.cmp(&y.items)));
        out
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.items.binary_search(&i).is_ok()
    }

    /// Position of item `i` within the slate.
    pub fn position(&self, i: usize) -> Option<usize> {
        self.items.binary_search(&i).ok()
    }

    pub fn check_within(&self, n: usize) -> Result<()> {
        match self.items.last() {
            Some(&max) if max >= n => {
                Err(Error::Domain(format!("slate item {} outside a universe of {} items", max + 1, n)))
            }
            _ => Ok(()),
        }
    }
}

impl TryFrom<Vec<usize>> for Slate {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Slate::new(v)
    }
}

impl From<Slate> for Vec<usize> {
    fn from(s: Slate) -> Self {
        s.items
    }
}

impl std::fmt::Display for Slate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let items: Vec<String> = self.items.iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}
