use std::collections::BTreeMap;

use super::{MixtureModel, Slate};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Tolerance on the `(1+lambda)` row sum of a floating oracle table.
pub const ORACLE_SUM_TOL: f64 = 1e-10;

/// Choice probabilities `D_T(i)` of `model` on `slate`, in slate order.
pub fn slate_distribution<T: Scalar>(model: &MixtureModel<T>, slate: &Slate) -> Result<Vec<T>> {
    slate.check_within(model.n())?;
    let lambda = model.lambda().clone();
    let one_plus = T::one() + lambda.clone();
    let wa = T::one() / one_plus.clone();
    let wb = lambda / one_plus;
    let (a, b) = (model.a().as_slice(), model.b().as_slice());
    let sa = slate.items().iter().fold(T::zero(), |s, &i| s + a[i].clone());
    let sb = slate.items().iter().fold(T::zero(), |s, &i| s + b[i].clone());
    Ok(slate
        .items()
        .iter()
        .map(|&i| wa.clone() * a[i].clone() / sa.clone() + wb.clone() * b[i].clone() / sb.clone())
        .collect())
}

/// Scaled values `C_T(i) = a_i/sum_T a + lambda b_i/sum_T b` for raw weight
/// tuples that need not lie on the simplex (or even be positive).
pub fn slate_values<T: Scalar>(a: &[T], b: &[T], lambda: &T, slate: &Slate) -> Vec<T> {
    let sa = slate.items().iter().fold(T::zero(), |s, &i| s + a[i].clone());
    let sb = slate.items().iter().fold(T::zero(), |s, &i| s + b[i].clone());
    slate
        .items()
        .iter()
        .map(|&i| a[i].clone() / sa.clone() + lambda.clone() * b[i].clone() / sb.clone())
        .collect()
}

/// Table of scaled slate distributions `C_T = (1+lambda) D_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleTable<T: Scalar = f64> {
    n: usize,
    lambda: T,
    entries: BTreeMap<Slate, Vec<T>>,
}

impl<T: Scalar> OracleTable<T> {
    pub fn new(n: usize, lambda: T) -> Self {
        Self { n, lambda, entries: BTreeMap::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> &T {
        &self.lambda
    }

    /// Inserts a row after checking its length, range and `(1+lambda)` sum.
    pub fn insert(&mut self, slate: Slate, row: Vec<T>) -> Result<()> {
        slate.check_within(self.n)?;
        if row.len() != slate.len() {
            return Err(Error::Domain(format!("row for slate {slate} has {} entries", row.len())));
        }
        let top = T::one() + self.lambda.clone();
        if row.iter().any(|c| !(*c > T::zero()) || *c >= top) {
            return Err(Error::Domain(format!("entries of slate {slate} leave (0, 1+lambda)")));
        }
        let sum = row.iter().fold(T::zero(), |s, c| s + c.clone());
        if !(sum - top).is_negligible(ORACLE_SUM_TOL) {
            return Err(Error::Domain(format!("row for slate {slate} does not sum to 1+lambda")));
        }
        self.entries.insert(slate, row);
        Ok(())
    }

    /// Inserts a row without range checks (formal, possibly non-simplex
    /// inputs).
    pub fn insert_unchecked(&mut self, slate: Slate, row: Vec<T>) {
        self.entries.insert(slate, row);
    }

    pub fn row(&self, slate: &Slate) -> Result<&[T]> {
        self.entries
            .get(slate)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingSlate(slate.to_string()))
    }

    /// `C_T(item)`.
    pub fn value(&self, slate: &Slate, item: usize) -> Result<T> {
        let row = self.row(slate)?;
        let pos = slate
            .position(item)
            .ok_or_else(|| Error::Domain(format!("item {} not in slate {slate}", item + 1)))?;
        Ok(row[pos].clone())
    }

    pub fn contains(&self, slate: &Slate) -> bool {
        self.entries.contains_key(slate)
    }

    pub fn slates(&self) -> impl Iterator<Item = &Slate> {
        self.entries.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Slate, &Vec<T>)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_f64(&self) -> OracleTable<f64> {
        OracleTable {
            n: self.n,
            lambda: self.lambda.to_f64_lossy(),
            entries: self
                .entries
                .iter()
                .map(|(s, r)| (s.clone(), r.iter().map(Scalar::to_f64_lossy).collect()))
                .collect(),
        }
    }
}

/// Exact oracle rows for the requested slates.
pub fn oracle_table<'a, T: Scalar>(
    model: &MixtureModel<T>,
    slates: impl IntoIterator<Item = &'a Slate>,
) -> Result<OracleTable<T>> {
    let one_plus = T::one() + model.lambda().clone();
    let mut table = OracleTable::new(model.n(), model.lambda().clone());
    for slate in slates {
        let row = slate_distribution(model, slate)?
            .into_iter()
            .map(|d| one_plus.clone() * d)
            .collect();
        table.entries.insert(slate.clone(), row);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::WeightVector;
    use crate::scalar::Rational;

    fn r(p: i64, q: i64) -> Rational {
        Rational::from_ratio(p, q)
    }

    fn counterexample() -> MixtureModel<Rational> {
        let a = WeightVector::new(vec![r(2, 5), r(2, 5), r(1, 10), r(1, 10)]).unwrap();
        let b = WeightVector::new(vec![r(3, 10), r(3, 10), r(1, 5), r(1, 5)]).unwrap();
        MixtureModel::new(a, b, r(2, 1)).unwrap()
    }

    #[test]
    fn uniform_components_give_uniform_slates() {
        let w = WeightVector::new(vec![1.0 / 3.0; 3]).unwrap();
        let m = MixtureModel::new(w.clone(), w, 7.0).unwrap();
        let d = slate_distribution(&m, &Slate::pair(0, 1).unwrap()).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-15 && (d[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn counterexample_distributions_exact() {
        let m = counterexample();
        let d = slate_distribution(&m, &Slate::pair(0, 1).unwrap()).unwrap();
        assert_eq!(d, vec![r(1, 2), r(1, 2)]);
        let d = slate_distribution(&m, &Slate::full(4)).unwrap();
        assert_eq!(d[0], r(1, 3));
    }

    #[test]
    fn counterexample_oracle_exact() {
        let m = counterexample();
        let slates = [Slate::full(4), Slate::pair(0, 1).unwrap(), Slate::without(4, 1)];
        let t = oracle_table(&m, &slates).unwrap();
        assert_eq!(t.value(&slates[0], 0).unwrap(), r(1, 1));
        assert_eq!(t.value(&slates[1], 0).unwrap(), r(3, 2));
        assert_eq!(t.value(&slates[2], 0).unwrap(), r(32, 21));
        let tf = oracle_table(&m.to_f64(), &slates).unwrap();
        assert!((tf.value(&slates[2], 0).unwrap() - 32.0 / 21.0).abs() < 1e-14);
    }

    #[test]
    fn invalid_slate_is_domain_error() {
        let m = counterexample().to_f64();
        let err = slate_distribution(&m, &Slate::pair(0, 4).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn formal_values_match_model_path() {
        let m = counterexample();
        let s = Slate::without(4, 2);
        let direct = slate_values(m.a().as_slice(), m.b().as_slice(), m.lambda(), &s);
        let t = oracle_table(&m, [&s]).unwrap();
        assert_eq!(t.row(&s).unwrap(), direct.as_slice());
    }

    #[test]
    fn insert_checks_rows() {
        let mut t = OracleTable::new(3, 1.0);
        let s = Slate::pair(0, 1).unwrap();
        assert!(t.insert(s.clone(), vec![1.0, 0.5]).is_err());
        assert!(t.insert(s.clone(), vec![1.5]).is_err());
        assert!(t.insert(s.clone(), vec![1.5, 0.5]).is_ok());
        assert!(matches!(t.row(&Slate::full(3)), Err(Error::MissingSlate(_))));
    }
}
