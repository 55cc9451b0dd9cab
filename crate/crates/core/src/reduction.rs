//! Reduction of the pair systems to univariate quartics in `b_i`.
//!
//! For a pair `(i, j)` the four equations
//!
//! ```text
//! a_i + λ b_i = C_[n](i)                      a_j + λ b_j = C_[n](j)
//! a_i/(1-a_j) + λ b_i/(1-b_j) = C_[n]\{j}(i)   a_j/(1-a_i) + λ b_j/(1-b_i) = C_[n]\{i}(j)
//! ```
//!
//! involve only `(a_i, a_j, b_i, b_j)`. Writing `x = b_i`, the last equation
//! gives `b_j = N(x)/D(x)` with `N` quadratic and `D` linear, and the third
//! equation, cleared of denominators, becomes the quartic `P(x) = 0`. The
//! optional two-item slate `{i, j}` gives a second quartic `P̃`.
//!
//! The quartics are built by evaluating the cleared expression at five
//! abscissae and interpolating, which is exact over rationals.

use crate::choice::{OracleTable, Slate};
use crate::error::{Error, Result};
use crate::poly::{sylvester_resultant, Polynomial, RealPolynomial, TOLERANCES};
use crate::scalar::Scalar;

/// Relative guard on the linear denominator `D`; the absolute threshold is
/// `DEN_GUARD * (1 + λ)`.
pub const DEN_GUARD: f64 = 1e-9;

const MAX_ABSCISSA_RETRIES: usize = 10;

/// Oracle values feeding one `(a_i, a_j, b_i, b_j)`-system.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSystemInput<T: Scalar = f64> {
    pub lambda: T,
    /// `C_[n](i)`.
    pub full_i: T,
    /// `C_[n](j)`.
    pub full_j: T,
    /// `C_[n]\{j}(i)`.
    pub drop_j_i: T,
    /// `C_[n]\{i}(j)`.
    pub drop_i_j: T,
    /// `C_{i,j}(i)`, when the two-item slate is used.
    pub pair_i: Option<T>,
}

/// The four unknowns of a pair system.
#[derive(Debug, Clone, PartialEq)]
pub struct PairWeights<T: Scalar = f64> {
    pub a_i: T,
    pub a_j: T,
    pub b_i: T,
    pub b_j: T,
}

impl<T: Scalar> PairWeights<T> {
    /// The same tuple with the roles of `i` and `j` exchanged.
    pub fn swapped(&self) -> Self {
        PairWeights { a_i: self.a_j.clone(), a_j: self.a_i.clone(), b_i: self.b_j.clone(), b_j: self.b_i.clone() }
    }

    pub fn to_vec(&self) -> Vec<T> {
        vec![self.a_i.clone(), self.a_j.clone(), self.b_i.clone(), self.b_j.clone()]
    }
}

impl<T: Scalar> PairSystemInput<T> {
    /// Reads the pair system for items `i != j` (0-based) from the oracle;
    /// `with_pair` also reads the `{i, j}` slate.
    pub fn from_oracle(oracle: &OracleTable<T>, i: usize, j: usize, with_pair: bool) -> Result<Self> {
        let n = oracle.n();
        if i == j || i >= n || j >= n {
            return Err(Error::Domain(format!("invalid pair ({}, {}) for n = {n}", i + 1, j + 1)));
        }
        let full = Slate::full(n);
        let pair_i = if with_pair { Some(oracle.value(&Slate::pair(i, j)?, i)?) } else { None };
        Ok(PairSystemInput {
            lambda: oracle.lambda().clone(),
            full_i: oracle.value(&full, i)?,
            full_j: oracle.value(&full, j)?,
            drop_j_i: oracle.value(&Slate::without(n, j), i)?,
            drop_i_j: oracle.value(&Slate::without(n, i), j)?,
            pair_i,
        })
    }

    /// The system with the roles of `i` and `j` exchanged.
    pub fn swapped(&self) -> Self {
        let one_plus = T::one() + self.lambda.clone();
        PairSystemInput {
            lambda: self.lambda.clone(),
            full_i: self.full_j.clone(),
            full_j: self.full_i.clone(),
            drop_j_i: self.drop_i_j.clone(),
            drop_i_j: self.drop_j_i.clone(),
            pair_i: self.pair_i.as_ref().map(|p| one_plus - p.clone()),
        }
    }

    /// Absolute threshold below which `D(x)` counts as zero.
    pub fn den_guard(&self) -> f64 {
        DEN_GUARD * (1.0 + self.lambda.to_f64_lossy())
    }

    /// The value `C_[n](i)/(1+λ)` at which `D` vanishes (equivalently
    /// `a_i = b_i`).
    pub fn pinned_value(&self) -> T {
        self.full_i.clone() / (T::one() + self.lambda.clone())
    }

    /// `N(x) = (1 - x)(C_[n]\{i}(j)(1 - C_[n](i) + λx) - C_[n](j))`.
    pub fn numerator(&self, x: &T) -> T {
        let l = &self.lambda;
        (T::one() - x.clone())
            * (self.drop_i_j.clone() * (T::one() - self.full_i.clone() + l.clone() * x.clone()) - self.full_j.clone())
    }

    /// `D(x) = λ((1 + λ)x - C_[n](i))`.
    pub fn denominator(&self, x: &T) -> T {
        let l = self.lambda.clone();
        l.clone() * ((T::one() + l) * x.clone() - self.full_i.clone())
    }

    fn denominator_vanishes(&self, d: &T) -> bool {
        d.is_negligible(self.den_guard())
    }

    /// `b_j` as a function of `x = b_i`.
    pub fn partner(&self, x: &T) -> Result<T> {
        let d = self.denominator(x);
        if self.denominator_vanishes(&d) {
            return Err(Error::DegenerateBranch(x.to_f64_lossy()));
        }
        Ok(self.numerator(x) / d)
    }

    /// Completes `(b_i, b_j)` to the full tuple through the `[n]` equations.
    pub fn complete(&self, b_i: T, b_j: T) -> PairWeights<T> {
        PairWeights {
            a_i: self.full_i.clone() - self.lambda.clone() * b_i.clone(),
            a_j: self.full_j.clone() - self.lambda.clone() * b_j.clone(),
            b_i,
            b_j,
        }
    }

    /// Back-substitution from `b_i` on the generic branch.
    pub fn weights_at(&self, x: &T) -> Result<PairWeights<T>> {
        let b_j = self.partner(x)?;
        Ok(self.complete(x.clone(), b_j))
    }

    /// Signed violations of the system's equations at `w`: the two `[n]`
    /// equations, the two drop-one equations, then the pair equation if
    /// present. Non-finite values are reported for vanishing denominators.
    pub fn residuals(&self, w: &PairWeights<T>) -> Vec<T> {
        let l = &self.lambda;
        let ratio = |p: T, q: T| -> T {
            if q.is_zero() {
                T::from_f64_lossy(f64::INFINITY)
            } else {
                p / q
            }
        };
        let mut out = vec![
            w.a_i.clone() + l.clone() * w.b_i.clone() - self.full_i.clone(),
            w.a_j.clone() + l.clone() * w.b_j.clone() - self.full_j.clone(),
            ratio(w.a_i.clone(), T::one() - w.a_j.clone())
                + l.clone() * ratio(w.b_i.clone(), T::one() - w.b_j.clone())
                - self.drop_j_i.clone(),
            ratio(w.a_j.clone(), T::one() - w.a_i.clone())
                + l.clone() * ratio(w.b_j.clone(), T::one() - w.b_i.clone())
                - self.drop_i_j.clone(),
        ];
        if let Some(p) = &self.pair_i {
            out.push(
                ratio(w.a_i.clone(), w.a_i.clone() + w.a_j.clone())
                    + l.clone() * ratio(w.b_i.clone(), w.b_i.clone() + w.b_j.clone())
                    - p.clone(),
            );
        }
        out
    }

    /// Residual of the drop-`j` equation on the generic branch, as a
    /// function of `x = b_i`. Its zeros are the roots of `P` without the
    /// spurious factors `1 - a_j` and `1 - b_j`.
    pub fn drop_residual(&self, x: &T) -> Result<T> {
        let w = self.weights_at(x)?;
        Ok(self.residuals(&w).swap_remove(2))
    }

    /// Largest absolute residual, as `f64`.
    pub fn max_residual(&self, w: &PairWeights<T>) -> f64 {
        self.residuals(w)
            .iter()
            .map(|r| r.to_f64_lossy().abs())
            .fold(0.0, |m, r| if r.is_nan() { f64::INFINITY } else { m.max(r) })
    }

    /// `d_i X (D - N) - a_i D (D - N) - λ x D X` with
    /// `X = (1 - C_[n](j)) D + λ N`: the drop-`j` equation times
    /// `(1 - a_j)(1 - b_j) D^2`.
    pub fn quartic_value(&self, x: &T) -> T {
        let l = self.lambda.clone();
        let n = self.numerator(x);
        let d = self.denominator(x);
        let a_i = self.full_i.clone() - l.clone() * x.clone();
        let big_x = (T::one() - self.full_j.clone()) * d.clone() + l.clone() * n.clone();
        let d_minus_n = d.clone() - n;
        self.drop_j_i.clone() * big_x.clone() * d_minus_n.clone()
            - a_i * d.clone() * d_minus_n
            - l * x.clone() * d * big_x
    }

    /// `a_i D Z + λ x D Y - p_i Y Z` with `Y = (a_i + C_[n](j)) D - λ N` and
    /// `Z = x D + N`: the pair equation times `(a_i + a_j)(b_i + b_j) D^2`.
    pub fn quartic_tilde_value(&self, x: &T) -> Result<T> {
        let p = self.pair_i.clone().ok_or_else(|| Error::MissingSlate("pair slate value".into()))?;
        let l = self.lambda.clone();
        let n = self.numerator(x);
        let d = self.denominator(x);
        let a_i = self.full_i.clone() - l.clone() * x.clone();
        let y = (a_i.clone() + self.full_j.clone()) * d.clone() - l.clone() * n.clone();
        let z = x.clone() * d.clone() + n;
        Ok(a_i * d.clone() * z.clone() + l * x.clone() * d * y.clone() - p * y * z)
    }

    /// The quartic `P` whose roots contain every generic-branch `b_i`.
    pub fn quartic(&self) -> Result<Polynomial<T>> {
        self.interpolate_with(|x| Ok(self.quartic_value(x)))
    }

    /// The quartic `P̃` from the two-item slate equation.
    pub fn quartic_tilde(&self) -> Result<Polynomial<T>> {
        if self.pair_i.is_none() {
            return Err(Error::MissingSlate("pair slate value".into()));
        }
        self.interpolate_with(|x| self.quartic_tilde_value(x))
    }

    fn interpolate_with(&self, f: impl Fn(&T) -> Result<T>) -> Result<Polynomial<T>> {
        for attempt in 0..MAX_ABSCISSA_RETRIES {
            let xs: Vec<T> = (0..5)
                .map(|k| T::from_ratio(k as i64, 4) + T::from_ratio(attempt as i64, 13))
                .collect();
            if xs.iter().any(|x| self.denominator_vanishes(&self.denominator(x))) {
                continue;
            }
            let ys = xs.iter().map(&f).collect::<Result<Vec<_>>>()?;
            return Polynomial::interpolate(&xs, &ys);
        }
        Err(Error::DegenerateInput("no interpolation abscissae avoid the denominator zero".into()))
    }
}

/// Remaining 3-item variables from `(b_1, b_2)` and the row `C_{1,2,3}`:
/// returns `(a_1, a_2, a_3, b_3)`.
pub fn back_substitute<T: Scalar>(b1: &T, b2: &T, c123: &[T], lambda: &T) -> Result<(T, T, T, T)> {
    if c123.len() != 3 {
        return Err(Error::Shape { expected: 3, actual: c123.len() });
    }
    let a1 = c123[0].clone() - lambda.clone() * b1.clone();
    let a2 = c123[1].clone() - lambda.clone() * b2.clone();
    let b3 = T::one() - b1.clone() - b2.clone();
    let a3 = T::one() - c123[0].clone() - c123[1].clone() + lambda.clone() * (b1.clone() + b2.clone());
    Ok((a1, a2, a3, b3))
}

/// `b_2 = N(b_1)/D(b_1)` in the 3-item system, from `C_{2,3}(2)`,
/// `C_{1,2,3}(1)` and `C_{1,2,3}(2)`.
pub fn b2_of_b1<T: Scalar>(b1: &T, c23_2: &T, c123_1: &T, c123_2: &T, lambda: &T) -> Result<T> {
    let sys = PairSystemInput {
        lambda: lambda.clone(),
        full_i: c123_1.clone(),
        full_j: c123_2.clone(),
        drop_j_i: T::zero(),
        drop_i_j: c23_2.clone(),
        pair_i: None,
    };
    sys.partner(b1)
}

/// Resultant gate: the Sylvester resultant of `q1` and `q2` after trimming
/// negligible leading coefficients and scaling each to unit sup-norm.
///
/// A zero polynomial shares every root and gives 0; a nonzero constant
/// shares none and gives 1.
pub fn resultant_gate(q1: &RealPolynomial, q2: &RealPolynomial) -> f64 {
    let p = q1.trim_relative(TOLERANCES.lead).normalized();
    let q = q2.trim_relative(TOLERANCES.lead).normalized();
    if p.is_zero() || q.is_zero() {
        return 0.0;
    }
    if p.degree() == 0 || q.degree() == 0 {
        return 1.0;
    }
    sylvester_resultant(&p, &q).unwrap_or(0.0)
}

/// `P` for the pair `(i, j)` deflated at a known root `anchor` (the
/// generating `b_i`).
pub fn deflated_quartic(sys: &PairSystemInput<f64>, anchor: f64) -> Result<RealPolynomial> {
    sys.quartic()?.trim_relative(TOLERANCES.lead).deflate(&anchor, TOLERANCES.deflate)
}

/// `P̃` for the pair `(i, j)` deflated at `anchor`.
pub fn deflated_quartic_tilde(sys: &PairSystemInput<f64>, anchor: f64) -> Result<RealPolynomial> {
    sys.quartic_tilde()?.trim_relative(TOLERANCES.lead).deflate(&anchor, TOLERANCES.deflate)
}

/// `W_{i j k}`: gate between the `(i, j)` and `(i, k)` systems, both deflated
/// at the generating `b_i`.
pub fn gate_w(oracle: &OracleTable<f64>, i: usize, j: usize, k: usize, anchor: f64) -> Result<f64> {
    let qj = deflated_quartic(&PairSystemInput::from_oracle(oracle, i, j, false)?, anchor)?;
    let qk = deflated_quartic(&PairSystemInput::from_oracle(oracle, i, k, false)?, anchor)?;
    Ok(resultant_gate(&qj, &qk))
}

/// Gate between `P` and `P̃` of the `(i, j)` system, both deflated at the
/// generating `b_i`; vanishes when the pair level has a second solution.
pub fn gate_pair(oracle: &OracleTable<f64>, i: usize, j: usize, anchor: f64) -> Result<f64> {
    let sys = PairSystemInput::from_oracle(oracle, i, j, true)?;
    Ok(resultant_gate(&deflated_quartic(&sys, anchor)?, &deflated_quartic_tilde(&sys, anchor)?))
}

/// `R_n = Σ W_{1jk}^2` over the listed pairs `(j, k)` (0-based, anchored at
/// item 0).
pub fn r_n_value(oracle: &OracleTable<f64>, anchor: f64, pairs: &[(usize, usize)]) -> Result<f64> {
    pairs.iter().try_fold(0.0, |acc, &(j, k)| {
        if j == 0 || k == 0 || j == k {
            return Err(Error::Domain(format!("gate pair ({}, {}) must avoid item 1", j + 1, k + 1)));
        }
        let w = gate_w(oracle, 0, j, k, anchor)?;
        Ok(acc + w * w)
    })
}
