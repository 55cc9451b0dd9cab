//! Dense univariate polynomials and the root machinery built on them.

mod resultant;
mod roots;
mod sturm;

pub use resultant::{determinant, sylvester_matrix, sylvester_resultant};
pub use roots::{max_relative_residual, solve, solve_cubic, solve_quadratic, solve_quartic, RootSet};
pub use sturm::{count_real_roots_sturm, count_real_roots_sturm_exact, sturm_sequence};

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

/// Numerical guards shared by the floating solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// A root is real when `|imag| <= imag`.
    pub imag: f64,
    /// Deflation accepts `r` when `|p(r)| <= deflate * ||p||_inf`.
    pub deflate: f64,
    /// Leading coefficients below `lead * ||p||_inf` are trimmed.
    pub lead: f64,
    /// Allowed mismatch between conjugate partners.
    pub conj: f64,
}

pub const TOLERANCES: Tolerances = Tolerances { imag: 1e-8, deflate: 1e-6, lead: 1e-13, conj: 1e-8 };

/// Dense polynomial with ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<T: Scalar = f64> {
    coeffs: Vec<T>,
}

pub type RealPolynomial = Polynomial<f64>;
pub type RationalPolynomial = Polynomial<Rational>;

impl<T: Scalar> Polynomial<T> {
    /// Drops exactly-zero leading coefficients.
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    /// `x - r`.
    pub fn linear_factor(r: T) -> Self {
        Self::new(vec![-r, T::one()])
    }

    pub fn from_roots(roots: &[T]) -> Self {
        roots
            .iter()
            .fold(Self::constant(T::one()), |acc, r| acc.mul(&Self::linear_factor(r.clone())))
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> Option<&T> {
        self.coeffs.last()
    }

    pub fn coeff(&self, i: usize) -> T {
        self.coeffs.get(i).cloned().unwrap_or_else(T::zero)
    }

    pub fn eval(&self, x: &T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    pub fn sup_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.to_f64_lossy().abs()).fold(0.0, f64::max)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c.clone() * T::from_count(i))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..len).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..len).map(|i| self.coeff(i) - other.coeff(i)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, x) in self.coeffs.iter().enumerate() {
            for (j, y) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + x.clone() * y.clone();
            }
        }
        Self::new(out)
    }

    pub fn scale(&self, k: &T) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.clone() * k.clone()).collect())
    }

    /// Synthetic division by `x - r`: returns `(q, p(r))`.
    pub fn divide_linear(&self, r: &T) -> (Self, T) {
        if self.coeffs.len() <= 1 {
            return (Self::zero(), self.coeff(0));
        }
        let d = self.coeffs.len() - 1;
        let mut q = vec![T::zero(); d];
        let mut carry = T::zero();
        for i in (0..=d).rev() {
            let v = self.coeffs[i].clone() + carry.clone() * r.clone();
            if i == 0 {
                return (Self::new(q), v);
            }
            q[i - 1] = v.clone();
            carry = v;
        }
        unreachable!()
    }

    /// Divides out the root `r`; fails unless `|p(r)| <= deflate_tol *
    /// ||p||_inf` (exact zero for rationals).
    pub fn deflate(&self, r: &T, deflate_tol: f64) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let (q, rem) = self.divide_linear(r);
        if !rem.is_negligible(deflate_tol * self.sup_norm()) {
            return Err(Error::NotARoot { value: r.to_f64_lossy(), residual: rem.to_f64_lossy().abs() });
        }
        Ok(q)
    }

    /// Euclidean division `self = q * divisor + r`.
    pub fn div_rem(&self, divisor: &Self) -> Result<(Self, Self)> {
        let lead = divisor.leading().cloned().ok_or(Error::ZeroPolynomial)?;
        let dd = divisor.degree();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Ok((Self::zero(), self.clone()));
        }
        let mut q = vec![T::zero(); rem.len() - dd];
        for k in (0..q.len()).rev() {
            let f = rem[k + dd].clone() / lead.clone();
            for (j, c) in divisor.coeffs.iter().enumerate() {
                rem[k + j] = rem[k + j].clone() - f.clone() * c.clone();
            }
            rem[k + dd] = T::zero();
            q[k] = f;
        }
        rem.truncate(dd);
        Ok((Self::new(q), Self::new(rem)))
    }

    /// Interpolating polynomial of degree `< xs.len()` through `(xs, ys)`
    /// (Newton divided differences; exact over rationals).
    pub fn interpolate(xs: &[T], ys: &[T]) -> Result<Self> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(Error::Parameter("interpolation needs matching non-empty abscissae and values".into()));
        }
        let m = xs.len();
        let mut dd: Vec<T> = ys.to_vec();
        for level in 1..m {
            for i in (level..m).rev() {
                let den = xs[i].clone() - xs[i - level].clone();
                if den.is_zero() {
                    return Err(Error::Parameter("repeated interpolation abscissa".into()));
                }
                dd[i] = (dd[i].clone() - dd[i - 1].clone()) / den;
            }
        }
        let mut p = Self::constant(dd[m - 1].clone());
        for k in (0..m - 1).rev() {
            p = p.mul(&Self::linear_factor(xs[k].clone())).add(&Self::constant(dd[k].clone()));
        }
        Ok(p)
    }

    pub fn to_f64(&self) -> RealPolynomial {
        Polynomial::new(self.coeffs.iter().map(Scalar::to_f64_lossy).collect())
    }
}

impl RealPolynomial {
    /// Removes leading coefficients below `tol * ||p||_inf`.
    pub fn trim_relative(&self, tol: f64) -> Self {
        let thresh = tol * self.sup_norm();
        let mut c = self.coeffs.clone();
        while c.last().is_some_and(|x| x.abs() <= thresh) {
            c.pop();
        }
        Self { coeffs: c }
    }

    /// Scales to unit sup-norm coefficients.
    pub fn normalized(&self) -> Self {
        let s = self.sup_norm();
        if s == 0.0 {
            return self.clone();
        }
        self.scale(&(1.0 / s))
    }

    /// Exact rational image of the coefficients.
    pub fn to_rational(&self) -> RationalPolynomial {
        Polynomial::new(self.coeffs.iter().map(|&c| Rational::from_f64_lossy(c)).collect())
    }

    /// Horner evaluation at a complex point.
    pub fn eval_complex(&self, z: num_complex::Complex64) -> num_complex::Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(num_complex::Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }
}

/// Discriminant `18abcd - 4b^3 d + b^2 c^2 - 4ac^3 - 27a^2 d^2` of
/// `ax^3 + bx^2 + cx + d`; non-negative exactly when all roots are real.
pub fn cubic_discriminant<T: Scalar>(p: &Polynomial<T>) -> Result<T> {
    if p.degree() != 3 || p.is_zero() {
        return Err(Error::Shape { expected: 3, actual: p.degree() });
    }
    let (a, b, c, d) = (p.coeff(3), p.coeff(2), p.coeff(1), p.coeff(0));
    let k = |v: i64| T::from_ratio(v, 1);
    Ok(k(18) * a.clone() * b.clone() * c.clone() * d.clone()
        - k(4) * b.clone() * b.clone() * b.clone() * d.clone()
        + b.clone() * b.clone() * c.clone() * c.clone()
        - k(4) * a.clone() * c.clone() * c.clone() * c
        - k(27) * a.clone() * a * d.clone() * d)
}
