//! Numeric backend shared by the double-precision and exact-rational paths.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Field elements the model and polynomial code can run over.
///
/// `f64` gives the fast floating path; [`Rational`] gives bit-exact answers
/// for the rational instances that need certification.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// True for the exact backend.
    const EXACT: bool;

    fn from_f64_lossy(x: f64) -> Self;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_ratio(p: i64, q: i64) -> Self;

    fn from_rational(r: &Rational) -> Self;

    /// `|self| <= tol` for floats; exact zero test for rationals.
    fn is_negligible(&self, tol: f64) -> bool;

    fn from_count(k: usize) -> Self {
        Self::from_ratio(k as i64, 1)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_f64_lossy(x: f64) -> Self {
        x
    }

    fn to_f64_lossy(&self) -> f64 {
        *self
    }

    fn from_ratio(p: i64, q: i64) -> Self {
        p as f64 / q as f64
    }

    fn from_rational(r: &Rational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }

    fn is_negligible(&self, tol: f64) -> bool {
        self.abs() <= tol
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_f64_lossy(x: f64) -> Self {
        BigRational::from_f64(x).unwrap_or_else(BigRational::zero)
    }

    fn from_ratio(p: i64, q: i64) -> Self {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn is_negligible(&self, _tol: f64) -> bool {
        self.is_zero()
    }
}

/// Parses `"p/q"`, an integer, or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let num: BigInt = digits.parse().ok()?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let r = BigRational::new(num, den);
        return Some(if neg { -r } else { r });
    }
    s.parse::<BigInt>().ok().map(BigRational::from_integer)
}

/// Renders a rational as `"p/q"` (or `"p"` when integral).
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Best rational approximation with denominator at most `max_den`, by
/// continued-fraction convergents.
pub fn rationalize(x: f64, max_den: i64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut rest = x;
    let mut best = None;
    for _ in 0..64 {
        let a = rest.floor();
        let ai = BigInt::from_f64(a)?;
        let h2 = &ai * &h1 + &h0;
        let k2 = &ai * &k1 + &k0;
        if k2 > BigInt::from(max_den) {
            break;
        }
        best = Some(BigRational::new(h2.clone(), k2.clone()));
        h0 = std::mem::replace(&mut h1, h2);
        k0 = std::mem::replace(&mut k1, k2);
        let frac = rest - a;
        if frac.abs() < 1e-15 {
            break;
        }
        rest = 1.0 / frac;
    }
    best
}
