//! Real-root counting by Sturm sequences, evaluated in exact arithmetic.

use num_traits::{One, Signed, Zero};

use super::{Polynomial, RationalPolynomial, RealPolynomial};
use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

const ENDPOINT_NUDGES: usize = 5;

/// `p, p', -rem(p, p'), ...`, each rescaled to a monic-magnitude leading
/// coefficient (positive rescaling keeps every sign).
pub fn sturm_sequence(p: &RationalPolynomial) -> Vec<RationalPolynomial> {
    let normalize = |q: RationalPolynomial| match q.leading() {
        Some(l) => {
            let s = Rational::one() / l.abs();
            q.scale(&s)
        }
        None => q,
    };
    let mut seq = vec![normalize(p.clone())];
    let d = p.derivative();
    if d.is_zero() {
        return seq;
    }
    seq.push(normalize(d));
    loop {
        let k = seq.len();
        let (_, r) = seq[k - 2].div_rem(&seq[k - 1]).expect("divisor is non-zero");
        if r.is_zero() {
            break;
        }
        seq.push(normalize(r.scale(&-Rational::one())));
    }
    seq
}

fn sign_changes(seq: &[RationalPolynomial], x: &Rational) -> usize {
    let signs: Vec<i8> = seq
        .iter()
        .map(|q| q.eval(x))
        .filter(|v| !v.is_zero())
        .map(|v| if v.is_positive() { 1 } else { -1 })
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Number of distinct real roots of `p` in `(lo, hi]`.
///
/// An endpoint that is a root is nudged outward a few times before giving
/// up with [`Error::DegenerateInput`].
pub fn count_real_roots_sturm_exact(p: &RationalPolynomial, lo: &Rational, hi: &Rational) -> Result<usize> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if lo >= hi {
        return Ok(0);
    }
    let nudge = |x: &Rational, dir: i64, k: usize| -> Rational {
        let step = Rational::new(1.into(), num_bigint::BigInt::from(1u64 << 40)) * <Rational as Scalar>::from_count(k + 1);
        x.clone() + (Rational::one() + x.abs()) * step * Rational::from_ratio(dir, 1)
    };
    let mut a = lo.clone();
    let mut tries = 0;
    while p.eval(&a).is_zero() {
        if tries == ENDPOINT_NUDGES {
            return Err(Error::DegenerateInput(format!("lower endpoint {} is a root", lo.to_f64_lossy())));
        }
        a = nudge(lo, -1, tries);
        tries += 1;
    }
    let mut b = hi.clone();
    tries = 0;
    while p.eval(&b).is_zero() {
        if tries == ENDPOINT_NUDGES {
            return Err(Error::DegenerateInput(format!("upper endpoint {} is a root", hi.to_f64_lossy())));
        }
        b = nudge(hi, 1, tries);
        tries += 1;
    }
    let seq = sturm_sequence(p);
    Ok(sign_changes(&seq, &a).saturating_sub(sign_changes(&seq, &b)))
}

/// Floating front end: coefficients and endpoints are converted exactly to
/// rationals, so the count is exact for the given binary inputs.
pub fn count_real_roots_sturm(p: &RealPolynomial, lo: f64, hi: f64) -> Result<usize> {
    count_real_roots_sturm_exact(&p.to_rational(), &Rational::from_f64_lossy(lo), &Rational::from_f64_lossy(hi))
}

impl<T: Scalar> Polynomial<T> {
    /// Distinct real roots in `(lo, hi]` (Sturm; exact).
    pub fn count_real_roots(&self, lo: f64, hi: f64) -> Result<usize> {
        count_real_roots_sturm(&self.to_f64(), lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_counts() {
        let p = Polynomial::new(vec![0.0, -1.0, 0.0, 1.0]);
        assert_eq!(count_real_roots_sturm(&p, -2.0, 2.0).unwrap(), 3);
        assert_eq!(count_real_roots_sturm(&p, 0.5, 2.0).unwrap(), 1);
        let q = Polynomial::new(vec![1.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(count_real_roots_sturm(&q, -10.0, 10.0).unwrap(), 0);
    }

    #[test]
    fn multiple_roots_count_once() {
        let p = RealPolynomial::from_roots(&[0.5, 0.5, -0.25]);
        assert_eq!(count_real_roots_sturm(&p, -1.0, 1.0).unwrap(), 2);
    }

    #[test]
    fn endpoint_roots_are_nudged() {
        let p = Polynomial::new(vec![-1.0, 0.0, 1.0]);
        // (-1, 1] nudged to (-1 - eps, 1 + eps]: both roots.
        assert_eq!(count_real_roots_sturm(&p, -1.0, 1.0).unwrap(), 2);
        assert!(matches!(count_real_roots_sturm(&Polynomial::zero(), 0.0, 1.0), Err(Error::ZeroPolynomial)));
    }
}
