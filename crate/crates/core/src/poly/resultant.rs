use super::Polynomial;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sylvester matrix of `p` (degree m) and `q` (degree n): `n` shifted rows of
/// `p`'s coefficients followed by `m` shifted rows of `q`'s, leading
/// coefficient first.
pub fn sylvester_matrix<T: Scalar>(p: &Polynomial<T>, q: &Polynomial<T>) -> Result<Vec<Vec<T>>> {
    if p.is_zero() || q.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let (m, n) = (p.degree(), q.degree());
    if m == 0 || n == 0 {
        return Err(Error::Shape { expected: 1, actual: 0 });
    }
    let size = m + n;
    let mut rows = Vec::with_capacity(size);
    let mut push_rows = |poly: &Polynomial<T>, count: usize| {
        let desc: Vec<T> = poly.coeffs().iter().rev().cloned().collect();
        for shift in 0..count {
            let mut row = vec![T::zero(); size];
            for (k, c) in desc.iter().enumerate() {
                row[shift + k] = c.clone();
            }
            rows.push(row);
        }
    };
    push_rows(p, n);
    push_rows(q, m);
    Ok(rows)
}

/// Determinant by Gaussian elimination with partial pivoting (largest
/// magnitude pivot; exact over rationals).
pub fn determinant<T: Scalar>(mut a: Vec<Vec<T>>) -> T {
    let n = a.len();
    let mut det = T::one();
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !a[r][col].is_zero())
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap_or(std::cmp::Ordering::Equal));
        let Some(pivot) = pivot else {
            return T::zero();
        };
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col].clone();
        det = det * p.clone();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone() / p.clone();
            for c in col..n {
                let v = a[col][c].clone();
                a[r][c] = a[r][c].clone() - f.clone() * v;
            }
        }
    }
    det
}

/// Resultant of `p` and `q`: the determinant of their Sylvester matrix.
/// Vanishes exactly when they share a (complex) root.
pub fn sylvester_resultant<T: Scalar>(p: &Polynomial<T>, q: &Polynomial<T>) -> Result<T> {
    Ok(determinant(sylvester_matrix(p, q)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{RationalPolynomial, RealPolynomial};
    use crate::scalar::Rational;

    #[test]
    fn product_formula_example() {
        let p = Polynomial::new(vec![-1.0, 0.0, 1.0]);
        let q = Polynomial::new(vec![-4.0, 0.0, 1.0]);
        assert!((sylvester_resultant(&p, &q).unwrap() - 9.0).abs() < 1e-12);
        let pe = RationalPolynomial::new(vec![Rational::from_ratio(-1, 1), Rational::from_ratio(0, 1), Rational::from_ratio(1, 1)]);
        let qe = RationalPolynomial::new(vec![Rational::from_ratio(-4, 1), Rational::from_ratio(0, 1), Rational::from_ratio(1, 1)]);
        assert_eq!(sylvester_resultant(&pe, &qe).unwrap(), Rational::from_ratio(9, 1));
    }

    #[test]
    fn self_resultant_vanishes() {
        let p = Polynomial::new(vec![0.3, -1.1, 0.7, 0.9]);
        let r = sylvester_resultant(&p, &p).unwrap();
        assert!(r.abs() <= 1e-9 * p.sup_norm().powi(3));
    }

    #[test]
    fn common_root_detection() {
        let p = RealPolynomial::from_roots(&[0.5, -0.3, 0.9]);
        let q = RealPolynomial::from_roots(&[0.5, 0.1, -0.8]);
        assert!(sylvester_resultant(&p, &q).unwrap().abs() <= 1e-8);
        let q2 = RealPolynomial::from_roots(&[0.2, 0.1, -0.8]);
        assert!(sylvester_resultant(&p, &q2).unwrap().abs() > 1e-5);
    }

    #[test]
    fn matrix_shape_and_errors() {
        let p = Polynomial::new(vec![1.0, 2.0, 3.0, 4.0]);
        let q = Polynomial::new(vec![5.0, 6.0]);
        let m = sylvester_matrix(&p, &q).unwrap();
        assert_eq!(m.len(), 4);
        assert_eq!(m[0], vec![4.0, 3.0, 2.0, 1.0]);
        assert_eq!(m[1], vec![6.0, 5.0, 0.0, 0.0]);
        assert!(matches!(sylvester_resultant(&p, &Polynomial::zero()), Err(Error::ZeroPolynomial)));
        assert!(sylvester_resultant(&p, &Polynomial::constant(2.0)).is_err());
    }
}
