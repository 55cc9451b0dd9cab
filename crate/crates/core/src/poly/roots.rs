//! Closed-form roots of real polynomials up to degree four.
//!
//! Cubics use Cardano's formula (trigonometric form when all three roots are
//! real), quartics Ferrari's resolvent cubic. Every root is then polished:
//! real roots by Newton's method, conjugate pairs by Bairstow iterations on
//! their quadratic factor, at most five steps each.

use num_complex::Complex64;

use super::{RealPolynomial, TOLERANCES};
use crate::error::{Error, Result};

const POLISH_STEPS: usize = 5;

/// Roots of a real polynomial, with multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    roots: Vec<Complex64>,
    imag_tol: f64,
}

impl RootSet {
    fn new(roots: Vec<Complex64>) -> Self {
        Self { roots, imag_tol: TOLERANCES.imag }
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn is_real(&self, i: usize) -> bool {
        self.roots[i].im.abs() <= self.imag_tol
    }

    /// Real parts of the roots flagged real, in ascending order.
    pub fn real_roots(&self) -> Vec<f64> {
        let mut out: Vec<f64> = (0..self.roots.len()).filter(|&i| self.is_real(i)).map(|i| self.roots[i].re).collect();
        out.sort_by(f64::total_cmp);
        out
    }

    /// Real roots inside the half-open interval `(lo, hi]`.
    pub fn real_roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.real_roots().into_iter().filter(|&x| x > lo && x <= hi).collect()
    }
}

/// A root as produced by a closed form, before polishing.
#[derive(Debug, Clone, Copy)]
enum Raw {
    Real(f64),
    /// A conjugate pair, stored by its member with `im > 0`.
    Pair(Complex64),
}

fn classify(z: Complex64) -> Raw {
    if z.im.abs() <= 1e-14 * (1.0 + z.norm()) {
        Raw::Real(z.re)
    } else {
        Raw::Pair(Complex64::new(z.re, z.im.abs()))
    }
}

/// Roots of `a x^2 + b x + c` with `a != 0`, avoiding cancellation.
fn quadratic_raw(a: f64, b: f64, c: f64) -> Vec<Raw> {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            return vec![Raw::Real(0.0), Raw::Real(0.0)];
        }
        vec![Raw::Real(q / a), Raw::Real(c / q)]
    } else {
        vec![Raw::Pair(Complex64::new(-b / (2.0 * a), (-disc).sqrt() / (2.0 * a).abs()))]
    }
}

/// Cardano for monic `x^3 + a x^2 + b x + c`.
fn cubic_raw(a: f64, b: f64, c: f64) -> Vec<Raw> {
    let q = (a * a - 3.0 * b) / 9.0;
    let r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
    let shift = a / 3.0;
    let q3 = q * q * q;
    if r * r < q3 {
        let theta = (r / q3.sqrt()).clamp(-1.0, 1.0).acos();
        let m = -2.0 * q.sqrt();
        let tau = std::f64::consts::TAU;
        vec![
            Raw::Real(m * (theta / 3.0).cos() - shift),
            Raw::Real(m * ((theta + tau) / 3.0).cos() - shift),
            Raw::Real(m * ((theta - tau) / 3.0).cos() - shift),
        ]
    } else {
        let big_a = -r.signum() * (r.abs() + (r * r - q3).sqrt()).cbrt();
        let big_b = if big_a == 0.0 { 0.0 } else { q / big_a };
        let x1 = big_a + big_b - shift;
        let re = -0.5 * (big_a + big_b) - shift;
        let im = 0.5 * 3f64.sqrt() * (big_a - big_b);
        match classify(Complex64::new(re, im)) {
            Raw::Real(x) => vec![Raw::Real(x1), Raw::Real(x), Raw::Real(x)],
            pair => vec![Raw::Real(x1), pair],
        }
    }
}

/// Ferrari for monic `x^4 + a x^3 + b x^2 + c x + d`.
fn quartic_raw(a: f64, b: f64, c: f64, d: f64) -> Vec<Raw> {
    let a2 = a * a;
    let p = b - 3.0 * a2 / 8.0;
    let q = c - a * b / 2.0 + a2 * a / 8.0;
    let r = d - a * c / 4.0 + a2 * b / 16.0 - 3.0 * a2 * a2 / 256.0;
    let shift = a / 4.0;
    let scale = 1.0 + p.abs() + r.abs().sqrt();
    let mut ys: Vec<Raw> = Vec::with_capacity(4);
    if q.abs() <= 1e-14 * scale * scale.sqrt() {
        // Biquadratic: z^2 + p z + r = 0 with z = y^2.
        for z in quadratic_raw(1.0, p, r) {
            match z {
                Raw::Real(z) if z >= 0.0 => {
                    ys.push(Raw::Real(z.sqrt()));
                    ys.push(Raw::Real(-z.sqrt()));
                }
                Raw::Real(z) => ys.push(Raw::Pair(Complex64::new(0.0, (-z).sqrt()))),
                Raw::Pair(z) => {
                    let w = z.sqrt();
                    ys.push(Raw::Pair(Complex64::new(w.re, w.im.abs())));
                    ys.push(Raw::Pair(Complex64::new(-w.re, w.im.abs())));
                }
            }
        }
    } else {
        // Resolvent: 8m^3 + 8p m^2 + (2p^2 - 8r) m - q^2 = 0 has a positive root.
        let m = cubic_raw(p, p * p / 4.0 - r, -q * q / 8.0)
            .into_iter()
            .filter_map(|x| match x {
                Raw::Real(x) => Some(x),
                Raw::Pair(_) => None,
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let m = polish_resolvent(m, p, r, q);
        let s = (2.0 * m).sqrt();
        let half = p / 2.0 + m;
        let t = q / (2.0 * s);
        ys.extend(quadratic_raw(1.0, -s, half + t));
        ys.extend(quadratic_raw(1.0, s, half - t));
    }
    ys.into_iter()
        .map(|y| match y {
            Raw::Real(x) => Raw::Real(x - shift),
            Raw::Pair(z) => Raw::Pair(Complex64::new(z.re - shift, z.im)),
        })
        .collect()
}

/// Newton refinement of the resolvent root `m^3 + p m^2 + (p^2/4 - r) m - q^2/8`.
fn polish_resolvent(mut m: f64, p: f64, r: f64, q: f64) -> f64 {
    let f = |m: f64| ((m + p) * m + (p * p / 4.0 - r)) * m - q * q / 8.0;
    let df = |m: f64| (3.0 * m + 2.0 * p) * m + (p * p / 4.0 - r);
    for _ in 0..3 {
        let d = df(m);
        if d == 0.0 {
            break;
        }
        let next = m - f(m) / d;
        if next > 0.0 && f(next).abs() < f(m).abs() {
            m = next;
        } else {
            break;
        }
    }
    m.max(f64::MIN_POSITIVE)
}

/// Scale-aware residual `|p(z)| / sum |c_i| |z|^i`.
fn relative_residual(p: &RealPolynomial, z: Complex64) -> f64 {
    let num = p.eval_complex(z).norm();
    let r = z.norm();
    let den = p.coeffs().iter().rev().fold(0.0, |acc, c| acc * r + c.abs());
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

fn polish_real(p: &RealPolynomial, dp: &RealPolynomial, mut x: f64, max_step: f64) -> f64 {
    let mut fx = p.eval(&x).abs();
    for _ in 0..POLISH_STEPS {
        if fx == 0.0 {
            break;
        }
        let d = dp.eval(&x);
        if d == 0.0 {
            break;
        }
        let step = p.eval(&x) / d;
        if !step.is_finite() || step.abs() > max_step {
            break;
        }
        let next = x - step;
        let fn_ = p.eval(&next).abs();
        if fn_ < fx {
            x = next;
            fx = fn_;
        } else {
            break;
        }
    }
    x
}

/// Bairstow refinement of the factor `x^2 - r x - s` of `p`. Returns the
/// refined `(r, s)`.
fn bairstow(p: &RealPolynomial, mut r: f64, mut s: f64) -> (f64, f64) {
    let a = p.coeffs();
    let n = a.len() - 1;
    if n < 2 {
        return (r, s);
    }
    let divide = |r: f64, s: f64| {
        let mut b = vec![0.0; n + 1];
        let mut c = vec![0.0; n + 1];
        b[n] = a[n];
        b[n - 1] = a[n - 1] + r * b[n];
        for i in (0..n - 1).rev() {
            b[i] = a[i] + r * b[i + 1] + s * b[i + 2];
        }
        c[n] = b[n];
        c[n - 1] = b[n - 1] + r * c[n];
        for i in (1..n - 1).rev() {
            c[i] = b[i] + r * c[i + 1] + s * c[i + 2];
        }
        (b, c)
    };
    let size = |b: &[f64]| b[0].abs() + b[1].abs();
    let (mut b, mut c) = divide(r, s);
    for _ in 0..POLISH_STEPS {
        let c3 = if n >= 3 { c[3] } else { 0.0 };
        let det = c[2] * c[2] - c3 * c[1];
        if det == 0.0 || size(&b) == 0.0 {
            break;
        }
        let dr = (-b[1] * c[2] + b[0] * c3) / det;
        let ds = (-b[0] * c[2] + b[1] * c[1]) / det;
        let (nr, ns) = (r + dr, s + ds);
        let (nb, nc) = divide(nr, ns);
        if !(nr.is_finite() && ns.is_finite()) || size(&nb) >= size(&b) {
            break;
        }
        r = nr;
        s = ns;
        b = nb;
        c = nc;
    }
    (r, s)
}

fn finish(p: &RealPolynomial, raw: Vec<Raw>) -> RootSet {
    let dp = p.derivative();
    let reals: Vec<f64> = raw
        .iter()
        .filter_map(|x| match x {
            Raw::Real(x) => Some(*x),
            Raw::Pair(_) => None,
        })
        .collect();
    let mut out: Vec<Complex64> = Vec::with_capacity(raw.len());
    for (k, &x) in reals.iter().enumerate() {
        // Do not let Newton jump onto a neighbouring root.
        let gap = reals
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, y)| (x - y).abs())
            .filter(|&g| g > 0.0)
            .fold(f64::INFINITY, f64::min);
        let max_step = if gap.is_finite() { 0.5 * gap } else { f64::INFINITY };
        out.push(Complex64::new(polish_real(p, &dp, x, max_step), 0.0));
    }
    for z in raw.iter().filter_map(|x| match x {
        Raw::Pair(z) => Some(*z),
        Raw::Real(_) => None,
    }) {
        let (r, s) = bairstow(p, 2.0 * z.re, -z.norm_sqr());
        for root in quadratic_raw(1.0, -r, -s) {
            match root {
                Raw::Real(x) => out.push(Complex64::new(x, 0.0)),
                Raw::Pair(w) => {
                    out.push(w);
                    out.push(w.conj());
                }
            }
        }
    }
    out.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    RootSet::new(out)
}

fn exact_degree(p: &RealPolynomial, expected: usize) -> Result<RealPolynomial> {
    let t = p.trim_relative(TOLERANCES.lead);
    if t.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if t.degree() != expected {
        return Err(Error::Shape { expected, actual: t.degree() });
    }
    Ok(t)
}

pub fn solve_quadratic(p: &RealPolynomial) -> Result<RootSet> {
    let p = exact_degree(p, 2)?;
    let c = p.coeffs();
    Ok(finish(&p, quadratic_raw(c[2], c[1], c[0])))
}

/// All three roots of a cubic.
pub fn solve_cubic(p: &RealPolynomial) -> Result<RootSet> {
    let p = exact_degree(p, 3)?;
    let c = p.coeffs();
    Ok(finish(&p, cubic_raw(c[2] / c[3], c[1] / c[3], c[0] / c[3])))
}

/// All four roots of a quartic.
pub fn solve_quartic(p: &RealPolynomial) -> Result<RootSet> {
    let p = exact_degree(p, 4)?;
    let c = p.coeffs();
    Ok(finish(&p, quartic_raw(c[3] / c[4], c[2] / c[4], c[1] / c[4], c[0] / c[4])))
}

/// Roots of a polynomial of degree at most four. Negligible leading
/// coefficients are trimmed first, so a nearly-degenerate quartic degrades
/// to the lower-degree solver.
pub fn solve(p: &RealPolynomial) -> Result<RootSet> {
    let t = p.trim_relative(TOLERANCES.lead);
    match t.degree() {
        _ if t.is_zero() => Err(Error::ZeroPolynomial),
        0 => Ok(RootSet::new(Vec::new())),
        1 => {
            let c = t.coeffs();
            Ok(RootSet::new(vec![Complex64::new(-c[0] / c[1], 0.0)]))
        }
        2 => solve_quadratic(&t),
        3 => solve_cubic(&t),
        4 => solve_quartic(&t),
        d => Err(Error::Shape { expected: 4, actual: d }),
    }
}

/// Largest scale-aware residual over a root set.
pub fn max_relative_residual(p: &RealPolynomial, roots: &RootSet) -> f64 {
    roots.roots().iter().map(|&z| relative_residual(p, z)).fold(0.0, f64::max)
}
