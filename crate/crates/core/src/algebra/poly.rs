use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, ToPrimitive, Zero};

/// Exact rational scalar used for all symbolic work.
pub type Rational = BigRational;

/// Coefficient field for [`Polynomial`]. Implemented for exact rationals and
/// for `f64` (the float instantiation backs the Newton residuals).
pub trait Coeff: Clone + PartialEq + fmt::Debug + Num + Neg<Output = Self> {
    fn to_f64(&self) -> f64;
    fn from_i64(v: i64) -> Self;
    fn from_rational(r: &Rational) -> Self;
}

impl Coeff for f64 {
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_rational(r: &Rational) -> Self {
        Coeff::to_f64(r)
    }
}

impl Coeff for Rational {
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
}

/// `n/d` as an exact rational.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Univariate polynomial, coefficients in ascending powers, trailing zeros
/// stripped. The zero polynomial is the empty coefficient vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Polynomial<T> {
    coeffs: Vec<T>,
}

impl<T: Coeff> Polynomial<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(T::one())
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    /// The formal variable itself.
    pub fn x() -> Self {
        Self::new(vec![T::zero(), T::one()])
    }

    pub fn monomial(c: T, power: usize) -> Self {
        let mut coeffs = vec![T::zero(); power + 1];
        coeffs[power] = c;
        Self::new(coeffs)
    }

    pub fn from_i64s(values: &[i64]) -> Self {
        Self::new(values.iter().map(|&v| T::from_i64(v)).collect())
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Coefficient of `x^k`, zero past the degree.
    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).cloned().unwrap_or_else(T::zero)
    }

    /// Degree, with −1 for the zero polynomial.
    pub fn degree(&self) -> isize {
        self.coeffs.len() as isize - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn leading(&self) -> T {
        self.coeffs.last().cloned().unwrap_or_else(T::zero)
    }

    pub fn eval(&self, x: &T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.to_f64())
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.clone() * T::from_i64(k as i64))
            .collect();
        Self::new(coeffs)
    }

    pub fn scale(&self, s: &T) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.clone() * s.clone()).collect())
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut out = Self::one();
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// `self(inner(x))`.
    pub fn compose(&self, inner: &Self) -> Self {
        self.coeffs.iter().rev().fold(Self::zero(), |acc, c| {
            &(&acc * inner) + &Self::constant(c.clone())
        })
    }

    /// Euclidean division over the coefficient field. Panics on a zero divisor.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        assert!(!divisor.is_zero(), "polynomial division by zero");
        let dd = divisor.degree() as usize;
        let lead = divisor.leading();
        let mut rem = self.coeffs.clone();
        if self.degree() < divisor.degree() {
            return (Self::zero(), self.clone());
        }
        let qlen = rem.len() - dd;
        let mut quot = vec![T::zero(); qlen];
        for k in (0..qlen).rev() {
            let c = rem[k + dd].clone() / lead.clone();
            if !c.is_zero() {
                for (j, dc) in divisor.coeffs.iter().enumerate() {
                    rem[k + j] = rem[k + j].clone() - c.clone() * dc.clone();
                }
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (Self::new(quot), Self::new(rem))
    }

    /// Scale so the leading coefficient is one. The zero polynomial is returned unchanged.
    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let inv = T::one() / self.leading();
        self.scale(&inv)
    }

    pub fn to_f64(&self) -> Polynomial<f64> {
        Polynomial::new(self.coeffs.iter().map(Coeff::to_f64).collect())
    }
}

impl Polynomial<Rational> {
    /// Monic greatest common divisor (exact Euclid).
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn from_f64_exact(values: &[f64]) -> Option<Self> {
        values
            .iter()
            .map(|&v| Rational::from_float(v))
            .collect::<Option<Vec<_>>>()
            .map(Self::new)
    }
}

impl<'a, T: Coeff> Add<&'a Polynomial<T>> for &'a Polynomial<T> {
    type Output = Polynomial<T>;
    fn add(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl<'a, T: Coeff> Sub<&'a Polynomial<T>> for &'a Polynomial<T> {
    type Output = Polynomial<T>;
    fn sub(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl<'a, T: Coeff> Mul<&'a Polynomial<T>> for &'a Polynomial<T> {
    type Output = Polynomial<T>;
    fn mul(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Polynomial::new(out)
    }
}

impl<T: Coeff> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        Polynomial::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }
}

macro_rules! owned_binop {
    ($tr:ident, $m:ident) => {
        impl<T: Coeff> $tr for Polynomial<T> {
            type Output = Polynomial<T>;
            fn $m(self, rhs: Polynomial<T>) -> Polynomial<T> {
                (&self).$m(&rhs)
            }
        }
    };
}
owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);

impl<T: Coeff> Neg for Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        -&self
    }
}

impl<T: Coeff + fmt::Display> fmt::Display for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})w")?,
                _ => write!(f, "({c})w^{k}")?,
            }
        }
        Ok(())
    }
}

impl<T: fmt::Debug> fmt::Debug for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coeffs.iter()).finish()
    }
}

/// Short rational when `x` is one (e.g. `0.9 → 9/10`), else the exact
/// binary value of `x`.
pub fn exact_param(x: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    rationalize(x, 4.0 * f64::EPSILON * x.abs(), 1_000_000).or_else(|| Rational::from_float(x))
}

/// Simplest rational within `tol` of `x` with denominator at most `max_den`,
/// found by walking the continued-fraction convergents.
pub fn rationalize(x: f64, tol: f64, max_den: i64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let sign = if x < 0.0 { -1 } else { 1 };
    let ax = x.abs();
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut frac = ax;
    for _ in 0..64 {
        let a = frac.floor();
        let ai = BigInt::from(a as i64);
        let h2 = &ai * &h1 + &h0;
        let k2 = &ai * &k1 + &k0;
        if k2 > BigInt::from(max_den) {
            break;
        }
        let cand = Rational::new(h2.clone(), k2.clone());
        if (Coeff::to_f64(&cand) - ax).abs() <= tol {
            return Some(if sign < 0 { -cand } else { cand });
        }
        h0 = std::mem::replace(&mut h1, h2);
        k0 = std::mem::replace(&mut k1, k2);
        let rem = frac - a;
        if rem.abs() < 1e-300 {
            break;
        }
        frac = 1.0 / rem;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = Polynomial<Rational>;

    #[test]
    fn horner_evaluation() {
        let p = P::from_i64s(&[1, 0, 1]);
        assert_eq!(p.eval(&rat(2, 1)), rat(5, 1));
        assert_eq!(P::zero().eval(&rat(7, 1)), rat(0, 1));
        // numerator 3w − 1 at w = 3
        assert_eq!(P::from_i64s(&[-1, 3]).eval(&rat(3, 1)), rat(8, 1));
        assert_eq!(Polynomial::<f64>::new(vec![1.0, 0.0, 1.0]).eval(&2.0), 5.0);
    }

    #[test]
    fn trailing_zeros_stripped() {
        let p = P::from_i64s(&[1, 2, 0, 0]);
        assert_eq!(p.degree(), 1);
        assert_eq!(P::from_i64s(&[0, 0]).degree(), -1);
        assert!(P::from_i64s(&[0]).is_zero());
    }

    #[test]
    fn division_and_gcd() {
        // (w² − 1) = (w − 1)(w + 1)
        let a = P::from_i64s(&[-1, 0, 1]);
        let b = P::from_i64s(&[-1, 1]);
        let (q, r) = a.div_rem(&b);
        assert_eq!(q, P::from_i64s(&[1, 1]));
        assert!(r.is_zero());
        assert_eq!(a.gcd(&b), b);
        let c = P::from_i64s(&[2, 1]);
        assert_eq!(a.gcd(&c), P::one());
    }

    #[test]
    fn composition_and_power() {
        let p = P::from_i64s(&[0, 0, 1]);
        let q = P::from_i64s(&[1, 1]);
        assert_eq!(p.compose(&q), P::from_i64s(&[1, 2, 1]));
        assert_eq!(q.pow(3), P::from_i64s(&[1, 3, 3, 1]));
        assert_eq!(P::x().compose(&q), q);
    }

    #[test]
    fn rationalize_recovers_simple_fractions() {
        assert_eq!(rationalize(0.9, 1e-14, 1_000_000), Some(rat(9, 10)));
        assert_eq!(rationalize(-10.0 / 29.0, 1e-14, 1_000_000), Some(rat(-10, 29)));
        assert_eq!(rationalize(3.0, 1e-14, 10), Some(rat(3, 1)));
        assert_eq!(rationalize(std::f64::consts::PI, 1e-14, 1000), None);
    }
}
