use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::poly::{Polynomial, Rational};
use crate::error::{Error, Result};

pub type Poly = Polynomial<Rational>;

/// Exact ratio of polynomials in one formal variable, always kept reduced:
/// `gcd(num, den) = 1` and `den` monic. The zero function is `0/1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    num: Poly,
    den: Poly,
}

impl RationalFunction {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZeroFunction);
        }
        Ok(Self::reduce(num, den))
    }

    fn reduce(num: Poly, den: Poly) -> Self {
        if num.is_zero() {
            return Self {
                num,
                den: Poly::one(),
            };
        }
        let g = num.gcd(&den);
        let (num, _) = num.div_rem(&g);
        let (den, _) = den.div_rem(&g);
        let lead = den.leading();
        let inv = Rational::one() / lead;
        Self {
            num: num.scale(&inv),
            den: den.scale(&inv),
        }
    }

    pub fn from_poly(p: Poly) -> Self {
        Self {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_poly(Poly::constant(c))
    }

    pub fn zero() -> Self {
        Self::from_poly(Poly::zero())
    }

    /// The formal variable `w`.
    pub fn identity() -> Self {
        Self::from_poly(Poly::x())
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// `Some(c)` when the function is the constant `c`.
    pub fn as_constant(&self) -> Option<Rational> {
        (self.num.is_constant() && self.den.is_constant()).then(|| self.num.coeff(0))
    }

    pub fn eval_f64(&self, w: f64) -> f64 {
        self.num.eval_f64(w) / self.den.eval_f64(w)
    }

    /// Exact evaluation; `None` at a pole.
    pub fn eval(&self, w: &Rational) -> Option<Rational> {
        let d = self.den.eval(w);
        (!d.is_zero()).then(|| self.num.eval(w) / d)
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZeroFunction);
        }
        Self::new(&self.num * &rhs.den, &self.den * &rhs.num)
    }

    /// `self(inner(w))`, reduced.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        let m = self.num.degree().max(self.den.degree()).max(0) as usize;
        let homogenize = |p: &Poly| {
            let mut acc = Poly::zero();
            for (k, c) in p.coeffs().iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let term = &inner.num.pow(k) * &inner.den.pow(m - k);
                acc = &acc + &term.scale(c);
            }
            acc
        };
        let num = homogenize(&self.num);
        let den = homogenize(&self.den);
        if den.is_zero() {
            return Err(Error::DegenerateComposition);
        }
        Ok(Self::reduce(num, den))
    }

    /// Derivative with respect to the formal variable.
    pub fn derivative(&self) -> Self {
        let num = &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative());
        let den = &self.den * &self.den;
        Self::reduce(num, den)
    }

    /// Chain rule along the autonomous flow `W₀′ = f(W₀)`: returns
    /// `(dw/dW₀)·f` as a function of `W₀`.
    pub fn seed_derivative(&self, flow: &Self) -> Self {
        &self.derivative() * flow
    }

    pub fn pow(&self, k: usize) -> Self {
        Self {
            num: self.num.pow(k),
            den: self.den.pow(k),
        }
    }

    /// Quotient and proper remainder: `num/den = q + r/den`.
    pub fn split_polynomial_part(&self) -> (Poly, Poly) {
        self.num.div_rem(&self.den)
    }

    pub fn degrees(&self) -> (isize, isize) {
        (self.num.degree(), self.den.degree())
    }
}

impl Add for &RationalFunction {
    type Output = RationalFunction;
    fn add(self, rhs: &RationalFunction) -> RationalFunction {
        let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
        RationalFunction::reduce(num, &self.den * &rhs.den)
    }
}

impl Sub for &RationalFunction {
    type Output = RationalFunction;
    fn sub(self, rhs: &RationalFunction) -> RationalFunction {
        let num = &(&self.num * &rhs.den) - &(&rhs.num * &self.den);
        RationalFunction::reduce(num, &self.den * &rhs.den)
    }
}

impl Mul for &RationalFunction {
    type Output = RationalFunction;
    fn mul(self, rhs: &RationalFunction) -> RationalFunction {
        RationalFunction::reduce(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl Neg for &RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        RationalFunction {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

/// Arithmetic selector mirroring the four field operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

pub fn ratfunc_arith(a: &RationalFunction, b: &RationalFunction, op: ArithOp) -> Result<RationalFunction> {
    Ok(match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
        ArithOp::Div => a.checked_div(b)?,
    })
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_constant() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

impl fmt::Debug for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RationalFunction({:?} / {:?})", self.num, self.den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::poly::rat;

    fn poly(c: &[i64]) -> Poly {
        Poly::from_i64s(c)
    }

    fn rf(n: &[i64], d: &[i64]) -> RationalFunction {
        RationalFunction::new(poly(n), poly(d)).unwrap()
    }

    #[test]
    fn reduction_to_lowest_terms() {
        let r = rf(&[-1, 0, 1], &[-1, 1]);
        assert_eq!(r, rf(&[1, 1], &[1]));
        // denominator made monic
        let r = rf(&[2], &[4, 2]);
        assert_eq!(r.denominator(), &poly(&[2, 1]));
        assert_eq!(r.numerator(), &poly(&[1]));
    }

    #[test]
    fn cubic_over_linear_seed() {
        // (W−1)³ / (W−3)
        let a = RationalFunction::from_poly(poly(&[-1, 1]).pow(3));
        let b = RationalFunction::from_poly(poly(&[-3, 1]));
        let f = ratfunc_arith(&a, &b, ArithOp::Div).unwrap();
        assert_eq!(f.numerator(), &poly(&[-1, 3, -3, 1]));
        assert_eq!(f.denominator(), &poly(&[-3, 1]));
        // W² + (3W−1)/(W−3) is the same function
        let w2 = RationalFunction::from_poly(poly(&[0, 0, 1]));
        let split = rf(&[-1, 3], &[-3, 1]);
        assert_eq!(&w2 + &split, f);
    }

    #[test]
    fn subtract_self_is_zero() {
        let a = rf(&[1, 2, 3], &[5, 0, 1]);
        assert!(ratfunc_arith(&a, &a, ArithOp::Sub).unwrap().is_zero());
    }

    #[test]
    fn divide_by_zero_function() {
        let a = rf(&[1, 1], &[1]);
        assert_eq!(
            ratfunc_arith(&a, &RationalFunction::zero(), ArithOp::Div),
            Err(Error::DivisionByZeroFunction)
        );
        assert_eq!(RationalFunction::new(poly(&[1]), Poly::zero()), Err(Error::DivisionByZeroFunction));
    }

    #[test]
    fn composition_identities() {
        let outer = rf(&[1, 0, 2], &[3, 1]);
        assert_eq!(RationalFunction::identity().compose(&outer).unwrap(), outer);
        assert_eq!(outer.compose(&RationalFunction::identity()).unwrap(), outer);
        let c = RationalFunction::constant(rat(7, 2));
        assert_eq!(c.compose(&outer).unwrap(), c);
    }

    #[test]
    fn degenerate_composition_detected() {
        // 1/(w − 2) composed with the constant 2
        let outer = rf(&[1], &[-2, 1]);
        let inner = RationalFunction::constant(rat(2, 1));
        assert_eq!(outer.compose(&inner), Err(Error::DegenerateComposition));
    }

    #[test]
    fn seed_derivative_identity_and_constant() {
        let f = rf(&[1, 2, 3], &[1]);
        assert_eq!(RationalFunction::identity().seed_derivative(&f), f);
        assert!(RationalFunction::constant(rat(5, 1)).seed_derivative(&f).is_zero());
    }

    #[test]
    fn seed_derivative_of_box_rung_matches_finite_differences() {
        // w − 1/w along w′ = w² + 1, i.e. d/dx (tan x − cot x)
        let rung = rf(&[-1, 0, 1], &[0, 1]);
        let flow = rf(&[1, 0, 1], &[1]);
        let d = rung.seed_derivative(&flow);
        let expect = &rf(&[1, 0, 1], &[0, 0, 1]) * &flow;
        assert_eq!(d, expect);
        let g = |x: f64| x.tan() - 1.0 / x.tan();
        for k in 1..=50 {
            let x = -std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::PI / 51.0;
            if x.abs() < 1e-3 {
                continue;
            }
            let h = 1e-6;
            let fd = (g(x + h) - g(x - h)) / (2.0 * h);
            let exact = d.eval_f64(x.tan());
            assert!((fd - exact).abs() < 1e-5 * exact.abs().max(1.0), "x={x} fd={fd} exact={exact}");
        }
    }
}
