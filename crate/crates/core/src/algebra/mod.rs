//! Exact polynomial and rational-function arithmetic in one formal variable,
//! and the coefficient-system solvers built on top of it.

pub mod poly;
pub mod ratfunc;
pub mod system;

pub use poly::{exact_param, rat, rationalize, Coeff, Polynomial, Rational};
pub use ratfunc::{ratfunc_arith, ArithOp, Poly, RationalFunction};
pub use system::{
    solve_system, solve_system_with, CoefficientSystem, GenericResidual, NewtonOptions, Solution, SolveMode,
};

/// Horner evaluation, exact in and exact out.
pub fn poly_eval<T: Coeff>(p: &Polynomial<T>, x: &T) -> T {
    p.eval(x)
}

/// `outer(inner(w))`, reduced.
pub fn ratfunc_compose(outer: &RationalFunction, inner: &RationalFunction) -> crate::Result<RationalFunction> {
    outer.compose(inner)
}

/// `(dw/dW₀)·f(W₀)`.
pub fn seed_derivative(w: &RationalFunction, f: &RationalFunction) -> RationalFunction {
    w.seed_derivative(f)
}
