//! Coefficient-matching systems and their solvers.
//!
//! A [`CoefficientSystem`] is a list of residual polynomials whose
//! coefficients are evaluable expressions in a set of named unknowns. The
//! system is satisfied when every coefficient of every residual vanishes.
//! Two solvers are provided: an exact elimination for systems that are linear
//! in the unknowns, and a damped Newton (Levenberg–Marquardt) iteration in
//! floating point for everything else.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Zero};

use super::poly::{Coeff, Rational};
use crate::error::{Error, Result};

pub type FloatResidual = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type ExactResidual = Arc<dyn Fn(&[Rational]) -> Vec<Rational> + Send + Sync>;

/// Residual expression that can be evaluated over any coefficient field.
pub trait GenericResidual: Send + Sync + 'static {
    fn eval<T: Coeff>(&self, unknowns: &[T]) -> Vec<T>;
}

#[derive(Clone)]
pub struct CoefficientSystem {
    tag: String,
    unknowns: Vec<String>,
    residuals: Vec<FloatResidual>,
    exact: Vec<ExactResidual>,
}

impl fmt::Debug for CoefficientSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSystem")
            .field("tag", &self.tag)
            .field("unknowns", &self.unknowns)
            .field("residuals", &self.residuals.len())
            .field("exact", &!self.exact.is_empty())
            .finish()
    }
}

impl CoefficientSystem {
    pub fn new(tag: impl Into<String>, unknowns: Vec<String>) -> Self {
        Self {
            tag: tag.into(),
            unknowns,
            residuals: Vec::new(),
            exact: Vec::new(),
        }
    }

    /// Float-only residual polynomial (returns its coefficient list).
    pub fn with_residual(mut self, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.residuals.push(Arc::new(f));
        self
    }

    /// Residual available in both float and exact arithmetic.
    pub fn with_generic<R: GenericResidual>(mut self, r: R) -> Self {
        let r = Arc::new(r);
        let rf = Arc::clone(&r);
        self.residuals.push(Arc::new(move |u: &[f64]| rf.eval::<f64>(u)));
        self.exact.push(Arc::new(move |u: &[Rational]| r.eval::<Rational>(u)));
        self
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn unknowns(&self) -> &[String] {
        &self.unknowns
    }

    pub fn has_exact_form(&self) -> bool {
        !self.residuals.is_empty() && self.exact.len() == self.residuals.len()
    }

    /// All residual coefficients, concatenated.
    pub fn eval(&self, u: &[f64]) -> Vec<f64> {
        self.residuals.iter().flat_map(|r| r(u)).collect()
    }

    pub fn eval_exact(&self, u: &[Rational]) -> Option<Vec<Rational>> {
        self.has_exact_form()
            .then(|| self.exact.iter().flat_map(|r| r(u)).collect())
    }

    pub fn is_satisfied(&self, u: &[f64], tol: f64) -> bool {
        self.eval(u).iter().all(|c| c.abs() < tol)
    }

    pub fn is_satisfied_exact(&self, u: &[Rational]) -> bool {
        self.eval_exact(u)
            .is_some_and(|v| v.iter().all(Zero::is_zero))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    ExactLinear,
    Newton,
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Relative central-difference step for the Jacobian.
    pub fd_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-12,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub values: Vec<f64>,
    pub exact: Option<Vec<Rational>>,
    pub residual_norm: f64,
    pub iterations: usize,
    /// Ratio of extreme singular values of the Jacobian at the solution.
    pub condition: f64,
}

pub fn solve_system(sys: &CoefficientSystem, initial_guess: &[f64], mode: SolveMode) -> Result<Solution> {
    solve_system_with(sys, initial_guess, mode, NewtonOptions::default())
}

pub fn solve_system_with(
    sys: &CoefficientSystem,
    initial_guess: &[f64],
    mode: SolveMode,
    opts: NewtonOptions,
) -> Result<Solution> {
    if sys.unknowns.is_empty() || sys.residuals.is_empty() {
        let r = sys.eval(&[]);
        let norm = l2(&r);
        if norm > opts.tol {
            return Err(Error::InconsistentSystem(format!("{}: no unknowns but residual {norm:e}", sys.tag)));
        }
        return Ok(Solution {
            values: Vec::new(),
            exact: Some(Vec::new()),
            residual_norm: norm,
            iterations: 0,
            condition: 1.0,
        });
    }
    match mode {
        SolveMode::ExactLinear => solve_exact_linear(sys),
        SolveMode::Newton => {
            if initial_guess.len() != sys.unknowns.len() || initial_guess.iter().any(|v| !v.is_finite()) {
                return Err(Error::NoConvergence(format!(
                    "{}: initial guess must be {} finite values",
                    sys.tag,
                    sys.unknowns.len()
                )));
            }
            let out = least_squares(&|u: &[f64]| sys.eval(u), initial_guess, opts);
            if !out.jacobian_finite {
                return Err(Error::SingularJacobian(format!("{}: non-finite Jacobian", sys.tag)));
            }
            if out.converged {
                Ok(Solution {
                    values: out.x,
                    exact: None,
                    residual_norm: out.norm,
                    iterations: out.iterations,
                    condition: out.condition,
                })
            } else if !out.condition.is_finite() || out.condition > 1e14 {
                Err(Error::SingularJacobian(format!(
                    "{}: condition {:e}, residual {:e} after {} iterations",
                    sys.tag, out.condition, out.norm, out.iterations
                )))
            } else {
                Err(Error::NoConvergence(format!(
                    "{}: residual {:e} after {} iterations",
                    sys.tag, out.norm, out.iterations
                )))
            }
        }
    }
}

fn solve_exact_linear(sys: &CoefficientSystem) -> Result<Solution> {
    if !sys.has_exact_form() {
        return Err(Error::NotLinear(format!("{} (no exact form)", sys.tag)));
    }
    let k = sys.unknowns.len();
    let zero = vec![Rational::zero(); k];
    let r0 = sys.eval_exact(&zero).unwrap();
    let m = r0.len();
    let mut cols = Vec::with_capacity(k);
    for i in 0..k {
        let mut e = zero.clone();
        e[i] = Rational::one();
        let ri = sys.eval_exact(&e).unwrap();
        cols.push(ri.iter().zip(&r0).map(|(a, b)| a - b).collect::<Vec<_>>());
    }
    // linearity probe at u = (2, 3, ..., k+1)
    let probe: Vec<Rational> = (2..=k as i64 + 1).map(Rational::from_i64).collect();
    let rp = sys.eval_exact(&probe).unwrap();
    for row in 0..m {
        let mut pred = r0[row].clone();
        for (i, p) in probe.iter().enumerate() {
            pred += p * &cols[i][row];
        }
        if pred != rp[row] {
            return Err(Error::NotLinear(sys.tag.clone()));
        }
    }
    // Gaussian elimination on [A | -r0]
    let mut a: Vec<Vec<Rational>> = (0..m)
        .map(|row| {
            let mut v: Vec<Rational> = (0..k).map(|i| cols[i][row].clone()).collect();
            v.push(-r0[row].clone());
            v
        })
        .collect();
    let mut pivots = Vec::new();
    let mut prow = 0;
    for col in 0..k {
        let Some(sel) = (prow..m).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(prow, sel);
        let inv = Rational::one() / a[prow][col].clone();
        for v in a[prow].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..m {
            if r != prow && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for c in 0..=k {
                    let sub = &factor * &a[prow][c];
                    a[r][c] -= sub;
                }
            }
        }
        pivots.push(col);
        prow += 1;
        if prow == m {
            break;
        }
    }
    if a[prow..].iter().any(|row| !row[k].is_zero()) {
        return Err(Error::InconsistentSystem(sys.tag.clone()));
    }
    let mut sol = vec![Rational::zero(); k];
    for (r, &c) in pivots.iter().enumerate() {
        sol[c] = a[r][k].clone();
    }
    if !sys.is_satisfied_exact(&sol) {
        return Err(Error::NotLinear(sys.tag.clone()));
    }
    let values: Vec<f64> = sol.iter().map(Coeff::to_f64).collect();
    let condition = jacobian_condition(&|u: &[f64]| sys.eval(u), &values, 1e-6);
    Ok(Solution {
        values,
        exact: Some(sol),
        residual_norm: 0.0,
        iterations: 1,
        condition,
    })
}

pub(crate) fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone)]
pub(crate) struct LsOutcome {
    pub x: Vec<f64>,
    pub norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub condition: f64,
    pub jacobian_finite: bool,
}

fn fd_jacobian(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], m: usize, step: f64) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        let h = step * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let fp = f(&xp);
        xp[j] = x[j] - h;
        let fm = f(&xp);
        xp[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

fn condition_of(jac: &DMatrix<f64>) -> f64 {
    if jac.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let sv = jac.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 || jac.ncols() > jac.nrows() {
        f64::INFINITY
    } else {
        max / min
    }
}

pub(crate) fn jacobian_condition(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], step: f64) -> f64 {
    let m = f(x).len();
    condition_of(&fd_jacobian(f, x, m, step))
}

/// Levenberg–Marquardt on `min ‖f(x)‖²`. For square, well-conditioned
/// systems the damping decays and the iteration reduces to Newton.
pub(crate) fn least_squares(f: &dyn Fn(&[f64]) -> Vec<f64>, x0: &[f64], opts: NewtonOptions) -> LsOutcome {
    let mut x = x0.to_vec();
    let mut r = f(&x);
    let m = r.len();
    let n = x.len();
    let mut norm = l2(&r);
    let mut mu = 1e-6;
    let mut iterations = 0;
    let mut jacobian_finite = true;
    if norm < opts.tol {
        return LsOutcome {
            condition: jacobian_condition(f, &x, opts.fd_step),
            x,
            norm,
            iterations: 0,
            converged: true,
            jacobian_finite,
        };
    }
    let mut stalls = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let jac = fd_jacobian(f, &x, m, opts.fd_step);
        if jac.iter().any(|v| !v.is_finite()) {
            jacobian_finite = false;
            break;
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        let mut accepted = false;
        for _ in 0..30 {
            let mut lhs = jtj.clone();
            for i in 0..n {
                lhs[(i, i)] += mu * (jtj[(i, i)] + 1e-12);
            }
            let Some(step) = lhs.clone().lu().solve(&(-&g)).or_else(|| {
                lhs.svd(true, true).solve(&(-&g), 1e-18).ok()
            }) else {
                mu *= 10.0;
                continue;
            };
            let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rn = f(&xn);
            let nn = l2(&rn);
            if nn.is_finite() && nn < norm {
                let rel_step = step.norm() / (1.0 + DVector::from_column_slice(&x).norm());
                let improvement = (norm - nn) / norm;
                x = xn;
                r = rn;
                norm = nn;
                mu = (mu / 3.0).max(1e-15);
                accepted = true;
                if rel_step < 1e-15 || improvement < 1e-14 {
                    stalls += 1;
                } else {
                    stalls = 0;
                }
                break;
            }
            mu *= 4.0;
            if mu > 1e16 {
                break;
            }
        }
        if norm < opts.tol || !accepted || stalls > 3 {
            break;
        }
    }
    LsOutcome {
        condition: jacobian_condition(f, &x, opts.fd_step),
        converged: norm < opts.tol,
        x,
        norm,
        iterations,
        jacobian_finite,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::poly::{rat, Polynomial};

    /// (a, c, ε) for the first rung of a quadratic seed with b fixed to A+2.
    struct FirstRung {
        a: f64,
        b: f64,
        c: f64,
    }

    impl GenericResidual for FirstRung {
        fn eval<T: Coeff>(&self, u: &[T]) -> Vec<T> {
            let to = |v: f64| T::from_i64((v * 1e6).round() as i64) / T::from_i64(1_000_000);
            let (sa, sb, sc) = (to(self.a), to(self.b), to(self.c));
            let b1 = sa.clone() + T::from_i64(2);
            let (a1, c1, eps) = (u[0].clone(), u[1].clone(), u[2].clone());
            // a b F + 2 a w (b w − c) − a² − ε (b w − c)², coefficient by coefficient
            let w2 = a1.clone() * b1.clone() * sa.clone() + T::from_i64(2) * a1.clone() * b1.clone()
                - eps.clone() * b1.clone() * b1.clone();
            let w1 = a1.clone() * b1.clone() * sb - T::from_i64(2) * a1.clone() * c1.clone()
                + T::from_i64(2) * eps.clone() * b1.clone() * c1.clone();
            let w0 = a1.clone() * b1 * sc - a1.clone() * a1 - eps * c1.clone() * c1;
            vec![w0, w1, w2]
        }
    }

    #[test]
    fn first_rung_system_for_box() {
        let sys = CoefficientSystem::new("first-rung", vec!["a1".into(), "c1".into(), "eps".into()])
            .with_generic(FirstRung { a: 1.0, b: 0.0, c: 1.0 });
        let sol = solve_system(&sys, &[2.5, 0.2, 2.5], SolveMode::Newton).unwrap();
        assert!((sol.values[0] - 3.0).abs() < 1e-10);
        assert!(sol.values[1].abs() < 1e-10);
        assert!((sol.values[2] - 3.0).abs() < 1e-10);
        assert!(sol.residual_norm < 1e-12);
    }

    #[test]
    fn empty_system_is_vacuous() {
        let sys = CoefficientSystem::new("empty", vec![]);
        let sol = solve_system(&sys, &[], SolveMode::Newton).unwrap();
        assert!(sol.values.is_empty());
        assert_eq!(sol.residual_norm, 0.0);
        let sol = solve_system(&sys, &[], SolveMode::ExactLinear).unwrap();
        assert!(sol.values.is_empty());
    }

    struct Linear;
    impl GenericResidual for Linear {
        fn eval<T: Coeff>(&self, u: &[T]) -> Vec<T> {
            // (x + 2y − 3) + (x − y)·w + (2x + y − 3)·w²
            vec![
                u[0].clone() + T::from_i64(2) * u[1].clone() - T::from_i64(3),
                u[0].clone() - u[1].clone(),
                T::from_i64(2) * u[0].clone() + u[1].clone() - T::from_i64(3),
            ]
        }
    }

    #[test]
    fn exact_linear_overdetermined_consistent() {
        let sys = CoefficientSystem::new("lin", vec!["x".into(), "y".into()]).with_generic(Linear);
        let sol = solve_system(&sys, &[0.0, 0.0], SolveMode::ExactLinear).unwrap();
        assert_eq!(sol.exact.unwrap(), vec![rat(1, 1), rat(1, 1)]);
        assert_eq!(sol.residual_norm, 0.0);
    }

    struct Quadratic;
    impl GenericResidual for Quadratic {
        fn eval<T: Coeff>(&self, u: &[T]) -> Vec<T> {
            vec![u[0].clone() * u[0].clone() - T::from_i64(2)]
        }
    }

    #[test]
    fn exact_linear_rejects_nonlinear() {
        let sys = CoefficientSystem::new("quad", vec!["x".into()]).with_generic(Quadratic);
        assert!(matches!(solve_system(&sys, &[1.0], SolveMode::ExactLinear), Err(Error::NotLinear(_))));
        let sol = solve_system(&sys, &[1.0], SolveMode::Newton).unwrap();
        assert!((sol.values[0] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn newton_fixed_point_at_exact_root() {
        let sys = CoefficientSystem::new("lin", vec!["x".into(), "y".into()]).with_generic(Linear);
        let sol = solve_system(&sys, &[1.0, 1.0], SolveMode::Newton).unwrap();
        assert_eq!(sol.values, vec![1.0, 1.0]);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn singular_or_divergent_reports_error() {
        // x² + 1 has no real root
        let sys = CoefficientSystem::new("none", vec!["x".into()])
            .with_residual(|u| vec![u[0] * u[0] + 1.0]);
        let err = solve_system(&sys, &[0.5], SolveMode::Newton).unwrap_err();
        assert!(matches!(err, Error::NoConvergence(_) | Error::SingularJacobian(_)));
    }

    #[test]
    fn residual_polynomial_coefficients_flatten() {
        let p = Polynomial::<f64>::new(vec![1.0, 2.0]);
        let sys = CoefficientSystem::new("flat", vec!["s".into()])
            .with_residual(move |u| p.scale(&u[0]).coeffs().to_vec())
            .with_residual(|u| vec![u[0] - 1.0]);
        assert_eq!(sys.eval(&[2.0]), vec![2.0, 4.0, 1.0]);
    }
}
