use num_traits::{One, Zero};
use proptest::prelude::*;
use proptest::strategy::ValueTree;

use riccati_core::algebra::{
    rat, ratfunc_arith, seed_derivative, solve_system, ArithOp, CoefficientSystem, Poly, Rational, RationalFunction,
    SolveMode,
};
use riccati_core::cascade::{first_rung, first_rung_coefficients, rung_n};
use riccati_core::family::Family;
use riccati_core::numeric::{derivative, linspace};
use riccati_core::oracle::{eigenvalue_on_grid, Grid};
use riccati_core::seed_quadratic::{solve_seed, QuadraticSeed};

fn rational() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| rat(n, d))
}

fn poly(max_len: usize) -> impl Strategy<Value = Poly> {
    prop::collection::vec(rational(), 0..=max_len).prop_map(Poly::new)
}

fn ratfunc() -> impl Strategy<Value = RationalFunction> {
    (poly(3), poly(3)).prop_filter_map("zero denominator", |(n, d)| RationalFunction::new(n, d).ok())
}

fn is_reduced(r: &RationalFunction) -> bool {
    r.numerator().gcd(r.denominator()).degree() == 0 && r.denominator().leading() == Rational::one()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn add_and_mul_are_associative_and_commutative(a in ratfunc(), b in ratfunc(), c in ratfunc()) {
        let add = |x: &RationalFunction, y: &RationalFunction| ratfunc_arith(x, y, ArithOp::Add).unwrap();
        let mul = |x: &RationalFunction, y: &RationalFunction| ratfunc_arith(x, y, ArithOp::Mul).unwrap();
        prop_assert_eq!(add(&a, &b), add(&b, &a));
        prop_assert_eq!(mul(&a, &b), mul(&b, &a));
        prop_assert_eq!(add(&add(&a, &b), &c), add(&a, &add(&b, &c)));
        prop_assert_eq!(mul(&mul(&a, &b), &c), mul(&a, &mul(&b, &c)));
    }

    #[test]
    fn arithmetic_results_are_reduced(a in ratfunc(), b in ratfunc()) {
        for op in [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div] {
            match ratfunc_arith(&a, &b, op) {
                Ok(r) => prop_assert!(is_reduced(&r), "{:?} {:?} {:?} -> {:?}", a, op, b, r),
                Err(_) => prop_assert!(op == ArithOp::Div && b.is_zero()),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn seed_derivative_product_rule(u in ratfunc(), v in ratfunc(), f in ratfunc()) {
        let lhs = seed_derivative(&(&u * &v), &f);
        let rhs = &(&seed_derivative(&u, &f) * &v) + &(&u * &seed_derivative(&v, &f));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn newton_leaves_an_exact_root_unchanged(a in -64i32..64, b in -64i32..64, c in 1i32..16) {
        // dyadic roots make every residual exactly zero in floating point
        let (a, b, c) = (a as f64 / 8.0, b as f64 / 8.0, c as f64 / 4.0);
        let sys = CoefficientSystem::new("fixed point", vec!["x".into(), "y".into(), "z".into()])
            .with_residual(move |u: &[f64]| {
                vec![u[0] * u[1] - a * b, u[0] + u[1] + u[2] - (a + b + c), u[2] * u[2] - c * c]
            });
        let sol = solve_system(&sys, &[a, b, c], SolveMode::Newton).unwrap();
        prop_assert_eq!(sol.values, vec![a, b, c]);
    }

    #[test]
    fn quadratic_families_satisfy_seed_invariants(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
        prop_assume!(a.abs() > 0.05);
        let sol = match solve_seed(QuadraticSeed::new(a, b, c, 0.3).unwrap()) {
            Ok(sol) => sol,
            // A < 0 with D ≥ 0 has no increasing branch
            Err(e) => {
                prop_assert!(a < 0.0 && 4.0 * a * c - b * b >= 0.0, "{}", e);
                return Ok(());
            }
        };
        let (lo, hi) = sol.window(1e-3, 20.0);
        let (lo, hi) = (lo.max(sol.anchor() - 15.0), hi.min(sol.anchor() + 15.0));
        let xs = linspace(lo, hi, 1003);
        let xs = &xs[1..xs.len() - 1];
        let step = 1e-3 * (hi - lo).min(1.0);
        let seed = sol.seed();
        let mut prev = f64::NEG_INFINITY;
        for &x in xs {
            let w = sol.w0(x);
            let (dw, _) = derivative(&|t| sol.w0(t), x, step);
            let scale = 1.0f64.max(w * w).max(dw.abs());
            prop_assert!((dw - seed.rhs(w)).abs() / scale < 1e-8, "Riccati at {}: {} vs {}", x, dw, seed.rhs(w));
            // strict only where the increment is resolvable in f64
            let resolvable = seed.rhs(w) * (xs[1] - xs[0]) > 8.0 * f64::EPSILON * w.abs();
            prop_assert!(w > prev || (!resolvable && w == prev), "W0 not increasing at {}", x);
            prev = w;
            let (dl, _) = derivative(&|t| sol.ln_psi0(t), x, step);
            prop_assert!((dl + w).abs() < 1e-8 * (1.0 + w.abs()), "log derivative at {}", x);
        }
    }
}

/// Closed-form coefficients of `W₁ = W₀ − a₁/(b₁W₀ − c₁)`, written out
/// independently of the library.
fn closed_form_first_rung(a: &Rational, b: &Rational, c: &Rational) -> (Rational, Rational, Rational) {
    let two = rat(2, 1);
    let ap1 = a + Rational::one();
    let ap2 = a + &two;
    let a1 = &ap2 * c - &ap2 * &ap2 * b * b / (rat(4, 1) * &ap1 * &ap1);
    let b1 = ap2.clone();
    let c1 = -(&ap2 * b) / (&two * &ap1);
    (a1, b1, c1)
}

#[test]
fn first_rung_matches_closed_form_for_random_rationals() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strategy = (rational(), rational(), rational());
    let mut checked = 0;
    while checked < 100 {
        let (a, b, c) = strategy.new_tree(&mut runner).unwrap().current();
        if a.is_zero() || a == rat(-1, 1) || a == rat(-2, 1) {
            continue;
        }
        let (a1, b1, c1) = first_rung_coefficients(&a, &b, &c).unwrap();
        assert_eq!((a1.clone(), b1.clone(), c1.clone()), closed_form_first_rung(&a, &b, &c));
        // the rung satisfies the invariance identity with constant offset a₁
        let w = RationalFunction::identity();
        let big_f = RationalFunction::from_poly(Poly::new(vec![c.clone(), b.clone(), a.clone()]));
        let lin = RationalFunction::from_poly(Poly::new(vec![-c1, b1]));
        let w1 = &w - &RationalFunction::constant(a1.clone()).checked_div(&lin).unwrap();
        let lhs = &(&seed_derivative(&w1, &big_f) - &(&w1 * &w1)) - &(&big_f - &(&w * &w));
        assert_eq!(lhs.as_constant(), Some(a1), "A={a} B={b} C={c}");
        checked += 1;
    }
    assert!(first_rung_coefficients(&rat(-1, 1), &rat(1, 1), &rat(1, 1)).is_err());
    assert!(first_rung_coefficients(&rat(-2, 1), &rat(1, 1), &rat(1, 1)).is_err());
}

#[test]
fn rung_one_equals_first_rung() {
    for (a, b, c) in [(1.0, 0.0, 1.0), (0.9, 0.0, 1.0), (0.7, 0.4, 1.3), (2.0, -2.0, 1.0)] {
        let sol = solve_seed(QuadraticSeed::new(a, b, c, 0.0).unwrap()).unwrap();
        let closed = first_rung(&sol).unwrap();
        let solved = rung_n(&sol, 1).unwrap();
        assert!(closed.exact.is_some());
        assert_eq!(closed.exact, solved.exact, "({a}, {b}, {c})");
        assert_eq!(closed.exact_offset, solved.exact_offset);
    }
}

#[test]
fn numerov_is_fourth_order() {
    let pi = std::f64::consts::PI;
    for n in 0..3 {
        let exact = ((n + 1) * (n + 1)) as f64;
        let bracket = (exact - 0.5, exact + 0.5);
        let coarse = Grid::new(0.0, pi, 201).unwrap();
        let fine = coarse.refined();
        let e1 = (eigenvalue_on_grid(&|_| 0.0, n, bracket, &coarse).unwrap() - exact).abs();
        let e2 = (eigenvalue_on_grid(&|_| 0.0, n, bracket, &fine).unwrap() - exact).abs();
        assert!(e1 / e2 >= 12.0, "level {n}: ratio {}", e1 / e2);
    }
}
