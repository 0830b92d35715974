//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary. A FAIL is reported but does not abort the run;
//! set `ACCEPTANCE_STRICT=1` to turn any FAIL into a non-zero exit.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;

use riccati_core::algebra::{rat, seed_derivative, Poly, Rational, RationalFunction};
use riccati_core::cascade::{assemble_wavefunction, first_rung_coefficients, ladder, shape_invariance_probe, QuadraticPartnerModel};
use riccati_core::cli::cmd_figure1;
use riccati_core::family::Family;
use riccati_core::oracle::{family_grid, find_eigenvalue, Grid, DEFAULT_POINTS};
use riccati_core::seed_quadratic::{coulomb_family, morse_family, oscillator_family, solve_seed, FamilySolution, QuadraticSeed};
use riccati_core::seed_rational::{excited_rational, new_potential_family, InverseRootPartnerModel};
use riccati_core::verify::{limit_suite, orthogonality, schrodinger_residual, CheckGrid, LimitKind};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn quadratic(a: f64, b: f64, c: f64) -> FamilySolution {
    solve_seed(QuadraticSeed::new(a, b, c, 0.0).unwrap()).unwrap()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn new_potential_ground() -> Outcome {
    let fam = new_potential_family();
    let (res, dt) = timed(|| {
        let grid = family_grid(&fam, -0.9, DEFAULT_POINTS)?;
        find_eigenvalue(&|x| fam.potential(x), 0, (-1.1, -0.9), grid)
    });
    match res {
        Ok(r) => {
            let err = (r.energy + 1.0).abs();
            outcome(
                err < 1e-3 && dt < Duration::from_secs(5),
                format!("oracle E0 = {:.9}, |E0 + 1| = {err:.2e}, richardson {:.1e}, {dt:.2?}", r.energy, r.richardson_error),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn new_potential_excited() -> Outcome {
    let fam = new_potential_family();
    let st = match excited_rational(&fam) {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let in_window = (-0.64..=-0.62).contains(&st.e1);
    let rounded = [round2(st.kappa), round2(st.lambda), round2(st.mu)];
    let constants_match = rounded == [0.79, 2.52, 3.74];
    let oracle = family_grid(&fam, -0.55, DEFAULT_POINTS)
        .and_then(|g| find_eigenvalue(&|x| fam.potential(x), 1, (-0.7, -0.55), g));
    let (oracle_ok, oracle_note) = match oracle {
        Ok(r) => ((r.energy - st.e1).abs() < 1e-3, format!("oracle E1 = {:.7} (diff {:.1e})", r.energy, (r.energy - st.e1).abs())),
        Err(e) => (false, e.to_string()),
    };
    // residuals of the template, informative
    let grid = CheckGrid::for_family(&fam, 800);
    let v = |x: f64| fam.potential(x);
    let refined = schrodinger_residual(&|x| st.psi1(x), st.e1, &v, grid, 1e-6);
    let printed = |x: f64| {
        let s = (x + 0.25).sqrt();
        (-0.79 * x + 2.52 * s).exp() * (2.0 * s - 1.0) * (2.0 * s - 3.74)
    };
    let rounded_res = schrodinger_residual(&printed, -0.63, &v, grid, 1e-6);
    outcome(
        in_window && constants_match && oracle_ok,
        format!(
            "E1 = {:.7} in [-0.64, -0.62]: {in_window}; kappa, lambda, mu = {:.6}, {:.6}, {:.6} round to {:?} (expected [0.79, 2.52, 3.74]): {constants_match}; {oracle_note}; template residual {:.1e} (rounded constants {:.1e})",
            st.e1, st.kappa, st.lambda, st.mu, rounded, refined.max_residual, rounded_res.max_residual
        ),
    )
}

fn closed_form_fidelity() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let mut check = |name: &str, fam: &dyn Family| {
        let (r, dt) = timed(|| {
            let grid = CheckGrid::for_family(fam, 1000);
            schrodinger_residual(&|x| fam.psi0(x), fam.e0(), &|x| fam.potential(x), grid, 1e-6)
        });
        pass &= r.pass && dt < Duration::from_secs(1);
        notes.push(format!("{name} {:.1e} ({dt:.0?})", r.max_residual));
    };
    check("box", &quadratic(1.0, 0.0, 1.0));
    check("oscillator A=0.9", &solve_seed(oscillator_family(0.9).unwrap()).unwrap());
    check("coulomb A=2 B=2", &solve_seed(coulomb_family(2.0, 2.0).unwrap()).unwrap());
    check("morse A=1 C=2", &solve_seed(morse_family(1.0, 2.0).unwrap()).unwrap());
    check("new potential", &new_potential_family());
    outcome(pass, notes.join(", "))
}

/// Closed-form first-rung coefficients, independent of the library.
fn closed_form_first_rung(a: &Rational, b: &Rational, c: &Rational) -> (Rational, Rational, Rational) {
    let two = rat(2, 1);
    let (ap1, ap2) = (a + Rational::one(), a + &two);
    let a1 = &ap2 * c - &ap2 * &ap2 * b * b / (rat(4, 1) * &ap1 * &ap1);
    let c1 = -(&ap2 * b) / (&two * &ap1);
    (a1, ap2, c1)
}

fn cascade_exactness() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, sol) in [("box", quadratic(1.0, 0.0, 1.0)), ("oscillator A=0.9", quadratic(0.9, 0.0, 1.0))] {
        match ladder(&sol, 3) {
            Ok(rungs) => {
                let offsets: Vec<String> = rungs
                    .iter()
                    .map(|r| r.exact_offset.as_ref().map_or("inexact".into(), |o| o.to_string()))
                    .collect();
                pass &= rungs.len() == 3 && rungs.iter().all(|r| r.exact.is_some() && r.exact_offset.is_some());
                notes.push(format!("{name} offsets {offsets:?}"));
            }
            Err(e) => {
                pass = false;
                notes.push(format!("{name}: {e}"));
            }
        }
    }
    let mut runner = TestRunner::deterministic();
    let coeff = (-8i64..=8, 1i64..=5).prop_map(|(n, d)| rat(n, d));
    let strategy = (coeff.clone(), coeff.clone(), coeff);
    let (mut checked, mut matched) = (0, 0);
    while checked < 100 {
        let (a, b, c) = strategy.new_tree(&mut runner).unwrap().current();
        if a.is_zero() || a == rat(-1, 1) || a == rat(-2, 1) {
            continue;
        }
        checked += 1;
        let Ok((a1, b1, c1)) = first_rung_coefficients(&a, &b, &c) else { continue };
        if (a1.clone(), b1.clone(), c1.clone()) != closed_form_first_rung(&a, &b, &c) {
            continue;
        }
        let w = RationalFunction::identity();
        let big_f = RationalFunction::from_poly(Poly::new(vec![c.clone(), b.clone(), a.clone()]));
        let lin = RationalFunction::from_poly(Poly::new(vec![-c1, b1]));
        let Ok(corr) = RationalFunction::constant(a1.clone()).checked_div(&lin) else { continue };
        let w1 = &w - &corr;
        let lhs = &(&seed_derivative(&w1, &big_f) - &(&w1 * &w1)) - &(&big_f - &(&w * &w));
        if lhs.as_constant() == Some(a1) {
            matched += 1;
        }
    }
    pass &= matched == 100;
    notes.push(format!("first rung symbolic match {matched}/100"));
    outcome(pass, notes.join("; "))
}

fn box_calibration() -> Outcome {
    let grid = Grid::new(0.0, PI, DEFAULT_POINTS).unwrap();
    let mut worst = 0.0f64;
    for n in 0..=3 {
        let exact = ((n + 1) * (n + 1)) as f64;
        match find_eigenvalue(&|_| 0.0, n, (exact - 0.5, exact + 0.5), grid) {
            Ok(r) => worst = worst.max((r.energy - exact).abs()),
            Err(e) => return outcome(false, format!("level {n}: {e}")),
        }
    }
    outcome(worst < 1e-6, format!("max |E_n - (n+1)^2| = {worst:.2e} for n <= 3"))
}

fn limits() -> Outcome {
    let (reports, dt) = timed(|| {
        [LimitKind::OscillatorA0, LimitKind::CoulombA1, LimitKind::MorseA0].map(limit_suite)
    });
    let pass = reports.iter().all(|r| r.pass) && dt < Duration::from_secs(30);
    let notes: Vec<String> = reports.iter().map(|r| format!("{} final {:.2e}", r.check, r.max_residual)).collect();
    outcome(pass, format!("{} ({dt:.2?})", notes.join(", ")))
}

fn orthogonality_criterion() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, sol) in [("box", quadratic(1.0, 0.0, 1.0)), ("oscillator A=0.9", quadratic(0.9, 0.0, 1.0))] {
        let rungs = match ladder(&sol, 3) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("{name}: {e}")),
        };
        let mut wfs = vec![assemble_wavefunction(&sol, None)];
        wfs.extend(rungs.iter().map(|r| assemble_wavefunction(&sol, Some(r))));
        let fns: Vec<Box<dyn Fn(f64) -> f64 + '_>> = wfs.iter().map(|w| Box::new(move |x| w.eval(x)) as Box<dyn Fn(f64) -> f64>).collect();
        let refs: Vec<&dyn Fn(f64) -> f64> = fns.iter().map(|f| f.as_ref()).collect();
        let iv = sol.interval();
        let r = orthogonality(&refs, iv.lo, iv.hi, 1e-7);
        pass &= r.pass;
        notes.push(format!("{name} max overlap {:.1e}", r.max_residual));
    }
    outcome(pass, notes.join(", "))
}

fn shape_invariance() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    let families = [
        ("box", quadratic(1.0, 0.0, 1.0)),
        ("oscillator A=0.9", solve_seed(oscillator_family(0.9).unwrap()).unwrap()),
        ("coulomb A=2 B=2", solve_seed(coulomb_family(2.0, 2.0).unwrap()).unwrap()),
        ("morse A=1 C=2", solve_seed(morse_family(1.0, 2.0).unwrap()).unwrap()),
    ];
    for (name, sol) in &families {
        let r = shape_invariance_probe(sol, &QuadraticPartnerModel::new(sol));
        pass &= r.shape_invariant;
        notes.push(format!("{name} invariant={} ({:.1e})", r.shape_invariant, r.residual));
    }
    let r = shape_invariance_probe(&new_potential_family(), &InverseRootPartnerModel);
    pass &= !r.shape_invariant;
    notes.push(format!("new potential invariant={} ({:.1e})", r.shape_invariant, r.residual));
    outcome(pass, notes.join(", "))
}

fn figure1() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    if let Err(e) = cmd_figure1(0.9, dir.path(), 2001) {
        return outcome(false, e.to_string());
    }
    let text = std::fs::read_to_string(dir.path().join("fig1a.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let nodes: Vec<usize> = (1..4)
        .map(|k| {
            let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            let peak = col.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let kept: Vec<f64> = col.into_iter().filter(|v| v.abs() > 1e-9 * peak).collect();
            kept.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count()
        })
        .collect();
    let half = PI / (2.0 * 0.9f64.sqrt());
    let (lo, hi) = (rows[0][0], rows[rows.len() - 1][0]);
    let domain_ok = lo > -half && hi < half && (lo + half).abs() < 1e-3 && (hi - half).abs() < 1e-3;
    outcome(
        nodes == [0, 1, 2] && domain_ok,
        format!("node counts {nodes:?}, window [{lo:.6}, {hi:.6}] vs domain ±{half:.6}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("new-potential ground state", new_potential_ground),
        ("new-potential excited state", new_potential_excited),
        ("closed-form fidelity", closed_form_fidelity),
        ("cascade exactness", cascade_exactness),
        ("box oracle calibration", box_calibration),
        ("limit suites", limits),
        ("orthogonality", orthogonality_criterion),
        ("shape-invariance probe", shape_invariance),
        ("figure 1 data", figure1),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("{} criterion {} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
