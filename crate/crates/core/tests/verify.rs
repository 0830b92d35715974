use riccati_core::cascade::{assemble_wavefunction, ladder, shape_invariance_probe, QuadraticPartnerModel};
use riccati_core::family::Family;
use riccati_core::seed_quadratic::{coulomb_family, morse_family, oscillator_family, solve_seed, QuadraticSeed};
use riccati_core::seed_rational::{new_potential_family, InverseRootPartnerModel};
use riccati_core::verify::*;

fn seed(a: f64, b: f64, c: f64) -> riccati_core::seed_quadratic::FamilySolution {
    solve_seed(QuadraticSeed::new(a, b, c, 0.0).unwrap()).unwrap()
}

#[test]
fn quadratic_families_pass_residual_checks() {
    let families = vec![
        seed(1.0, 0.0, 1.0),
        solve_seed(oscillator_family(0.5).unwrap()).unwrap(),
        solve_seed(coulomb_family(2.0, 2.0).unwrap()).unwrap(),
        solve_seed(morse_family(0.01, 5.0).unwrap()).unwrap(),
        seed(0.7, 0.4, 1.3),
    ];
    for sol in &families {
        let rungs = ladder(sol, 2).unwrap();
        for r in quadratic_residuals(sol, &rungs, 400) {
            assert!(r.pass, "{}: {} {} ({})", sol.label(), r.check, r.max_residual, r.notes);
        }
    }
}

#[test]
fn corrupted_rung_fails_invariance() {
    let sol = seed(1.0, 0.0, 1.0);
    let mut rung = ladder(&sol, 1).unwrap().remove(0);
    let grid = CheckGrid::for_family(&sol, 200);
    assert!(invariance_check(&sol, &rung, grid).pass);
    let c = rung.numerator.coeffs().to_vec();
    let mut bumped = c.clone();
    bumped[0] += 1e-3;
    rung.numerator = riccati_core::algebra::Polynomial::new(bumped);
    let r = invariance_check(&sol, &rung, grid);
    assert!(!r.pass, "{r:?}");
}

#[test]
fn nonlinear_form_selects_alpha() {
    let sol = seed(0.5, 0.0, 1.0);
    let f = seed_function(&sol.seed()).unwrap();
    let psi0 = assemble_wavefunction(&sol, None);
    let grid = CheckGrid::for_family(&sol, 300);
    let good = nonlinear_residual(&|x| psi0.eval(x), sol.e0(), &f, -0.5, grid, 1e-6);
    assert!(good.pass, "{good:?}");
    let bad = nonlinear_residual(&|x| psi0.eval(x), sol.e0(), &f, 0.5, grid, 1e-6);
    assert!(!bad.pass);
}

#[test]
fn limits_converge() {
    for kind in [LimitKind::OscillatorA0, LimitKind::CoulombA1, LimitKind::MorseA0] {
        let r = limit_suite(kind);
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn ladder_states_are_orthogonal() {
    let sol = solve_seed(oscillator_family(0.5).unwrap()).unwrap();
    let rungs = ladder(&sol, 3).unwrap();
    let mut wfs = vec![assemble_wavefunction(&sol, None)];
    wfs.extend(rungs.iter().map(|r| assemble_wavefunction(&sol, Some(r))));
    let fns: Vec<Box<dyn Fn(f64) -> f64>> = wfs
        .iter()
        .map(|w| Box::new(move |x| w.eval(x)) as Box<dyn Fn(f64) -> f64>)
        .collect();
    let refs: Vec<&dyn Fn(f64) -> f64> = fns.iter().map(|b| b.as_ref()).collect();
    let iv = sol.interval();
    let r = orthogonality(&refs, iv.lo, iv.hi, 1e-7);
    assert!(r.pass, "{r:?}");
}

#[test]
fn oracle_agrees_with_construction() {
    let sol = solve_seed(oscillator_family(0.5).unwrap()).unwrap();
    let rungs = ladder(&sol, 2).unwrap();
    let psi0 = assemble_wavefunction(&sol, None);
    for r in oracle_check(&sol, 0, sol.e0(), Some(&|x| psi0.eval(x)), 1e-4, 8001) {
        assert!(r.pass, "{r:?}");
    }
    for rung in &rungs {
        let psi = assemble_wavefunction(&sol, Some(rung));
        for r in oracle_check(&sol, rung.n, sol.e0() + rung.energy_offset, Some(&|x| psi.eval(x)), 1e-4, 8001) {
            assert!(r.pass, "{r:?}");
        }
    }
    let wrong = oracle_check(&sol, 1, sol.e0() + rungs[0].energy_offset + 1e-2, None, 1e-4, 8001);
    assert_eq!(wrong.len(), 1);
    assert!(!wrong[0].pass);
}

#[test]
fn shape_invariance_probe_separates_families() {
    for sol in [seed(1.0, 0.0, 1.0), solve_seed(oscillator_family(0.5).unwrap()).unwrap()] {
        let r = shape_invariance_probe(&sol, &QuadraticPartnerModel::new(&sol));
        assert!(r.shape_invariant, "{r:?}");
    }
    // A ≤ −1 puts the partner on the bounded branch between the roots of F
    for (a, c) in [(0.5, 1.0), (1.0, 2.0), (2.0, 1.0)] {
        let sol = solve_seed(morse_family(a, c).unwrap()).unwrap();
        let r = shape_invariance_probe(&sol, &QuadraticPartnerModel::new(&sol));
        assert!(r.shape_invariant, "morse A={a} C={c}: {r:?}");
        if a == 1.0 {
            // partner of (−1, −1, 2) is (1, −1, −2)
            let want = [1.0, -1.0, -2.0];
            assert!(r.params.iter().zip(want).all(|(p, w)| (p - w).abs() < 1e-6), "{:?}", r.params);
        }
    }
    let np = new_potential_family();
    let r = shape_invariance_probe(&np, &InverseRootPartnerModel);
    assert!(!r.shape_invariant, "{r:?}");
}
