//! Rational seeds `W₀′ = R(W₀)` whose numerator degree exceeds the
//! denominator degree by two.
//!
//! Separation gives `x − x₀ = ∫ dw/R(w)` and `ln ψ₀ = −∫ w/R(w) dw`, so both
//! the superpotential and the ground state come from quadratures in `w`. The
//! substitution `w = tan τ` keeps infinite `w` ranges finite. The potential is
//! `V = E₀ − (R(W₀) − W₀²)`.

use std::f64::consts::PI;

use num_traits::One;
use serde::Serialize;

use crate::algebra::{rat, solve_system, CoefficientSystem, Poly, Polynomial, Rational, RationalFunction, SolveMode};
use crate::algebra::system::{l2, least_squares};
use crate::algebra::NewtonOptions;
use crate::cascade::{count_sign_changes, PartnerModel};
use crate::error::{Error, Result};
use crate::family::{Family, Interval};
use crate::numeric::{integrate, linspace, poly_real_roots, Pchip};

const TABLE_NODES: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct RationalSeed {
    pub f: RationalFunction,
    /// Open range of `W₀` traversed by the flow; endpoints may be infinite.
    pub w_range: (f64, f64),
    pub x0: f64,
    /// Value of `W₀` at `x0`, possibly an endpoint of `w_range`.
    pub w_at_x0: f64,
}

impl RationalSeed {
    /// Seed with `x0 = 0` placed where `W₀` equals the lower end of the range.
    pub fn new(f: RationalFunction, w_range: (f64, f64)) -> Result<Self> {
        let (dn, dd) = f.degrees();
        if dn - dd != 2 {
            return Err(Error::InvalidSeed(format!(
                "numerator degree must exceed denominator degree by 2, got {dn} over {dd}"
            )));
        }
        if w_range.0.is_nan() || w_range.1.is_nan() || w_range.0 >= w_range.1 {
            return Err(Error::InvalidSeed(format!("empty W₀ range ({}, {})", w_range.0, w_range.1)));
        }
        Ok(Self {
            f,
            w_range,
            x0: 0.0,
            w_at_x0: w_range.0,
        })
    }

    pub fn anchored(mut self, x0: f64, w: f64) -> Self {
        self.x0 = x0;
        self.w_at_x0 = w;
        self
    }

    /// Denominator degree `l`.
    pub fn l(&self) -> usize {
        self.f.denominator().degree().max(0) as usize
    }

    /// Coefficient `A` of the asymptotic `A w²`.
    pub fn leading(&self) -> f64 {
        let q = self.f.numerator().leading() / self.f.denominator().leading();
        crate::algebra::Coeff::to_f64(&q)
    }

    pub fn rhs(&self, w: f64) -> f64 {
        self.f.eval_f64(w)
    }
}

/// `W₀′ = (W₀ − 1)³/(W₀ − 3)` on `W₀ < 1`, with `W₀ → −∞` at `x = 0`.
pub fn new_potential_seed() -> RationalSeed {
    let num = Poly::from_i64s(&[-1, 3, -3, 1]);
    let den = Poly::from_i64s(&[-3, 1]);
    RationalSeed::new(RationalFunction::new(num, den).unwrap(), (f64::NEG_INFINITY, 1.0)).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Quadrature,
}

/// `R` in floating point, re-expanded exactly about each finite end of the
/// `W₀` range so that multiple roots there do not cancel catastrophically.
#[derive(Debug, Clone)]
struct Flow {
    bases: Vec<(f64, Polynomial<f64>, Polynomial<f64>)>,
}

impl Flow {
    fn new(f: &RationalFunction, range: (f64, f64)) -> Self {
        let mut bases = vec![(0.0, f.numerator().to_f64(), f.denominator().to_f64())];
        for end in [range.0, range.1] {
            if let Some(c) = end.is_finite().then(|| Rational::from_float(end)).flatten() {
                let shift = Poly::new(vec![c, Rational::one()]);
                bases.push((end, f.numerator().compose(&shift).to_f64(), f.denominator().compose(&shift).to_f64()));
            }
        }
        Self { bases }
    }

    fn rhs(&self, w: f64) -> f64 {
        let (c, num, den) = self
            .bases
            .iter()
            .min_by(|a, b| (w - a.0).abs().total_cmp(&(w - b.0).abs()))
            .unwrap();
        let u = w - c;
        num.eval(&u) / den.eval(&u)
    }

    fn num_roots(&self) -> Vec<f64> {
        poly_real_roots(self.bases[0].1.coeffs(), 1e-9)
    }

    fn den_roots(&self) -> Vec<f64> {
        poly_real_roots(self.bases[0].2.coeffs(), 1e-9)
    }

    fn dx(&self, tau: f64) -> f64 {
        let t = tau.tan();
        (1.0 + t * t) / self.rhs(t)
    }

    fn dln(&self, tau: f64) -> f64 {
        -tau.tan() * self.dx(tau)
    }
}

fn signed_integral(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    if a <= b {
        integrate(f, a, b, 1e-15, 1e-13)
    } else {
        integrate(f, b, a, 1e-15, 1e-13).map(|v| -v)
    }
}

/// `x(τ)` and `ln ψ₀(τ)` tabulated on Chebyshev nodes in `τ = atan w`.
#[derive(Debug, Clone)]
struct Table {
    flow: Flow,
    taus: Vec<f64>,
    xs: Vec<f64>,
    lns: Vec<f64>,
    tau_lo: f64,
    tau_hi: f64,
    inverse: Pchip,
}

impl Table {
    fn build(flow: Flow, tau_lo: f64, tau_hi: f64) -> Result<Self> {
        let mid = 0.5 * (tau_lo + tau_hi);
        let half = 0.5 * (tau_hi - tau_lo);
        let taus: Vec<f64> = (0..TABLE_NODES)
            .map(|k| mid - half * (PI * (k as f64 + 0.5) / TABLE_NODES as f64).cos())
            .collect();
        let mut xs = vec![0.0];
        let mut lns = vec![0.0];
        let mut keep = taus.len();
        for k in 1..taus.len() {
            let dx = integrate(&|t| flow.dx(t), taus[k - 1], taus[k], 1e-15, 1e-13);
            let dl = integrate(&|t| flow.dln(t), taus[k - 1], taus[k], 1e-15, 1e-13);
            let far = k > taus.len() / 2;
            match (dx, dl) {
                (Ok(dx), Ok(dl)) if !far || (xs[k - 1] + dx).abs() < 1e6 => {
                    xs.push(xs[k - 1] + dx);
                    lns.push(lns[k - 1] + dl);
                }
                // only the far end of an asymptotic approach is dropped
                _ if far => {
                    keep = k;
                    break;
                }
                (Err(e), _) | (_, Err(e)) => return Err(e),
                _ => unreachable!(),
            }
        }
        let mut taus = taus;
        taus.truncate(keep);
        let inverse = Pchip::new(xs.clone(), taus.clone());
        Ok(Self {
            flow,
            taus,
            xs,
            lns,
            tau_lo,
            tau_hi,
            inverse,
        })
    }

    fn nearest(&self, tau: f64) -> usize {
        let k = self.taus.partition_point(|&t| t <= tau);
        if k == 0 {
            0
        } else if k == self.taus.len() || tau - self.taus[k - 1] <= self.taus[k] - tau {
            k - 1
        } else {
            k
        }
    }

    fn x_at(&self, tau: f64) -> f64 {
        let k = self.nearest(tau);
        self.xs[k] + signed_integral(&|t| self.flow.dx(t), self.taus[k], tau).unwrap_or(f64::NAN)
    }

    fn ln_at(&self, tau: f64) -> f64 {
        let k = self.nearest(tau);
        self.lns[k] + signed_integral(&|t| self.flow.dln(t), self.taus[k], tau).unwrap_or(f64::NAN)
    }

    /// Inverse of `x(τ)`: bracket from the table, then safeguarded Newton
    /// with the exact slope `dx/dτ`.
    fn tau_at(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let k = self.xs.partition_point(|&v| v <= x);
        let mut lo = if k == 0 { self.tau_lo } else { self.taus[k - 1] };
        let mut hi = if k == n { self.tau_hi } else { self.taus[k] };
        let mut tau = if k == 0 || k == n {
            0.5 * (lo + hi)
        } else {
            self.inverse.eval(x).clamp(lo, hi)
        };
        for _ in 0..100 {
            let g = self.x_at(tau) - x;
            if !g.is_finite() {
                return f64::NAN;
            }
            if g == 0.0 {
                return tau;
            }
            if g > 0.0 {
                hi = tau;
            } else {
                lo = tau;
            }
            let step = g / self.flow.dx(tau);
            if step.abs() <= 4.0 * f64::EPSILON * tau.abs().max(1e-3) {
                return tau - step;
            }
            let next = tau - step;
            tau = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        }
        tau
    }
}

#[derive(Debug, Clone)]
pub struct RationalFamilySolution {
    seed: RationalSeed,
    label: String,
    interval: Interval,
    e0: f64,
    anchor: f64,
    provenance: Provenance,
    flow: Flow,
    excess: Flow,
    table: Option<Table>,
}

fn excess_of(f: &RationalFunction, range: (f64, f64)) -> Flow {
    let w = RationalFunction::identity();
    Flow::new(&(f - &(&w * &w)), range)
}

/// Solves `W₀′ = R(W₀)` by quadrature inversion.
pub fn solve_rational_seed(seed: RationalSeed) -> Result<RationalFamilySolution> {
    let flow = Flow::new(&seed.f, seed.w_range);
    let (wl, wh) = seed.w_range;
    let inside = |r: f64| r > wl && r < wh;
    if let Some(r) = flow.num_roots().into_iter().find(|&r| inside(r)) {
        return Err(Error::StalledFlow(format!("R vanishes at w = {r} inside the W₀ range")));
    }
    if let Some(r) = flow.den_roots().into_iter().find(|&r| inside(r)) {
        return Err(Error::StalledFlow(format!("R has a pole at w = {r} inside the W₀ range")));
    }
    let (tau_lo, tau_hi) = (wl.atan(), wh.atan());
    let probe = 0.5 * (tau_lo + tau_hi);
    if flow.rhs(probe.tan()) <= 0.0 {
        return Err(Error::NoMonotoneBranch("R is negative on the W₀ range".into()));
    }
    // an end is reached only asymptotically when R vanishes there
    let divergent = |w: f64| w.is_finite() && flow.rhs(w).abs() < 1e-12;
    let table = Table::build(flow.clone(), tau_lo, tau_hi)?;

    let tau0 = seed.w_at_x0.atan();
    if !(tau0 >= tau_lo && tau0 <= tau_hi) || divergent(seed.w_at_x0) {
        return Err(Error::InvalidSeed(format!(
            "W₀ = {} is not attained on the range",
            seed.w_at_x0
        )));
    }
    let shift = seed.x0 - table.x_at(tau0);
    let mut table = table;
    for x in table.xs.iter_mut() {
        *x += shift;
    }
    table.inverse = Pchip::new(table.xs.clone(), table.taus.clone());
    let x_lo = if divergent(wl) { f64::NEG_INFINITY } else { table.x_at(tau_lo) };
    let x_hi = if divergent(wh) { f64::INFINITY } else { table.x_at(tau_hi) };

    let tau_anchor = if inside(0.0) { 0.0 } else { probe };
    let ln_shift = table.ln_at(tau_anchor);
    for l in table.lns.iter_mut() {
        *l -= ln_shift;
    }
    let anchor = table.x_at(tau_anchor);

    let excess = excess_of(&seed.f, seed.w_range);
    let e0 = if divergent(wh) {
        excess.rhs(wh)
    } else if divergent(wl) {
        excess.rhs(wl)
    } else if excess.rhs(0.0).is_finite() {
        excess.rhs(0.0)
    } else {
        0.0
    };
    Ok(RationalFamilySolution {
        label: format!("rational R = {}", seed.f),
        interval: Interval::open(x_lo, x_hi),
        e0,
        anchor,
        provenance: Provenance::Quadrature,
        flow,
        excess,
        table: Some(table),
        seed,
    })
}

/// The closed-form family `W₀ = (2s − 3)/(2s − 1)`, `s = √(x + ¼)`, on
/// `x > 0` with `V = −2/s`, `E₀ = −1` and `ψ₀ = e^{−x+2s}(2s − 1)`.
pub fn new_potential_family() -> RationalFamilySolution {
    let seed = new_potential_seed();
    RationalFamilySolution {
        label: "new potential V = -2/sqrt(x+1/4)".into(),
        interval: Interval::open(0.0, f64::INFINITY),
        e0: -1.0,
        anchor: 2.0,
        provenance: Provenance::ClosedForm,
        flow: Flow::new(&seed.f, seed.w_range),
        excess: excess_of(&seed.f, seed.w_range),
        table: None,
        seed,
    }
}

fn root_s(x: f64) -> f64 {
    (x + 0.25).sqrt()
}

impl RationalFamilySolution {
    pub fn seed(&self) -> &RationalSeed {
        &self.seed
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_new_potential(&self) -> bool {
        self.seed.f == new_potential_seed().f && self.e0 == -1.0
    }

    fn tau(&self, x: f64) -> Option<(&Table, f64)> {
        if !self.interval.contains(x) {
            return None;
        }
        let t = self.table.as_ref()?;
        Some((t, t.tau_at(x)))
    }
}

impl Family for RationalFamilySolution {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn interval(&self) -> Interval {
        self.interval
    }

    fn e0(&self) -> f64 {
        self.e0
    }

    fn w0(&self, x: f64) -> f64 {
        match self.provenance {
            Provenance::ClosedForm => {
                let s = root_s(x);
                (2.0 * s - 3.0) / (2.0 * s - 1.0)
            }
            Provenance::Quadrature => self.tau(x).map_or(f64::NAN, |(_, t)| t.tan()),
        }
    }

    fn ln_psi0(&self, x: f64) -> f64 {
        match self.provenance {
            Provenance::ClosedForm => {
                let s = root_s(x);
                -x + 2.0 * s + (2.0 * s - 1.0).abs().ln()
            }
            Provenance::Quadrature => self.tau(x).map_or(f64::NAN, |(t, tau)| t.ln_at(tau)),
        }
    }

    fn potential(&self, x: f64) -> f64 {
        match self.provenance {
            Provenance::ClosedForm => -2.0 / root_s(x),
            Provenance::Quadrature => self.e0 - self.excess.rhs(self.w0(x)),
        }
    }

    fn seed_rhs(&self, w: f64) -> f64 {
        self.flow.rhs(w)
    }

    fn anchor(&self) -> f64 {
        self.anchor
    }

    fn psi0(&self, x: f64) -> f64 {
        match self.provenance {
            Provenance::ClosedForm => {
                let s = root_s(x);
                (-x + 2.0 * s).exp() * (2.0 * s - 1.0)
            }
            Provenance::Quadrature => self.ln_psi0(x).exp(),
        }
    }
}

/// First excited state of the new-potential family in the form
/// `ψ₁ = e^{−κx + λs}(2s − 1)(2s − μ)`, `s = √(x + ¼)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RationalExcitedState {
    pub kappa: f64,
    pub lambda: f64,
    pub mu: f64,
    pub e1: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

impl RationalExcitedState {
    pub fn ln_abs_psi1(&self, x: f64) -> f64 {
        let s = root_s(x);
        -self.kappa * x + self.lambda * s + (2.0 * s - 1.0).abs().ln() + (2.0 * s - self.mu).abs().ln()
    }

    pub fn psi1(&self, x: f64) -> f64 {
        let s = root_s(x);
        (-self.kappa * x + self.lambda * s).exp() * (2.0 * s - 1.0) * (2.0 * s - self.mu)
    }

    /// `W₁ = −ψ₁′/ψ₁`.
    pub fn w1(&self, x: f64) -> f64 {
        let s = root_s(x);
        self.kappa - self.lambda / (2.0 * s) - 1.0 / (s * (2.0 * s - 1.0)) - 1.0 / (s * (2.0 * s - self.mu))
    }

    /// Interior node `x = (μ/2)² − ¼`.
    pub fn node(&self) -> f64 {
        0.25 * self.mu * self.mu - 0.25
    }
}

const OVERLAP_CUTOFF: f64 = 80.0;

fn template(p: &[f64], x: f64) -> f64 {
    let s = root_s(x);
    (-p[0] * x + p[1] * s).exp() * (2.0 * s - 1.0) * (2.0 * s - p[2])
}

fn ground(x: f64) -> f64 {
    let s = root_s(x);
    (-x + 2.0 * s).exp() * (2.0 * s - 1.0)
}

fn normalized_overlap(p: &[f64]) -> f64 {
    let q = |f: &dyn Fn(f64) -> f64, abs: f64| integrate(f, 0.0, OVERLAP_CUTOFF, abs, 1e-13).unwrap_or(f64::NAN);
    let n0 = q(&|x| ground(x).powi(2), 1e-300);
    let n1 = q(&|x| template(p, x).powi(2), 1e-300);
    let norm = (n0 * n1).sqrt();
    q(&|x| ground(x) * template(p, x), 1e-15 * norm) / norm
}

/// Solves for `κ, λ, μ, E₁`. Matching `−ψ″ + Vψ = Eψ` at large `x` order by
/// order in `1/s` gives `E₁ = −κ²`, `κλ = 2` and `λ² = 8κ`; orthogonality to
/// `ψ₀` closes the system.
pub fn excited_rational(family: &RationalFamilySolution) -> Result<RationalExcitedState> {
    if !family.is_new_potential() {
        return Err(Error::NoPhysicalBranch(
            "excited states are available for the new-potential family only".into(),
        ));
    }
    let sys = CoefficientSystem::new("rational excited state", vec!["kappa".into(), "lambda".into(), "mu".into(), "E1".into()])
        .with_residual(|p: &[f64]| {
            vec![
                p[3] + p[0] * p[0],
                p[0] * p[1] - 2.0,
                p[1] * p[1] - 8.0 * p[0],
                normalized_overlap(p),
            ]
        });
    let e0 = family.e0();
    let guess = [(-e0 * 0.6).sqrt(), 2.0, 3.5, 0.6 * e0];
    let sol = solve_system(&sys, &guess, SolveMode::Newton)?;
    let v = &sol.values;
    let state = RationalExcitedState {
        kappa: v[0],
        lambda: v[1],
        mu: v[2],
        e1: v[3],
        residual_norm: sol.residual_norm,
        iterations: sol.iterations,
    };
    let xs = linspace(1e-9, 50.0, 20001);
    let vals: Vec<f64> = xs.iter().map(|&x| state.psi1(x)).collect();
    let nodes = count_sign_changes(&vals);
    if state.kappa <= 0.0 || state.e1 <= e0 || nodes != 1 {
        return Err(Error::NoPhysicalBranch(format!(
            "solved state has kappa = {}, E1 = {}, {nodes} nodes",
            state.kappa, state.e1
        )));
    }
    Ok(state)
}

#[derive(Debug, Clone, PartialEq)]
pub enum TanAnsatz {
    /// `W₀ = N(t)/D(t)` with `t = tan(φ(x − x₀))`.
    Match {
        numerator: Polynomial<f64>,
        denominator: Polynomial<f64>,
        phi: f64,
        residual: f64,
    },
    NoMatch {
        degree: usize,
        best_residual: f64,
    },
}

/// Residual coefficients of `φ(1 + t²)(N′D − ND′)·H_Q − H_P`, where
/// `R(N/D) = H_P/(H_Q D²)`.
fn tan_residual(p: &Polynomial<f64>, q: &Polynomial<f64>, num: &Polynomial<f64>, den: &Polynomial<f64>, phi: f64) -> Vec<f64> {
    let homog = |r: &Polynomial<f64>| {
        let deg = r.degree().max(0) as usize;
        let mut acc = Polynomial::zero();
        for k in 0..=deg {
            let c = r.coeff(k);
            if c != 0.0 {
                acc = &acc + &(&num.pow(k) * &den.pow(deg - k)).scale(&c);
            }
        }
        acc
    };
    let hp = homog(p);
    let hq = homog(q);
    let wr = &(&num.derivative() * den) - &(num * &den.derivative());
    let lhs = &(&Polynomial::new(vec![phi, 0.0, phi]) * &wr) * &hq;
    let r = &lhs - &hp;
    let len = (lhs.degree().max(hp.degree()).max(0) + 1) as usize;
    (0..len).map(|k| r.coeff(k)).collect()
}

/// Tries `W₀ = N(t)/D(t)`, `t = tan(φ(x − x₀))`, with `deg N = l + 1` and
/// `deg D = l` (`D` monic). The leading coefficient of `N` is fixed at `φ/A`
/// by the pole of `W₀`; `φ` is refined starting from `phi`.
pub fn tan_ansatz_match(seed: &RationalSeed, phi: f64, ansatz_degree: usize) -> TanAnsatz {
    let l = ansatz_degree;
    let a = seed.leading();
    let p = seed.f.numerator().to_f64();
    let q = seed.f.denominator().to_f64();
    let split = |u: &[f64]| -> (Polynomial<f64>, Polynomial<f64>, f64) {
        let phi = u[2 * l + 1];
        let mut nc = u[..=l].to_vec();
        nc.push(phi / a);
        let mut dc = u[l + 1..2 * l + 1].to_vec();
        dc.push(1.0);
        (Polynomial::new(nc), Polynomial::new(dc), phi)
    };
    let scale = 1.0 + l2(p.coeffs());
    let resid = |u: &[f64]| {
        let (n, d, phi) = split(u);
        tan_residual(&p, &q, &n, &d, phi).iter().map(|v| v / scale).collect::<Vec<_>>()
    };
    let opts = NewtonOptions {
        max_iter: 400,
        tol: 1e-13,
        fd_step: 1e-7,
    };
    let mut best = f64::INFINITY;
    // deterministic low-discrepancy starts
    let golden = 0.618_033_988_749_894_9;
    let mut phase = 0.5;
    for &phi_scale in &[1.0, 0.5, 2.0] {
        for start in 0..8 {
            let mut u: Vec<f64> = (0..2 * l + 1)
                .map(|_| {
                    phase = (phase + golden) % 1.0;
                    if start == 0 {
                        0.0
                    } else {
                        6.0 * phase - 3.0
                    }
                })
                .collect();
            u.push(phi * phi_scale);
            let out = least_squares(&resid, &u, opts);
            let (n, d, phi) = split(&out.x);
            let bounded = out.x.iter().all(|v| v.is_finite() && v.abs() < 1e8);
            if out.norm.is_finite() && bounded && phi.abs() > 1e-6 {
                if out.norm < 1e-10 {
                    return TanAnsatz::Match {
                        numerator: n,
                        denominator: d,
                        phi,
                        residual: out.norm,
                    };
                }
                best = best.min(out.norm);
            }
        }
    }
    TanAnsatz::NoMatch {
        degree: l,
        best_residual: best,
    }
}

/// `c/√(x + b) + d`, the shape of the new potential.
#[derive(Debug, Clone, Copy, Default)]
pub struct InverseRootPartnerModel;

impl PartnerModel for InverseRootPartnerModel {
    fn name(&self) -> String {
        "c/sqrt(x+b) + d".into()
    }

    fn starts(&self) -> Vec<Vec<f64>> {
        vec![
            vec![-2.0, 0.25, 0.0],
            vec![-4.0, 0.25, 0.0],
            vec![-1.0, 1.0, 0.0],
            vec![2.0, 0.25, 0.0],
            vec![-2.0, 0.05, 1.0],
        ]
    }

    fn eval(&self, p: &[f64], xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| p[0] / (x + p[1]).max(1e-12).sqrt() + p[2]).collect()
    }
}

/// Seed used for the rational reduction of the box: `R = w² + 1`.
pub fn unit_tangent_seed() -> RationalSeed {
    let f = RationalFunction::from_poly(Poly::new(vec![rat(1, 1), rat(0, 1), rat(1, 1)]));
    RationalSeed::new(f, (f64::NEG_INFINITY, f64::INFINITY))
        .unwrap()
        .anchored(0.0, 0.0)
}
