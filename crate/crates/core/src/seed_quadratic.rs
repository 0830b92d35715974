//! The quadratic seed `W₀′ = AW₀² + BW₀ + C` in closed form.
//!
//! The discriminant `D = 4AC − B²` selects the branch:
//!
//! * `D > 0`: `W₀ = −B/2A + (√D/2A)·tan(½√D(x−x₀))` on `x₀ ± π/√D`,
//! * `D = 0`: `W₀ = −B/2A − 1/(A(x−x₀))` on a half-line,
//! * `D < 0`: the real `tanh` form (whole line, `A < 0`) or the `coth` form
//!   (half-line, `A > 0`).
//!
//! Throughout, `ψ₀ = e^{B(x−x₀)/2A}·g(x)^{1/A}` where `g` is `cos`, `|x−x₀|`,
//! `cosh` or `|sinh|` of the scaled argument, and `V = E₀ − f(W₀)` with
//! `f(w) = (A−1)w² + Bw + C`.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{Family, Interval};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticSeed {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub x0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Trigonometric,
    Degenerate,
    Hyperbolic,
}

impl QuadraticSeed {
    pub fn new(a: f64, b: f64, c: f64, x0: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite() && x0.is_finite()) {
            return Err(Error::InvalidSeed("seed parameters must be finite".into()));
        }
        if a == 0.0 {
            return Err(Error::InvalidSeed("A must be nonzero".into()));
        }
        Ok(Self { a, b, c, x0 })
    }

    pub fn discriminant(&self) -> f64 {
        4.0 * self.a * self.c - self.b * self.b
    }

    pub fn branch(&self) -> Branch {
        let d = self.discriminant();
        if d > 0.0 {
            Branch::Trigonometric
        } else if d == 0.0 {
            Branch::Degenerate
        } else {
            Branch::Hyperbolic
        }
    }

    /// `AW² + BW + C`.
    pub fn rhs(&self, w: f64) -> f64 {
        (self.a * w + self.b) * w + self.c
    }

    /// `f(w) = rhs(w) − w²`, so that `E₀ − V = f(W₀)`.
    pub fn flow(&self, w: f64) -> f64 {
        ((self.a - 1.0) * w + self.b) * w + self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    /// `W₀ = m + k·tan(θu)`
    Tan { theta: f64, k: f64 },
    /// `W₀ = m − 1/(A u)`
    Pole,
    /// `W₀ = m − k·tanh(θu)`
    Tanh { theta: f64, k: f64 },
    /// `W₀ = m − k·coth(θu)`
    Coth { theta: f64, k: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySolution {
    seed: QuadraticSeed,
    branch: Branch,
    shape: Shape,
    interval: Interval,
    e0: f64,
    label: String,
}

fn ln_cosh(y: f64) -> f64 {
    let y = y.abs();
    y + (-2.0 * y).exp().ln_1p() - LN_2
}

fn ln_abs_sinh(y: f64) -> f64 {
    let y = y.abs();
    y + (-(-2.0 * y).exp()).ln_1p() - LN_2
}

pub fn solve_seed(seed: QuadraticSeed) -> Result<FamilySolution> {
    let QuadraticSeed { a, b, c: _, x0 } = QuadraticSeed::new(seed.a, seed.b, seed.c, seed.x0)?;
    let d = seed.discriminant();
    let branch = seed.branch();
    let (shape, interval) = match branch {
        Branch::Trigonometric => {
            if a < 0.0 {
                return Err(Error::NoMonotoneBranch(format!(
                    "A = {a} < 0 with D > 0 makes W0 decreasing everywhere"
                )));
            }
            let sd = d.sqrt();
            (
                Shape::Tan {
                    theta: 0.5 * sd,
                    k: sd / (2.0 * a),
                },
                Interval::open(x0 - PI / sd, x0 + PI / sd),
            )
        }
        Branch::Degenerate => {
            if a < 0.0 {
                return Err(Error::NoMonotoneBranch(format!(
                    "A = {a} < 0 with D = 0 makes W0 decreasing everywhere"
                )));
            }
            // the side on which e^{Bu/2A} decays
            let iv = if b > 0.0 {
                Interval::open(f64::NEG_INFINITY, x0)
            } else {
                Interval::open(x0, f64::INFINITY)
            };
            (Shape::Pole, iv)
        }
        Branch::Hyperbolic => {
            let s = (-d).sqrt();
            let theta = 0.5 * s;
            let k = s / (2.0 * a);
            if a < 0.0 {
                (Shape::Tanh { theta, k }, Interval::open(f64::NEG_INFINITY, f64::INFINITY))
            } else {
                let iv = if b > s {
                    Interval::open(f64::NEG_INFINITY, x0)
                } else {
                    Interval::open(x0, f64::INFINITY)
                };
                (Shape::Coth { theta, k }, iv)
            }
        }
    };
    let mut sol = FamilySolution {
        seed,
        branch,
        shape,
        interval,
        e0: 0.0,
        label: format!("quadratic(A={}, B={}, C={}, x0={})", seed.a, seed.b, seed.c, seed.x0),
    };
    sol.e0 = sol.energy_convention();
    Ok(sol)
}

impl FamilySolution {
    pub fn seed(&self) -> QuadraticSeed {
        self.seed
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `−B/2A`, the centre of the `W₀` range.
    pub fn centre(&self) -> f64 {
        -self.seed.b / (2.0 * self.seed.a)
    }

    /// Limit of `W₀` at an infinite endpoint, preferring the right one.
    pub fn w0_at_infinity(&self) -> Option<f64> {
        let m = self.centre();
        let right = self.interval.hi.is_infinite();
        if !right && self.interval.lo.is_finite() {
            return None;
        }
        Some(match self.shape {
            Shape::Tan { .. } => unreachable!(),
            Shape::Pole => m,
            Shape::Tanh { k, .. } => m - k,
            Shape::Coth { k, .. } => {
                if right {
                    m - k
                } else {
                    m + k
                }
            }
        })
    }

    /// `E₀ = f(W₀)` at an infinite endpoint where `V → 0`, else `C`.
    fn energy_convention(&self) -> f64 {
        match self.w0_at_infinity() {
            Some(w) => self.seed.flow(w),
            None => self.seed.c,
        }
    }

    pub fn w0(&self, x: f64) -> f64 {
        let u = x - self.seed.x0;
        let m = self.centre();
        match self.shape {
            Shape::Tan { theta, k } => m + k * (theta * u).tan(),
            Shape::Pole => m - 1.0 / (self.seed.a * u),
            // written about the asymptote m ∓ k to avoid cancellation there
            Shape::Tanh { theta, k } => {
                let y = theta * u;
                let s = y.signum();
                (m - s * k) + s * 2.0 * k / ((2.0 * y.abs()).exp() + 1.0)
            }
            Shape::Coth { theta, k } => {
                let y = theta * u;
                let s = y.signum();
                (m - s * k) - s * 2.0 * k / (2.0 * y.abs()).exp_m1()
            }
        }
    }

    /// Natural log of the unnormalized ground state.
    pub fn ln_psi0(&self, x: f64) -> f64 {
        let u = x - self.seed.x0;
        let a = self.seed.a;
        let lin = self.seed.b * u / (2.0 * a);
        let ln_g = match self.shape {
            Shape::Tan { theta, .. } => (theta * u).cos().ln(),
            Shape::Pole => u.abs().ln(),
            Shape::Tanh { theta, .. } => ln_cosh(theta * u),
            Shape::Coth { theta, .. } => ln_abs_sinh(theta * u),
        };
        lin + ln_g / a
    }

    pub fn psi0(&self, x: f64) -> f64 {
        self.ln_psi0(x).exp()
    }

    pub fn potential(&self, x: f64) -> f64 {
        self.e0 - self.seed.flow(self.w0(x))
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }
}

impl Family for FamilySolution {
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
        FamilySolution::w0(self, x)
    }
    fn ln_psi0(&self, x: f64) -> f64 {
        FamilySolution::ln_psi0(self, x)
    }
    fn potential(&self, x: f64) -> f64 {
        FamilySolution::potential(self, x)
    }
    fn seed_rhs(&self, w: f64) -> f64 {
        self.seed.rhs(w)
    }
    fn anchor(&self) -> f64 {
        let iv = self.interval;
        match self.shape {
            Shape::Tan { .. } => {
                // maximum of ψ₀: W₀ = 0
                let x = self.seed.x0 + ((-self.centre()) / self.k()).atan() / self.theta();
                if iv.contains(x) {
                    x
                } else {
                    self.seed.x0
                }
            }
            Shape::Tanh { .. } => {
                let w0 = 0.0;
                let t = (self.centre() - w0) / self.k();
                if t.abs() < 1.0 {
                    self.seed.x0 + t.atanh() / self.theta()
                } else {
                    self.seed.x0
                }
            }
            Shape::Pole | Shape::Coth { .. } => {
                // walk away from the pole until W₀ changes sign or a unit scale is reached
                let dir = if iv.hi.is_infinite() { 1.0 } else { -1.0 };
                let scale = 1.0 / self.theta().max(self.seed.b.abs() / (2.0 * self.seed.a.abs())).max(1e-3);
                let mut best = self.seed.x0 + dir * 1e-3 * scale;
                let mut best_v = self.ln_psi0(best);
                for i in 1..=400 {
                    let x = self.seed.x0 + dir * scale * 0.025 * i as f64;
                    let v = self.ln_psi0(x);
                    if v > best_v {
                        best = x;
                        best_v = v;
                    }
                }
                best
            }
        }
    }
}

impl FamilySolution {
    fn theta(&self) -> f64 {
        match self.shape {
            Shape::Tan { theta, .. } | Shape::Tanh { theta, .. } | Shape::Coth { theta, .. } => theta,
            Shape::Pole => 0.0,
        }
    }

    fn k(&self) -> f64 {
        match self.shape {
            Shape::Tan { k, .. } | Shape::Tanh { k, .. } | Shape::Coth { k, .. } => k,
            Shape::Pole => 0.0,
        }
    }

    /// Argument scale `θ = ½√|D|` (zero on the degenerate branch).
    pub fn angular_rate(&self) -> f64 {
        self.theta()
    }
}

pub fn ground_state(sol: &FamilySolution) -> impl Fn(f64) -> f64 + '_ {
    move |x| sol.psi0(x)
}

pub fn potential_of(sol: &FamilySolution) -> (impl Fn(f64) -> f64 + '_, f64) {
    (move |x| sol.potential(x), sol.e0)
}

/// `W₀′ = AW₀² + 1`.
pub fn oscillator_family(a: f64) -> Result<QuadraticSeed> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidSeed(format!("oscillator family needs A > 0, got {a}")));
    }
    QuadraticSeed::new(a, 0.0, 1.0, 0.0)
}

/// `W₀′ = AW₀² − BW₀ + B²/4`, placed so the interval starts at the origin.
pub fn coulomb_family(a: f64, b: f64) -> Result<QuadraticSeed> {
    if !(a > 1.0) || !a.is_finite() {
        return Err(Error::InvalidSeed(format!(
            "coulomb family is supported for A > 1 only, got A = {a}"
        )));
    }
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidSeed(format!("coulomb family needs B > 0, got {b}")));
    }
    let x0 = PI / (b * (a - 1.0).sqrt());
    QuadraticSeed::new(a, -b, 0.25 * b * b, x0)
}

/// `W₀′ = −AW₀² − W₀ + C` in its real `tanh` form.
pub fn morse_family(a: f64, c: f64) -> Result<QuadraticSeed> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidSeed(format!("morse family needs A > 0, got {a}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidSeed(format!("morse family needs C > 0, got {c}")));
    }
    let s = (1.0 + 4.0 * a * c).sqrt();
    QuadraticSeed::new(-a, -1.0, c, a.ln() / s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn box_seed_is_tangent() {
        let sol = solve_seed(QuadraticSeed::new(1.0, 0.0, 1.0, 0.0).unwrap()).unwrap();
        assert_eq!(sol.branch(), Branch::Trigonometric);
        let iv = sol.interval();
        assert!(close(iv.lo, -PI / 2.0, 1e-15) && close(iv.hi, PI / 2.0, 1e-15));
        for x in [-1.2, -0.3, 0.0, 0.9, 1.5] {
            assert!(close(sol.w0(x), f64::tan(x), 1e-14));
            assert!(close(sol.psi0(x), f64::cos(x), 1e-14));
            assert!(sol.potential(x).abs() < 1e-12);
        }
        assert_eq!(sol.e0(), 1.0);
    }

    #[test]
    fn zero_a_rejected_and_negative_trig_rejected() {
        assert!(matches!(QuadraticSeed::new(0.0, 1.0, 1.0, 0.0), Err(Error::InvalidSeed(_))));
        let s = QuadraticSeed::new(-1.0, 0.0, -1.0, 0.0).unwrap();
        assert!(matches!(solve_seed(s), Err(Error::NoMonotoneBranch(_))));
    }

    #[test]
    fn morse_recast_matches_tanh_form() {
        let sol = solve_seed(morse_family(1.0, 2.0).unwrap()).unwrap();
        assert_eq!(sol.branch(), Branch::Hyperbolic);
        for x in [-3.0f64, -0.5, 0.0, 0.7, 4.0] {
            let w = -0.5 + 1.5 * (1.5 * x).tanh();
            assert!(close(sol.w0(x), w, 1e-14));
            let psi = (0.5 * x).exp() / (1.5 * x).cosh();
            assert!(close(sol.psi0(x), psi, 1e-13), "{x}");
        }
    }

    #[test]
    fn degenerate_branch_integrates_rationally() {
        let sol = solve_seed(QuadraticSeed::new(1.0, -2.0, 1.0, 0.5).unwrap()).unwrap();
        assert_eq!(sol.branch(), Branch::Degenerate);
        assert!(sol.interval().lo == 0.5 && sol.interval().hi.is_infinite());
        assert!(close(sol.w0(2.5), 1.0 - 1.0 / 2.0, 1e-15));
    }

    #[test]
    fn coulomb_interval_starts_at_origin() {
        let seed = coulomb_family(2.0, 2.0).unwrap();
        let sol = solve_seed(seed).unwrap();
        assert!(sol.interval().lo.abs() < 1e-14);
        assert!(close(sol.interval().hi, 2.0 * PI / 2.0, 1e-14));
        // sin(x)^{1/2}·e^{−x/2} up to a constant
        let r = |x: f64| sol.psi0(x) / (x.sin().sqrt() * (-0.5 * x).exp());
        assert!(close(r(0.4), r(2.3), 1e-12));
        assert!(matches!(coulomb_family(0.9, 2.0), Err(Error::InvalidSeed(_))));
    }

    #[test]
    fn energy_convention_for_named_families() {
        let osc = solve_seed(oscillator_family(0.5).unwrap()).unwrap();
        assert_eq!(osc.e0(), 1.0);
        for x in [-1.0f64, 0.2, 1.9] {
            let t = (0.5f64.sqrt() * x).tan();
            assert!(close(osc.potential(x), t * t, 1e-12));
        }
        let morse = solve_seed(morse_family(1e-4, 1.0).unwrap()).unwrap();
        assert!(close(morse.e0(), -1.0, 1e-3));
        assert!(morse.potential(60.0).abs() < 1e-10);
    }
}
