use std::fmt;

use serde::{Deserialize, Serialize};

/// Domain of a family. Endpoints may be infinite; an open endpoint is a pole
/// of `W₀` and must not be evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        (x > self.lo || (self.lo_closed && x == self.lo)) && (x < self.hi || (self.hi_closed && x == self.hi))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// A solved ground-state family: superpotential, unnormalized ground state
/// and potential on a fixed interval, with the seed `W₀′ = R(W₀)`.
pub trait Family: Send + Sync + fmt::Debug {
    fn label(&self) -> String;
    fn interval(&self) -> Interval;
    fn e0(&self) -> f64;
    fn w0(&self, x: f64) -> f64;
    fn ln_psi0(&self, x: f64) -> f64;
    fn potential(&self, x: f64) -> f64;
    /// Right-hand side of the seed equation, `W₀′ = seed_rhs(W₀)`.
    fn seed_rhs(&self, w: f64) -> f64;
    /// A point well inside the interval where the ground state is large.
    fn anchor(&self) -> f64;

    fn psi0(&self, x: f64) -> f64 {
        self.ln_psi0(x).exp()
    }

    fn w0_prime(&self, x: f64) -> f64 {
        self.seed_rhs(self.w0(x))
    }

    /// Finite window carrying the ground state: finite endpoints inset by
    /// `inset` of the width, infinite ends cut where `ψ₀` has dropped by
    /// `e^{-decades}` relative to the anchor.
    fn window(&self, inset: f64, decades: f64) -> (f64, f64) {
        let iv = self.interval();
        let a = self.anchor();
        let base = self.ln_psi0(a);
        let reach = |dir: f64, end: f64| -> f64 {
            if end.is_finite() {
                let w = if iv.is_finite() { iv.width() } else { (end - a).abs() };
                if (dir < 0.0 && iv.lo_closed) || (dir > 0.0 && iv.hi_closed) {
                    end
                } else {
                    end - dir * inset * w
                }
            } else {
                let mut step = 1.0;
                let mut x = a + dir * step;
                while self.ln_psi0(x) > base - decades && step < 1e6 {
                    step *= 1.5;
                    x = a + dir * step;
                }
                x
            }
        };
        (reach(-1.0, iv.lo), reach(1.0, iv.hi))
    }
}
