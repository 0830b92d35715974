//! Shooting-method eigensolver for `−ψ″ + Vψ = Eψ` with Dirichlet ends.
//!
//! Levels are bracketed by counting the sign changes of the solution shot
//! from the left (Sturm oscillation), then refined on the normalized
//! Wronskian of the left and right Numerov sweeps at a matching point. The
//! error estimate comes from re-solving on a grid with half the spacing.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::Family;
use crate::numeric::{bracket_root, simpson};

/// Magnitude above which a sweep is rescaled.
const OVERFLOW: f64 = 1e100;
/// Points where `h²(V − E)` exceeds this are treated as inside the wall.
const WALL: f64 = 6.0;
pub const DEFAULT_POINTS: usize = 8001;
pub const MAX_POINTS: usize = 2_000_001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n_points: usize,
}

impl Grid {
    /// Uniform grid; `n_points` is rounded up to an odd count for Simpson.
    pub fn new(x_lo: f64, x_hi: f64, n_points: usize) -> Result<Self> {
        if !(x_lo.is_finite() && x_hi.is_finite()) || x_hi <= x_lo {
            return Err(Error::InvalidGrid(format!("bad bounds [{x_lo}, {x_hi}]")));
        }
        if n_points < 64 {
            return Err(Error::InvalidGrid(format!("need at least 64 points, got {n_points}")));
        }
        Ok(Self {
            x_lo,
            x_hi,
            n_points: n_points | 1,
        })
    }

    pub fn h(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.n_points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.x_hi
        } else {
            self.x_lo + i as f64 * self.h()
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Same bounds, half the spacing.
    pub fn refined(&self) -> Self {
        Self {
            n_points: 2 * self.n_points - 1,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Left,
    Right,
}

/// One Numerov sweep. `values` covers the whole grid; entries beyond the
/// point where the sweep stopped are zero.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub values: Vec<f64>,
    pub matching_index: usize,
    pub log_derivative: f64,
    pub rescalings: usize,
}

fn g_values(v: &dyn Fn(f64) -> f64, e: f64, grid: &Grid) -> Vec<f64> {
    (0..grid.n_points).map(|i| v(grid.x(i)) - e).collect()
}

/// Turning point nearest the middle of the grid, or the middle itself.
fn matching_index(g: &[f64]) -> usize {
    let n = g.len();
    let mid = n / 2;
    (2..n - 2)
        .filter(|&i| (g[i] <= 0.0) != (g[i + 1] <= 0.0))
        .min_by_key(|&i| i.abs_diff(mid))
        .unwrap_or(mid)
}

/// Numerov from one end toward `stop` (inclusive), starting at the first
/// point outside the wall.
fn sweep(g: &[f64], h: f64, dir: Direction, stop: usize) -> (Vec<f64>, usize) {
    let n = g.len();
    let idx = |k: usize| match dir {
        Direction::Left => k,
        Direction::Right => n - 1 - k,
    };
    let last = match dir {
        Direction::Left => stop,
        Direction::Right => n - 1 - stop,
    };
    let c = h * h / 12.0;
    let mut psi = vec![0.0; n];
    let mut start = 0;
    while start + 2 < last && h * h * g[idx(start + 1)] > WALL {
        start += 1;
    }
    psi[idx(start + 1)] = h;
    let mut rescalings = 0;
    for k in start + 1..last {
        let (a, b, cc) = (idx(k - 1), idx(k), idx(k + 1));
        let next = (2.0 * psi[b] * (1.0 + 5.0 * c * g[b]) - psi[a] * (1.0 - c * g[a])) / (1.0 - c * g[cc]);
        psi[cc] = next;
        if next.abs() > OVERFLOW {
            for j in 0..=k + 1 {
                psi[idx(j)] /= OVERFLOW;
            }
            rescalings += 1;
        }
    }
    (psi, rescalings)
}

pub fn integrate_numerov(v: &dyn Fn(f64) -> f64, e: f64, grid: &Grid, direction: Direction) -> Sweep {
    let g = g_values(v, e, grid);
    let m = matching_index(&g);
    let stop = match direction {
        Direction::Left => m + 1,
        Direction::Right => m - 1,
    };
    let (values, rescalings) = sweep(&g, grid.h(), direction, stop);
    let d = (values[m + 1] - values[m - 1]) / (2.0 * grid.h());
    Sweep {
        log_derivative: d / values[m],
        values,
        matching_index: m,
        rescalings,
    }
}

/// Normalized Wronskian of the left and right sweeps at `m`; zero exactly
/// when they are proportional.
fn defect(g: &[f64], h: f64, m: usize) -> f64 {
    let (l, _) = sweep(g, h, Direction::Left, m + 1);
    let (r, _) = sweep(g, h, Direction::Right, m - 1);
    let dl = (l[m + 1] - l[m - 1]) / (2.0 * h);
    let dr = (r[m + 1] - r[m - 1]) / (2.0 * h);
    (dl * r[m] - dr * l[m]) / ((l[m] * l[m] + dl * dl).sqrt() * (r[m] * r[m] + dr * dr).sqrt())
}

/// Strict sign changes, ignoring samples below `1e−12·max|values|`.
pub fn count_nodes(values: &[f64]) -> usize {
    let peak = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let floor = 1e-12 * peak;
    let mut last = 0.0f64;
    let mut count = 0;
    for &v in values {
        if v.abs() <= floor {
            continue;
        }
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = v;
    }
    count
}

/// Sign changes of the left-shot solution over the whole grid, i.e. the
/// number of Dirichlet levels below `e`. No magnitude floor: the shot
/// solution may grow by many decades past the last node.
fn levels_below(g_of: &dyn Fn(f64) -> Vec<f64>, h: f64, e: f64) -> usize {
    let g = g_of(e);
    let mut stop = g.len() - 1;
    while stop > 2 && h * h * g[stop] > WALL {
        stop -= 1;
    }
    let (psi, _) = sweep(&g, h, Direction::Left, stop);
    let mut last = 0.0f64;
    let mut count = 0;
    for &v in &psi {
        if v != 0.0 {
            if last != 0.0 && (v > 0.0) != (last > 0.0) {
                count += 1;
            }
            last = v;
        }
    }
    count
}

pub fn inner_product(f: &[f64], g: &[f64], grid: &Grid) -> Result<f64> {
    if f.len() != grid.n_points || g.len() != grid.n_points {
        return Err(Error::GridMismatch(format!(
            "expected {} samples, got {} and {}",
            grid.n_points,
            f.len(),
            g.len()
        )));
    }
    let prod: Vec<f64> = f.iter().zip(g).map(|(a, b)| a * b).collect();
    Ok(simpson(&prod, grid.h()))
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    pub level: usize,
    pub energy: f64,
    #[serde(skip)]
    pub wavefunction: Vec<f64>,
    pub node_count: usize,
    pub converged: bool,
    pub richardson_error: f64,
    pub grid: Grid,
}

/// Single solve on one grid: bracket by level counting, root of the
/// matching defect, assembly of the normalized eigenfunction.
fn solve_on(v: &dyn Fn(f64) -> f64, n: usize, bracket: (f64, f64), grid: &Grid) -> Result<(f64, Vec<f64>)> {
    let h = grid.h();
    let vs: Vec<f64> = grid.values().iter().map(|&x| v(x)).collect();
    let g_of = |e: f64| vs.iter().map(|p| p - e).collect::<Vec<_>>();
    let (mut lo, mut hi) = bracket;
    let mut widened = 0;
    loop {
        let below_lo = levels_below(&g_of, h, lo);
        let below_hi = levels_below(&g_of, h, hi);
        if below_lo <= n && below_hi > n {
            break;
        }
        if widened == 3 {
            return Err(Error::BracketFailure(format!(
                "level {n} not inside [{lo}, {hi}] ({below_lo} and {below_hi} levels below)"
            )));
        }
        let w = hi - lo;
        if below_lo > n {
            lo -= w;
        }
        if below_hi <= n {
            hi += w;
        }
        widened += 1;
    }
    // isolate level n: exactly n levels below lo and n + 1 below hi
    for _ in 0..200 {
        let below_lo = levels_below(&g_of, h, lo);
        let below_hi = levels_below(&g_of, h, hi);
        if below_lo == n && below_hi == n + 1 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if levels_below(&g_of, h, mid) > n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let m = matching_index(&g_of(0.5 * (lo + hi)));
    let f = |e: f64| defect(&g_of(e), h, m);
    let tol = 1e-14 * (1.0 + lo.abs().max(hi.abs()));
    let e = bracket_root(&f, lo, hi, tol)?;

    let g = g_of(e);
    let (l, _) = sweep(&g, h, Direction::Left, m + 1);
    let (r, _) = sweep(&g, h, Direction::Right, m - 1);
    let num: f64 = (m - 1..=m + 1).map(|i| l[i] * r[i]).sum();
    let den: f64 = (m - 1..=m + 1).map(|i| r[i] * r[i]).sum();
    let c = num / den;
    let mut psi: Vec<f64> = (0..grid.n_points).map(|i| if i <= m { l[i] } else { c * r[i] }).collect();
    psi[0] = 0.0;
    let last = grid.n_points - 1;
    psi[last] = 0.0;
    let norm = inner_product(&psi, &psi, grid)?.sqrt();
    for p in psi.iter_mut() {
        *p /= norm;
    }
    // fix the sign so the first lobe is positive
    if let Some(first) = psi.iter().find(|p| p.abs() > 1e-8) {
        if *first < 0.0 {
            for p in psi.iter_mut() {
                *p = -*p;
            }
        }
    }
    Ok((e, psi))
}

/// Level `n` of `V` on a fixed grid, without refinement.
pub fn eigenvalue_on_grid(v: &dyn Fn(f64) -> f64, n: usize, bracket: (f64, f64), grid: &Grid) -> Result<f64> {
    solve_on(v, n, bracket, grid).map(|(e, _)| e)
}

/// Level `n` of `V` on `grid`, refined by grid doubling until the Richardson
/// estimate `|E_h − E_{h/2}|/15` drops below `1e−6` or the point cap is hit.
pub fn find_eigenvalue(v: &dyn Fn(f64) -> f64, n: usize, bracket: (f64, f64), grid: Grid) -> Result<EigenResult> {
    let mut grid = grid;
    let (mut e, _) = solve_on(v, n, bracket, &grid)?;
    loop {
        let fine = grid.refined();
        let (e_fine, psi_fine) = solve_on(v, n, bracket, &fine)?;
        let err = (e_fine - e).abs() / 15.0;
        let done = err < 1e-6;
        if done || fine.refined().n_points > MAX_POINTS {
            let nodes = count_nodes(&psi_fine);
            if nodes != n {
                return Err(Error::NodeMismatch {
                    expected: n,
                    found: nodes,
                });
            }
            return Ok(EigenResult {
                level: n,
                energy: e_fine,
                wavefunction: psi_fine,
                node_count: nodes,
                converged: done,
                richardson_error: err,
                grid: fine,
            });
        }
        grid = fine;
        e = e_fine;
    }
}

/// Grid for a family: finite ends inset by `1e−6` of the width (or of the
/// distance to the anchor), infinite ends cut where the WKB tail
/// `exp(−∫√(V − E))` beyond the turning point of `e_max` falls below `1e−12`.
pub fn family_grid(family: &dyn Family, e_max: f64, n_points: usize) -> Result<Grid> {
    let iv = family.interval();
    let a = family.anchor();
    let v = |x: f64| family.potential(x);
    let end = |dir: f64, lim: f64| -> Result<f64> {
        if lim.is_finite() {
            let w = if iv.is_finite() { iv.width() } else { (lim - a).abs() };
            return Ok(lim - dir * 1e-6 * w);
        }
        let mut x = a;
        let mut step = 0.05 * (1.0 + a.abs());
        let mut guard = 0;
        while v(x) <= e_max {
            x += dir * step;
            step *= 1.2;
            guard += 1;
            if guard > 400 {
                return Err(Error::InvalidGrid("no classical turning point on an infinite end".into()));
            }
        }
        let target = (1e12f64).ln();
        let mut action = 0.0;
        let dx = 0.01 * (1.0 + x.abs()).min(1.0);
        while action < target {
            let k = (v(x) - e_max).max(0.0).sqrt();
            action += k * dx;
            x += dir * dx;
            guard += 1;
            if guard > 10_000_000 {
                return Err(Error::InvalidGrid("WKB tail does not decay".into()));
            }
        }
        Ok(x)
    };
    Grid::new(end(-1.0, iv.lo)?, end(1.0, iv.hi)?, n_points)
}

/// Samples `ψ` on the grid and normalizes to unit Simpson norm.
pub fn sample_normalized(psi: &dyn Fn(f64) -> f64, grid: &Grid) -> Vec<f64> {
    let mut vals: Vec<f64> = grid.values().iter().map(|&x| psi(x)).collect();
    let norm = inner_product(&vals, &vals, grid).map(f64::sqrt).unwrap_or(1.0);
    if norm > 0.0 && norm.is_finite() {
        for v in vals.iter_mut() {
            *v /= norm;
        }
    }
    vals
}
