//! `riccati` command line: build a family from a JSON spec, export its states,
//! run verification suites, and write the Figure 1 data.
//!
//! Exit codes: 0 success or all checks pass, 1 a check failed, 2 bad input,
//! 3 solver failure.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::algebra::{Poly, RationalFunction};
use crate::cascade::{assemble_wavefunction, ladder, LadderRung};
use crate::family::{Family, Interval};
use crate::seed_quadratic::{coulomb_family, morse_family, oscillator_family, solve_seed, FamilySolution, QuadraticSeed};
use crate::seed_rational::{
    excited_rational, new_potential_family, solve_rational_seed, RationalExcitedState, RationalFamilySolution,
    RationalSeed,
};
use crate::verify::{
    limit_suite, nonlinear_residual, oracle_check, orthogonality, quadratic_residuals, riccati_residual,
    schrodinger_residual, CheckGrid, LimitKind, VerificationReport,
};

pub const DEFAULT_POINTS: usize = 2001;
pub const GRID_ENV: &str = "RICCATI_GRID_POINTS";

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Solver(crate::Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Solver(e) => write!(f, "solver error: {e}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Quadratic,
    Oscillator,
    Coulomb,
    Morse,
    Rational,
    NewPotential,
}

impl Kind {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "quadratic" => Kind::Quadratic,
            "oscillator" => Kind::Oscillator,
            "coulomb" => Kind::Coulomb,
            "morse" => Kind::Morse,
            "rational" => Kind::Rational,
            "new_potential" => Kind::NewPotential,
            _ => return None,
        })
    }

    fn accepts(&self, key: &str) -> bool {
        match self {
            Kind::Quadratic => matches!(key, "A" | "B" | "C"),
            Kind::Oscillator => key == "A",
            Kind::Coulomb => matches!(key, "A" | "B"),
            Kind::Morse => matches!(key, "A" | "C"),
            Kind::Rational => {
                matches!(key, "w_lo" | "w_hi" | "w_at_x0")
                    || (key.len() > 1
                        && (key.starts_with('p') || key.starts_with('q'))
                        && key[1..].chars().all(|c| c.is_ascii_digit()))
            }
            Kind::NewPotential => false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GridSpec {
    pub points: Option<usize>,
    pub x_lo: Option<f64>,
    pub x_hi: Option<f64>,
}

/// Input document. Parameters may sit under `parameters` or at top level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilySpec {
    pub kind: Kind,
    pub parameters: BTreeMap<String, f64>,
    pub x0: Option<f64>,
    pub n_max: usize,
    pub grid: GridSpec,
}

fn number(key: &str, v: &Value) -> Result<f64, CliError> {
    v.as_f64().ok_or_else(|| input(format!("`{key}` must be a number")))
}

impl FamilySpec {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let doc: Value = serde_json::from_str(text).map_err(|e| input(format!("malformed JSON: {e}")))?;
        let obj = doc.as_object().ok_or_else(|| input("spec must be a JSON object"))?;
        let kind_str = obj
            .get("kind")
            .ok_or_else(|| input("missing key `kind`"))?
            .as_str()
            .ok_or_else(|| input("`kind` must be a string"))?;
        let kind = Kind::parse(kind_str).ok_or_else(|| input(format!("unknown kind `{kind_str}`")))?;
        let mut spec = FamilySpec {
            kind,
            parameters: BTreeMap::new(),
            x0: None,
            n_max: 0,
            grid: GridSpec::default(),
        };
        let add_param = |key: &str, v: &Value, spec: &mut FamilySpec| -> Result<(), CliError> {
            if !kind.accepts(key) {
                return Err(input(format!("unknown parameter `{key}` for kind `{kind_str}`")));
            }
            if spec.parameters.insert(key.to_string(), number(key, v)?).is_some() {
                return Err(input(format!("parameter `{key}` given twice")));
            }
            Ok(())
        };
        for (key, v) in obj {
            match key.as_str() {
                "kind" => {}
                "parameters" => {
                    let params = v.as_object().ok_or_else(|| input("`parameters` must be an object"))?;
                    for (k, pv) in params {
                        add_param(k, pv, &mut spec)?;
                    }
                }
                "x0" => spec.x0 = Some(number("x0", v)?),
                "n_max" => {
                    spec.n_max = v
                        .as_u64()
                        .ok_or_else(|| input("`n_max` must be a non-negative integer"))? as usize
                }
                "grid" => spec.grid = parse_grid(v)?,
                other if kind.accepts(other) => add_param(other, v, &mut spec)?,
                other => return Err(input(format!("unknown key `{other}`"))),
            }
        }
        Ok(spec)
    }

    fn param(&self, key: &str) -> Result<f64, CliError> {
        self.parameters
            .get(key)
            .copied()
            .ok_or_else(|| input(format!("missing parameter `{key}`")))
    }

    fn param_or(&self, key: &str, default: f64) -> f64 {
        self.parameters.get(key).copied().unwrap_or(default)
    }

    pub fn points(&self) -> Result<usize, CliError> {
        if let Some(p) = self.grid.points {
            return Ok(p);
        }
        env_points()
    }
}

fn parse_grid(v: &Value) -> Result<GridSpec, CliError> {
    let obj = v.as_object().ok_or_else(|| input("`grid` must be an object"))?;
    let mut g = GridSpec::default();
    for (k, gv) in obj {
        match k.as_str() {
            "points" => {
                let p = gv.as_u64().ok_or_else(|| input("`grid.points` must be a positive integer"))? as usize;
                if p < 16 {
                    return Err(input("`grid.points` must be at least 16"));
                }
                g.points = Some(p);
            }
            "x_lo" => g.x_lo = Some(number("grid.x_lo", gv)?),
            "x_hi" => g.x_hi = Some(number("grid.x_hi", gv)?),
            other => return Err(input(format!("unknown key `grid.{other}`"))),
        }
    }
    Ok(g)
}

fn env_points() -> Result<usize, CliError> {
    match std::env::var(GRID_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&p| p >= 16)
            .ok_or_else(|| input(format!("{GRID_ENV} must be an integer >= 16, got `{s}`"))),
        Err(_) => Ok(DEFAULT_POINTS),
    }
}

#[derive(Debug)]
pub enum Model {
    Quadratic {
        sol: FamilySolution,
        rungs: Vec<LadderRung>,
    },
    Rational {
        sol: RationalFamilySolution,
        excited: Option<RationalExcitedState>,
    },
}

/// A solved spec: family, excited states and the levels they carry.
#[derive(Debug)]
pub struct Constructed {
    pub spec: FamilySpec,
    pub model: Model,
}

fn quadratic_seed(spec: &FamilySpec) -> Result<QuadraticSeed, CliError> {
    let seed = match spec.kind {
        Kind::Quadratic => {
            let a = spec.param("A")?;
            QuadraticSeed::new(a, spec.param_or("B", 0.0), spec.param_or("C", 0.0), 0.0)
        }
        Kind::Oscillator => oscillator_family(spec.param("A")?),
        Kind::Coulomb => coulomb_family(spec.param("A")?, spec.param("B")?),
        Kind::Morse => morse_family(spec.param("A")?, spec.param("C")?),
        _ => unreachable!(),
    }
    .map_err(|e| input(e.to_string()))?;
    match spec.x0 {
        Some(x0) => QuadraticSeed::new(seed.a, seed.b, seed.c, x0).map_err(|e| input(e.to_string())),
        None => Ok(seed),
    }
}

fn rational_seed(spec: &FamilySpec) -> Result<RationalSeed, CliError> {
    let coeffs = |prefix: char| -> Vec<f64> {
        let mut v = Vec::new();
        for (k, &x) in &spec.parameters {
            if let Some(Ok(i)) = k.strip_prefix(prefix).map(str::parse::<usize>) {
                if v.len() <= i {
                    v.resize(i + 1, 0.0);
                }
                v[i] = x;
            }
        }
        v
    };
    let (p, mut q) = (coeffs('p'), coeffs('q'));
    if p.is_empty() {
        return Err(input("rational seed needs numerator coefficients p0, p1, ..."));
    }
    if q.is_empty() {
        q.push(1.0);
    }
    let exact = |c: &[f64]| Poly::from_f64_exact(c).ok_or_else(|| input("rational seed coefficients must be finite"));
    let f = RationalFunction::new(exact(&p)?, exact(&q)?).map_err(|e| input(e.to_string()))?;
    let range = (
        spec.param_or("w_lo", f64::NEG_INFINITY),
        spec.param_or("w_hi", f64::INFINITY),
    );
    let seed = RationalSeed::new(f, range).map_err(|e| input(e.to_string()))?;
    // without an explicit anchor, W₀ = 0 at x = x0 when 0 is in range
    let default_w = if range.0 < 0.0 && range.1 > 0.0 { 0.0 } else { seed.w_at_x0 };
    let (x0, w) = (spec.x0.unwrap_or(seed.x0), spec.param_or("w_at_x0", default_w));
    Ok(seed.anchored(x0, w))
}

pub fn construct(spec: &FamilySpec) -> Result<Constructed, CliError> {
    let model = match spec.kind {
        Kind::Quadratic | Kind::Oscillator | Kind::Coulomb | Kind::Morse => {
            let sol = solve_seed(quadratic_seed(spec)?).map_err(CliError::Solver)?;
            let rungs = ladder(&sol, spec.n_max).map_err(CliError::Solver)?;
            Model::Quadratic { sol, rungs }
        }
        Kind::Rational | Kind::NewPotential => {
            let sol = if spec.kind == Kind::NewPotential {
                if spec.x0.is_some() {
                    return Err(input("`x0` is fixed for kind `new_potential`"));
                }
                new_potential_family()
            } else {
                solve_rational_seed(rational_seed(spec)?).map_err(CliError::Solver)?
            };
            let excited = match spec.n_max {
                0 => None,
                1 => Some(excited_rational(&sol).map_err(CliError::Solver)?),
                n => {
                    return Err(CliError::Solver(crate::Error::NoPhysicalBranch(format!(
                        "rational families provide levels up to n = 1, asked for n_max = {n}"
                    ))))
                }
            };
            Model::Rational { sol, excited }
        }
    };
    Ok(Constructed {
        spec: spec.clone(),
        model,
    })
}

type State<'a> = Box<dyn Fn(f64) -> f64 + 'a>;

impl Constructed {
    pub fn family(&self) -> &dyn Family {
        match &self.model {
            Model::Quadratic { sol, .. } => sol,
            Model::Rational { sol, .. } => sol,
        }
    }

    /// `(n, Eₙ)` for every constructed level.
    pub fn levels(&self) -> Vec<(usize, f64)> {
        let e0 = self.family().e0();
        let mut out = vec![(0, e0)];
        match &self.model {
            Model::Quadratic { rungs, .. } => out.extend(rungs.iter().map(|r| (r.n, e0 + r.energy_offset))),
            Model::Rational { excited, .. } => out.extend(excited.iter().map(|s| (1, s.e1))),
        }
        out
    }

    /// Unnormalized `ψₙ`.
    pub fn state(&self, n: usize) -> State<'_> {
        match &self.model {
            Model::Quadratic { sol, rungs } => {
                let wf = assemble_wavefunction(sol, if n == 0 { None } else { rungs.get(n - 1) });
                Box::new(move |x| wf.eval(x))
            }
            Model::Rational { sol, excited } => match (n, excited) {
                (0, _) => Box::new(move |x| sol.psi0(x)),
                (_, Some(s)) => {
                    let s = *s;
                    Box::new(move |x| s.psi1(x))
                }
                _ => Box::new(|_| f64::NAN),
            },
        }
    }

    /// Export window: spec overrides, else finite ends inset by `10⁻⁴` of
    /// the width and infinite ends cut 30 e-folds below the ground state.
    pub fn window(&self) -> Result<(f64, f64), CliError> {
        let fam = self.family();
        let (mut lo, mut hi) = fam.window(1e-4, 30.0);
        if let Some(l) = self.spec.grid.x_lo {
            lo = l;
        }
        if let Some(h) = self.spec.grid.x_hi {
            hi = h;
        }
        let iv = fam.interval();
        if !(lo < hi) || !iv.contains(lo) || !iv.contains(hi) {
            return Err(input(format!("export window [{lo}, {hi}] must lie inside the domain {iv}")));
        }
        Ok((lo, hi))
    }
}

/// Uniform grid with every state scaled to `Σψ²Δx = 1`.
pub struct GridExport {
    pub xs: Vec<f64>,
    pub potential: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

fn normalize(vals: &mut [f64], dx: f64) {
    let norm = (vals.iter().map(|v| v * v).sum::<f64>() * dx).sqrt();
    if norm > 0.0 && norm.is_finite() {
        vals.iter_mut().for_each(|v| *v /= norm);
    }
}

pub fn grid_export(c: &Constructed) -> Result<GridExport, CliError> {
    let (lo, hi) = c.window()?;
    let n = c.spec.points()?;
    let xs = crate::numeric::linspace(lo, hi, n);
    let dx = (hi - lo) / (n - 1) as f64;
    let fam = c.family();
    let potential: Vec<f64> = xs.iter().map(|&x| fam.potential(x)).collect();
    let mut states = Vec::new();
    for (level, _) in c.levels() {
        let psi = c.state(level);
        let mut vals: Vec<f64> = xs.iter().map(|&x| psi(x)).collect();
        normalize(&mut vals, dx);
        states.push(vals);
    }
    let finite = potential.iter().chain(states.iter().flatten()).all(|v| v.is_finite());
    if !finite {
        return Err(CliError::Solver(crate::Error::QuadratureFailure(
            "non-finite value on the export grid".into(),
        )));
    }
    Ok(GridExport { xs, potential, states })
}

fn csv_table(header: &[String], columns: &[&[f64]]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..columns[0].len() {
        let row: Vec<String> = columns.iter().map(|c| format!("{:.16e}", c[i])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

impl GridExport {
    pub fn to_csv(&self) -> String {
        let mut header = vec!["x".to_string(), "V".to_string()];
        header.extend((0..self.states.len()).map(|n| format!("psi{n}")));
        let mut cols: Vec<&[f64]> = vec![&self.xs, &self.potential];
        cols.extend(self.states.iter().map(|s| s.as_slice()));
        csv_table(&header, &cols)
    }
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn interval_json(iv: Interval) -> Value {
    json!({
        "lo": finite_or_null(iv.lo),
        "hi": finite_or_null(iv.hi),
        "lo_closed": iv.lo_closed,
        "hi_closed": iv.hi_closed,
    })
}

pub fn family_json(c: &Constructed) -> Value {
    let fam = c.family();
    let mut resolved = Map::new();
    let convention = match &c.model {
        Model::Quadratic { sol, .. } => {
            let s = sol.seed();
            for (k, v) in [("A", s.a), ("B", s.b), ("C", s.c), ("x0", s.x0)] {
                resolved.insert(k.into(), json!(v));
            }
            resolved.insert("branch".into(), json!(sol.branch()));
            if sol.w0_at_infinity().is_some() {
                "E0 = f(W0) at the infinite end, so that V -> 0 there"
            } else {
                "E0 = C"
            }
        }
        Model::Rational { sol, .. } => {
            let s = sol.seed();
            resolved.insert("R".into(), json!(s.f.to_string()));
            resolved.insert("w_lo".into(), finite_or_null(s.w_range.0));
            resolved.insert("w_hi".into(), finite_or_null(s.w_range.1));
            resolved.insert("x0".into(), json!(s.x0));
            resolved.insert("w_at_x0".into(), json!(s.w_at_x0));
            resolved.insert("provenance".into(), json!(sol.provenance()));
            "E0 = R(w) - w^2 at the W0 limit of an infinite end, else at w = 0"
        }
    };
    let mut doc = json!({
        "kind": c.spec.kind,
        "label": fam.label(),
        "parameters": resolved,
        "e0": fam.e0(),
        "e0_convention": convention,
        "interval": interval_json(fam.interval()),
        "n_max": c.spec.n_max,
    });
    if let Model::Rational { excited: Some(s), .. } = &c.model {
        doc["excited_state"] = json!(s);
    }
    doc
}

pub fn spectrum_json(c: &Constructed) -> Value {
    let levels: Map<String, Value> = c.levels().into_iter().map(|(n, e)| (n.to_string(), json!(e))).collect();
    json!({ "family": c.family().label(), "levels": levels })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

pub fn cmd_construct(spec: &FamilySpec, out: &Path) -> Result<(), CliError> {
    let c = construct(spec)?;
    let export = grid_export(&c)?;
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    write(&out.join("family.json"), &pretty(&family_json(&c)))?;
    write(&out.join("states.csv"), &export.to_csv())?;
    write(&out.join("spectrum.json"), &pretty(&spectrum_json(&c)))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Residuals,
    Limits,
    Orthogonality,
    Oracle,
    All,
}

/// Oracle agreement floor. The new-potential excited state is a fitted
/// template, not an exact solution, so it is held to `10⁻³`.
fn oracle_floor(c: &Constructed) -> f64 {
    match c.model {
        Model::Quadratic { .. } => 1e-4,
        Model::Rational { .. } => 1e-3,
    }
}

pub fn run_suite(c: &Constructed, suite: Suite) -> Result<Vec<VerificationReport>, CliError> {
    let points = c.spec.points()?;
    let fam = c.family();
    let mut reports = Vec::new();
    let run = |s: Suite| suite == Suite::All || suite == s;
    if run(Suite::Residuals) {
        match &c.model {
            Model::Quadratic { sol, rungs } => reports.extend(quadratic_residuals(sol, rungs, points)),
            Model::Rational { sol, .. } => {
                let grid = CheckGrid::for_family(sol, points);
                let v = |x: f64| sol.potential(x);
                let mut r = riccati_residual(&|x| sol.w0(x), sol.e0(), &v, grid, 1e-8);
                r.check = "riccati_residual n=0".into();
                reports.push(r);
                let mut r = schrodinger_residual(&|x| sol.psi0(x), sol.e0(), &v, grid, 1e-6);
                r.check = "schrodinger_residual n=0".into();
                reports.push(r);
                let alpha = sol.seed().leading() - 1.0;
                reports.push(nonlinear_residual(&|x| sol.psi0(x), sol.e0(), &sol.seed().f, alpha, grid, 1e-6));
                if let Model::Rational { excited: Some(s), .. } = &c.model {
                    let mut r = schrodinger_residual(&|x| s.psi1(x), s.e1, &v, grid, 1e-6);
                    r.check = "schrodinger_residual n=1".into();
                    r.notes = format!("template state, kappa = {}, lambda = {}, mu = {}", s.kappa, s.lambda, s.mu);
                    reports.push(r);
                }
            }
        }
    }
    if run(Suite::Limits) {
        let kinds = match c.spec.kind {
            Kind::Oscillator => vec![LimitKind::OscillatorA0],
            Kind::Coulomb => vec![LimitKind::CoulombA1],
            Kind::Morse => vec![LimitKind::MorseA0],
            _ => vec![LimitKind::OscillatorA0, LimitKind::CoulombA1, LimitKind::MorseA0],
        };
        reports.extend(kinds.into_iter().map(limit_suite));
    }
    if run(Suite::Orthogonality) {
        let levels = c.levels();
        if levels.len() > 1 {
            let states: Vec<State<'_>> = levels.iter().map(|&(n, _)| c.state(n)).collect();
            let refs: Vec<&dyn Fn(f64) -> f64> = states.iter().map(|s| s.as_ref()).collect();
            let (lo, hi) = fam.window(0.0, 60.0);
            reports.push(orthogonality(&refs, lo, hi, 1e-7));
        }
    }
    if run(Suite::Oracle) {
        let floor = oracle_floor(c);
        for (n, e) in c.levels() {
            let psi = c.state(n);
            reports.extend(oracle_check(fam, n, e, Some(psi.as_ref()), floor, crate::oracle::DEFAULT_POINTS));
        }
    }
    Ok(reports)
}

fn hermite_states(x: f64) -> [f64; 3] {
    let g = (-0.5 * x * x).exp();
    [g, 2.0 * x * g, (4.0 * x * x - 2.0) * g]
}

/// Half-width of the Hermite–Gaussian panel.
pub const FIGURE1_GAUSS_HALF_WIDTH: f64 = 4.0;

/// `fig1a.csv`: the first three states for the given `A`; `fig1b.csv`: the
/// `A → 0` Hermite–Gaussian states. Both use the same point count.
pub fn cmd_figure1(a: f64, out: &Path, points: usize) -> Result<(), CliError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(input(format!("A must be positive, got {a}")));
    }
    let spec = FamilySpec {
        kind: Kind::Oscillator,
        parameters: BTreeMap::from([("A".to_string(), a)]),
        x0: None,
        n_max: 2,
        grid: GridSpec {
            points: Some(points),
            ..Default::default()
        },
    };
    let c = construct(&spec)?;
    let panel_a = grid_export(&c)?;
    let header = |p: &str| -> Vec<String> {
        let mut h = vec!["x".to_string()];
        h.extend((0..3).map(|n| format!("{p}{n}")));
        h
    };
    let mut cols: Vec<&[f64]> = vec![&panel_a.xs];
    cols.extend(panel_a.states.iter().map(|s| s.as_slice()));

    let l = FIGURE1_GAUSS_HALF_WIDTH;
    let xs = crate::numeric::linspace(-l, l, points);
    let dx = 2.0 * l / (points - 1) as f64;
    let mut gauss: Vec<Vec<f64>> = (0..3).map(|n| xs.iter().map(|&x| hermite_states(x)[n]).collect()).collect();
    gauss.iter_mut().for_each(|g| normalize(g, dx));
    let mut gcols: Vec<&[f64]> = vec![&xs];
    gcols.extend(gauss.iter().map(|s| s.as_slice()));

    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    write(&out.join("fig1a.csv"), &csv_table(&header("psi"), &cols))?;
    write(&out.join("fig1b.csv"), &csv_table(&header("hermite"), &gcols))?;
    Ok(())
}

#[derive(Debug, Parser)]
#[command(name = "riccati", about = "Exactly solvable potentials from Riccati seeds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a family spec and write family.json, states.csv and spectrum.json.
    Construct {
        spec: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run verification suites and print the reports as JSON.
    Verify {
        spec: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Also write the reports to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write fig1a.csv and fig1b.csv.
    Figure1 {
        #[arg(long = "A", allow_negative_numbers = true)]
        a: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn read_spec(path: &Path) -> Result<FamilySpec, CliError> {
    let text = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    FamilySpec::from_json(&text)
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Construct { spec, out } => {
            cmd_construct(&read_spec(&spec)?, &out)?;
            Ok(0)
        }
        Command::Verify { spec, suite, report } => {
            let c = construct(&read_spec(&spec)?)?;
            let reports = run_suite(&c, suite)?;
            let text = pretty(&reports);
            print!("{text}");
            if let Some(path) = report {
                write(&path, &text)?;
            }
            let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.check.as_str()).collect();
            if failed.is_empty() {
                Ok(0)
            } else {
                let mut msg = String::from("failed checks:");
                for f in failed {
                    let _ = write!(msg, " {f};");
                }
                eprintln!("{msg}");
                Ok(1)
            }
        }
        Command::Figure1 { a, out } => {
            cmd_figure1(a, &out, env_points()?)?;
            Ok(0)
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
