//! Ablowitz-Ladik lattice flows along `τ = t1 + s1 − t0 − s0`.
//!
//! Left system (variables `x^l`, `y^r`):
//!
//! ```text
//! ∂x_k =  x_{k+1} − 2x_k + x_{k−1} − x_{k+1} y_k x_k − x_k y_k x_{k−1}
//! ∂y_k = −y_{k+1} + 2y_k − y_{k−1} + y_{k+1} x_k y_k + y_k x_k y_{k−1}
//! ```
//!
//! Right system (variables `x^r`, `y^l`):
//!
//! ```text
//! ∂x_k =  x_{k+1} − 2x_k + x_{k−1} − x_{k−1} y_k x_k − x_k y_k x_{k+1}
//! ∂y_k = −y_{k+1} + 2y_k − y_{k−1} + y_{k−1} x_k y_k + y_k x_k y_{k+1}
//! ```
//!
//! The scalar system is the commutative specialization, computed separately.
//!
//! Site 0 carries the degree-0 coefficients. The rescaling times act on it, so
//! it follows `∂x_0 = −2x_0`, `∂y_0 = 2y_0` (starting from `I`, `x_0 y_0 = I` is kept).
//! Sites past `K` are zero or supplied by the moment oracle.
//!
//! The exact solution used as reference: evolve the symbol with `t = s = (τ)`,
//! read off the reflection coefficients and rescale by `e^{−2τ}` / `e^{2τ}`.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::{MatrixLaurentSeries, TimeVector};
use crate::lax::evolved_family;
use crate::linalg::{dagger, dist, identity, zeros, CMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeSystem {
    Scalar,
    /// `(x^l, y^r)`
    Left,
    /// `(x^r, y^l)`
    Right,
}

impl LatticeSystem {
    pub fn label(self) -> &'static str {
        match self {
            LatticeSystem::Scalar => "scalar",
            LatticeSystem::Left => "left",
            LatticeSystem::Right => "right",
        }
    }
}

impl std::str::FromStr for LatticeSystem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scalar" => Ok(LatticeSystem::Scalar),
            "left" => Ok(LatticeSystem::Left),
            "right" => Ok(LatticeSystem::Right),
            other => Err(Error::InvalidArgument(format!("unknown lattice system '{other}'"))),
        }
    }
}

/// Values used for the site `K + 1` just past the truncated lattice.
#[derive(Debug, Clone, PartialEq)]
pub enum TopBoundary {
    ZeroPadding,
    /// Exact values from the moment oracle of this symbol.
    Oracle(MatrixLaurentSeries),
}

impl TopBoundary {
    pub fn label(&self) -> &'static str {
        match self {
            TopBoundary::ZeroPadding => "zero",
            TopBoundary::Oracle(_) => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    system: LatticeSystem,
    n: usize,
    /// Sites `0 ..= K`.
    x: Vec<CMat>,
    y: Vec<CMat>,
    tau: f64,
}

impl LatticeState {
    pub fn new(system: LatticeSystem, x: Vec<CMat>, y: Vec<CMat>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch(format!("{} x-sites but {} y-sites", x.len(), y.len())));
        }
        if x.len() < 3 {
            return Err(Error::InvalidArgument("a lattice needs K >= 2".into()));
        }
        let n = x[0].nrows();
        if x.iter().chain(&y).any(|m| m.nrows() != n || m.ncols() != n) {
            return Err(Error::DimensionMismatch("lattice blocks must all be n x n".into()));
        }
        if system == LatticeSystem::Scalar && n != 1 {
            return Err(Error::DimensionMismatch("the scalar system needs n = 1".into()));
        }
        Ok(LatticeState { system, n, x, y, tau: 0.0 })
    }

    /// Sites `0 ..= k_max` of a reflection sequence.
    pub fn from_reflections(refl: &crate::biorth::Reflections, system: LatticeSystem, k_max: usize) -> Result<Self> {
        if refl.len() <= k_max {
            return Err(Error::InvalidArgument(format!("reflection data stops before site {k_max}")));
        }
        let (x, y) = match system {
            LatticeSystem::Scalar | LatticeSystem::Left => (&refl.xl, &refl.yr),
            LatticeSystem::Right => (&refl.xr, &refl.yl),
        };
        Self::new(system, x[..=k_max].to_vec(), y[..=k_max].to_vec())
    }

    /// Scalar state from complex site values, `x_0 = y_0 = 1`.
    pub fn scalar(x: &[Complex64], y: &[Complex64]) -> Result<Self> {
        let one = |v: &Complex64| CMat::from_element(1, 1, *v);
        let mut xs = vec![identity(1)];
        let mut ys = vec![identity(1)];
        xs.extend(x.iter().map(one));
        ys.extend(y.iter().map(one));
        Self::new(LatticeSystem::Scalar, xs, ys)
    }

    pub fn system(&self) -> LatticeSystem {
        self.system
    }
    pub fn block_size(&self) -> usize {
        self.n
    }
    /// Index of the last site, `K`.
    pub fn sites(&self) -> usize {
        self.x.len() - 1
    }
    pub fn x(&self, k: usize) -> &CMat {
        &self.x[k]
    }
    pub fn y(&self, k: usize) -> &CMat {
        &self.y[k]
    }
    pub fn xs(&self) -> &[CMat] {
        &self.x
    }
    pub fn ys(&self) -> &[CMat] {
        &self.y
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn with_system(&self, system: LatticeSystem) -> Result<Self> {
        let mut s = Self::new(system, self.x.clone(), self.y.clone())?;
        s.tau = self.tau;
        Ok(s)
    }

    /// `(x, y) ↦ (λ x, λ⁻¹ y)` on every site.
    pub fn gauged(&self, lambda: Complex64) -> Self {
        let inv = Complex64::new(1.0, 0.0) / lambda;
        LatticeState {
            x: self.x.iter().map(|m| m * lambda).collect(),
            y: self.y.iter().map(|m| m * inv).collect(),
            ..self.clone()
        }
    }

    /// `max_k max(‖Δx_k‖, ‖Δy_k‖)` over `sites`.
    pub fn max_diff_on(&self, other: &LatticeState, sites: std::ops::RangeInclusive<usize>) -> f64 {
        sites
            .map(|k| dist(&self.x[k], &other.x[k]).max(dist(&self.y[k], &other.y[k])))
            .fold(0.0, f64::max)
    }
}

/// `τ`-derivative of a lattice state.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDerivative {
    pub dx: Vec<CMat>,
    pub dy: Vec<CMat>,
}

/// Right-hand side with zero padding past the last site.
pub fn al_rhs(state: &LatticeState) -> LatticeDerivative {
    let o = zeros(state.n, state.n);
    al_rhs_with_top(state, &o, &o)
}

/// Right-hand side with explicit values `x_{K+1}`, `y_{K+1}`.
pub fn al_rhs_with_top(state: &LatticeState, top_x: &CMat, top_y: &CMat) -> LatticeDerivative {
    let (dx, dy) = lattice_rhs(state.system, &state.x, &state.y, top_x, top_y);
    LatticeDerivative { dx, dy }
}

fn lattice_rhs(system: LatticeSystem, x: &[CMat], y: &[CMat], top_x: &CMat, top_y: &CMat) -> (Vec<CMat>, Vec<CMat>) {
    let k_max = x.len() - 1;
    let at = |v: &[CMat], top: &CMat, k: usize| -> CMat { if k > k_max { top.clone() } else { v[k].clone() } };
    let mut dx = Vec::with_capacity(k_max + 1);
    let mut dy = Vec::with_capacity(k_max + 1);
    dx.push(&x[0] * Complex64::new(-2.0, 0.0));
    dy.push(&y[0] * Complex64::new(2.0, 0.0));
    for k in 1..=k_max {
        let (xm, xk, xp) = (&x[k - 1], &x[k], at(x, top_x, k + 1));
        let (ym, yk, yp) = (&y[k - 1], &y[k], at(y, top_y, k + 1));
        let lap_x = &xp - xk * Complex64::new(2.0, 0.0) + xm;
        let lap_y = &yp - yk * Complex64::new(2.0, 0.0) + ym;
        let (fx, fy) = match system {
            LatticeSystem::Scalar => {
                let (xs, ys) = (xk[(0, 0)], yk[(0, 0)]);
                let xy = xs * ys;
                let fx = lap_x[(0, 0)] - xy * (xp[(0, 0)] + xm[(0, 0)]);
                let fy = -lap_y[(0, 0)] + xy * (yp[(0, 0)] + ym[(0, 0)]);
                (CMat::from_element(1, 1, fx), CMat::from_element(1, 1, fy))
            }
            LatticeSystem::Left => (
                lap_x - &xp * yk * xk - xk * yk * xm,
                -lap_y + &yp * xk * yk + yk * xk * ym,
            ),
            LatticeSystem::Right => (
                lap_x - xm * yk * xk - xk * yk * &xp,
                -lap_y + ym * xk * yk + yk * xk * &yp,
            ),
        };
        dx.push(fx);
        dy.push(fy);
    }
    (dx, dy)
}

/// Fixed-step RK4 settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Integrator {
    pub step: f64,
    /// The flow is integrated as `du/dτ = c · F(u)`. `c = i` runs the imaginary-time flow.
    pub time_factor: Complex64,
    pub boundary: TopBoundary,
    /// Record every `record_every`-th step (the final state is always recorded).
    pub record_every: usize,
}

impl Integrator {
    pub fn new(step: f64) -> Self {
        Integrator {
            step,
            time_factor: Complex64::new(1.0, 0.0),
            boundary: TopBoundary::ZeroPadding,
            record_every: usize::MAX,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::StepNotPositive(self.step));
        }
        Ok(())
    }

    /// `(full steps, trailing partial step)` covering `[0, tau_end]`.
    fn schedule(&self, tau_end: f64) -> (usize, f64) {
        let full = (tau_end / self.step + 1e-9).floor() as usize;
        let rest = tau_end - full as f64 * self.step;
        (full, if rest > 1e-12 * self.step { rest } else { 0.0 })
    }
}

/// Recorded states of an integration, starting with the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<LatticeState>,
}

impl Trajectory {
    pub fn last(&self) -> &LatticeState {
        self.samples.last().expect("a trajectory always holds the initial state")
    }

    /// Text dump, one row per `(τ, k)`: `tau,k` then real/imaginary parts of the
    /// `x` block and the `y` block in row-major order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let first = &self.samples[0];
        let n = first.n;
        writeln!(w, "# lattice trajectory")?;
        writeln!(w, "# system={} n={} sites={}", first.system.label(), n, first.sites())?;
        let mut cols = vec!["tau".to_string(), "k".to_string()];
        for f in ["x", "y"] {
            for i in 0..n {
                for j in 0..n {
                    cols.push(format!("{f}{i}{j}_re"));
                    cols.push(format!("{f}{i}{j}_im"));
                }
            }
        }
        writeln!(w, "{}", cols.join(","))?;
        for s in &self.samples {
            for k in 0..=s.sites() {
                let mut row = vec![format!("{:.12e}", s.tau), k.to_string()];
                for m in [&s.x[k], &s.y[k]] {
                    for i in 0..n {
                        for j in 0..n {
                            row.push(format!("{:.16e}", m[(i, j)].re));
                            row.push(format!("{:.16e}", m[(i, j)].im));
                        }
                    }
                }
                writeln!(w, "{}", row.join(","))?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Trajectory> {
        let bad = |m: &str| Error::InvalidArgument(format!("trajectory file: {m}"));
        let mut system = None;
        let mut n = 0usize;
        let mut samples: Vec<LatticeState> = vec![];
        let mut cur: Option<(f64, Vec<CMat>, Vec<CMat>)> = None;
        let mut header_seen = false;
        let mut flush = |cur: &mut Option<(f64, Vec<CMat>, Vec<CMat>)>, system: LatticeSystem| -> Result<()> {
            if let Some((tau, x, y)) = cur.take() {
                let mut s = LatticeState::new(system, x, y)?;
                s.tau = tau;
                samples.push(s);
            }
            Ok(())
        };
        for line in r.lines() {
            let line = line.map_err(|e| bad(&e.to_string()))?;
            if let Some(meta) = line.strip_prefix("# ") {
                for kv in meta.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("system", v)) => system = Some(v.parse::<LatticeSystem>()?),
                        Some(("n", v)) => n = v.parse().map_err(|_| bad("n"))?,
                        _ => {}
                    }
                }
                continue;
            }
            if !header_seen {
                header_seen = true;
                continue;
            }
            let system = system.ok_or_else(|| bad("missing system line"))?;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 2 + 4 * n * n {
                return Err(bad("wrong column count"));
            }
            let tau: f64 = f[0].parse().map_err(|_| bad("tau"))?;
            let k: usize = f[1].parse().map_err(|_| bad("k"))?;
            let num = |i: usize| -> Result<f64> { f[i].parse().map_err(|_| bad("number")) };
            let mut blocks = [zeros(n, n), zeros(n, n)];
            let mut c = 2;
            for b in blocks.iter_mut() {
                for i in 0..n {
                    for j in 0..n {
                        b[(i, j)] = Complex64::new(num(c)?, num(c + 1)?);
                        c += 2;
                    }
                }
            }
            if k == 0 {
                flush(&mut cur, system)?;
                cur = Some((tau, vec![], vec![]));
            }
            let (_, x, y) = cur.as_mut().ok_or_else(|| bad("rows must start at k = 0"))?;
            if x.len() != k {
                return Err(bad("sites out of order"));
            }
            let [bx, by] = blocks;
            x.push(bx);
            y.push(by);
        }
        let system = system.ok_or_else(|| bad("missing system line"))?;
        flush(&mut cur, system)?;
        if samples.is_empty() {
            return Err(bad("no samples"));
        }
        Ok(Trajectory { samples })
    }
}

type Fields = Vec<CMat>;

/// One classical RK4 step of `du/dτ = f(τ, u)`.
fn rk4_step(u: &[CMat], tau: f64, h: f64, f: &dyn Fn(f64, &[CMat]) -> Result<Fields>) -> Result<Fields> {
    let axpy = |a: &[CMat], b: &[CMat], c: f64| -> Fields {
        let c = Complex64::new(c, 0.0);
        a.iter().zip(b).map(|(a, b)| a + b * c).collect()
    };
    let k1 = f(tau, u)?;
    let k2 = f(tau + h / 2.0, &axpy(u, &k1, h / 2.0))?;
    let k3 = f(tau + h / 2.0, &axpy(u, &k2, h / 2.0))?;
    let k4 = f(tau + h, &axpy(u, &k3, h))?;
    let w = Complex64::new(h / 6.0, 0.0);
    Ok((0..u.len())
        .map(|i| &u[i] + (&k1[i] + &k2[i] * Complex64::new(2.0, 0.0) + &k3[i] * Complex64::new(2.0, 0.0) + &k4[i]) * w)
        .collect())
}

fn run(
    u0: Fields,
    tau_end: f64,
    cfg: &Integrator,
    f: &dyn Fn(f64, &[CMat]) -> Result<Fields>,
    mut record: impl FnMut(f64, &[CMat]) -> Result<()>,
) -> Result<Fields> {
    cfg.check()?;
    if !(tau_end >= 0.0 && tau_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("integration end {tau_end} must be finite and >= 0")));
    }
    let (full, rest) = cfg.schedule(tau_end);
    let mut u = u0;
    let mut tau = 0.0;
    for i in 0..full {
        u = rk4_step(&u, tau, cfg.step, f)?;
        tau = (i + 1) as f64 * cfg.step;
        if (i + 1) % cfg.record_every.max(1) == 0 && !(i + 1 == full && rest == 0.0) {
            record(tau, &u)?;
        }
    }
    if rest > 0.0 {
        u = rk4_step(&u, tau, rest, f)?;
    }
    record(tau_end, &u)?;
    Ok(u)
}

fn top_values(boundary: &TopBoundary, system: LatticeSystem, site: usize, n: usize, tau: Complex64) -> Result<(CMat, CMat)> {
    match boundary {
        TopBoundary::ZeroPadding => Ok((zeros(n, n), zeros(n, n))),
        TopBoundary::Oracle(g) => {
            let s = moment_oracle_complex(g, tau, site, system)?;
            Ok((s.x[site].clone(), s.y[site].clone()))
        }
    }
}

/// RK4 trajectory from `state0` up to `tau_end`.
pub fn integrate(state0: &LatticeState, tau_end: f64, cfg: &Integrator) -> Result<Trajectory> {
    let sites = state0.x.len();
    let (system, n) = (state0.system, state0.n);
    let c = cfg.time_factor;
    let f = |tau: f64, u: &[CMat]| -> Result<Fields> {
        let (tx, ty) = top_values(&cfg.boundary, system, sites, n, c * tau)?;
        let (dx, dy) = lattice_rhs(system, &u[..sites], &u[sites..], &tx, &ty);
        Ok(dx.into_iter().chain(dy).map(|m| m * c).collect())
    };
    let u0: Fields = state0.x.iter().chain(&state0.y).cloned().collect();
    let mut samples = vec![state0.clone()];
    let make = |tau: f64, u: &[CMat]| LatticeState {
        system,
        n,
        x: u[..sites].to_vec(),
        y: u[sites..].to_vec(),
        tau,
    };
    run(u0, tau_end, cfg, &f, |tau, u| {
        samples.push(make(tau, u));
        Ok(())
    })?;
    Ok(Trajectory { samples })
}

/// Exact state at time `τ`: sites `0 ..= k_max`.
pub fn moment_oracle(gamma0: &MatrixLaurentSeries, tau: f64, k_max: usize, system: LatticeSystem) -> Result<LatticeState> {
    moment_oracle_complex(gamma0, Complex64::new(tau, 0.0), k_max, system)
}

/// Moment oracle at complex time (the symbol evolution is entire in `t`, `s`).
pub fn moment_oracle_complex(
    gamma0: &MatrixLaurentSeries,
    tau: Complex64,
    k_max: usize,
    system: LatticeSystem,
) -> Result<LatticeState> {
    if system == LatticeSystem::Scalar && gamma0.block_size() != 1 {
        return Err(Error::DimensionMismatch("the scalar system needs n = 1".into()));
    }
    let t = TimeVector::new(vec![tau])?;
    let fam = evolved_family(gamma0, &t, &t, k_max)?;
    let refl = fam.reflections().gauged((-2.0 * tau).exp());
    let mut s = LatticeState::from_reflections(&refl, system, k_max)?;
    s.tau = tau.re;
    Ok(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct SiteError {
    pub k: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowReport {
    pub system: LatticeSystem,
    pub n: usize,
    pub tau_end: f64,
    pub step: f64,
    pub sites: usize,
    pub buffer: usize,
    pub boundary: String,
    pub per_site: Vec<SiteError>,
    pub max_error: f64,
    /// Seconds spent; left out of serialized reports so they stay reproducible.
    #[serde(skip)]
    pub wall_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareSettings {
    pub tau_end: f64,
    pub step: f64,
    pub sites: usize,
    pub buffer: usize,
    pub boundary: TopBoundary,
}

impl CompareSettings {
    pub fn new(tau_end: f64, step: f64, sites: usize, buffer: usize) -> Self {
        CompareSettings {
            tau_end,
            step,
            sites,
            buffer,
            boundary: TopBoundary::ZeroPadding,
        }
    }
}

struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Stopwatch {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn seconds(&self) -> Option<f64> {
        #[cfg(not(target_arch = "wasm32"))]
        {
            Some(self.start.elapsed().as_secs_f64())
        }
        #[cfg(target_arch = "wasm32")]
        {
            None
        }
    }
}

/// Integrate the truncated lattice from the exact initial data and compare
/// sites `1 ..= K − buffer` with the oracle at `tau_end`.
pub fn compare_flow_vs_oracle(
    gamma0: &MatrixLaurentSeries,
    system: LatticeSystem,
    cfg: &CompareSettings,
) -> Result<FlowReport> {
    let watch = Stopwatch::start();
    if cfg.sites < cfg.buffer + 2 {
        return Err(Error::InvalidArgument(format!(
            "{} sites leave fewer than 2 outside a buffer of {}",
            cfg.sites, cfg.buffer
        )));
    }
    let start = moment_oracle(gamma0, 0.0, cfg.sites, system)?;
    let integ = Integrator {
        boundary: cfg.boundary.clone(),
        ..Integrator::new(cfg.step)
    };
    let end = integrate(&start, cfg.tau_end, &integ)?.last().clone();
    let exact = moment_oracle(gamma0, cfg.tau_end, cfg.sites, system)?;
    let per_site: Vec<SiteError> = (1..=cfg.sites - cfg.buffer)
        .map(|k| SiteError {
            k,
            x: dist(&end.x[k], &exact.x[k]),
            y: dist(&end.y[k], &exact.y[k]),
        })
        .collect();
    let max_error = per_site.iter().map(|e| e.x.max(e.y)).fold(0.0, f64::max);
    Ok(FlowReport {
        system,
        n: gamma0.block_size(),
        tau_end: cfg.tau_end,
        step: cfg.step,
        sites: cfg.sites,
        buffer: cfg.buffer,
        boundary: cfg.boundary.label().to_string(),
        per_site,
        max_error,
        wall_time: watch.seconds(),
    })
}

/// Oracle comparison at `step` and `step / 2`.
#[derive(Debug, Clone, Serialize)]
pub struct StepHalving {
    pub coarse: FlowReport,
    pub fine: FlowReport,
    /// `coarse.max_error / fine.max_error`
    pub improvement: f64,
}

pub fn step_halving(gamma0: &MatrixLaurentSeries, system: LatticeSystem, cfg: &CompareSettings) -> Result<StepHalving> {
    let coarse = compare_flow_vs_oracle(gamma0, system, cfg)?;
    let half = CompareSettings {
        step: cfg.step / 2.0,
        ..cfg.clone()
    };
    let fine = compare_flow_vs_oracle(gamma0, system, &half)?;
    let improvement = coarse.max_error / fine.max_error;
    Ok(StepHalving {
        coarse,
        fine,
        improvement,
    })
}

/// `max_k ‖al_rhs − ∂_τ oracle‖` at `τ = 0` over sites `0 ..= K − 1`,
/// with the derivative taken by central differences of step `eps`.
pub fn oracle_consistency(gamma0: &MatrixLaurentSeries, system: LatticeSystem, k_max: usize, eps: f64) -> Result<f64> {
    let s0 = moment_oracle(gamma0, 0.0, k_max, system)?;
    let plus = moment_oracle(gamma0, eps, k_max, system)?;
    let minus = moment_oracle(gamma0, -eps, k_max, system)?;
    let d = al_rhs(&s0);
    let h = Complex64::new(2.0 * eps, 0.0);
    let mut worst = 0.0f64;
    for k in 0..k_max {
        worst = worst
            .max(dist(&d.dx[k], &((&plus.x[k] - &minus.x[k]) / h)))
            .max(dist(&d.dy[k], &((&plus.y[k] - &minus.y[k]) / h)));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReductionSign {
    Plus,
    Minus,
}

impl ReductionSign {
    pub fn value(self) -> f64 {
        match self {
            ReductionSign::Plus => 1.0,
            ReductionSign::Minus => -1.0,
        }
    }
}

/// Initial data for the imaginary-time check.
///
/// Scalar: one state with `y_k = σ x̄_k`. Matrix: the left state `(x^l, y^r)` and
/// the right state `(x^r, y^l)` with `y^r = σ (x^r)†`, `y^l = σ (x^l)†`; the
/// reduction ties the two systems together.
#[derive(Debug, Clone, PartialEq)]
pub enum HermitianData {
    Scalar(LatticeState),
    Matrix { left: LatticeState, right: LatticeState },
}

impl HermitianData {
    /// Scalar data `x_0 = 1`, `y_0 = σ`, `y_k = σ x̄_k`.
    pub fn scalar(x: &[Complex64], sign: ReductionSign) -> Result<Self> {
        let s = sign.value();
        let mut xs = vec![identity(1)];
        xs.extend(x.iter().map(|v| CMat::from_element(1, 1, *v)));
        let ys = xs.iter().map(|m| dagger(m) * Complex64::new(s, 0.0)).collect();
        Ok(HermitianData::Scalar(LatticeState::new(LatticeSystem::Scalar, xs, ys)?))
    }

    /// Matrix data from `x^l_k`, `x^r_k` for `k >= 1`; site 0 is `x_0 = I`, `y_0 = σ I`.
    pub fn matrix(xl: &[CMat], xr: &[CMat], sign: ReductionSign) -> Result<Self> {
        let n = xl.first().map_or(0, |m| m.nrows());
        let s = Complex64::new(sign.value(), 0.0);
        let with0 = |v: &[CMat]| -> Vec<CMat> { std::iter::once(identity(n)).chain(v.iter().cloned()).collect() };
        let (xl, xr) = (with0(xl), with0(xr));
        let yr = xr.iter().map(|m| dagger(m) * s).collect();
        let yl = xl.iter().map(|m| dagger(m) * s).collect();
        Ok(HermitianData::Matrix {
            left: LatticeState::new(LatticeSystem::Left, xl, yr)?,
            right: LatticeState::new(LatticeSystem::Right, xr, yl)?,
        })
    }

    fn deviation(&self, sign: ReductionSign) -> f64 {
        let s = Complex64::new(sign.value(), 0.0);
        let dev = |y: &[CMat], x: &[CMat]| {
            y.iter()
                .zip(x)
                .map(|(y, x)| dist(y, &(dagger(x) * s)))
                .fold(0.0, f64::max)
        };
        match self {
            HermitianData::Scalar(st) => dev(&st.y, &st.x),
            HermitianData::Matrix { left, right } => dev(&left.y, &right.x).max(dev(&right.y, &left.x)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HermitianReport {
    pub sign: ReductionSign,
    pub n: usize,
    pub tau_end: f64,
    pub step: f64,
    /// Largest `‖y_k − σ x_k†‖` over all sites and recorded times.
    pub max_deviation: f64,
    /// Largest distance between the complexified `x` and the `x` of the reduced system.
    pub reduced_form_gap: f64,
    #[serde(skip)]
    pub wall_time: Option<f64>,
}

/// Integrate `dx/dτ = i F(x, y)` and track the constraint `y = σ x†`.
///
/// The reduced system (only `x`, with `y` replaced by `σ x†` inside `F`) is
/// integrated alongside as a second, independent path.
pub fn hermitian_check(data: &HermitianData, sign: ReductionSign, tau_end: f64, step: f64) -> Result<HermitianReport> {
    let watch = Stopwatch::start();
    let start = data.deviation(sign);
    if start > 1e-12 {
        return Err(Error::ReductionViolatedAtStart(start));
    }
    let integ = Integrator {
        time_factor: Complex64::new(0.0, 1.0),
        record_every: 1,
        ..Integrator::new(step)
    };
    let i = Complex64::new(0.0, 1.0);
    let s = Complex64::new(sign.value(), 0.0);
    let conj_all = |v: &[CMat]| -> Vec<CMat> { v.iter().map(|m| dagger(m) * s).collect() };

    let (max_deviation, reduced_form_gap, n) = match data {
        HermitianData::Scalar(st) => {
            let traj = integrate(st, tau_end, &integ)?;
            let dev = traj
                .samples
                .iter()
                .map(|x| HermitianData::Scalar(x.clone()).deviation(sign))
                .fold(0.0, f64::max);
            let o = zeros(1, 1);
            let f = |_: f64, u: &[CMat]| -> Result<Fields> {
                let (dx, _) = lattice_rhs(LatticeSystem::Scalar, u, &conj_all(u), &o, &o);
                Ok(dx.into_iter().map(|m| m * i).collect())
            };
            let reduced = run(st.x.clone(), tau_end, &integ, &f, |_, _| Ok(()))?;
            let gap = reduced
                .iter()
                .zip(&traj.last().x)
                .map(|(a, b)| dist(a, b))
                .fold(0.0, f64::max);
            (dev, gap, 1)
        }
        HermitianData::Matrix { left, right } => {
            let tl = integrate(left, tau_end, &integ)?;
            let tr = integrate(right, tau_end, &integ)?;
            let dev = tl
                .samples
                .iter()
                .zip(&tr.samples)
                .map(|(l, r)| {
                    HermitianData::Matrix {
                        left: l.clone(),
                        right: r.clone(),
                    }
                    .deviation(sign)
                })
                .fold(0.0, f64::max);
            let sites = left.x.len();
            let n = left.n;
            let o = zeros(n, n);
            let f = |_: f64, u: &[CMat]| -> Result<Fields> {
                let (xl, xr) = (&u[..sites], &u[sites..]);
                let (dxl, _) = lattice_rhs(LatticeSystem::Left, xl, &conj_all(xr), &o, &o);
                let (dxr, _) = lattice_rhs(LatticeSystem::Right, xr, &conj_all(xl), &o, &o);
                Ok(dxl.into_iter().chain(dxr).map(|m| m * i).collect())
            };
            let u0: Fields = left.x.iter().chain(&right.x).cloned().collect();
            let reduced = run(u0, tau_end, &integ, &f, |_, _| Ok(()))?;
            let full: Vec<&CMat> = tl.last().x.iter().chain(&tr.last().x).collect();
            let gap = reduced
                .iter()
                .zip(full)
                .map(|(a, b)| dist(a, b))
                .fold(0.0, f64::max);
            (dev, gap, n)
        }
    };
    Ok(HermitianReport {
        sign,
        n,
        tau_end,
        step,
        max_deviation,
        reduced_form_gap,
        wall_time: watch.seconds(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples::{random_symbol, tridiagonal_scalar};

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    fn constant_scalar(k: usize, x: f64, y: f64) -> LatticeState {
        LatticeState::scalar(&vec![c(x); k], &vec![c(y); k]).unwrap()
    }

    #[test]
    fn zero_interior_is_stationary_away_from_site_one() {
        let s = constant_scalar(8, 0.0, 0.0);
        let d = al_rhs(&s);
        for k in 2..=8 {
            assert_eq!(d.dx[k][(0, 0)], c(0.0));
            assert_eq!(d.dy[k][(0, 0)], c(0.0));
        }
        assert_eq!(d.dx[1][(0, 0)], c(1.0));
        assert_eq!(d.dx[0][(0, 0)], c(-2.0));
    }

    #[test]
    fn constant_scalar_interior() {
        let d = al_rhs(&constant_scalar(8, 0.1, 0.2));
        for k in 2..8 {
            assert!((d.dx[k][(0, 0)] - c(-0.004)).norm() < 1e-15);
            assert!((d.dy[k][(0, 0)] - c(0.008)).norm() < 1e-15);
        }
    }

    #[test]
    fn constant_matrix_interior() {
        let xm = CMat::from_row_slice(2, 2, &[c(0.1), c(0.2), c(-0.1), c(0.05)]);
        let ym = CMat::from_row_slice(2, 2, &[c(0.3), c(0.0), c(0.1), c(-0.2)]);
        let mut xs = vec![identity(2)];
        let mut ys = vec![identity(2)];
        xs.extend(vec![xm.clone(); 8]);
        ys.extend(vec![ym.clone(); 8]);
        let s = LatticeState::new(LatticeSystem::Left, xs, ys).unwrap();
        let d = al_rhs(&s);
        let want = -(&xm * &ym * &xm) * c(2.0);
        for k in 2..8 {
            assert!(dist(&d.dx[k], &want) < 1e-15);
        }
    }

    #[test]
    fn bad_steps_rejected() {
        let s = constant_scalar(4, 0.0, 0.0);
        for h in [0.0, -1e-3, f64::NAN] {
            assert!(matches!(integrate(&s, 0.1, &Integrator::new(h)), Err(Error::StepNotPositive(_))));
        }
    }

    #[test]
    fn partial_last_step_lands_on_end() {
        let s = constant_scalar(4, 0.1, 0.1);
        let t = integrate(&s, 0.1, &Integrator::new(0.03)).unwrap();
        assert!((t.last().tau() - 0.1).abs() < 1e-15);
        let exact_steps = integrate(&s, 0.09, &Integrator::new(0.03)).unwrap();
        assert!((exact_steps.last().tau() - 0.09).abs() < 1e-15);
    }

    #[test]
    fn oracle_at_zero_reproduces_family() {
        let g = tridiagonal_scalar(1);
        let s = moment_oracle(&g, 0.0, 4, LatticeSystem::Scalar).unwrap();
        assert!((s.x(1)[(0, 0)] - c(-0.2)).norm() < 1e-15);
        assert!((s.x(2)[(0, 0)] - c(1.0 / 24.0)).norm() < 1e-15);
    }

    #[test]
    fn scalar_flow_matches_oracle() {
        let g = tridiagonal_scalar(1);
        let r = compare_flow_vs_oracle(&g, LatticeSystem::Scalar, &CompareSettings::new(0.1, 1e-3, 16, 6)).unwrap();
        assert!(r.max_error <= 1e-6, "{}", r.max_error);
        let k1 = moment_oracle(&g, 0.05, 3, LatticeSystem::Scalar).unwrap();
        let s0 = moment_oracle(&g, 0.0, 16, LatticeSystem::Scalar).unwrap();
        let rk = integrate(&s0, 0.05, &Integrator::new(1e-3)).unwrap();
        assert!(dist(rk.last().x(1), k1.x(1)) < 1e-7);
    }

    #[test]
    fn identity_symbol_trajectory_matches_oracle() {
        let g = MatrixLaurentSeries::identity(2);
        let r = compare_flow_vs_oracle(&g, LatticeSystem::Left, &CompareSettings::new(0.1, 1e-3, 12, 6)).unwrap();
        assert!(r.max_error < 1e-9, "{}", r.max_error);
    }

    #[test]
    fn oracle_boundary_tracks_oracle() {
        let g = random_symbol(1, 2);
        let cfg = CompareSettings {
            boundary: TopBoundary::Oracle(g.clone()),
            ..CompareSettings::new(0.1, 1e-2, 8, 0)
        };
        let r = compare_flow_vs_oracle(&g, LatticeSystem::Right, &cfg).unwrap();
        assert!(r.max_error < 1e-8, "{}", r.max_error);
    }

    #[test]
    fn consistency_at_time_zero() {
        for (g, sys) in [
            (tridiagonal_scalar(1), LatticeSystem::Scalar),
            (random_symbol(2, 1), LatticeSystem::Left),
            (random_symbol(2, 1), LatticeSystem::Right),
        ] {
            assert!(oracle_consistency(&g, sys, 8, 1e-4).unwrap() < 1e-7);
        }
    }

    #[test]
    fn scalar_and_block_systems_coincide_for_n_one() {
        let g = random_symbol(1, 17);
        let s0 = moment_oracle(&g, 0.0, 10, LatticeSystem::Scalar).unwrap();
        let integ = Integrator::new(1e-2);
        let a = integrate(&s0, 0.1, &integ).unwrap();
        let b = integrate(&s0.with_system(LatticeSystem::Left).unwrap(), 0.1, &integ).unwrap();
        let c = integrate(&s0.with_system(LatticeSystem::Right).unwrap(), 0.1, &integ).unwrap();
        assert!(a.last().max_diff_on(b.last(), 0..=10) < 1e-12);
        assert!(a.last().max_diff_on(c.last(), 0..=10) < 1e-12);
    }

    #[test]
    fn hermitian_examples() {
        for sign in [ReductionSign::Plus, ReductionSign::Minus] {
            let zero = HermitianData::scalar(&[c(0.0); 8], sign).unwrap();
            let r = hermitian_check(&zero, sign, 0.1, 1e-3).unwrap();
            assert!(r.max_deviation < 1e-14);
            let d = HermitianData::scalar(&[c(0.1); 12], sign).unwrap();
            let r = hermitian_check(&d, sign, 0.1, 1e-3).unwrap();
            assert!(r.max_deviation <= 1e-8 && r.reduced_form_gap <= 1e-8, "{r:?}");
            let x = vec![identity(2) * c(0.1); 12];
            let d = HermitianData::matrix(&x, &x, sign).unwrap();
            let r = hermitian_check(&d, sign, 0.1, 1e-3).unwrap();
            assert!(r.max_deviation <= 1e-8 && r.reduced_form_gap <= 1e-8, "{r:?}");
        }
    }

    #[test]
    fn violated_reduction_rejected() {
        let s = constant_scalar(6, 0.1, 0.3);
        let r = hermitian_check(&HermitianData::Scalar(s), ReductionSign::Plus, 0.1, 1e-3);
        assert!(matches!(r, Err(Error::ReductionViolatedAtStart(_))));
    }

    #[test]
    fn csv_round_trip() {
        let g = random_symbol(2, 3);
        let s0 = moment_oracle(&g, 0.0, 4, LatticeSystem::Right).unwrap();
        let integ = Integrator {
            record_every: 2,
            ..Integrator::new(0.01)
        };
        let t = integrate(&s0, 0.05, &integ).unwrap();
        assert_eq!(t.samples.len(), 4);
        let mut buf = vec![];
        t.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("# lattice trajectory\n"));
        let back = Trajectory::read_csv(&buf[..]).unwrap();
        assert_eq!(back.samples.len(), t.samples.len());
        for (a, b) in back.samples.iter().zip(&t.samples) {
            assert!(a.max_diff_on(b, 0..=4) < 1e-15);
            assert!((a.tau() - b.tau()).abs() < 1e-12);
        }
    }
}
