//! The `tlat` command line: config-driven factorization, verification and flow runs.
//!
//! Exit codes: 0 every check passed, 1 some check failed, 2 configuration or
//! I/O problem, 3 the symbol is not factorizable to the requested degree.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use crate::biorth::{biorth_family, biorthonormality_residual, recursion_residuals, ts_dual_check, BiorthFamily, Recursion};
use crate::error::Error;
use crate::flows::{
    hermitian_check, integrate, moment_oracle, step_halving, CompareSettings, HermitianData, Integrator, TopBoundary,
};
use crate::laurent::{MatrixLaurentSeries, Side};
use crate::lax::{eigen_residual, lax_from_reflections, lax_section, zero_curvature_convergence, LaxKind};
use crate::linalg::{identity, CMat};
use crate::samples::random_symbol;

pub use config::{BoundaryChoice, ConfigError, RunConfig, Tolerances};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tlat", about = "Block Toeplitz lattice: factorizations, identities and flows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `out` in the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Factor applied to every absolute tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub tolerance_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Reflection coefficients and h-values as CSV.
    Factorize,
    /// Identities, Lax equality, eigenvalue and zero-curvature checks.
    Verify,
    /// Integrate the lattice flow and dump the trajectory.
    Evolve,
    /// Flow against the moment oracle, plus the Hermitian reduction.
    Compare,
    /// `verify` over seeded random symbols.
    Sweep,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Degenerate(String),
    Io(String),
    Numeric(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Degenerate(_) => EXIT_DEGENERATE,
            CliError::Numeric(_) => EXIT_CHECK_FAILED,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Degenerate(m) => write!(f, "degenerate factorization: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numeric(e) => write!(f, "numerical error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::FactorizationDegenerate(_) | Error::SingularLeadingBlock { .. } | Error::SingularDressing(_) => {
                CliError::Degenerate(e.to_string())
            }
            Error::BandTooNarrow { .. } | Error::InvalidArgument(_) | Error::DimensionMismatch(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numeric(other),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// A single pass/fail line of a report.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Inclusive bounds; a missing bound is unconstrained.
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, hi: f64) -> Self {
        Check {
            name: name.into(),
            value,
            lo: None,
            hi: Some(hi),
            pass: value <= hi,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, lo: f64) -> Self {
        Check {
            name: name.into(),
            value,
            lo: Some(lo),
            hi: None,
            pass: value >= lo,
        }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Check {
            name: name.into(),
            value,
            lo: Some(lo),
            hi: Some(hi),
            pass: value >= lo && value <= hi,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub n: usize,
    pub n_max: usize,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Report {
    fn new(command: &str, n: usize, n_max: usize, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Report {
            command: command.into(),
            n,
            n_max,
            checks,
            pass,
        }
    }
}

/// Everything `verify` checks for one symbol.
pub fn verify_checks(
    gamma: &MatrixLaurentSeries,
    n_max: usize,
    cfg: &RunConfig,
    tol: &Tolerances,
) -> Result<Vec<Check>, CliError> {
    let reach = n_max as i64;
    let g = gamma.widened(-reach, reach);
    let fam = biorth_family(&g, n_max)?;
    let mut checks = vec![];

    let (bl, br) = biorthonormality_residual(&fam)?;
    checks.push(Check::at_most("biorthonormality/l", bl, tol.biorthonormality));
    checks.push(Check::at_most("biorthonormality/r", br, tol.biorthonormality));

    let table = recursion_residuals(&fam)?;
    for id in Recursion::ALL {
        checks.push(Check::at_most(format!("recursion/{}", id.label()), table.max_for(id), tol.recursions));
    }

    let dual = ts_dual_check(&g, n_max)?;
    checks.push(Check::at_most("duality/xl-yr", max_of(&dual.xl_vs_yr), tol.duality));
    checks.push(Check::at_most("duality/yl-xr", max_of(&dual.yl_vs_xr), tol.duality));
    checks.push(Check::at_most("duality/hl-hr", max_of(&dual.hl_vs_hr), tol.duality));

    let zs = cfg.z_samples();
    for kind in LaxKind::ALL {
        let from_refl = lax_from_reflections(&fam, kind)?;
        let from_dress = lax_section(&g, n_max, kind)?;
        checks.push(Check::at_most(
            format!("lax/{}", kind.label()),
            from_refl.trusted_diff(&from_dress)?,
            tol.lax_two_path,
        ));
        checks.push(Check::at_most(
            format!("eigenvalue/{}", kind.label()),
            eigen_residual(&from_dress, &fam, &zs)?,
            tol.eigenvalue,
        ));
    }

    let zc = &cfg.zero_curvature;
    for &flow in &zc.flows {
        for side in [Side::Left, Side::Right] {
            let c = zero_curvature_convergence(gamma, flow, side, zc.site, zc.eps, &zs)?;
            let name = format!("zero-curvature/{flow}/{side}");
            if c.residual <= tol.zero_curvature_floor {
                checks.push(Check::at_most(name, c.residual, tol.zero_curvature_floor));
            } else {
                checks.push(Check::within(name, c.ratio, tol.ratio_lo, tol.ratio_hi));
            }
        }
    }
    Ok(checks)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

fn block_columns(name: &str, n: usize) -> Vec<String> {
    let mut cols = vec![];
    for i in 0..n {
        for j in 0..n {
            cols.push(format!("{name}{i}{j}_re"));
            cols.push(format!("{name}{i}{j}_im"));
        }
    }
    cols
}

fn block_values(m: &CMat) -> Vec<String> {
    let mut out = vec![];
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(format!("{:.16e}", m[(i, j)].re));
            out.push(format!("{:.16e}", m[(i, j)].im));
        }
    }
    out
}

/// `k` followed by the blocks of `x^l, y^r, x^r, y^l, h^l, h^r`.
pub fn factorize_csv(fam: &BiorthFamily) -> String {
    let n = fam.block_size();
    let names = ["xl", "yr", "xr", "yl", "hl", "hr"];
    let mut header = vec!["k".to_string()];
    for name in names {
        header.extend(block_columns(name, n));
    }
    let mut out = header.join(",");
    out.push('\n');
    for k in 0..=fam.n_max() {
        let mut row = vec![k.to_string()];
        for m in [fam.xl(k), fam.yr(k), fam.xr(k), fam.yl(k), fam.hl(k), fam.hr(k)] {
            row.extend(block_values(m));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize)]
struct SweepEntry {
    index: usize,
    seed: u64,
    n: usize,
    excluded: Option<String>,
    checks: Vec<Check>,
    pass: bool,
}

#[derive(Debug, Clone, Serialize)]
struct SweepReport {
    command: String,
    base_seed: u64,
    entries: Vec<SweepEntry>,
    excluded: usize,
    pass: bool,
}

/// Run one command. Returns the exit code; report files go to `out`.
pub fn run(command: Command, cfg: &RunConfig, out: &Path, tolerance_scale: f64) -> Result<i32, CliError> {
    if !(tolerance_scale > 0.0 && tolerance_scale.is_finite()) {
        return Err(CliError::Config("tolerance-scale must be > 0".into()));
    }
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let tol = cfg.tolerances.scaled(tolerance_scale);
    let gamma = cfg.symbol();
    let n_max = cfg.n_max;
    let verdict = |pass: bool| if pass { EXIT_PASS } else { EXIT_CHECK_FAILED };

    match command {
        Command::Factorize => {
            let reach = n_max as i64;
            let fam = biorth_family(&gamma.widened(-reach, reach), n_max)?;
            write_text(&out.join("factorize.csv"), &factorize_csv(&fam))?;
            Ok(EXIT_PASS)
        }
        Command::Verify => {
            let report = Report::new("verify", cfg.n, n_max, verify_checks(&gamma, n_max, cfg, &tol)?);
            write_json(&out.join("verify.json"), &report)?;
            print_checks(&report.checks);
            Ok(verdict(report.pass))
        }
        Command::Evolve => {
            let f = &cfg.flow;
            let start = moment_oracle(&gamma, 0.0, f.sites, cfg.system())?;
            let integ = Integrator {
                record_every: f.record_every,
                boundary: boundary(cfg, &gamma),
                ..Integrator::new(f.step)
            };
            let traj = integrate(&start, f.tau_end, &integ)?;
            let path = out.join("trajectory.csv");
            let file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
            traj.write_csv(std::io::BufWriter::new(file)).map_err(|e| io_err(&path, e))?;
            Ok(EXIT_PASS)
        }
        Command::Compare => {
            let f = &cfg.flow;
            let system = cfg.system();
            let settings = CompareSettings {
                boundary: boundary(cfg, &gamma),
                ..CompareSettings::new(f.tau_end, f.step, f.sites, f.buffer)
            };
            let halving = step_halving(&gamma, system, &settings)?;
            let flow_tol = if cfg.n == 1 { tol.flow_scalar } else { tol.flow_matrix };
            let mut checks = vec![
                Check::at_most("flow-vs-oracle", halving.coarse.max_error, flow_tol),
                Check::at_least("flow-vs-oracle/step-halving", halving.improvement, tol.step_improvement),
            ];
            let data = hermitian_data(cfg)?;
            let herm = hermitian_check(&data, f.sign, f.tau_end, f.step)?;
            checks.push(Check::at_most("hermitian/deviation", herm.max_deviation, tol.hermitian));
            checks.push(Check::at_most("hermitian/reduced-form", herm.reduced_form_gap, tol.hermitian));
            let report = Report::new("compare", cfg.n, n_max, checks);
            #[derive(Serialize)]
            struct CompareOut<'a> {
                #[serde(flatten)]
                report: &'a Report,
                flow: &'a crate::flows::StepHalving,
                hermitian: &'a crate::flows::HermitianReport,
            }
            write_json(
                &out.join("compare.json"),
                &CompareOut {
                    report: &report,
                    flow: &halving,
                    hermitian: &herm,
                },
            )?;
            print_checks(&report.checks);
            Ok(verdict(report.pass))
        }
        Command::Sweep => {
            let mut entries = vec![];
            let mut index = 0;
            for i in 0..cfg.sweep.count {
                for &n in &cfg.sweep.sizes {
                    let seed = cfg.seed.wrapping_add(i as u64);
                    let g = random_symbol(n, seed);
                    let entry = match verify_checks(&g, n_max, cfg, &tol) {
                        Ok(checks) => SweepEntry {
                            index,
                            seed,
                            n,
                            excluded: None,
                            pass: checks.iter().all(|c| c.pass),
                            checks,
                        },
                        Err(CliError::Degenerate(m)) => SweepEntry {
                            index,
                            seed,
                            n,
                            excluded: Some(m),
                            checks: vec![],
                            pass: true,
                        },
                        Err(e) => return Err(e),
                    };
                    entries.push(entry);
                    index += 1;
                }
            }
            let excluded = entries.iter().filter(|e| e.excluded.is_some()).count();
            let pass = entries.iter().all(|e| e.pass);
            let mut csv = String::from("index,seed,n,check,value,pass\n");
            for e in &entries {
                for c in &e.checks {
                    csv.push_str(&format!("{},{},{},{},{:.6e},{}\n", e.index, e.seed, e.n, c.name, c.value, c.pass));
                }
            }
            write_text(&out.join("sweep.csv"), &csv)?;
            write_json(
                &out.join("sweep.json"),
                &SweepReport {
                    command: "sweep".into(),
                    base_seed: cfg.seed,
                    entries,
                    excluded,
                    pass,
                },
            )?;
            println!("sweep: {} symbols, {excluded} excluded, {}", index, if pass { "pass" } else { "FAIL" });
            Ok(verdict(pass))
        }
    }
}

fn boundary(cfg: &RunConfig, gamma: &MatrixLaurentSeries) -> TopBoundary {
    match cfg.flow.boundary {
        BoundaryChoice::Zero => TopBoundary::ZeroPadding,
        BoundaryChoice::Oracle => TopBoundary::Oracle(gamma.clone()),
    }
}

fn hermitian_data(cfg: &RunConfig) -> Result<HermitianData, CliError> {
    let f = &cfg.flow;
    let a = Complex64::new(f.amplitude, 0.0);
    let data = if cfg.n == 1 {
        HermitianData::scalar(&vec![a; f.sites], f.sign)?
    } else {
        let x = vec![identity(cfg.n) * a; f.sites];
        HermitianData::matrix(&x, &x, f.sign)?
    };
    Ok(data)
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        println!("{:<28} {:>12.3e}  {}", c.name, c.value, if c.pass { "pass" } else { "FAIL" });
    }
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("tlat: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    run(cli.command, &cfg, &out, cli.tolerance_scale)
}
