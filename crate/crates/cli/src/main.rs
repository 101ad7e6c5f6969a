//! `quasimode` command-line front end.
//!
//! Exit codes: 0 success, 1 a check or tolerance failed, 2 usage, config or
//! run error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use quasimode::config::{parse_method, RunConfig};
use quasimode::dynamics::compare_traces;
use quasimode::fano::{alpha_coefficients, ReservoirStructure};
use quasimode::model::{validate, ValidationReport};
use quasimode::output::{deviation_json, pseudomodes_json, structure_csv, trace_csv, validation_json};
use quasimode::pseudo::{extract_pseudomodes, kernel, transition_strength};

const LONG_ABOUT: &str = "\
Quasi-mode and pseudomode analysis of an atom coupled to a structured reservoir.

All physical quantities are angular frequencies (hbar = 1); times are in the
reciprocal unit. The run is described by one JSON file with keys `atom`,
`field`, optional `reservoir` and `numerics`. Without --out, results go to
stdout.";

/// Default `compare` threshold on max |ΔP1| when neither flag nor config sets one.
const DEFAULT_TOLERANCE: f64 = 1e-3;
/// Frequency samples used by `verify`.
const VERIFY_POINTS: usize = 201;
const DEFINING_TOL: f64 = 1e-10;
const NORMALIZATION_TOL: f64 = 1e-8;
const RESIDUE_TOL: f64 = 1e-8;
const KERNEL_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "quasimode", version, about = "Quasi-mode reservoir analysis and atomic decay dynamics", long_about = LONG_ABOUT)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output file, written atomically
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Pass/fail threshold, overriding `numerics.tolerance`
    #[arg(long, value_name = "FLOAT")]
    tolerance: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Structure function D(ω) and coupling g(ω) on the frequency grid (CSV: omega,D,Re_g,Im_g)
    Structure(Common),
    /// Pseudomode poles, residues and couplings (JSON)
    Poles(Common),
    /// Excited-state dynamics (CSV: t,P1,Re_c1,Im_c1,...)
    Dynamics {
        #[command(flatten)]
        common: Common,
        /// pseudomode, volterra, truemode or lindblad
        #[arg(long, value_name = "NAME", default_value = "pseudomode")]
        method: String,
    },
    /// Run two methods and report their deviation; fails above the tolerance
    Compare {
        #[command(flatten)]
        common: Common,
        method_a: String,
        method_b: String,
    },
    /// Check the invariants of the configured system
    Verify(Common),
}

enum Failure {
    /// A check or tolerance failed; the report was still written.
    Check,
    Run(String),
}

impl From<quasimode::Error> for Failure {
    fn from(e: quasimode::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Run(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Structure(c) => {
            let config = load(&c.config)?;
            emit(c.out.as_deref(), &structure_csv(&config.sampled_structure()?))
        }
        Command::Poles(c) => {
            let config = load(&c.config)?;
            emit(c.out.as_deref(), &pretty(&poles(&config)?))
        }
        Command::Dynamics { common, method } => {
            let method = parse_method(&method)?;
            let config = load(&common.config)?;
            emit(common.out.as_deref(), &trace_csv(&config.solve(method)?))
        }
        Command::Compare { common, method_a, method_b } => {
            let (a, b) = (parse_method(&method_a)?, parse_method(&method_b)?);
            let config = load(&common.config)?;
            let tolerance = tolerance(&common, &config)?;
            let ta = config.solve(a)?;
            let tb = config.solve(b)?;
            let report = compare_traces(&ta, &tb)?;
            let passed = report.max_dp1 <= tolerance;
            println!(
                "{a} vs {b}: max|dP1| = {:.3e}, rms|dP1| = {:.3e}, tolerance {tolerance:.3e}: {}",
                report.max_dp1,
                report.rms_dp1,
                if passed { "PASS" } else { "FAIL" }
            );
            let mut doc = json!({ "method_a": a.name(), "method_b": b.name(), "tolerance": tolerance, "passed": passed });
            doc["deviation"] = deviation_json(&report);
            write_report(common.out.as_deref(), &doc)?;
            if passed {
                Ok(())
            } else {
                Err(Failure::Check)
            }
        }
        Command::Verify(c) => {
            let config = load(&c.config)?;
            let report = verify(&config, c.tolerance)?;
            for check in &report.checks {
                println!("{}: {} (residual {:.3e})", check.name, if check.passed { "PASS" } else { "FAIL" }, check.residual);
            }
            write_report(c.out.as_deref(), &validation_json(&report))?;
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Check)
            }
        }
    }
}

fn load(path: &Path) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Run(format!("cannot read {}: {e}", path.display())))?;
    Ok(RunConfig::from_json_str(&text)?)
}

fn tolerance(common: &Common, config: &RunConfig) -> Result<f64, Failure> {
    let t = common.tolerance.or(config.numerics.tolerance).unwrap_or(DEFAULT_TOLERANCE);
    if t > 0.0 && t.is_finite() {
        Ok(t)
    } else {
        Err(Failure::Run(format!("tolerance must be positive, got {t}")))
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON value serialises");
    s.push('\n');
    s
}

/// Write to `out` through a temporary file in the same directory, or to stdout.
fn emit(out: Option<&Path>, contents: &str) -> Result<(), Failure> {
    let Some(path) = out else {
        std::io::stdout().write_all(contents.as_bytes()).map_err(|e| Failure::Run(e.to_string()))?;
        return Ok(());
    };
    let io = |e: std::io::Error| Failure::Run(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Reports go to the file when one is given; the text summary is already on stdout.
fn write_report(out: Option<&Path>, doc: &Value) -> Result<(), Failure> {
    match out {
        Some(_) => emit(out, &pretty(doc)),
        None => Ok(()),
    }
}

fn poles(config: &RunConfig) -> Result<Value, Failure> {
    let reservoir = config.reservoir()?;
    let set = extract_pseudomodes(&reservoir, config.atom_frequency()?)?;
    let mut doc = pseudomodes_json(&set);
    if let ReservoirStructure::RationalFlat(r) = &reservoir {
        doc["denominator_roots"] = r.xi.len().into();
        if !set.cancelled.is_empty() {
            doc["note"] = format!(
                "{} root(s) of the denominator cancel against the numerator on the real axis; \
                 D keeps {} lower-half-plane pole(s), one pseudomode each",
                set.cancelled.len(),
                set.modes.len()
            )
            .into();
        }
    }
    Ok(doc)
}

/// Hermiticity and positivity, then the Fano residuals on the grid, then
/// the pseudomode residue sum and `G(0) = Ω²` when a pole model exists.
/// `scale` multiplies every threshold.
fn verify(config: &RunConfig, scale: Option<f64>) -> Result<ValidationReport, Failure> {
    let scale = match scale {
        Some(s) if !(s > 0.0 && s.is_finite()) => return Err(Failure::Run(format!("tolerance must be positive, got {s}"))),
        Some(s) => s,
        None => 1.0,
    };
    let system = config.system()?;
    let mut report = validate(&system);
    if !report.passed() {
        return Ok(report);
    }

    let grid = config.omega_grid(&system);
    let stride = grid.len().div_ceil(VERIFY_POINTS).max(1);
    let rho = config.rho_true()?;
    let (mut defining, mut normalization) = (0.0f64, 0.0f64);
    for &omega in grid.iter().step_by(stride) {
        match alpha_coefficients(&system, omega, &rho) {
            Ok(sol) => {
                defining = defining.max(sol.defining_residual());
                normalization = normalization.max(sol.normalization_residual());
            }
            // removable points where P vanishes on the axis carry no expansion
            Err(quasimode::Error::SingularMatrix { .. }) => {}
            Err(quasimode::Error::NormalizationFailure { residual, .. }) => normalization = normalization.max(residual),
            Err(e) => return Err(e.into()),
        }
    }
    report.push("defining_residual", defining <= DEFINING_TOL * scale, defining);
    report.push("normalization_residual", normalization <= NORMALIZATION_TOL * scale, normalization);

    let reservoir = config.reservoir()?;
    if matches!(reservoir, ReservoirStructure::Sampled(_)) || system.transition_count() == 0 {
        return Ok(report);
    }
    match transition_strength(&reservoir) {
        Err(quasimode::Error::ZeroStrength) => return Ok(report),
        Err(e) => return Err(e.into()),
        Ok(_) => {}
    }
    let set = extract_pseudomodes(&reservoir, config.atom_frequency()?)?;
    let residue = set.residue_sum_residual();
    report.push("residue_sum", residue <= RESIDUE_TOL * scale, residue);
    let omega_sq = set.strength * set.strength;
    let g0 = (kernel(&set, 0.0)? - C64::new(omega_sq, 0.0)).norm() / omega_sq;
    report.push("kernel_at_zero", g0 <= KERNEL_TOL * scale, g0);
    Ok(report)
}
