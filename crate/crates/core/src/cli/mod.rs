//! Command-line front end.
//!
//! Every command reads an optional config file, writes its tables as CSV
//! into the output directory together with `manifest.txt`, and exits with
//! [`EXIT_PASS`], [`EXIT_FAIL`] or [`EXIT_USAGE`].

pub mod config;

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{ConfigError, FamilyKind, RunConfig};

use crate::conditions::{check_all, reports_to_csv};
use crate::error::Error;
use crate::numerics::fmt_f64;
use crate::srb::{
    correlation, decay_to_csv, entropy_check, gibbs_to_csv, gibbs_vs_srb, random_start, simulate, ulam_decay, DecayFit,
    FitStatus,
};
use crate::thermo::{
    holder_to_csv, hypotheses_to_csv, pressure, pressure_to_csv, verify_hypotheses, PotentialContext, VerifyOptions,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "HYPERSHIFT_THREADS";

/// Largest acceptable `|birkhoff − lyapunov|` in the report.
pub const ENTROPY_RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Band for the cylinder frequency-to-length ratios in the report.
pub const GIBBS_BAND: (f64, f64) = (0.5, 2.0);

#[derive(Debug, Parser)]
#[command(
    name = "hypershift",
    version,
    about = "Hyperbolicity checks, pressure and SRB statistics for countable-branch maps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Seed overriding the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Geometric, hyperbolicity, distortion and cone conditions.
    Check,
    /// Pressure from periodic-orbit partition sums.
    Pressure,
    /// Correlation decay along an orbit and from the Ulam operator.
    Decay,
    /// Hypotheses (a)-(d), entropy formula and cylinder frequencies.
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Pressure => "pressure",
            Command::Decay => "decay",
            Command::Report => "report",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.0)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

/// Result of one command.
#[derive(Debug, Default)]
pub struct Outcome {
    pub passed: bool,
    pub summary: Vec<String>,
    pub warnings: Vec<String>,
    pub files: Vec<(String, String)>,
}

impl Outcome {
    fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }
}

fn fit_line(label: &str, fit: &DecayFit) -> String {
    match fit.status {
        FitStatus::Fitted => format!(
            "{label}: eta = {:.6} C = {:.6} over lags {:?}",
            fit.fitted_eta, fit.fitted_c, fit.used_lags
        ),
        FitStatus::ZeroCorrelation => format!("{label}: zero correlation at every lag"),
        FitStatus::NoiseLimited => format!("{label}: no lag above the noise floor {:.3e}; fit failed", fit.floor),
    }
}

pub fn cmd_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let fam = cfg.build_family()?;
    let reports = check_all(&fam, cfg.grid, cfg.cone_samples, cfg.seed)?;
    let mut out = Outcome {
        passed: reports.iter().all(|r| r.passed()),
        ..Default::default()
    };
    for r in &reports {
        let branch = r
            .first_failing_branch
            .map(|b| format!(" first failing branch {b}"))
            .unwrap_or_default();
        out.summary.push(format!(
            "{} {} margin {:.3e}{branch}",
            r.condition, r.status, r.worst_margin
        ));
    }
    out.file("conditions.csv", reports_to_csv(&reports));
    Ok(out)
}

pub fn cmd_pressure(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ctx = PotentialContext::new(cfg.build_family()?)?.with_shift(cfg.shift);
    let est = pressure(&ctx, cfg.anchor, cfg.n_max)?;
    let mut out = Outcome::default();
    if est.divergent() {
        out.summary
            .push("P = +inf: the tail of the partition sums diverges".into());
    } else {
        out.summary.push(format!(
            "P = {:.6e} +- {:.1e} from n = {} (lambda = {:.12})",
            est.p, est.p_error, est.n_used, est.lambda
        ));
        out.summary.push(format!(
            "Z_n/lambda^n in [{:.6}, {:.6}]",
            est.recurrence_band.0, est.recurrence_band.1
        ));
    }
    out.passed = !est.divergent() && est.p.abs() <= cfg.tol;
    if !out.passed && !est.divergent() {
        out.summary.push(format!("|P| exceeds tol = {:e}", cfg.tol));
    }
    out.file("pressure.csv", pressure_to_csv(std::slice::from_ref(&est)));
    Ok(out)
}

pub fn cmd_decay(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let fam = cfg.build_family()?;
    let (o1, o2) = cfg.observables()?;
    let orbit = correlation(&fam, &o1, &o2, cfg.orbit_length, cfg.lags, cfg.seed)?;
    let ulam = ulam_decay(&fam, &o1, &o2, cfg.bins, cfg.lags)?;
    let mut out = Outcome {
        passed: orbit.passed() && ulam.fit.passed(),
        ..Default::default()
    };
    out.summary.push(fit_line("orbit", &orbit));
    out.summary.push(fit_line("operator", &ulam.fit));
    out.summary.push(format!(
        "operator: leading eigenvalue {:.12} on {}x{} cells",
        ulam.leading_eigenvalue, ulam.x_bins, ulam.y_bins
    ));
    if orbit.status == FitStatus::Fitted && ulam.fit.status == FitStatus::Fitted {
        out.summary.push(format!(
            "|eta_orbit - eta_operator| = {:.4}",
            (orbit.fitted_eta - ulam.second_eigenvalue).abs()
        ));
    }
    if ulam.lost_mass > crate::srb::ESCAPE_WARNING_RATE {
        out.warnings.push(format!(
            "operator rows lost up to {:.3e} of their mass to escapes",
            ulam.lost_mass
        ));
    }
    out.file("decay.csv", decay_to_csv(&[orbit, ulam.fit]));
    Ok(out)
}

pub fn cmd_report(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let fam = cfg.build_family()?;
    let ctx = PotentialContext::new(fam.clone())?.with_shift(cfg.shift);
    let opts = VerifyOptions {
        anchor: cfg.anchor,
        n_max: cfg.n_max,
        pressure_tolerance: cfg.tol,
        seed: cfg.seed,
        ..VerifyOptions::default()
    };
    let hyp = verify_hypotheses(&ctx, &opts)?;
    let orbit = simulate(&fam, random_start(cfg.seed), cfg.orbit_length, cfg.seed)?;
    let ent = entropy_check(&fam, &orbit)?;
    let gibbs = gibbs_vs_srb(&fam, cfg.max_rank, cfg.orbit_length, cfg.seed)?;

    let mut out = Outcome::default();
    for e in &hyp.entries {
        let status = if e.passed { "pass" } else { "fail" };
        out.summary.push(format!("({}) {status}: {}", e.hypothesis, e.detail));
    }
    let ent_ok = ent.residual < ENTROPY_RESIDUAL_TOLERANCE;
    out.summary.push(format!(
        "entropy {}: lyapunov {:.6} birkhoff {:.6} residual {:.1e}",
        if ent_ok { "pass" } else { "fail" },
        ent.lyapunov,
        ent.birkhoff,
        ent.residual
    ));
    let gibbs_ok = gibbs.within(GIBBS_BAND.0, GIBBS_BAND.1);
    out.summary.push(format!(
        "gibbs {}: {} cylinders, ratios in [{:.4}, {:.4}], rank 1 in [{:.4}, {:.4}]",
        if gibbs_ok { "pass" } else { "fail" },
        gibbs.rows.len(),
        gibbs.min_ratio,
        gibbs.max_ratio,
        gibbs.rank1_min,
        gibbs.rank1_max
    ));
    out.warnings.extend(hyp.warnings().cloned());
    if orbit.truncation_warning() {
        out.warnings.push(format!(
            "escape rate {:.4} exceeds {}: truncation too small",
            orbit.escape_rate(),
            crate::srb::ESCAPE_WARNING_RATE
        ));
    }
    out.passed = hyp.passed() && ent_ok && gibbs_ok;
    out.file("hypotheses.csv", hypotheses_to_csv(&hyp));
    out.file("holder.csv", holder_to_csv(&hyp.holder));
    out.file("pressure.csv", pressure_to_csv(std::slice::from_ref(&hyp.pressure)));
    out.file(
        "entropy.csv",
        format!(
            "quantity,value\nbirkhoff,{}\nlyapunov,{}\nresidual,{}\nescape_rate,{}\n",
            fmt_f64(ent.birkhoff),
            fmt_f64(ent.lyapunov),
            fmt_f64(ent.residual),
            fmt_f64(orbit.escape_rate())
        ),
    );
    out.file("gibbs.csv", gibbs_to_csv(&gibbs));
    Ok(out)
}

fn threads() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))),
        },
    }
}

fn manifest(cli: &Cli, cfg: &RunConfig, threads: usize, outcome: &Outcome) -> String {
    let mut m = format!(
        "# command = {}\n# version = {} {}\n# config = {}\n# seed = {}\n# threads = {}\n# status = {}\n",
        cli.command.name(),
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        cli.config
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "defaults".into()),
        cfg.seed,
        threads,
        if outcome.passed { "pass" } else { "fail" },
    );
    for (name, _) in &outcome.files {
        m.push_str(&format!("# output = {name}\n"));
    }
    for w in &outcome.warnings {
        m.push_str(&format!("# warning = {w}\n"));
    }
    m.push_str(&cfg.echo());
    m
}

fn write_outputs(dir: &Path, files: &[(String, String)]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
    for (name, contents) in files {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let text = match &cli.config {
        Some(p) => fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut cfg = RunConfig::parse_for(&text, cli.command.name())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Failure(e.to_string()))?;
    let mut outcome = pool.install(|| match cli.command {
        Command::Check => cmd_check(&cfg),
        Command::Pressure => cmd_pressure(&cfg),
        Command::Decay => cmd_decay(&cfg),
        Command::Report => cmd_report(&cfg),
    })?;
    let m = manifest(cli, &cfg, pool.current_num_threads(), &outcome);
    outcome.files.push(("manifest.txt".into(), m));
    write_outputs(&cli.out, &outcome.files)?;
    for line in &outcome.summary {
        println!("{line}");
    }
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{}: {}",
        cli.command.name(),
        if outcome.passed { "pass" } else { "fail" }
    );
    Ok(outcome.passed)
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match execute(&cli) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(CliError::Failure(m)) => {
            eprintln!("error: {m}");
            EXIT_FAIL
        }
    }
}
