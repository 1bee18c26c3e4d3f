use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use zenoloss::bridge::{self, BridgeError, BridgeInstance, BridgeOptions, Regime};
use zenoloss::lindblad::LindbladError;
use zenoloss::model::bath_rate;
use zenoloss::sweep::{find_zeno_peak, run_sweep, SweepConfig, SweepError};
use zenoloss::validate::{run_suite, Suite, ValidationOptions};

#[derive(Debug, Parser)]
#[command(name = "zenoloss", version, about = "Loss-current sweeps and cross-checks for the lambda-system junction")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration with [model], [sweep] and [solver] sections.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0, value_name = "N")]
    threads: usize,
    /// Solver tolerance, overriding the configuration.
    #[arg(long, global = true, value_name = "X")]
    tolerance: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Loss current over the configured (gamma, e_nh, delta_mu) grid, as CSV.
    Sweep,
    /// Refined loss-current maximum of every curve, as JSON.
    Peak {
        #[arg(long)]
        e_nh: Option<f64>,
        #[arg(long)]
        delta_mu: Option<f64>,
    },
    /// Master equation against the effective network, as JSON.
    Bridge {
        /// Drive amplitude t_eg of the bridge instances.
        #[arg(long, default_value_t = 1.0)]
        drive: f64,
        /// Photon loss rates in units of the largest coupling.
        #[arg(long, value_delimiter = ',', default_values_t = vec![5.0, 10.0, 20.0])]
        ratios: Vec<f64>,
    },
    /// Named self-checks; exits 4 if any fails.
    Validate {
        /// lindblad, keldysh, bridge or all.
        suite: String,
    },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Solver(String),
    Validation(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Validation(_) => 4,
            Failure::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Solver(m) | Failure::Validation(m) | Failure::Other(m) => m,
        }
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        let m = e.to_string();
        match e {
            SweepError::Config(_) | SweepError::Parse(_) => Failure::Config(m),
            SweepError::Solver { .. } | SweepError::Continuity { .. } => Failure::Solver(m),
            SweepError::NoPeak(_) | SweepError::TooFewPoints(_) | SweepError::MissingCurve { .. } => Failure::Validation(m),
            SweepError::Io(_) => Failure::Other(m),
        }
    }
}

impl From<BridgeError> for Failure {
    fn from(e: BridgeError) -> Self {
        let m = e.to_string();
        match e {
            BridgeError::Invalid(_) | BridgeError::Model(_) => Failure::Config(m),
            BridgeError::Lindblad(LindbladError::InvalidArgument(_)) => Failure::Config(m),
            _ => Failure::Solver(m),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Other(format!("{}: {e}", path.display()))
}

fn load_config(common: &Common) -> Result<SweepConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            SweepConfig::from_toml(&text)?
        }
        None => SweepConfig::default(),
    };
    if let Some(tol) = common.tolerance {
        cfg.solver.tolerance = tol;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(path: Option<&Path>, body: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, body).map_err(|e| io_failure(p, e)),
        None => io::stdout().write_all(body).map_err(|e| Failure::Other(e.to_string())),
    }
}

fn sweep(common: &Common) -> Result<(), Failure> {
    let cfg = load_config(common)?;
    let result = run_sweep(&cfg)?;
    let mut buf = Vec::new();
    result.write_csv(&mut buf).map_err(|e| Failure::Other(e.to_string()))?;
    let out = common.out.as_deref().or(cfg.sweep.output.as_deref());
    emit(out, &buf)
}

fn peak(common: &Common, e_nh: Option<f64>, delta_mu: Option<f64>) -> Result<(), Failure> {
    let cfg = load_config(common)?;
    let result = run_sweep(&cfg)?;
    let mut peaks = Vec::new();
    for &e in &cfg.sweep.e_nh {
        for &d in &cfg.sweep.delta_mu {
            if e_nh.is_some_and(|x| x != e) || delta_mu.is_some_and(|x| x != d) {
                continue;
            }
            let p = find_zeno_peak(&result, &cfg, e, d)?;
            peaks.push(json!({ "e_nh": e, "delta_mu": d, "gamma": p.gamma, "i_loss": p.i_loss, "grid_index": p.grid_index }));
        }
    }
    if peaks.is_empty() {
        return Err(Failure::Config("no configured curve matches --e-nh/--delta-mu".into()));
    }
    let body = serde_json::to_string_pretty(&peaks).map_err(|e| Failure::Other(e.to_string()))? + "\n";
    emit(common.out.as_deref(), body.as_bytes())
}

fn bridge_cmd(common: &Common, drive: f64, ratios: &[f64]) -> Result<(), Failure> {
    let cfg = load_config(common)?;
    let m = &cfg.model;
    let v_f = m.two_v_f / 2.0;
    let rate = |t: f64| bath_rate(Complex64::new(t, 0.0), v_f);
    let lead_gamma = 0.5 * (rate(m.t_l) + rate(m.t_r));
    let opts = BridgeOptions { solver: cfg.solver_options(), check_cutoff: true };

    let exact = BridgeInstance::filled(Regime::ExactQuadratic, drive, m.t_e5, rate(m.t_5), 0.0, lead_gamma);
    let exact = bridge::compare(&exact, &opts)?;
    let base = BridgeInstance::filled(Regime::Adiabatic, drive, m.t_e5, rate(m.t_5), 0.0, lead_gamma)
        .with_cutoff(cfg.solver.fock_cutoff);
    let ladder = bridge::adiabatic_ladder(&base, ratios, &opts)?;
    let passed = exact.passes() && ladder.monotone && ladder.reports.iter().all(|r| r.passes());
    let report = json!({ "passed": passed, "exact": exact, "ladder": ladder });
    let body = serde_json::to_string_pretty(&report).map_err(|e| Failure::Other(e.to_string()))? + "\n";
    emit(common.out.as_deref(), body.as_bytes())?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Validation("bridge deviations exceed the regime tolerance or are not monotone".into()))
    }
}

fn validate(common: &Common, suite: &str) -> Result<(), Failure> {
    let suite: Suite = suite.parse().map_err(|e: zenoloss::validate::UnknownSuite| Failure::Config(e.to_string()))?;
    let cfg = load_config(common)?;
    let report = run_suite(suite, &ValidationOptions::from_config(&cfg));
    emit(common.out.as_deref(), (report.to_json() + "\n").as_bytes())?;
    if report.passed {
        return Ok(());
    }
    let failed: Vec<String> = report
        .failures()
        .map(|c| match (&c.error, c.residual) {
            (Some(e), _) => format!("{}: {e}", c.name),
            (None, Some(r)) => format!("{}: residual {r:e} above {:e}", c.name, c.limit),
            (None, None) => c.name.clone(),
        })
        .collect();
    Err(Failure::Validation(format!("{} check(s) failed\n  {}", failed.len(), failed.join("\n  "))))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.common.threads)
        .build_global()
        .map_err(|e| Failure::Other(e.to_string()))?;
    match &cli.command {
        Command::Sweep => sweep(&cli.common),
        Command::Peak { e_nh, delta_mu } => peak(&cli.common, *e_nh, *delta_mu),
        Command::Bridge { drive, ratios } => bridge_cmd(&cli.common, *drive, ratios),
        Command::Validate { suite } => validate(&cli.common, suite),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
