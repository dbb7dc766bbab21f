//! Batch front end: parse a problem config, dispatch the solver, emit
//! trajectory/coefficient CSV and certificate/report JSON.
//!
//! Exit codes: 0 success, 2 invalid config or input, 3 certificate
//! failure, 4 hypothesis-validation failure.

mod config;
mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use wickflow_core::chaos::{self, KondratievNorm};
use wickflow_core::evolution::{self, CauchyProblem};
use wickflow_core::operators::WickEntry;
use wickflow_core::stationary;
use wickflow_core::{ChaosExpansion, Truncation, WickFamily};

use config::{BuiltProblem, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Certificate(String),
    Hypothesis(String),
    Internal(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Certificate(m) => write!(f, "certificate failure: {m}"),
            CliError::Hypothesis(m) => write!(f, "hypothesis failure: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Certificate(_) => 3,
            CliError::Hypothesis(_) => 4,
            CliError::Internal(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "wickflow", version, about = "Chaos expansion solvers for Wick-type equations")]
struct Cli {
    /// Worker threads for level parallelism; the WICKFLOW_THREADS
    /// environment variable takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an evolution problem and emit trajectory CSV plus a
    /// convergence certificate.
    SolveEvolution {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a stationary problem and emit the coefficient CSV plus
    /// condition and norm-bound reports.
    SolveStationary {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-solve an evolution problem over a nested truncation ladder and
    /// report tail decay.
    Study {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated `NxM` pairs, smallest first, e.g. "2x4,3x6,4x8".
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Wick product or power of coefficient CSV files.
    Wick {
        #[arg(long)]
        lhs: PathBuf,
        #[arg(long)]
        rhs: Option<PathBuf>,
        #[arg(long, value_enum)]
        op: WickOp,
        /// Exponent for the power operation.
        #[arg(long, default_value_t = 2)]
        power: u32,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WickOp {
    Product,
    Power,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    let result = match cli.command {
        Command::SolveEvolution { config, out } => cmd_solve_evolution(&config, &out),
        Command::SolveStationary { config, out } => cmd_solve_stationary(&config, &out),
        Command::Study { config, grid, out } => cmd_study(&config, &grid, &out),
        Command::Wick { lhs, rhs, op, power, out } => cmd_wick(&lhs, rhs.as_deref(), op, power, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}

fn init_threads(flag: Option<usize>) {
    let n = std::env::var("WICKFLOW_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .or(flag);
    if let Some(n) = n.filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::parse(&text)
}

fn write_out(dir: &Path, name: &str, content: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))?;
    std::fs::write(dir.join(name), content)
        .map_err(|e| CliError::Internal(format!("cannot write {name}: {e}")))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn evolution_problem(cfg: &RunConfig) -> Result<CauchyProblem, CliError> {
    match cfg.build()? {
        BuiltProblem::Evolution(pb) => Ok(pb),
        BuiltProblem::Stationary(_) => {
            Err(CliError::Config("this command expects an evolution problem".into()))
        }
    }
}

fn cmd_solve_evolution(config: &Path, out: &Path) -> Result<(), CliError> {
    let pb = evolution_problem(&read_config(config)?)?;
    pb.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let sol = evolution::solve(&pb).map_err(|e| CliError::Internal(e.to_string()))?;
    let cert = evolution::certificate(&pb, &sol)
        .map_err(|e| CliError::Certificate(e.to_string()))?;
    write_out(out, "trajectory.csv", &output::trajectory_csv(&sol))?;
    write_out(out, "certificate.json", &to_json(&cert)?)?;
    if !cert.pass() {
        return Err(CliError::Certificate(format!(
            "partial-sum bounds violated: sup {} vs {}, derivative {} vs {}",
            cert.lhs_sup, cert.rhs_sup, cert.lhs_der, cert.rhs_der
        )));
    }
    Ok(())
}

fn cmd_solve_stationary(config: &Path, out: &Path) -> Result<(), CliError> {
    let pb = match read_config(config)?.build()? {
        BuiltProblem::Stationary(pb) => pb,
        BuiltProblem::Evolution(_) => {
            return Err(CliError::Config("this command expects a stationary problem".into()))
        }
    };
    let sol = stationary::solve(&pb).map_err(|e| match e {
        wickflow_core::CoreError::HypothesisFailed(m) => CliError::Hypothesis(m),
        other => CliError::Internal(other.to_string()),
    })?;
    let bound = stationary::norm_bound(&pb, &sol);
    let report = serde_json::json!({
        "K": pb.k,
        "conditions": sol.conditions,
        "norm_bound": bound,
        "recursion_residual": sol.residual,
    });
    write_out(out, "solution.csv", &output::stationary_csv(&sol))?;
    write_out(out, "reports.json", &to_json(&report)?)?;
    if !bound.pass {
        return Err(CliError::Certificate(format!(
            "norm bound violated: {} > {}",
            bound.lhs, bound.rhs
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct StudyRow {
    n: u32,
    m: u32,
    cardinality: u64,
    weighted_norm: f64,
    per_level_mass: Vec<f64>,
    delta_from_previous: Option<f64>,
    certificate_pass: bool,
    wall_ms: f64,
}

fn parse_grid(grid: &str) -> Result<Vec<(u32, u32)>, CliError> {
    let mut pairs = Vec::new();
    for part in grid.split(',') {
        let (n, m) = part
            .trim()
            .split_once(['x', 'X'])
            .ok_or_else(|| CliError::Config(format!("bad grid entry {part:?}, want NxM")))?;
        let n: u32 = n.trim().parse().map_err(|_| {
            CliError::Config(format!("bad truncation order in {part:?}"))
        })?;
        let m: u32 = m.trim().parse().map_err(|_| {
            CliError::Config(format!("bad mode count in {part:?}"))
        })?;
        pairs.push((n, m));
    }
    if pairs.is_empty() {
        return Err(CliError::Config("empty truncation grid".into()));
    }
    for w in pairs.windows(2) {
        if w[1].0 < w[0].0 || w[1].1 < w[0].1 {
            return Err(CliError::Config(format!(
                "truncations must be nested, {}x{} does not contain {}x{}",
                w[1].0, w[1].1, w[0].0, w[0].1
            )));
        }
    }
    Ok(pairs)
}

fn restrict_wick(b: &WickFamily, t: &Truncation) -> WickFamily {
    let mut out = WickFamily::new();
    for (alpha, entry) in b.entries() {
        if !alpha.is_zero() && !t.contains(alpha) {
            continue;
        }
        match entry {
            WickEntry::Const(op) => out.set(alpha.clone(), op.clone()),
            WickEntry::Varying { vals, derivs } => out
                .set_varying(alpha.clone(), vals.clone(), derivs.clone())
                .expect("entry was valid in the source family"),
        }
    }
    out
}

fn restricted_problem(pb: &CauchyProblem, n: u32, m: u32) -> Result<CauchyProblem, CliError> {
    let t = Truncation::new(n, m).map_err(|e| CliError::Config(e.to_string()))?;
    let mut sub = pb.clone();
    sub.u0 = pb.u0.truncate(&t, pb.p).0;
    sub.f = pb.f.truncate(&t, pb.p).0;
    sub.f_prime = pb.f_prime.truncate(&t, pb.p).0;
    sub.b = restrict_wick(&pb.b, &t);
    sub.truncation = t;
    sub.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(sub)
}

fn per_level_mass(traj: &ChaosExpansion, p: f64) -> Vec<f64> {
    let mut mass: Vec<f64> = Vec::new();
    for (alpha, c) in traj.iter() {
        let sup = c
            .as_traj()
            .map(|t| t.iter().map(|v| v.norm_squared()).fold(0.0, f64::max))
            .unwrap_or(0.0);
        let level = alpha.length() as usize;
        if mass.len() <= level {
            mass.resize(level + 1, 0.0);
        }
        mass[level] += sup * alpha.weight(-p);
    }
    mass
}

fn cmd_study(config: &Path, grid: &str, out: &Path) -> Result<(), CliError> {
    let base = evolution_problem(&read_config(config)?)?;
    let pairs = parse_grid(grid)?;
    let weights = KondratievNorm::distribution(base.p);
    let mut rows: Vec<StudyRow> = Vec::new();
    let mut prev: Option<f64> = None;
    for (n, m) in pairs {
        let pb = restricted_problem(&base, n, m)?;
        let start = Instant::now();
        let sol = evolution::solve(&pb).map_err(|e| CliError::Internal(e.to_string()))?;
        let cert = evolution::certificate(&pb, &sol)
            .map_err(|e| CliError::Certificate(e.to_string()))?;
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let norm = sol.traj.kondratiev_norm_sq_sup(weights);
        rows.push(StudyRow {
            n,
            m,
            cardinality: pb.truncation.cardinality(),
            weighted_norm: norm,
            per_level_mass: per_level_mass(&sol.traj, pb.p),
            delta_from_previous: prev.map(|p| (norm - p).abs()),
            certificate_pass: cert.pass(),
            wall_ms,
        });
        prev = Some(norm);
    }
    let report = serde_json::json!({ "grid": rows });
    write_out(out, "study.json", &to_json(&report)?)
}

fn cmd_wick(
    lhs: &Path,
    rhs: Option<&Path>,
    op: WickOp,
    power: u32,
    out: &Path,
) -> Result<(), CliError> {
    let read = |p: &Path| -> Result<ChaosExpansion, CliError> {
        let text = std::fs::read_to_string(p)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
        output::read_expansion_csv(&text)
    };
    let a = read(lhs)?;
    let result = match op {
        WickOp::Product => {
            let rhs = rhs.ok_or_else(|| CliError::Config("product needs --rhs".into()))?;
            let b = read(rhs)?;
            chaos::wick(&a, &b).map_err(|e| CliError::Config(e.to_string()))?
        }
        WickOp::Power => {
            chaos::wick_power(&a, power).map_err(|e| CliError::Config(e.to_string()))?
        }
    };
    let dir = out.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(out, output::expansion_csv(&result))
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", out.display())))
}
