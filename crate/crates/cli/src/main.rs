//! `hill4bp`: reproducible experiments for the Hill four-body model.
//!
//! Every run writes its CSV/JSON outputs and a `<command>.manifest.json`
//! into `--out`. Exit codes: 0 success, 2 domain error, 3 numerical failure,
//! 64 usage error, 1 anything else (I/O).

mod commands;
mod config;
mod manifest;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hill4bp::integrate::Tolerances;

const EXIT_DOMAIN: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(name = "hill4bp", version, about = "Hill approximation of the equilateral restricted four-body problem")]
#[command(args_override_self = true)]
struct Cli {
    /// Output directory for CSV, JSON and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker-thread cap (falls back to HILL4BP_THREADS).
    #[arg(long, global = true, env = "HILL4BP_THREADS")]
    threads: Option<usize>,
    /// Flat `key=value` file supplying flag defaults; flags win on conflict.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
enum Command {
    /// Equilibrium points, Jacobi constants and linear stability at one μ.
    Equilibria(EquilibriaArgs),
    /// Critical mass ratio of L3/L4 and a stability sweep.
    MuCritical(MuCriticalArgs),
    /// Hill-region mask on a grid.
    HillRegion(HillRegionArgs),
    /// Poincaré return-map scan on the regularized section.
    Poincare(PoincareArgs),
    /// Continuation of the g-family and pitchfork detection.
    Gfamily(GfamilyArgs),
    /// Planar Lyapunov orbit about L1 or L2.
    Lyapunov(LyapunovArgs),
    /// Invariant-manifold cuts and first homoclinic intersections.
    Manifolds(ManifoldsArgs),
    /// Pointwise comparison of the scaled R4BP field with the Hill field.
    CompareR4bp(CompareArgs),
    /// Convergence of the scaled R4BP field to the Hill field as m3 → 0.
    Convergence(ConvergenceArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Equilibria(_) => "equilibria",
            Command::MuCritical(_) => "mu-critical",
            Command::HillRegion(_) => "hill-region",
            Command::Poincare(_) => "poincare",
            Command::Gfamily(_) => "gfamily",
            Command::Lyapunov(_) => "lyapunov",
            Command::Manifolds(_) => "manifolds",
            Command::CompareR4bp(_) => "compare-r4bp",
            Command::Convergence(_) => "convergence",
        }
    }
}

const SUBCOMMANDS: [&str; 9] = [
    "equilibria",
    "mu-critical",
    "hill-region",
    "poincare",
    "gfamily",
    "lyapunov",
    "manifolds",
    "compare-r4bp",
    "convergence",
];

#[derive(Debug, Args, Serialize)]
pub struct EquilibriaArgs {
    #[arg(long)]
    pub mu: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct MuCriticalArgs {
    /// Bisection tolerance on μ.
    #[arg(long, default_value_t = 1e-13)]
    pub tol: f64,
    /// Points of the L3 stability sweep over (0, 1/2].
    #[arg(long, default_value_t = 500)]
    pub points: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameArg {
    Rotated,
    Unrotated,
}

#[derive(Debug, Args, Serialize)]
pub struct HillRegionArgs {
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub jacobi: f64,
    #[arg(long, value_enum, default_value_t = FrameArg::Rotated)]
    pub frame: FrameArg,
    #[arg(long, default_value_t = -1.5, allow_negative_numbers = true)]
    pub xmin: f64,
    #[arg(long, default_value_t = 1.5, allow_negative_numbers = true)]
    pub xmax: f64,
    #[arg(long, default_value_t = -1.5, allow_negative_numbers = true)]
    pub ymin: f64,
    #[arg(long, default_value_t = 1.5, allow_negative_numbers = true)]
    pub ymax: f64,
    #[arg(long, default_value_t = 301)]
    pub nx: usize,
    #[arg(long, default_value_t = 301)]
    pub ny: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct PoincareArgs {
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub jacobi: f64,
    /// Seeds per axis of the (X, P_X) grid.
    #[arg(long, default_value_t = hill4bp::poincare::DEFAULT_GRID)]
    pub grid: usize,
    #[arg(long, default_value_t = hill4bp::poincare::DEFAULT_ITERATES)]
    pub iterates: usize,
    #[arg(long, default_value_t = -1.2, allow_negative_numbers = true)]
    pub xmin: f64,
    #[arg(long, default_value_t = 1.2, allow_negative_numbers = true)]
    pub xmax: f64,
    #[arg(long, default_value_t = -0.6, allow_negative_numbers = true)]
    pub pxmin: f64,
    #[arg(long, default_value_t = 0.6, allow_negative_numbers = true)]
    pub pxmax: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct GfamilyArgs {
    #[arg(long, default_value_t = 0.00095)]
    pub mu: f64,
    /// Starting x0 of the near-circular direct orbit.
    #[arg(long, default_value_t = 0.15)]
    pub x_start: f64,
    /// Continuation stops once C falls below this value.
    #[arg(long, default_value_t = 4.45)]
    pub c_stop: f64,
    #[arg(long, default_value_t = 400)]
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum PointArg {
    L1,
    L2,
}

#[derive(Debug, Args, Serialize)]
pub struct LyapunovArgs {
    #[arg(long, default_value_t = 0.00095)]
    pub mu: f64,
    #[arg(long, value_enum, ignore_case = true, default_value_t = PointArg::L1)]
    pub point: PointArg,
    /// Target Jacobi constant (continued from a small orbit).
    #[arg(long, conflicts_with = "amplitude")]
    pub jacobi: Option<f64>,
    /// Initial x-offset from the equilibrium, for small orbits.
    #[arg(long, allow_negative_numbers = true)]
    pub amplitude: Option<f64>,
    /// Trajectory samples over one period.
    #[arg(long, default_value_t = 400)]
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionArg {
    Inner,
    Outer,
}

#[derive(Debug, Args, Serialize)]
pub struct ManifoldsArgs {
    #[arg(long, default_value_t = 0.00095)]
    pub mu: f64,
    #[arg(long)]
    pub jacobi: f64,
    #[arg(long, value_enum, default_value_t = RegionArg::Inner)]
    pub region: RegionArg,
    #[arg(long, default_value_t = 6)]
    pub max_cuts: usize,
    #[arg(long, default_value_t = hill4bp::manifolds::N_SEEDS)]
    pub seeds: usize,
    #[arg(long, default_value_t = hill4bp::manifolds::EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_seeds: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    #[arg(long, default_value_t = 0.00095)]
    pub mu: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub m3: f64,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ConvergenceArgs {
    #[arg(long, default_value_t = 0.00095)]
    pub mu: f64,
    #[arg(long, value_delimiter = ',', default_value = "1e-6,1e-8,1e-10,1e-12")]
    pub m3: Vec<f64>,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<hill4bp::Error>() {
        Some(e) if e.is_numerical() => EXIT_NUMERICAL,
        Some(_) => EXIT_DOMAIN,
        None => 1,
    }
}

fn parse_cli() -> Result<Cli, ExitCode> {
    let raw: Vec<String> = std::env::args().collect();
    let usage = |e: anyhow::Error| {
        eprintln!("error: {e:#}");
        ExitCode::from(EXIT_USAGE)
    };
    let (args, cfg) = config::take_config_flag(raw).map_err(usage)?;
    let args = match &cfg {
        Some(p) => config::splice(args, &config::load(p.as_ref()).map_err(usage)?, &SUBCOMMANDS),
        None => args,
    };
    Cli::try_parse_from(args).map_err(|e| {
        let _ = e.print();
        if e.use_stderr() {
            ExitCode::from(EXIT_USAGE)
        } else {
            ExitCode::SUCCESS
        }
    })
}

fn main() -> ExitCode {
    let cli = match parse_cli() {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Some(n) = cli.threads {
        hill4bp::parallel::init_threads(n);
    }
    let start = Instant::now();
    let result = commands::run(&cli.command);
    let outputs = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let manifest = manifest::RunManifest {
        command: cli.command.name().to_string(),
        parameters: serde_json::to_value(&cli.command).unwrap_or_default(),
        tolerances: Tolerances::default(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        parallel: hill4bp::parallel::is_parallel(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: outputs.files.iter().map(|(n, _)| n.clone()).collect(),
        warnings: outputs.warnings.clone(),
    };
    match manifest::write(&cli.out, &manifest, &outputs) {
        Ok(path) => {
            for w in &outputs.warnings {
                eprintln!("warning: {w}");
            }
            let text = serde_json::to_string_pretty(&outputs.summary).unwrap_or_default();
            let _ = writeln!(std::io::stdout(), "{text}");
            eprintln!("manifest: {}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
