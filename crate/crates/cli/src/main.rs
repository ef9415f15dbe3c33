//! `circrec`: sparse recovery from subsampled circular convolutions.
//!
//! Subcommands cover the full experiment surface: single-instance recovery
//! from files, phase-diagram sweeps, minimal-m search, noise sweeps, exact
//! certification of small dense matrices, structural Monte Carlo and the
//! sparsity-regime parameter report. Experiment configs load from TOML or
//! JSON; `--seed` overrides the config's master seed wherever one exists.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use circrec::analysis::{compute_parameters, ThetaConstants};
use circrec::certify::{
    cone_check, lm14_certify, structure_check, StructureConfig, ENUMERATION_CAP,
};
use circrec::harness::{
    estimate_min_m, noise_csv, phase_csv, run_noise_sweep, run_phase_diagram,
    ExperimentConfig, MinMConfig, NoiseSweepConfig,
};
use circrec::io;
use circrec::measurement::{PartialCirculantOperator, SelectorMask};
use circrec::solver::{certify_optimality, solve_bpdn, SolverConfig};

#[derive(Parser)]
#[command(name = "circrec", version, about, propagate_version = true)]
struct Cli {
    /// Override the master seed of the loaded config (ignored by commands
    /// that draw no randomness).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance: generator and measurements from files.
    Recover(RecoverArgs),
    /// Success-rate sweep over an (s, m) grid; emits the phase CSV.
    PhaseDiagram(PhaseDiagramArgs),
    /// Bisect for the smallest m reaching a target success rate.
    MinM(MinMArgs),
    /// Median recovery error versus noise level on one fixed instance.
    NoiseSweep(NoiseSweepArgs),
    /// Brute-force null-space certificate for a dense matrix (CSV input).
    Certify(CertifyArgs),
    /// Monte Carlo structure report for the factored diagonal operator.
    StructureCheck(StructureCheckArgs),
    /// Print the sparsity-regime parameters for (n, r).
    Params(ParamsArgs),
}

#[derive(Args)]
struct RecoverArgs {
    /// Generator vector xi (binary f64 file).
    #[arg(long)]
    xi: PathBuf,
    /// Selector mask (JSON with n, delta, seed, omega).
    #[arg(long)]
    mask: PathBuf,
    /// Measurement vector y (binary f64 file).
    #[arg(long)]
    y: PathBuf,
    /// Solver settings (TOML or JSON); defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the result JSON here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PhaseDiagramArgs {
    /// Experiment config (TOML or JSON).
    #[arg(long)]
    config: PathBuf,
    /// Phase CSV destination.
    #[arg(long)]
    output: PathBuf,
    /// Optionally also write the full diagram as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct MinMArgs {
    /// Search config (TOML or JSON).
    #[arg(long)]
    config: PathBuf,
    /// Write the result JSON here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct NoiseSweepArgs {
    /// Sweep config (TOML or JSON).
    #[arg(long)]
    config: PathBuf,
    /// CSV destination (eta, median_l2 per row).
    #[arg(long)]
    output: PathBuf,
    /// Optionally also write the full report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Dense matrix as headerless CSV, one row per line.
    #[arg(long)]
    matrix: PathBuf,
    /// Support size r >= 2 to certify.
    #[arg(long)]
    r: usize,
    /// Cone parameter in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    nu: f64,
    /// Abort if the support enumeration exceeds this count.
    #[arg(long, default_value_t = ENUMERATION_CAP)]
    cap: u128,
    /// Also sample this many cone vectors and report the empirical minimum.
    #[arg(long)]
    cone_samples: Option<usize>,
    /// Write the certificate JSON here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct StructureCheckArgs {
    /// Structure-check config (TOML or JSON).
    #[arg(long)]
    config: PathBuf,
    /// Write the report JSON here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ParamsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r: usize,
    /// Budget knob kappa4 (2^{s0} = kappa4 n / r).
    #[arg(long, default_value_t = 1.0)]
    kappa4: f64,
    /// Write the parameter JSON here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn emit<T: serde::Serialize>(value: &T, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => io::write_json_pretty(path, value)
            .with_context(|| format!("writing {}", path.display()))?,
        None => println!("{}", serde_json::to_string_pretty(value)?),
    }
    Ok(())
}

fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    io::read_config(path).with_context(|| format!("loading config {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Recover(args) => {
            let xi = io::read_vector_binary(&args.xi)
                .with_context(|| format!("reading generator {}", args.xi.display()))?;
            let mask: SelectorMask = io::read_json(&args.mask)
                .with_context(|| format!("reading mask {}", args.mask.display()))?;
            let y = io::read_vector_binary(&args.y)
                .with_context(|| format!("reading measurements {}", args.y.display()))?;
            let config: SolverConfig = match &args.config {
                Some(path) => load_config(path)?,
                None => SolverConfig::default(),
            };
            let b = PartialCirculantOperator::from_parts(&xi, mask)?;
            let result = solve_bpdn(&b, &y, &config)?;
            let gap = certify_optimality(&b, &y, &config, &result)?;
            emit(&json!({ "result": result, "gap": gap }), args.output.as_deref())
        }
        Command::PhaseDiagram(args) => {
            let mut config: ExperimentConfig = load_config(&args.config)?;
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            let diagram = run_phase_diagram(&config)?;
            io::write_text(&args.output, &phase_csv(&diagram))
                .with_context(|| format!("writing {}", args.output.display()))?;
            if let Some(path) = &args.json {
                io::write_json_pretty(path, &diagram)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(())
        }
        Command::MinM(args) => {
            let mut config: MinMConfig = load_config(&args.config)?;
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            let result = estimate_min_m(&config)?;
            emit(&result, args.output.as_deref())
        }
        Command::NoiseSweep(args) => {
            let mut config: NoiseSweepConfig = load_config(&args.config)?;
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            let report = run_noise_sweep(&config)?;
            io::write_text(&args.output, &noise_csv(&report))
                .with_context(|| format!("writing {}", args.output.display()))?;
            if let Some(path) = &args.json {
                io::write_json_pretty(path, &report)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(())
        }
        Command::Certify(args) => {
            let a = io::read_matrix_csv(&args.matrix)
                .with_context(|| format!("reading matrix {}", args.matrix.display()))?;
            let seed = cli.seed.unwrap_or(0);
            let cert = lm14_certify(&a, args.r, args.nu, args.cap, seed)?;
            match args.cone_samples {
                Some(samples) => {
                    let cone = cone_check(&a, &cert, samples, seed)?;
                    emit(
                        &json!({ "certificate": cert, "cone": cone }),
                        args.output.as_deref(),
                    )
                }
                None => emit(&cert, args.output.as_deref()),
            }
        }
        Command::StructureCheck(args) => {
            let mut config: StructureConfig = load_config(&args.config)?;
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            let report = structure_check(&config)?;
            emit(&report, args.output.as_deref())
        }
        Command::Params(args) => {
            let params =
                compute_parameters(args.n, args.r, args.kappa4, &ThetaConstants::default())?;
            emit(&params, args.output.as_deref())
        }
    }
}

fn main() {
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
