mod commands;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use pcls::bench::Precision;
use serde::de::DeserializeOwned;
use serde::Serialize;

use commands::*;
use output::{OutDir, RunHeader};

#[derive(Debug, Parser)]
#[command(name = "pcls-bench", version, about = "Reproducible experiments for parametric constrained least squares")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML file overriding the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Replaces the seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Arithmetic precision; only bench-admm supports f32.
    #[arg(long, global = true)]
    precision: Option<Precision>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    /// Prints the effective config as TOML instead of running.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Hessian conditioning of the condensing paths on random MPC ensembles.
    BenchCondense,
    /// Optimality loss of basis and clustered reductions on a random family.
    BenchBasis,
    /// Single or double precision ADMM on both condensing paths.
    BenchAdmm,
    /// Structured against generic QR factorization of the MPC equalities.
    QrBench,
    /// Closed-loop simulation of the reactor benchmark.
    Closedloop,
    /// Collects closed-loop samples and fits the SVD and clustered reductions.
    TrainReduction,
}

fn load<C: DeserializeOwned + Default>(path: Option<&Path>) -> Result<C> {
    match path {
        None => Ok(C::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

fn f64_only(cli: &Cli, subcommand: &str) -> Result<Precision> {
    match cli.precision {
        None | Some(Precision::F64) => Ok(Precision::F64),
        Some(Precision::F32) => bail!("{subcommand} runs in f64 only"),
    }
}

/// Loads the config, applies the seed override, then runs `body` with a
/// header describing the effective settings.
fn execute<C, S, F>(cli: &Cli, name: &'static str, seed_of: S, precision: Precision, body: F) -> Result<()>
where
    C: DeserializeOwned + Serialize + Default,
    S: Fn(&mut C) -> &mut u64,
    F: FnOnce(&C, &RunHeader, &OutDir) -> Result<()>,
{
    let mut cfg: C = load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        *seed_of(&mut cfg) = seed;
    }
    if cli.print_config {
        print!("{}", toml::to_string(&cfg)?);
        return Ok(());
    }
    let seed = *seed_of(&mut cfg);
    let header = RunHeader::new(name, seed, precision, &cfg)?;
    let out = OutDir::create(&cli.out)?;
    body(&cfg, &header, &out)
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::BenchCondense => {
            let p = f64_only(cli, "bench-condense")?;
            execute(cli, "bench-condense", |c: &mut CondenseConfig| &mut c.seed, p, bench_condense)
        }
        Command::BenchBasis => {
            let p = f64_only(cli, "bench-basis")?;
            execute(cli, "bench-basis", |c: &mut BasisConfig| &mut c.study.seed, p, bench_basis)
        }
        Command::BenchAdmm => {
            let mut cfg: AdmmConfig = load(cli.config.as_deref())?;
            if let Some(p) = cli.precision {
                cfg.precision = p;
            }
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            if cli.print_config {
                print!("{}", toml::to_string(&cfg)?);
                return Ok(());
            }
            cfg.admm.validate()?;
            let header = RunHeader::new("bench-admm", cfg.seed, cfg.precision, &cfg)?;
            bench_admm(&cfg, &header, &OutDir::create(&cli.out)?)
        }
        Command::QrBench => {
            let p = f64_only(cli, "qr-bench")?;
            execute(cli, "qr-bench", |c: &mut QrBenchConfig| &mut c.seed, p, qr_bench_cmd)
        }
        Command::Closedloop => {
            let p = f64_only(cli, "closedloop")?;
            execute(cli, "closedloop", |c: &mut ClosedLoopConfig| &mut c.reference.seed, p, closedloop)
        }
        Command::TrainReduction => {
            let p = f64_only(cli, "train-reduction")?;
            execute(cli, "train-reduction", |c: &mut TrainConfig| &mut c.training.seed, p, train_reduction_cmd)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
