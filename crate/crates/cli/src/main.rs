use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use greenlab_cli::commands::{self, exit_code, Outcome, RunOptions};
use greenlab_cli::config::{self, Experiment, IneqConfig};
use std::path::{Path, PathBuf};

/// Discretised nonlocal Green functions: kernel checks, solves, constants, sweeps.
#[derive(Parser)]
#[command(name = "greenlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Output directory; overrides the config and GREENLAB_OUT.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and assembly.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Single thread and no wall-clock fields; outputs are byte-identical across runs.
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Args)]
struct WithConfig {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the kernel regularity constants.
    CheckKernel(WithConfig),
    /// Solve for the Green function of one source.
    Solve(WithConfig),
    /// Solve and check exponent, symmetry, Harnack ratios and, on balls, the closed form.
    Verify(WithConfig),
    /// Robustness sweep over the configured alphas.
    Sweep(WithConfig),
    /// Randomised checks of the scalar inequalities.
    Ineq {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Compare the solved field with the closed-form ball Green function.
    OracleCompare(WithConfig),
}

fn out_dir(flag: Option<PathBuf>, configured: Option<&str>) -> PathBuf {
    flag.or_else(|| configured.map(PathBuf::from))
        .or_else(|| std::env::var_os("GREENLAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("greenlab-out"))
}

fn options(global: &Global, configured: Option<&str>) -> RunOptions {
    RunOptions {
        out_dir: out_dir(global.out.clone(), configured),
        deterministic: global.deterministic,
        threads: if global.deterministic {
            1
        } else {
            global.threads.unwrap_or_else(rayon::current_num_threads)
        },
    }
}

fn with_experiment(
    path: &Path,
    global: &Global,
    run: fn(&Experiment, &RunOptions) -> Result<Outcome>,
) -> Result<Outcome> {
    let exp = config::load(path)?;
    let opts = options(global, exp.raw.outputs.directory.as_deref());
    run(&exp, &opts)
}

fn run(cli: Cli) -> Result<Outcome> {
    let threads = if cli.global.deterministic {
        Some(1)
    } else {
        cli.global.threads
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let g = &cli.global;
    match cli.command {
        Command::CheckKernel(c) => with_experiment(&c.config, g, commands::check_kernel),
        Command::Solve(c) => with_experiment(&c.config, g, commands::solve),
        Command::Verify(c) => with_experiment(&c.config, g, commands::verify),
        Command::Sweep(c) => with_experiment(&c.config, g, commands::sweep),
        Command::OracleCompare(c) => with_experiment(&c.config, g, commands::oracle_compare),
        Command::Ineq {
            config,
            seed,
            samples,
        } => {
            let (base, sha, dir) = match &config {
                Some(p) => {
                    let exp = config::load(p)?;
                    (
                        exp.raw.ineq.clone(),
                        exp.sha256.clone(),
                        exp.raw.outputs.directory.clone(),
                    )
                }
                None => (IneqConfig::default(), config::sha256_hex(b""), None),
            };
            let opts = options(g, dir.as_deref());
            commands::ineq(
                seed.unwrap_or(base.seed),
                samples.unwrap_or(base.samples),
                &sha,
                &opts,
            )
        }
    }
}

fn main() {
    let result = run(Cli::parse());
    match &result {
        Ok(o) => {
            for line in &o.lines {
                println!("{line}");
            }
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            if !o.passed {
                eprintln!("greenlab: budget check failed");
            }
        }
        Err(e) => eprintln!("greenlab: {e:#}"),
    }
    std::process::exit(exit_code(&result));
}
