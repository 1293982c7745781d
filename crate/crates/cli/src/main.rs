use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use peakctl_core::config::{load_config, Application, RunConfig, RunKind};
use peakctl_core::run::run;

#[derive(Parser)]
#[command(name = "peakctl", version, about = "Peak-penalized optimal control runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single forward-backward sweep solve.
    Solve(RunArgs),
    /// Solve once per peak weight in `sweep_values`.
    Sweep(RunArgs),
    /// Peak and congestion frontiers for the queue model.
    Pareto(RunArgs),
    /// Compare against exhaustive search over piecewise-constant controls.
    OracleCompare(RunArgs),
    /// Smoothed solver next to the raw indicator dynamics.
    DnCompare(RunArgs),
    /// Print a complete configuration with every default filled in.
    PrintDefaults {
        #[arg(long, value_enum, default_value = "inventory")]
        application: AppArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AppArg {
    Inventory,
    Queue,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps; defaults to the number of hardware threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Accepted for interface stability; runs are deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(kind: RunKind, args: RunArgs) -> ExitCode {
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }
    if let Some(seed) = args.seed {
        log::debug!("ignoring --seed {seed}");
    }
    let mut cfg = match load_config(&args.config) {
        Ok(cfg) => cfg,
        Err(e) => return fail(&peakctl_core::run::RunError::from(e)),
    };
    if cfg.run_kind != kind {
        log::info!("configuration run_kind {:?} replaced by {kind:?}", cfg.run_kind);
        cfg.run_kind = kind;
    }
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    match run(&cfg) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if !outcome.converged {
                log::warn!("not every solve converged; see summary.json");
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &peakctl_core::run::RunError) -> ExitCode {
    eprintln!("peakctl: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Solve(a) => execute(RunKind::Solve, a),
        Command::Sweep(a) => execute(RunKind::SweepSigma, a),
        Command::Pareto(a) => execute(RunKind::Pareto, a),
        Command::OracleCompare(a) => execute(RunKind::OracleCompare, a),
        Command::DnCompare(a) => execute(RunKind::DnCompare, a),
        Command::PrintDefaults { application } => {
            let app = match application {
                AppArg::Inventory => Application::Inventory,
                AppArg::Queue => Application::Queue,
            };
            println!("{}", RunConfig::defaults(app).to_json());
            ExitCode::SUCCESS
        }
    }
}
