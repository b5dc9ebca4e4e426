use std::path::PathBuf;
use std::process::ExitCode;

use aerowrite_cli::{config::MAX_SEED, execute, sweep, MissionConfig, SweepAxis, SweepValue};
use clap::{Parser, Subcommand};

/// Closed-loop aerial writing simulator. Log verbosity follows RUST_LOG
/// (default `info`).
#[derive(Parser)]
#[command(name = "aerowrite", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Overrides the seed in the config.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(..=MAX_SEED))]
    seed: Option<u64>,
    /// Overrides the output directory in the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulates one mission and writes log.csv, stats.csv, overlay.svg and report.txt.
    Run { config: PathBuf },
    /// Runs the mission once per value and writes sweep.csv plus one directory per run.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated values: v_max[:a_max] in m/s for velocity, cap height in m for size.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<String>,
    },
    /// Prints the canonical form of a config.
    Canonical { config: PathBuf },
}

fn load(path: &PathBuf, cli: &Cli) -> Result<MissionConfig, ExitCode> {
    let mut cfg = MissionConfig::load(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })?;
    if let Some(s) = cli.seed {
        cfg.plant.seed = s;
    }
    if let Some(d) = &cli.out_dir {
        cfg.output.dir = d.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match real_main(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}

fn real_main(cli: &Cli) -> Result<(), ExitCode> {
    match &cli.command {
        Command::Canonical { config } => {
            print!("{}", load(config, cli)?.to_canonical());
        }
        Command::Run { config } => {
            let cfg = load(config, cli)?;
            let dir = cfg.output.dir.clone();
            match execute(&cfg, &dir) {
                Ok(o) => {
                    print!("{}", aerowrite_cli::run::report(&o));
                    println!("controller cycle: median {:.2} ms", o.median_cycle_ms());
                    println!("artifacts: {}", dir.display());
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return Err(ExitCode::from(e.exit_code() as u8));
                }
            }
        }
        Command::Sweep { config, axis, values } => {
            let cfg = load(config, cli)?;
            let values = values.iter().map(|v| SweepValue::parse(*axis, v)).collect::<Result<Vec<_>, _>>().map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(2)
            })?;
            let dir = cfg.output.dir.clone();
            let rows = sweep(&cfg, *axis, &values, cfg.plant.seed, &dir).map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(2)
            })?;
            let failed = rows.iter().filter(|r| !r.succeeded()).count();
            println!("{} runs, {failed} failed; summary in {}", rows.len(), dir.join(aerowrite_cli::sweep::SWEEP_FILE).display());
            if failed > 0 {
                return Err(ExitCode::from(3));
            }
        }
    }
    Ok(())
}
