use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use relaynet::model::{Mode, SystemConfig};
use relaynet::sim::{self, Algorithm, Experiment, SimOptions};
use relaynet::{Error, Result};

#[derive(Parser)]
#[command(name = "relaynet", version, about = "Min-max MSE design for MIMO relay networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo sweep over the source power and write a CSV.
    Simulate(SimulateArgs),
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// System configuration file (key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// mse, ber or convergence.
    #[arg(long, default_value = "mse")]
    experiment: Experiment,
    /// Overrides the mode in the configuration file.
    #[arg(long)]
    mode: Option<Mode>,
    /// Comma-separated: iterative, simplified, naf (or full names such as
    /// iterative-oneway).
    #[arg(long, default_value = "iterative,simplified,naf")]
    algorithms: String,
    /// Source powers in dB as start:step:stop (inclusive) or one value.
    #[arg(long, default_value = "0:5:25")]
    ps_db: String,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Bits per transmitter and trial in the BER experiment
    /// (default 1000 N_b).
    #[arg(long)]
    bits_per_trial: Option<usize>,
    /// Convergence threshold of the iterative designs.
    #[arg(long)]
    tol: Option<f64>,
    /// Write every conic program to `<out>.subproblems/`.
    #[arg(long)]
    dump_subproblems: bool,
}

fn parse_axis(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("bad --ps-db '{spec}', expected start:step:stop"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match parts[..] {
        [v] => Ok(vec![v]),
        [start, step, stop] if step > 0.0 && stop >= start => {
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect())
        }
        _ => Err(bad()),
    }
}

fn simulate(args: SimulateArgs) -> Result<bool> {
    let mut cfg = SystemConfig::from_file(&args.config)?;
    if let Some(mode) = args.mode {
        cfg.mode = mode;
        cfg.validate()?;
    }
    let algorithms: Vec<Algorithm> = args
        .algorithms
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| Algorithm::parse_for(s, cfg.mode))
        .collect::<Result<_>>()?;
    let axis = parse_axis(&args.ps_db)?;
    let mut opts = SimOptions { workers: args.workers, ..Default::default() };
    if let Some(tol) = args.tol {
        opts.settings.tol = tol;
    }
    if args.dump_subproblems {
        let mut dir = args.out.clone().into_os_string();
        dir.push(".subproblems");
        opts.dump_dir = Some(dir.into());
    }
    let result = match args.experiment {
        Experiment::Mse => sim::run_mse_sweep(&cfg, &algorithms, &axis, args.trials, args.seed, &opts)?,
        Experiment::Convergence => sim::run_convergence(&cfg, &algorithms, &axis, args.trials, args.seed, &opts)?,
        Experiment::Ber => {
            let nb = (0..cfg.users()).map(|j| cfg.streams(j)).max().unwrap_or(1);
            let bits = args.bits_per_trial.unwrap_or(1000 * nb);
            sim::run_ber_sweep(&cfg, &algorithms, &axis, args.trials, bits, args.seed, &opts)?
        }
    };
    sim::emit_csv(&result, &args.out)?;
    for f in &result.failures {
        eprintln!("trial failed: seed {} P_s {} dB {}: {}", f.seed, f.p_s_db, f.algorithm, f.message);
    }
    eprintln!(
        "{} trials, {} failed, wrote {}",
        result.records.len() + result.failures.len(),
        result.failures.len(),
        args.out.display()
    );
    Ok(!result.degraded())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(args) => match simulate(args) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => {
                eprintln!("more than 5% of the trials failed");
                ExitCode::from(2)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::parse_axis;

    #[test]
    fn axis_parsing() {
        assert_eq!(parse_axis("0:5:25").unwrap(), vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0]);
        assert_eq!(parse_axis("20").unwrap(), vec![20.0]);
        assert_eq!(parse_axis("0:0.1:0.3").unwrap(), vec![0.0, 0.1, 0.2, 0.3]);
        assert!(parse_axis("5:1").is_err());
        assert!(parse_axis("5:-1:0").is_err());
    }
}
