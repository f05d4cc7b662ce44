use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use vcc_tdoa::baseline_gcc::gcc_phat;
use vcc_tdoa::harness::{bounds_summary, run_experiment, write_outputs, ExperimentConfig};
use vcc_tdoa::signals::read_iq;
use vcc_tdoa::subspace::HankelConfig;
use vcc_tdoa::tdoa::{vcc_profile_fast, DelayGrid, DEFAULT_MIN_SEPARATION, DEFAULT_PEAK_THRESHOLD};
use vcc_tdoa::{Error, Result};

#[derive(Parser)]
#[command(
    name = "vcc-tdoa",
    version,
    about = "Multipath TDOA estimation with volume cross-correlation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment from a JSON configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the config's `output_dir`, then `results`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan two IQ recordings and print the delay profile as CSV.
    Scan {
        #[arg(long)]
        iq1: PathBuf,
        #[arg(long)]
        iq2: PathBuf,
        #[arg(long, value_enum)]
        algo: Algo,
        /// Hankel window length.
        #[arg(long, default_value_t = 0)]
        m: usize,
        /// Subspace dimension used for both receivers.
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        grid_step_div: usize,
        /// Largest lag in samples; defaults to the whole admissible range.
        #[arg(long)]
        max_lag: Option<usize>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the full-rank condition and, optionally, a volume bound.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        /// Candidate lag in seconds.
        #[arg(long, requires = "mu")]
        candidate_lag_s: Option<f64>,
        /// Autocorrelation level assumed by the bound.
        #[arg(long, requires = "candidate_lag_s")]
        mu: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    VccFast,
    GccPhat,
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run {
            config,
            trials,
            seed,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("results"));
            let results = run_experiment(&cfg)?;
            write_outputs(&dir, &cfg, &results)?;
            for r in &results {
                eprintln!(
                    "snr {:>2} trial {:>3}: mse {:.4} hits {} misses {} false {} ({:.0} ms)",
                    r.snr_index,
                    r.trial_index,
                    r.mse,
                    r.detection.hits,
                    r.detection.misses,
                    r.detection.false_peaks,
                    r.runtime_ms
                );
            }
            println!("{}", dir.display());
            Ok(())
        }
        Command::Scan {
            iq1,
            iq2,
            algo,
            m,
            k,
            grid_step_div,
            max_lag,
            out,
        } => {
            let x1 = read_iq(&iq1)?;
            let x2 = read_iq(&iq2)?;
            let ts = x1.grid().sample_interval_s;
            if matches!(algo, Algo::VccFast) && m < 2 {
                return Err(Error::config(
                    "--m",
                    "VCC_FAST needs a Hankel window of at least 2",
                ));
            }
            let limit = match algo {
                Algo::VccFast => m,
                Algo::GccPhat => x1.len(),
            };
            let grid = match max_lag {
                Some(q) => DelayGrid::symmetric(ts, grid_step_div, q)?,
                None => DelayGrid::full(ts, grid_step_div, limit)?,
            };
            let profile = match algo {
                Algo::VccFast => vcc_profile_fast(&x1, &x2, HankelConfig::new(m), k, k, &grid)?,
                Algo::GccPhat => gcc_phat(&x1, &x2, &grid)?,
            }
            .require_informative()?
            .with_peaks(DEFAULT_PEAK_THRESHOLD, DEFAULT_MIN_SEPARATION);
            for p in profile.peaks() {
                eprintln!("peak {:e} s  value {:e}", p.lag_s, p.value);
            }
            match out {
                Some(path) => std::fs::write(path, profile.to_csv())?,
                None => print!("{}", profile.to_csv()),
            }
            Ok(())
        }
        Command::Bounds {
            config,
            candidate_lag_s,
            mu,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let summary = bounds_summary(&cfg, candidate_lag_s.zip(mu))?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
    }
}
