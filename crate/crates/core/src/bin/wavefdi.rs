use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use wavefdi::fdi::IsolationMode;
use wavefdi::harness::{
    calibrate, estimate, load_config, resolve_output_dir, run_scenario, write_calibration,
    write_estimation, ScenarioConfig, EXIT_ERROR,
};

/// Wave-equation state estimation and fault diagnosis.
#[derive(Parser)]
#[command(name = "wavefdi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Sensitivity,
    Minmax,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and filter; writes trajectory and estimate tables and plots.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full run with fault detection. Exit 3 when a fault is declared.
    Detect {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detection followed by isolation over the configured subsets.
    Isolate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fault-free Monte-Carlo runs of the scenario.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path, seed: Option<u64>) -> wavefdi::Result<ScenarioConfig> {
    let mut cfg = load_config(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> wavefdi::Result<i32> {
    match cli.command {
        Command::Simulate { config, seed, out } => {
            let cfg = load(&config, seed)?;
            let dir = resolve_output_dir(out.as_deref(), &cfg);
            let est = estimate(&cfg)?;
            write_estimation(&cfg, &est, &dir)?;
            println!("wrote {}", dir.display());
            Ok(0)
        }
        Command::Detect { config, seed, out } => {
            let mut cfg = load(&config, seed)?;
            cfg.fdi.isolation = IsolationMode::None;
            let dir = resolve_output_dir(out.as_deref(), &cfg);
            let run = run_scenario(&cfg, &dir)?;
            println!("verdict: {} ({})", run.verdict, dir.display());
            Ok(run.exit_code())
        }
        Command::Isolate {
            config,
            mode,
            seed,
            out,
        } => {
            let mut cfg = load(&config, seed)?;
            cfg.fdi.isolation = match mode {
                Mode::Sensitivity => IsolationMode::Sensitivity,
                Mode::Minmax => IsolationMode::Minmax,
            };
            let dir = resolve_output_dir(out.as_deref(), &cfg);
            let run = run_scenario(&cfg, &dir)?;
            match run.peak_window().and_then(|w| w.best.clone()) {
                Some((label, stat)) => {
                    println!("verdict: {}, most likely: {label} ({stat:.4})", run.verdict)
                }
                None => println!("verdict: {}", run.verdict),
            }
            Ok(run.exit_code())
        }
        Command::Calibrate {
            config,
            trials,
            out,
        } => {
            let cfg = load(&config, None)?;
            let dir = resolve_output_dir(out.as_deref(), &cfg);
            let (runs, summary) = calibrate(&cfg, trials)?;
            write_calibration(&runs, &summary, &dir)?;
            println!(
                "mean t {:.4}, window alarm rate {:.4}, healthy runs {:.4}",
                summary.mean_t, summary.window_alarm_rate, summary.healthy_fraction
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR as u8 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
