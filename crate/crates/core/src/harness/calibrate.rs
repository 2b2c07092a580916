//! Fault-free Monte-Carlo runs of a scenario.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::config::ScenarioConfig;
use super::csv::{number, CsvTable};
use super::scenario::{execute, WindowResult};
use crate::error::{Error, Result};
use crate::fdi::Verdict;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTrial {
    pub seed: u64,
    pub windows: Vec<WindowResult>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSummary {
    pub trials: usize,
    pub windows: usize,
    pub lambda: f64,
    pub mean_t: f64,
    pub var_t: f64,
    /// Fraction of windows with `t > λ`.
    pub window_alarm_rate: f64,
    /// Fraction of trials whose overall verdict is healthy.
    pub healthy_fraction: f64,
}

/// Runs `trials` copies of the scenario with all faults removed and seeds
/// `cfg.seed, cfg.seed + 1, …`, in parallel.
pub fn calibrate(
    cfg: &ScenarioConfig,
    trials: usize,
) -> Result<(Vec<CalibrationTrial>, CalibrationSummary)> {
    if trials == 0 {
        return Err(Error::Config {
            key: "trials".into(),
            message: "need at least one trial".into(),
        });
    }
    let mut base = cfg.clone();
    base.faults.clear();
    let results: Result<Vec<CalibrationTrial>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut c = base.clone();
            c.seed = base.seed.wrapping_add(i);
            let mut run = execute(&c)?;
            for w in &mut run.windows {
                w.report = None;
            }
            Ok(CalibrationTrial {
                seed: c.seed,
                windows: run.windows,
                verdict: run.verdict,
            })
        })
        .collect();
    let results = results?;
    let ts: Vec<f64> = results
        .iter()
        .flat_map(|r| r.windows.iter().map(|w| w.t))
        .collect();
    let n = ts.len().max(1) as f64;
    let mean_t = ts.iter().sum::<f64>() / n;
    let var_t = ts.iter().map(|t| (t - mean_t).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let alarms = results
        .iter()
        .flat_map(|r| r.windows.iter())
        .filter(|w| w.verdict == Verdict::Faulty)
        .count();
    let healthy = results
        .iter()
        .filter(|r| r.verdict == Verdict::Healthy)
        .count();
    let lambda = results
        .first()
        .and_then(|r| r.windows.first())
        .map(|w| w.lambda)
        .unwrap_or(f64::NAN);
    let summary = CalibrationSummary {
        trials,
        windows: ts.len(),
        lambda,
        mean_t,
        var_t,
        window_alarm_rate: alarms as f64 / n,
        healthy_fraction: healthy as f64 / trials as f64,
    };
    Ok((results, summary))
}

/// Writes `calibration.csv` and `calibration_summary.txt`.
pub fn write_calibration(
    trials: &[CalibrationTrial],
    summary: &CalibrationSummary,
    dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut table = CsvTable::new(&[
        "seed",
        "window_start",
        "window_end",
        "t",
        "lambda",
        "verdict",
    ]);
    for tr in trials {
        for w in &tr.windows {
            table.push(&[
                tr.seed.to_string(),
                w.start.to_string(),
                w.end.to_string(),
                number(w.t),
                number(w.lambda),
                w.verdict.to_string(),
            ])?;
        }
    }
    table.write(&dir.join("calibration.csv"))?;
    let mut text = String::new();
    let _ = writeln!(text, "trials: {}", summary.trials);
    let _ = writeln!(text, "windows: {}", summary.windows);
    let _ = writeln!(text, "threshold: {:.6}", summary.lambda);
    let _ = writeln!(text, "mean t: {:.6}", summary.mean_t);
    let _ = writeln!(text, "variance of t: {:.6}", summary.var_t);
    let _ = writeln!(text, "window alarm rate: {:.6}", summary.window_alarm_rate);
    let _ = writeln!(text, "healthy runs: {:.6}", summary.healthy_fraction);
    let path = dir.join("calibration_summary.txt");
    std::fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
