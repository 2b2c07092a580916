//! End-to-end scenario runs: simulate, filter, diagnose, write artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{FdiMethod, GainMode, InitialEstimate, ScenarioConfig};
use super::csv::{number, CsvTable};
use super::plot::{Chart, PALETTE};
use crate::armax::{steady_state_armax, subsystem_model, ArmaxModel, ARMAX_ORDER};
use crate::error::{Error, Result};
use crate::fdi::{
    run_fdi_pipeline, sliding_windows, subset_label, FdiReport, FdiSettings, IsolationMode,
    ResidualBatch, SubsystemSignals, Verdict,
};
use crate::kalman::{
    discretize, run_filter, run_filter_steady, solve_dare, FilterRun, FilterState,
};
use crate::simulator::{sim_rng, simulate, FaultTarget, Trajectory};
use crate::wave_model::{position_index, WaveModel};

/// Exit status for a healthy run.
pub const EXIT_HEALTHY: i32 = 0;
/// Exit status for any error.
pub const EXIT_ERROR: i32 = 1;
/// Exit status when a fault is declared.
pub const EXIT_FAULT: i32 = 3;

/// Outcome of one test window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowResult {
    /// First sample of the window.
    pub start: usize,
    /// One past the last sample.
    pub end: usize,
    pub t: f64,
    pub lambda: f64,
    pub verdict: Verdict,
    /// Label and statistic of the most likely culprit (weight subset or
    /// sensor), when one was computed.
    pub best: Option<(String, f64)>,
    /// Full report of the ARMAX-weight test.
    pub report: Option<FdiReport>,
}

/// Simulation and filter output of a scenario.
#[derive(Debug, Clone)]
pub struct Estimation {
    pub model: WaveModel,
    pub sensors: Vec<usize>,
    pub trajectory: Trajectory,
    pub filter: FilterRun,
}

impl Estimation {
    /// Mean `|innovation|` per sensor over samples `from..`.
    pub fn innovation_magnitudes(&self, from: usize) -> Vec<f64> {
        let recs = tail(&self.filter.records, from);
        let m = self.sensors.len();
        let mut acc = vec![0.0; m];
        for r in recs {
            for (a, e) in acc.iter_mut().zip(r.innovation.iter()) {
                *a += e.abs();
            }
        }
        acc.iter().map(|a| a / recs.len().max(1) as f64).collect()
    }

    /// Mean absolute position-estimate error per grid point over samples `from..`.
    pub fn position_errors(&self, from: usize) -> Vec<f64> {
        let n = self.model.n;
        let start = from.min(self.filter.len().saturating_sub(1));
        let count = self.filter.len() - start;
        let mut acc = vec![0.0; n];
        for k in start..self.filter.len() {
            let est = &self.filter.records[k].xhat;
            let truth = &self.trajectory.states[k];
            for (i, a) in acc.iter_mut().enumerate() {
                let p = position_index(i + 1);
                *a += (est[p] - truth[p]).abs();
            }
        }
        acc.iter().map(|a| a / count.max(1) as f64).collect()
    }
}

fn tail<T>(v: &[T], from: usize) -> &[T] {
    if from < v.len() {
        &v[from..]
    } else {
        v
    }
}

/// Everything a scenario produced.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub config: ScenarioConfig,
    pub estimation: Estimation,
    pub windows: Vec<WindowResult>,
    pub verdict: Verdict,
    /// Steady-state ARMAX model of the monitored subsystem under nominal `K`.
    pub armax: Option<ArmaxModel>,
    pub signals: Option<SubsystemSignals>,
}

impl ScenarioRun {
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Healthy => EXIT_HEALTHY,
            Verdict::Faulty => EXIT_FAULT,
        }
    }

    /// Window with the largest statistic.
    pub fn peak_window(&self) -> Option<&WindowResult> {
        self.windows.iter().max_by(|a, b| a.t.total_cmp(&b.t))
    }
}

/// Simulates the plant and runs the configured filter.
pub fn estimate(cfg: &ScenarioConfig) -> Result<Estimation> {
    cfg.validate()?;
    let model = cfg.model.build()?;
    let sensors = cfg.sensor_layout();
    let trajectory = simulate(&model, &cfg.sim_config(), &sensors, &cfg.faults)?;
    let ss = model.state_space(&sensors)?;
    let dm = discretize(&ss, cfg.simulation.ts, cfg.filter.discretization)?
        .with_isotropic_noise(cfg.filter_q(), cfg.filter_r())?;
    let dim = model.state_dim();
    let truth = DVector::from_column_slice(&trajectory.states[0]);
    let (p0, steady) = match cfg.filter.gain {
        GainMode::TimeVarying => (DMatrix::identity(dim, dim) * cfg.filter.p0, None),
        GainMode::SteadyState => {
            let steady = solve_dare(&dm)?;
            (steady.p_prior.clone(), Some(steady))
        }
    };
    let x0 = match cfg.filter.initial_estimate {
        InitialEstimate::Zero => DVector::zeros(dim),
        InitialEstimate::Truth => truth,
        InitialEstimate::Sampled => truth + gaussian_draw(&p0, cfg.seed),
    };
    let filter = match steady {
        None => run_filter(
            &dm,
            &model,
            &trajectory.measurements,
            FilterState::new(x0, p0, sensors.len()),
        )?,
        Some(steady) => run_filter_steady(&dm, &model, &trajectory.measurements, x0, &steady)?,
    };
    Ok(Estimation {
        model,
        sensors,
        trajectory,
        filter,
    })
}

/// Zero-mean Gaussian vector with covariance `p`, from its own random
/// stream so the plant noise sequence is unaffected.
fn gaussian_draw(p: &DMatrix<f64>, seed: u64) -> DVector<f64> {
    let mut rng = sim_rng(seed);
    rng.set_stream(1);
    let eig = SymmetricEigen::new(p.clone());
    let xi = DVector::from_fn(p.nrows(), |_, _| rng.sample::<f64, _>(StandardNormal));
    let scaled = DVector::from_fn(p.nrows(), |i, _| eig.eigenvalues[i].max(0.0).sqrt() * xi[i]);
    &eig.eigenvectors * scaled
}

fn declare(windows: &[WindowResult], confirm: usize) -> Verdict {
    let mut run = 0;
    for w in windows {
        if w.verdict == Verdict::Faulty {
            run += 1;
            if run >= confirm {
                return Verdict::Faulty;
            }
        } else {
            run = 0;
        }
    }
    Verdict::Healthy
}

fn armax_windows(cfg: &ScenarioConfig, signals: &SubsystemSignals) -> Result<Vec<WindowResult>> {
    let d = &cfg.fdi;
    let settings = FdiSettings {
        alpha: d.alpha,
        threshold: d.threshold,
        lags: d.lags,
        isolation: d.isolation,
        subsets: d.subsets_zero_based(),
    };
    let bounds = sliding_windows(
        d.burn_in.max(1),
        signals.len().saturating_sub(1),
        d.window,
        d.overlap,
    );
    if bounds.is_empty() {
        return Err(Error::InsufficientHistory {
            needed: d.burn_in.max(1) + d.window + 1,
            available: signals.len(),
        });
    }
    bounds
        .into_iter()
        .map(|(start, end)| {
            let batch = signals.batch(start, end)?;
            let report = run_fdi_pipeline(&batch, &settings)?;
            let best = report
                .isolation
                .as_ref()
                .map(|iso| (subset_label(iso.best_subset()), iso.best_statistic()));
            Ok(WindowResult {
                start,
                end,
                t: report.t,
                lambda: report.lambda,
                verdict: report.verdict,
                best,
                report: Some(report),
            })
        })
        .collect()
}

fn innovation_windows(cfg: &ScenarioConfig, est: &Estimation) -> Result<Vec<WindowResult>> {
    let d = &cfg.fdi;
    let m = est.sensors.len();
    let settings = FdiSettings {
        alpha: d.alpha / m as f64,
        threshold: d.threshold,
        lags: d.lags,
        isolation: IsolationMode::None,
        subsets: vec![vec![0]],
    };
    let bounds = sliding_windows(d.burn_in, est.filter.len(), d.window, d.overlap);
    if bounds.is_empty() {
        return Err(Error::InsufficientHistory {
            needed: d.burn_in + d.window,
            available: est.filter.len(),
        });
    }
    let mut out = Vec::with_capacity(bounds.len());
    for (start, end) in bounds {
        let nb = end - start;
        let ones = DMatrix::from_element(nb, 1, 1.0);
        let mut best = (0, f64::NEG_INFINITY, 0.0);
        for j in 0..m {
            let e = DVector::from_fn(nb, |i, _| est.filter.records[start + i].innovation[j]);
            let batch = ResidualBatch::new(e, ones.clone())?;
            // Strongly anti-correlated innovations can drive the
            // lag-corrected variance negative; the plain variance is the
            // fallback.
            let report = match run_fdi_pipeline(&batch, &settings) {
                Err(Error::DegenerateStatistics(_)) => run_fdi_pipeline(
                    &batch,
                    &FdiSettings {
                        lags: 0,
                        ..settings.clone()
                    },
                )?,
                other => other?,
            };
            if report.t > best.1 {
                best = (j, report.t, report.lambda);
            }
        }
        let (j, t, lambda) = best;
        out.push(WindowResult {
            start,
            end,
            t,
            lambda,
            verdict: if t > lambda {
                Verdict::Faulty
            } else {
                Verdict::Healthy
            },
            best: Some((format!("sensor{}", j + 1), t)),
            report: None,
        });
    }
    Ok(out)
}

/// Runs a scenario without touching the file system.
pub fn execute(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    let estimation = estimate(cfg)?;
    let (windows, armax, signals) = match cfg.fdi.method {
        FdiMethod::SensorInnovation => (innovation_windows(cfg, &estimation)?, None, None),
        FdiMethod::ArmaxWeights => {
            let grid = cfg.fdi.monitor_grid;
            let row = estimation
                .sensors
                .iter()
                .position(|&s| s == grid)
                .ok_or_else(|| Error::Config {
                    key: "fdi.monitor_grid".into(),
                    message: format!("grid point {grid} carries no sensor"),
                })?;
            let signals =
                SubsystemSignals::from_filter_run(&estimation.filter, &estimation.model, grid, row);
            let windows = armax_windows(cfg, &signals)?;
            let sub = subsystem_model(
                &estimation.model,
                cfg.simulation.ts,
                cfg.filter_q(),
                cfg.filter_r(),
            )?;
            let armax = steady_state_armax(&sub, &DMatrix::identity(2, 2))
                .ok()
                .map(|(m, _)| m);
            (windows, armax, Some(signals))
        }
    };
    let verdict = declare(&windows, cfg.fdi.confirm);
    Ok(ScenarioRun {
        config: cfg.clone(),
        estimation,
        windows,
        verdict,
        armax,
        signals,
    })
}

/// Output directory: explicit argument, then `output_dir` from the config,
/// then `WAVEFDI_OUT`, then `wavefdi-out`.
pub fn resolve_output_dir(explicit: Option<&Path>, cfg: &ScenarioConfig) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os("WAVEFDI_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("wavefdi-out"))
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

/// `trajectory.csv`: `t, y_true_1..y_true_2N, z_1..z_m`.
pub fn trajectory_table(est: &Estimation) -> Result<CsvTable> {
    let dim = est.model.state_dim();
    let m = est.sensors.len();
    let mut header = vec!["t".to_string()];
    header.extend((1..=dim).map(|i| format!("y_true_{i}")));
    header.extend((1..=m).map(|j| format!("z_{j}")));
    let mut table = CsvTable::new(&header);
    let traj = &est.trajectory;
    for k in 0..traj.len() {
        let t = k as f64 * traj.ts;
        table.push_numbers(
            std::iter::once(t)
                .chain(traj.states[k].iter().copied())
                .chain(traj.measurements[k].iter().copied()),
        )?;
    }
    Ok(table)
}

/// `estimates.csv`: `t, yhat_1..yhat_2N, innov_1..innov_m, trace_P`.
pub fn estimates_table(est: &Estimation) -> Result<CsvTable> {
    let dim = est.model.state_dim();
    let m = est.sensors.len();
    let mut header = vec!["t".to_string()];
    header.extend((1..=dim).map(|i| format!("yhat_{i}")));
    header.extend((1..=m).map(|j| format!("innov_{j}")));
    header.push("trace_P".into());
    let mut table = CsvTable::new(&header);
    for (k, r) in est.filter.records.iter().enumerate() {
        let t = k as f64 * est.trajectory.ts;
        table.push_numbers(
            std::iter::once(t)
                .chain(r.xhat.iter().copied())
                .chain(r.innovation.iter().copied())
                .chain(std::iter::once(r.trace_p)),
        )?;
    }
    Ok(table)
}

/// `fdi_report.csv`: one line per window.
pub fn fdi_table(windows: &[WindowResult]) -> Result<CsvTable> {
    let mut table = CsvTable::new(&[
        "window_start",
        "window_end",
        "t",
        "lambda",
        "verdict",
        "best_subset",
        "t_subset",
    ]);
    for w in windows {
        let (label, stat) = match &w.best {
            Some((l, s)) => (l.clone(), number(*s)),
            None => (String::new(), String::new()),
        };
        table.push(&[
            w.start.to_string(),
            w.end.to_string(),
            number(w.t),
            number(w.lambda),
            w.verdict.to_string(),
            label,
            stat,
        ])?;
    }
    Ok(table)
}

fn matrices_table(windows: &[WindowResult]) -> Result<CsvTable> {
    let mut header = vec!["window_start".to_string(), "matrix".into(), "row".into()];
    header.extend((1..=ARMAX_ORDER).map(|j| format!("c{j}")));
    let mut table = CsvTable::new(&header);
    for w in windows {
        if let Some(r) = &w.report {
            for (name, mat) in [("M", &r.m), ("S", &r.s)] {
                for i in 0..mat.nrows() {
                    let mut row = vec![w.start.to_string(), name.into(), (i + 1).to_string()];
                    row.extend(mat.row(i).iter().map(|v| number(*v)));
                    table.push(&row)?;
                }
            }
        }
    }
    Ok(table)
}

fn regressor_table(signals: &SubsystemSignals, armax: Option<&ArmaxModel>) -> Result<CsvTable> {
    let mut table = CsvTable::new(&["k", "x1", "x2", "x3", "x4", "x5", "e", "armax_prediction"]);
    for k in 1..signals.len().saturating_sub(1) {
        let x =
            crate::armax::build_regressor(&signals.zhat, &signals.input, &signals.innovation, k)?;
        let pred = armax.map(|m| m.predict(&x)).unwrap_or(f64::NAN);
        table.push_numbers(
            std::iter::once(k as f64)
                .chain(x.iter().copied())
                .chain([-signals.innovation[k + 1], pred]),
        )?;
    }
    Ok(table)
}

/// φ(x) at a few instants, truth solid and estimate dashed.
pub fn snapshot_plot(est: &Estimation) -> String {
    let n = est.model.n;
    let len = est.filter.len();
    let picks: Vec<usize> = if len == 0 {
        vec![]
    } else {
        let mut p: Vec<usize> = (0..4).map(|i| i * (len - 1) / 3).collect();
        p.dedup();
        p
    };
    let xs: Vec<f64> = (1..=n).map(|i| i as f64 * est.model.dx).collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut curves = Vec::new();
    for &k in &picks {
        let truth: Vec<f64> = (1..=n)
            .map(|i| est.trajectory.states[k][position_index(i)])
            .collect();
        let hat: Vec<f64> = (1..=n)
            .map(|i| est.filter.records[k].xhat[position_index(i)])
            .collect();
        for v in truth.iter().chain(&hat) {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        curves.push((k, truth, hat));
    }
    let mut chart = Chart::new(
        "φ(x, t): truth (solid) and estimate (dashed)",
        "x",
        "φ",
        (xs[0], xs[n - 1]),
        (lo, hi),
    );
    for (i, (k, truth, hat)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let label = format!("t = {:.2}", *k as f64 * est.trajectory.ts);
        chart.line(&xs, truth, color, false, Some(&label));
        chart.line(&xs, hat, color, true, None);
    }
    chart.render()
}

/// Mean |innovation| per sensor, the largest bar highlighted.
pub fn innovation_plot(magnitudes: &[f64]) -> String {
    let m = magnitudes.len();
    let xs: Vec<f64> = (1..=m).map(|j| j as f64).collect();
    let max = magnitudes.iter().cloned().fold(0.0, f64::max);
    let arg = magnitudes.iter().position(|&v| v == max).unwrap_or(0);
    let colors: Vec<&str> = (0..m)
        .map(|j| if j == arg { PALETTE[1] } else { PALETTE[0] })
        .collect();
    let mut chart = Chart::new(
        "Mean |innovation| per sensor",
        "sensor",
        "mean |innovation|",
        (0.5, m as f64 + 0.5),
        (0.0, max),
    );
    chart.bars(&xs, magnitudes, &colors, 0.7);
    chart.render()
}

/// Test statistic per window with the threshold line.
pub fn statistic_plot(windows: &[WindowResult]) -> String {
    let xs: Vec<f64> = (1..=windows.len()).map(|i| i as f64).collect();
    let ts: Vec<f64> = windows.iter().map(|w| w.t).collect();
    let lambda = windows.first().map(|w| w.lambda).unwrap_or(1.0);
    let tmax = ts.iter().cloned().fold(lambda, f64::max);
    let tmin = ts
        .iter()
        .cloned()
        .filter(|t| *t > 0.0)
        .fold(lambda, f64::min);
    let mut chart = Chart::new(
        "Test statistic per window",
        "window",
        "t",
        (1.0, windows.len().max(2) as f64),
        (0.0, tmax),
    );
    if tmax > 20.0 * lambda {
        chart = chart.log_y(tmin.min(lambda) * 0.5, tmax * 2.0);
    }
    chart.line(&xs, &ts, PALETTE[0], false, Some("t"));
    chart.markers(&xs, &ts, PALETTE[0]);
    chart.hline(lambda, PALETTE[1], Some("threshold"));
    chart.render()
}

fn argmax(v: &[f64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
}

/// The name a value has in scenario files.
fn config_name<T: serde::Serialize>(value: &T) -> String {
    match toml::Value::try_from(value) {
        Ok(toml::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::from("?"),
    }
}

fn estimation_summary(cfg: &ScenarioConfig, est: &Estimation, out: &mut String) {
    let _ = writeln!(out, "scenario: {}", config_name(&cfg.scenario));
    let _ = writeln!(out, "seed: {}", cfg.seed);
    let _ = writeln!(
        out,
        "grid points: {}, sensors: {}, steps: {}, Ts: {}",
        est.model.n,
        est.sensors.len(),
        est.trajectory.len(),
        est.trajectory.ts
    );
    let _ = writeln!(out, "K: {}", est.model.k);
    for (i, f) in cfg.faults.iter().enumerate() {
        let _ = writeln!(
            out,
            "fault {}: {} on {}, magnitude {}, onset {}",
            i + 1,
            config_name(&f.kind),
            match f.target {
                FaultTarget::Sensor(j) => format!("sensor {j}"),
                FaultTarget::Parameter(_) => "K".to_string(),
            },
            f.magnitude,
            f.onset
        );
    }
    let mags = est.innovation_magnitudes(cfg.fdi.burn_in);
    if let Some(j) = argmax(&mags) {
        let _ = writeln!(
            out,
            "largest mean |innovation|: sensor {} (grid point {}), {:.6e}",
            j + 1,
            est.sensors[j],
            mags[j]
        );
    }
    let errs = est.position_errors(cfg.fdi.burn_in);
    if let Some(i) = argmax(&errs) {
        let _ = writeln!(
            out,
            "largest mean position error: grid point {}, {:.6e}",
            i + 1,
            errs[i]
        );
    }
    if let Some(last) = est.filter.records.last() {
        let _ = writeln!(out, "final trace(P): {:.6e}", last.trace_p);
    }
}

/// Writes the estimation artifacts (tables, snapshot and innovation plots).
pub fn write_estimation(cfg: &ScenarioConfig, est: &Estimation, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    trajectory_table(est)?.write(&dir.join("trajectory.csv"))?;
    estimates_table(est)?.write(&dir.join("estimates.csv"))?;
    write_text(&dir.join("snapshots.svg"), &snapshot_plot(est))?;
    write_text(
        &dir.join("innovation.svg"),
        &innovation_plot(&est.innovation_magnitudes(cfg.fdi.burn_in)),
    )?;
    let mut summary = String::new();
    estimation_summary(cfg, est, &mut summary);
    write_text(&dir.join("summary.txt"), &summary)
}

/// Writes every artifact of a full run.
pub fn write_artifacts(run: &ScenarioRun, dir: &Path) -> Result<()> {
    let cfg = &run.config;
    write_estimation(cfg, &run.estimation, dir)?;
    fdi_table(&run.windows)?.write(&dir.join("fdi_report.csv"))?;
    write_text(
        &dir.join("fdi_statistic.svg"),
        &statistic_plot(&run.windows),
    )?;
    if let Some(signals) = &run.signals {
        regressor_table(signals, run.armax.as_ref())?.write(&dir.join("armax_regressors.csv"))?;
    }
    if cfg.fdi.dump_matrices {
        matrices_table(&run.windows)?.write(&dir.join("fdi_matrices.csv"))?;
    }

    let mut summary = String::new();
    estimation_summary(cfg, &run.estimation, &mut summary);
    let _ = writeln!(summary, "fdi method: {}", config_name(&cfg.fdi.method));
    if cfg.fdi.method == FdiMethod::ArmaxWeights {
        let _ = writeln!(summary, "monitored grid point: {}", cfg.fdi.monitor_grid);
        if let Some(m) = &run.armax {
            let w: Vec<String> = m.weights.iter().map(|w| format!("{w:.10e}")).collect();
            let _ = writeln!(summary, "nominal ARMAX weights: [{}]", w.join(", "));
        }
    }
    let faulty = run
        .windows
        .iter()
        .filter(|w| w.verdict == Verdict::Faulty)
        .count();
    let _ = writeln!(
        summary,
        "windows: {} ({} above threshold), threshold: {:.6}",
        run.windows.len(),
        faulty,
        run.windows.first().map(|w| w.lambda).unwrap_or(f64::NAN)
    );
    if let Some(p) = run.peak_window() {
        let _ = write!(
            summary,
            "peak t: {:.6} in window {}..{}",
            p.t, p.start, p.end
        );
        if let Some((label, stat)) = &p.best {
            let _ = write!(summary, ", most likely source: {label} ({stat:.6})");
        }
        summary.push('\n');
    }
    let _ = writeln!(summary, "verdict: {}", run.verdict);
    write_text(&dir.join("summary.txt"), &summary)
}

/// [`execute`] followed by [`write_artifacts`].
pub fn run_scenario(cfg: &ScenarioConfig, dir: &Path) -> Result<ScenarioRun> {
    let run = execute(cfg)?;
    write_artifacts(&run, dir)?;
    Ok(run)
}
