//! Scenario configuration, end-to-end runs, and artifact output.
//!
//! A run simulates the plant, filters the sensor data, applies the
//! configured diagnosis, and writes `trajectory.csv`, `estimates.csv`,
//! `fdi_report.csv`, `summary.txt` and a few SVG plots.

pub mod calibrate;
pub mod config;
pub mod csv;
pub mod plot;
pub mod scenario;

pub use calibrate::{calibrate, write_calibration, CalibrationSummary, CalibrationTrial};
pub use config::{load_config, FdiMethod, GainMode, InitialEstimate, ScenarioConfig, ScenarioKind};
pub use scenario::{
    estimate, execute, resolve_output_dir, run_scenario, write_artifacts, write_estimation,
    Estimation, ScenarioRun, WindowResult, EXIT_ERROR, EXIT_FAULT, EXIT_HEALTHY,
};
