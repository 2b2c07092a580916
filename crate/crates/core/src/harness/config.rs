//! Scenario configuration files.
//!
//! A scenario is a TOML document. Every key is optional: the `scenario`
//! key picks a preset and all other keys override it. Loading an empty
//! file yields the `sensor-fault` preset.
//!
//! | key | sensor-fault | param-change |
//! |---|---|---|
//! | `seed` | 0 | 0 |
//! | `model.n`, `model.dx`, `model.k` | 50, 1.0, 0.04050 | 50, 1.0, 0.04050 |
//! | `model.nonlinearity` | sine-gordon c=0.05 eps=0.5 l=0 | zero |
//! | `simulation.ts`, `.steps`, `.substeps` | 0.01, 2000, 4 | 0.01, 7001, 1 |
//! | `simulation.integrator` | rk4 | euler |
//! | `simulation.process_noise_std` | 1e-4 | 1e-7 |
//! | `simulation.measurement_noise_std` | 1e-3 | 1e-4 |
//! | `simulation.initial_profile` | gaussian pulse at 25.5, width 4 | same |
//! | `sensors` | odd grid points 1, 3, …, 49 | same |
//! | `faults` | bias 0.2 on sensor 22 from step 500 | K +1% from step 0 |
//! | `filter.gain` | time-varying | steady-state |
//! | `filter.initial_estimate` | zero | sampled |
//! | `filter.p0`, `filter.q`, `filter.r` | 1, (process std)², (meas. std)² | same rule |
//! | `fdi.method` | sensor-innovation | armax-weights |
//! | `fdi.monitor_grid` | 25 | 25 |
//! | `fdi.alpha`, `fdi.threshold` | 0.01, quantile | 0.01, quantile |
//! | `fdi.window`, `fdi.overlap`, `fdi.burn_in` | 500, 0.5, 500 | 1000, 0.5, 4000 |
//! | `fdi.lags`, `fdi.confirm` | 3, 2 | 3, 2 |
//! | `fdi.isolation`, `fdi.subsets` | none, singletons + {2,3} | same |
//!
//! `filter.q`/`filter.r` left unset follow the simulation noise levels.
//! `fdi.subsets` use 1-based weight numbers (`[2, 3]` is `{w₂, w₃}`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::armax::ARMAX_ORDER;
use crate::error::{Error, Result};
use crate::fdi::{IsolationMode, ThresholdMode};
use crate::kalman::Discretization;
use crate::simulator::{
    FaultKind, FaultSpec, FaultTarget, InitialProfile, PlantIntegrator, SimConfig,
};
use crate::wave_model::{odd_sensor_layout, Nonlinearity, WaveModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    #[default]
    SensorFault,
    ParamChange,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: usize,
    pub dx: f64,
    pub k: f64,
    pub phi_left: f64,
    pub phi_right: f64,
    pub nonlinearity: Nonlinearity,
}

impl ModelConfig {
    pub fn build(&self) -> Result<WaveModel> {
        WaveModel::new(self.k, self.nonlinearity, self.n, self.dx)?
            .with_boundaries(self.phi_left, self.phi_right)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub ts: f64,
    pub steps: usize,
    pub substeps: usize,
    pub process_noise_std: f64,
    pub measurement_noise_std: f64,
    pub integrator: PlantIntegrator,
    pub initial_profile: InitialProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainMode {
    /// Full Riccati recursion at every step.
    TimeVarying,
    /// Stationary gain from the algebraic Riccati equation.
    SteadyState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialEstimate {
    Zero,
    /// The true initial state.
    Truth,
    /// The true initial state plus a draw from `N(0, P⁻(0))`, so the
    /// estimation error starts out consistent with the filter covariance.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub discretization: Discretization,
    pub gain: GainMode,
    pub initial_estimate: InitialEstimate,
    /// `P⁻(0) = p0·I` for the time-varying filter.
    pub p0: f64,
    /// `Q = q·I`; defaults to the simulated process variance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    /// `R = r·I`; defaults to the simulated measurement variance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FdiMethod {
    /// Local test on the ARMAX weights of the monitored subsystem.
    ArmaxWeights,
    /// Per-sensor test on the innovation mean.
    SensorInnovation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdiConfig {
    pub method: FdiMethod,
    /// 1-based grid point whose subsystem is monitored; must carry a sensor.
    pub monitor_grid: usize,
    pub alpha: f64,
    pub threshold: ThresholdMode,
    pub window: usize,
    pub overlap: f64,
    pub burn_in: usize,
    pub lags: usize,
    /// Consecutive windows above threshold needed to declare a fault.
    pub confirm: usize,
    pub isolation: IsolationMode,
    /// 1-based weight numbers.
    pub subsets: Vec<Vec<usize>>,
    /// Also write `M` and `S` of every window.
    pub dump_matrices: bool,
}

impl FdiConfig {
    /// Subsets as 0-based weight indices.
    pub fn subsets_zero_based(&self) -> Vec<Vec<usize>> {
        self.subsets
            .iter()
            .map(|s| s.iter().map(|w| w - 1).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// 1-based grid indices carrying a position sensor; odd points when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensors: Option<Vec<usize>>,
    pub model: ModelConfig,
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub faults: Vec<FaultSpec>,
    pub filter: FilterConfig,
    pub fdi: FdiConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::preset(ScenarioKind::SensorFault)
    }
}

impl ScenarioConfig {
    pub fn preset(kind: ScenarioKind) -> Self {
        let sim = SimConfig::default();
        let mut cfg = ScenarioConfig {
            scenario: kind,
            seed: 0,
            output_dir: None,
            sensors: None,
            model: ModelConfig {
                n: 50,
                dx: 1.0,
                k: 0.04050,
                phi_left: 0.0,
                phi_right: 0.0,
                nonlinearity: Nonlinearity::SineGordon {
                    c: 0.05,
                    eps: 0.5,
                    l: 0.0,
                },
            },
            simulation: SimulationConfig {
                ts: sim.ts,
                steps: sim.steps,
                substeps: sim.substeps,
                process_noise_std: sim.process_noise_std,
                measurement_noise_std: sim.measurement_noise_std,
                integrator: PlantIntegrator::Rk4,
                initial_profile: sim.initial_profile,
            },
            faults: vec![FaultSpec::sensor_bias(22, 0.2, 500)],
            filter: FilterConfig {
                discretization: Discretization::Euler,
                gain: GainMode::TimeVarying,
                initial_estimate: InitialEstimate::Zero,
                p0: 1.0,
                q: None,
                r: None,
            },
            fdi: FdiConfig {
                method: FdiMethod::SensorInnovation,
                monitor_grid: 25,
                alpha: 0.01,
                threshold: ThresholdMode::Quantile,
                window: 500,
                overlap: 0.5,
                burn_in: 500,
                lags: 3,
                confirm: 2,
                isolation: IsolationMode::None,
                subsets: crate::fdi::default_subsets()
                    .into_iter()
                    .map(|s| s.into_iter().map(|w| w + 1).collect())
                    .collect(),
                dump_matrices: false,
            },
        };
        match kind {
            ScenarioKind::SensorFault => {}
            ScenarioKind::Custom => cfg.faults.clear(),
            ScenarioKind::ParamChange => {
                cfg.model.nonlinearity = Nonlinearity::Zero;
                cfg.simulation.steps = 7001;
                cfg.simulation.substeps = 1;
                cfg.simulation.integrator = PlantIntegrator::Euler;
                cfg.simulation.process_noise_std = 1e-7;
                cfg.simulation.measurement_noise_std = 1e-4;
                cfg.faults = vec![FaultSpec::k_drift(0.01, 0)];
                cfg.filter.gain = GainMode::SteadyState;
                cfg.filter.initial_estimate = InitialEstimate::Sampled;
                cfg.fdi.method = FdiMethod::ArmaxWeights;
                cfg.fdi.window = 1000;
                cfg.fdi.burn_in = 4000;
            }
        }
        cfg
    }

    /// Sensor grid indices in effect.
    pub fn sensor_layout(&self) -> Vec<usize> {
        self.sensors
            .clone()
            .unwrap_or_else(|| odd_sensor_layout(self.model.n))
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            ts: self.simulation.ts,
            steps: self.simulation.steps,
            substeps: self.simulation.substeps,
            process_noise_std: self.simulation.process_noise_std,
            measurement_noise_std: self.simulation.measurement_noise_std,
            seed: self.seed,
            initial_profile: self.simulation.initial_profile.clone(),
            integrator: self.simulation.integrator,
        }
    }

    /// Filter process variance `q`.
    pub fn filter_q(&self) -> f64 {
        self.filter
            .q
            .unwrap_or(self.simulation.process_noise_std.powi(2))
    }

    /// Filter measurement variance `r`.
    pub fn filter_r(&self) -> f64 {
        self.filter
            .r
            .unwrap_or(self.simulation.measurement_noise_std.powi(2))
    }

    /// Parses TOML text, applying the preset named by `scenario`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let user: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config {
            key: e
                .span()
                .map(|s| format!("line {}", line_of(text, s.start)))
                .unwrap_or_else(|| "<document>".into()),
            message: e.message().to_string(),
        })?;
        let kind = match user.get("scenario") {
            None => ScenarioKind::SensorFault,
            Some(v) => ScenarioKind::deserialize(v.clone()).map_err(|e| Error::Config {
                key: "scenario".into(),
                message: e.message().to_string(),
            })?,
        };
        let mut merged = toml::Table::try_from(Self::preset(kind)).map_err(|e| Error::Config {
            key: "<preset>".into(),
            message: e.to_string(),
        })?;
        // `faults` and `sensors` replace the preset list wholesale.
        merge(&mut merged, user);
        let cfg =
            ScenarioConfig::deserialize(toml::Value::Table(merged)).map_err(|e| Error::Config {
                key: "<document>".into(),
                message: e.message().to_string(),
            })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config {
            key: "<document>".into(),
            message: e.to_string(),
        })
    }

    /// Checks cross-field consistency; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: String| Error::Config {
            key: key.to_string(),
            message,
        };
        let n = self.model.n;
        self.model
            .build()
            .map_err(|e| bad("model", e.to_string()))?;
        self.sim_config()
            .validate()
            .map_err(|e| bad("simulation", e.to_string()))?;
        if self.simulation.steps < 2 {
            return Err(bad("simulation.steps", "need at least 2 steps".into()));
        }
        self.simulation
            .initial_profile
            .state(n)
            .map_err(|e| bad("simulation.initial_profile", e.to_string()))?;

        let sensors = self.sensor_layout();
        if sensors.is_empty() {
            return Err(bad("sensors", "at least one sensor is required".into()));
        }
        let mut seen = vec![false; n + 1];
        for (i, &s) in sensors.iter().enumerate() {
            if s == 0 || s > n {
                return Err(bad(
                    &format!("sensors[{i}]"),
                    format!("grid index {s} is outside 1..={n}"),
                ));
            }
            if seen[s] {
                return Err(bad(
                    &format!("sensors[{i}]"),
                    format!("grid index {s} is repeated"),
                ));
            }
            seen[s] = true;
        }

        for (i, f) in self.faults.iter().enumerate() {
            f.validate(sensors.len())
                .map_err(|e| bad(&format!("faults[{i}]"), e.to_string()))?;
            if f.kind == FaultKind::ParamDriftK && !(1.0 + f.magnitude > 0.0) {
                return Err(bad(
                    &format!("faults[{i}].magnitude"),
                    "K drift must keep K positive".into(),
                ));
            }
            if let FaultTarget::Sensor(_) = f.target {
                if f.kind == FaultKind::ParamDriftK {
                    return Err(bad(
                        &format!("faults[{i}].target"),
                        "K drift targets \"K\"".into(),
                    ));
                }
            }
        }

        let fc = &self.filter;
        if !(fc.p0 > 0.0) || !fc.p0.is_finite() {
            return Err(bad("filter.p0", "must be finite and > 0".into()));
        }
        let q = self.filter_q();
        if !(q >= 0.0) || !q.is_finite() {
            return Err(bad("filter.q", "must be finite and >= 0".into()));
        }
        let r = self.filter_r();
        if !(r > 0.0) || !r.is_finite() {
            return Err(bad(
                "filter.r",
                "must be finite and > 0 (set it when the measurement noise is zero)".into(),
            ));
        }

        let d = &self.fdi;
        if !(d.alpha > 0.0 && d.alpha < 1.0) {
            return Err(bad("fdi.alpha", "must lie in (0, 1)".into()));
        }
        if d.window < ARMAX_ORDER.max(d.lags + 1) {
            return Err(bad(
                "fdi.window",
                format!("must be at least {}", ARMAX_ORDER.max(d.lags + 1)),
            ));
        }
        if !(0.0..1.0).contains(&d.overlap) {
            return Err(bad("fdi.overlap", "must lie in [0, 1)".into()));
        }
        if d.confirm == 0 {
            return Err(bad("fdi.confirm", "must be >= 1".into()));
        }
        if d.method == FdiMethod::ArmaxWeights && !sensors.contains(&d.monitor_grid) {
            return Err(bad(
                "fdi.monitor_grid",
                format!("grid point {} carries no sensor", d.monitor_grid),
            ));
        }
        if d.subsets.is_empty() {
            return Err(bad("fdi.subsets", "at least one subset is required".into()));
        }
        for (i, s) in d.subsets.iter().enumerate() {
            if s.is_empty() {
                return Err(bad(&format!("fdi.subsets[{i}]"), "subset is empty".into()));
            }
            let mut seen = [false; ARMAX_ORDER + 1];
            for &w in s {
                if w == 0 || w > ARMAX_ORDER {
                    return Err(bad(
                        &format!("fdi.subsets[{i}]"),
                        format!("weight {w} is outside 1..={ARMAX_ORDER}"),
                    ));
                }
                if seen[w] {
                    return Err(bad(
                        &format!("fdi.subsets[{i}]"),
                        format!("weight {w} is repeated"),
                    ));
                }
                seen[w] = true;
            }
        }
        Ok(())
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Reads and validates a scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ScenarioConfig::from_toml_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_sensor_fault_preset() {
        let cfg = ScenarioConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.model.n, 50);
        assert_eq!(cfg.sensor_layout().len(), 25);
        assert_eq!(cfg.model.k, 0.04050);
    }

    #[test]
    fn scenario_key_selects_preset() {
        let cfg = ScenarioConfig::from_toml_str("scenario = \"param-change\"\n").unwrap();
        assert_eq!(cfg, ScenarioConfig::preset(ScenarioKind::ParamChange));
        let cfg =
            ScenarioConfig::from_toml_str("scenario = \"param-change\"\n[model]\nk = 0.0505\n")
                .unwrap();
        assert_eq!(cfg.model.k, 0.0505);
        assert_eq!(cfg.model.nonlinearity, Nonlinearity::Zero);
    }

    #[test]
    fn round_trip() {
        for kind in [
            ScenarioKind::SensorFault,
            ScenarioKind::ParamChange,
            ScenarioKind::Custom,
        ] {
            let mut cfg = ScenarioConfig::preset(kind);
            cfg.sensors = Some((1..=49).rev().step_by(2).collect());
            cfg.filter.q = Some(2.5e-9);
            cfg.output_dir = Some("out/run".into());
            let text = cfg.to_toml_string().unwrap();
            assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), cfg);
        }
    }

    #[test]
    fn out_of_range_sensor_names_key() {
        let err = ScenarioConfig::from_toml_str("sensors = [1, 3, 51]\n").unwrap_err();
        match err {
            Error::Config { key, .. } => assert_eq!(key, "sensors[2]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_and_syntax_errors() {
        assert!(ScenarioConfig::from_toml_str("[model]\nkk = 1.0\n").is_err());
        match ScenarioConfig::from_toml_str("seed = 1\nseed = = 2\n").unwrap_err() {
            Error::Config { key, .. } => assert_eq!(key, "line 2"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fault_and_subset_validation() {
        let text = "[[faults]]\nkind = \"sensor-bias\"\ntarget = 26\nmagnitude = 0.1\nonset = 0\n";
        match ScenarioConfig::from_toml_str(text).unwrap_err() {
            Error::Config { key, .. } => assert_eq!(key, "faults[0]"),
            other => panic!("{other:?}"),
        }
        let text = "[fdi]\nsubsets = [[1], [6]]\n";
        match ScenarioConfig::from_toml_str(text).unwrap_err() {
            Error::Config { key, .. } => assert_eq!(key, "fdi.subsets[1]"),
            other => panic!("{other:?}"),
        }
        let text =
            "[[faults]]\nkind = \"param-drift-k\"\ntarget = \"K\"\nmagnitude = 0.02\nonset = 10\n";
        let cfg = ScenarioConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.faults, vec![FaultSpec::k_drift(0.02, 10)]);
    }

    #[test]
    fn monitor_grid_needs_a_sensor() {
        let text = "scenario = \"param-change\"\n[fdi]\nmonitor_grid = 24\n";
        match ScenarioConfig::from_toml_str(text).unwrap_err() {
            Error::Config { key, .. } => assert_eq!(key, "fdi.monitor_grid"),
            other => panic!("{other:?}"),
        }
    }
}
