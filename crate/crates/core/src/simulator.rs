//! Ground-truth simulation of the semi-discrete wave dynamics, the sensor
//! model, and fault injection.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::wave_model::{build_state_space, WaveModel};

/// Initial position profile; velocities start at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum InitialProfile {
    Zero,
    /// `amplitude · exp(−((i − center)/width)²)` over grid index `i` (1-based).
    GaussianPulse {
        center: f64,
        width: f64,
        amplitude: f64,
    },
    /// Standing wave `amplitude · sin(mode·π·i/(N+1))`, an eigenvector of
    /// the Dirichlet Laplacian.
    SineMode {
        mode: usize,
        amplitude: f64,
    },
    /// Either `N` positions or a full interleaved `2N` state.
    Custom {
        values: Vec<f64>,
    },
}

impl InitialProfile {
    pub fn state(&self, n: usize) -> Result<Vec<f64>> {
        let mut y = vec![0.0; 2 * n];
        match self {
            InitialProfile::Zero => {}
            InitialProfile::GaussianPulse {
                center,
                width,
                amplitude,
            } => {
                if !(*width > 0.0) {
                    return Err(Error::Domain("gaussian pulse width must be > 0".into()));
                }
                for i in 0..n {
                    let r = ((i + 1) as f64 - center) / width;
                    y[2 * i] = amplitude * (-r * r).exp();
                }
            }
            InitialProfile::SineMode { mode, amplitude } => {
                if *mode == 0 || *mode > n {
                    return Err(Error::Domain(format!("sine mode must lie in 1..={n}")));
                }
                let h = std::f64::consts::PI * *mode as f64 / (n + 1) as f64;
                for i in 0..n {
                    y[2 * i] = amplitude * (h * (i + 1) as f64).sin();
                }
            }
            InitialProfile::Custom { values } => {
                if values.len() == n {
                    for (i, &v) in values.iter().enumerate() {
                        y[2 * i] = v;
                    }
                } else if values.len() == 2 * n {
                    y.copy_from_slice(values);
                } else {
                    return Err(Error::Dimension(format!(
                        "custom profile needs {n} or {} values, got {}",
                        2 * n,
                        values.len()
                    )));
                }
            }
        }
        ensure_finite(&y, "initial state")?;
        Ok(y)
    }
}

/// How the plant advances between samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PlantIntegrator {
    /// Classical RK4 with `substeps` internal steps per sample.
    #[default]
    Rk4,
    /// One forward-Euler step per sample: exactly the discrete canonical
    /// model `y⁺ = (I + A·Ts)·y + B·Ts·v(y)` that the filter uses.
    Euler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Sampling period.
    pub ts: f64,
    pub steps: usize,
    /// RK4 steps per sample.
    pub substeps: usize,
    pub process_noise_std: f64,
    pub measurement_noise_std: f64,
    pub seed: u64,
    pub initial_profile: InitialProfile,
    #[serde(default)]
    pub integrator: PlantIntegrator,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            ts: 0.01,
            steps: 2000,
            substeps: 4,
            process_noise_std: 1e-4,
            measurement_noise_std: 1e-3,
            seed: 0,
            initial_profile: InitialProfile::GaussianPulse {
                center: 25.5,
                width: 4.0,
                amplitude: 1.0,
            },
            integrator: PlantIntegrator::Rk4,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ts > 0.0) || !self.ts.is_finite() {
            return Err(Error::Domain("Ts must be finite and > 0".into()));
        }
        if self.substeps == 0 {
            return Err(Error::Domain("substeps must be >= 1".into()));
        }
        for (name, s) in [
            ("process noise std", self.process_noise_std),
            ("measurement noise std", self.measurement_noise_std),
        ] {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultKind {
    /// Adds `magnitude` to the reading.
    SensorBias,
    /// Replaces the reading with `magnitude`.
    SensorStuck,
    /// Multiplies the noise draw by `magnitude`.
    SensorNoiseInflation,
    /// Plant `K` becomes `K·(1 + magnitude)`.
    ParamDriftK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parameter {
    K,
}

/// Sensor number (1-based row of `C`) or a plant parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FaultTarget {
    Sensor(usize),
    Parameter(Parameter),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultSpec {
    pub kind: FaultKind,
    pub target: FaultTarget,
    pub magnitude: f64,
    /// First sample at which the fault is active.
    pub onset: usize,
    /// Active samples; unbounded when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<usize>,
}

impl FaultSpec {
    pub fn sensor_bias(sensor: usize, magnitude: f64, onset: usize) -> Self {
        Self {
            kind: FaultKind::SensorBias,
            target: FaultTarget::Sensor(sensor),
            magnitude,
            onset,
            duration: None,
        }
    }

    pub fn k_drift(relative_change: f64, onset: usize) -> Self {
        Self {
            kind: FaultKind::ParamDriftK,
            target: FaultTarget::Parameter(Parameter::K),
            magnitude: relative_change,
            onset,
            duration: None,
        }
    }

    pub fn is_active(&self, step: usize) -> bool {
        step >= self.onset && self.duration.is_none_or(|d| step - self.onset < d)
    }

    pub fn validate(&self, sensor_count: usize) -> Result<()> {
        if !self.magnitude.is_finite() {
            return Err(Error::Domain("fault magnitude must be finite".into()));
        }
        match (self.kind, self.target) {
            (FaultKind::ParamDriftK, FaultTarget::Parameter(Parameter::K)) => Ok(()),
            (FaultKind::ParamDriftK, _) => {
                Err(Error::Sensor("param-drift-K must target \"K\"".into()))
            }
            (_, FaultTarget::Sensor(s)) if s >= 1 && s <= sensor_count => Ok(()),
            (_, FaultTarget::Sensor(s)) => Err(Error::Sensor(format!(
                "fault targets sensor {s}, but only sensors 1..={sensor_count} exist"
            ))),
            (_, FaultTarget::Parameter(_)) => Err(Error::Sensor(
                "sensor fault must target a sensor number".into(),
            )),
        }
    }
}

/// Ground-truth run. Row `k` of every table belongs to time `k·Ts`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub ts: f64,
    /// True interleaved states, `steps × 2N`.
    pub states: Vec<Vec<f64>>,
    /// Sensor readings, `steps × m`.
    pub measurements: Vec<Vec<f64>>,
    /// True virtual inputs `v(y(k))` of the plant, `steps × N`.
    pub inputs: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

fn rk4_substep(model: &WaveModel, y: &mut [f64], h: f64, scratch: &mut [Vec<f64>; 5]) {
    let [k1, k2, k3, k4, tmp] = scratch;
    model.rhs(y, k1);
    for i in 0..y.len() {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    model.rhs(tmp, k2);
    for i in 0..y.len() {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    model.rhs(tmp, k3);
    for i in 0..y.len() {
        tmp[i] = y[i] + h * k3[i];
    }
    model.rhs(tmp, k4);
    for i in 0..y.len() {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Advances `ẏ = A·y + B·v(y)` by one sample with classical RK4 using
/// `substeps` internal steps.
pub fn integrate_step(
    model: &WaveModel,
    state: &[f64],
    ts: f64,
    substeps: usize,
) -> Result<Vec<f64>> {
    integrate_step_at(model, state, ts, substeps, 0)
}

fn integrate_step_at(
    model: &WaveModel,
    state: &[f64],
    ts: f64,
    substeps: usize,
    step: usize,
) -> Result<Vec<f64>> {
    if state.len() != model.state_dim() {
        return Err(Error::Dimension(format!(
            "state has {} entries, model needs {}",
            state.len(),
            model.state_dim()
        )));
    }
    ensure_finite(state, "state")?;
    let substeps = substeps.max(1);
    let h = ts / substeps as f64;
    let dim = state.len();
    let mut y = state.to_vec();
    let mut scratch: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; dim]);
    for _ in 0..substeps {
        rk4_substep(model, &mut y, h, &mut scratch);
    }
    if y.iter().all(|v| v.is_finite()) {
        Ok(y)
    } else {
        Err(Error::IntegrationDiverged { step })
    }
}

fn euler_step(model: &WaveModel, state: &[f64], ts: f64, step: usize) -> Result<Vec<f64>> {
    let mut d = vec![0.0; state.len()];
    model.rhs(state, &mut d);
    let y: Vec<f64> = state.iter().zip(&d).map(|(y, d)| y + ts * d).collect();
    if y.iter().all(|v| v.is_finite()) {
        Ok(y)
    } else {
        Err(Error::IntegrationDiverged { step })
    }
}

/// Noisy, possibly faulty sensor readings `z = C·y + noise`.
///
/// Exactly one normal draw per sensor is consumed whatever the fault set,
/// so the random stream never depends on the faults.
pub fn measure<R: Rng + ?Sized>(
    true_state: &[f64],
    c: &DMatrix<f64>,
    noise_std: f64,
    faults: &[&FaultSpec],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let m = c.nrows();
    for f in faults {
        if f.kind != FaultKind::ParamDriftK {
            f.validate(m)?;
        }
    }
    let y = DVector::from_column_slice(true_state);
    let clean = c * y;
    let mut z = Vec::with_capacity(m);
    for j in 0..m {
        let draw: f64 = rng.sample(StandardNormal);
        let mut noise = noise_std * draw;
        let mut value = clean[j];
        for f in faults {
            if f.target != FaultTarget::Sensor(j + 1) {
                continue;
            }
            match f.kind {
                FaultKind::SensorNoiseInflation => noise *= f.magnitude,
                FaultKind::SensorBias | FaultKind::SensorStuck | FaultKind::ParamDriftK => {}
            }
        }
        value += noise;
        for f in faults {
            if f.target != FaultTarget::Sensor(j + 1) {
                continue;
            }
            match f.kind {
                FaultKind::SensorBias => value += f.magnitude,
                FaultKind::SensorStuck => value = f.magnitude,
                FaultKind::SensorNoiseInflation | FaultKind::ParamDriftK => {}
            }
        }
        z.push(value);
    }
    Ok(z)
}

/// Seeded random source used for every simulation.
pub fn sim_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Full ground-truth run. `param-drift-K` faults change the plant only.
pub fn simulate(
    model: &WaveModel,
    cfg: &SimConfig,
    sensors: &[usize],
    faults: &[FaultSpec],
) -> Result<Trajectory> {
    cfg.validate()?;
    let ss = build_state_space(model, sensors)?;
    for f in faults {
        f.validate(sensors.len())?;
    }
    let mut rng = sim_rng(cfg.seed);
    let mut y = cfg.initial_profile.state(model.n)?;
    let dim = model.state_dim();

    let mut traj = Trajectory {
        ts: cfg.ts,
        states: Vec::with_capacity(cfg.steps),
        measurements: Vec::with_capacity(cfg.steps),
        inputs: Vec::with_capacity(cfg.steps),
    };

    for step in 0..cfg.steps {
        let active: Vec<&FaultSpec> = faults.iter().filter(|f| f.is_active(step)).collect();
        let k_scale: f64 = active
            .iter()
            .filter(|f| f.kind == FaultKind::ParamDriftK)
            .map(|f| 1.0 + f.magnitude)
            .product();
        let plant = if k_scale != 1.0 {
            model.with_k(model.k * k_scale)
        } else {
            model.clone()
        };

        let z = measure(&y, &ss.c, cfg.measurement_noise_std, &active, &mut rng)?;
        traj.inputs.push(plant.virtual_inputs_from_state(&y));
        traj.measurements.push(z);
        traj.states.push(y.clone());

        let mut next = match cfg.integrator {
            PlantIntegrator::Rk4 => integrate_step_at(&plant, &y, cfg.ts, cfg.substeps, step)?,
            PlantIntegrator::Euler => euler_step(&plant, &y, cfg.ts, step)?,
        };
        for v in next.iter_mut().take(dim) {
            let draw: f64 = rng.sample(StandardNormal);
            *v += cfg.process_noise_std * draw;
        }
        y = next;
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave_model::{odd_sensor_layout, Nonlinearity};

    fn linear(n: usize, k: f64) -> WaveModel {
        WaveModel::new(k, Nonlinearity::Zero, n, 1.0).unwrap()
    }

    #[test]
    fn sine_mode_is_a_laplacian_eigenvector() {
        let n = 12;
        let y = InitialProfile::SineMode {
            mode: 3,
            amplitude: 0.5,
        }
        .state(n)
        .unwrap();
        let phi: Vec<f64> = (0..n).map(|i| y[2 * i]).collect();
        let lap = crate::wave_model::laplacian_1d(&phi, 1.0, 0.0, 0.0).unwrap();
        let h = std::f64::consts::PI * 3.0 / (n + 1) as f64;
        let mu = -4.0 * (h / 2.0).sin().powi(2);
        for i in 0..n {
            assert!((lap[i] - mu * phi[i]).abs() < 1e-12);
            assert_eq!(y[2 * i + 1], 0.0);
        }
        assert!(InitialProfile::SineMode {
            mode: 0,
            amplitude: 1.0
        }
        .state(n)
        .is_err());
        assert!(InitialProfile::SineMode {
            mode: n + 1,
            amplitude: 1.0
        }
        .state(n)
        .is_err());
    }

    fn energy(model: &WaveModel, y: &[f64]) -> f64 {
        let n = model.n;
        let kin: f64 = (0..n).map(|i| 0.5 * y[2 * i + 1].powi(2)).sum();
        let mut pot = 0.0;
        let pos = |i: isize| -> f64 {
            if i < 0 || i as usize >= n {
                0.0
            } else {
                y[2 * i as usize]
            }
        };
        for i in -1..(n as isize) {
            pot += (pos(i + 1) - pos(i)).powi(2);
        }
        kin + 0.5 * model.coupling_a() * pot
    }

    #[test]
    fn zero_dynamics_leave_state_unchanged() {
        // K must be positive for a valid model, so exercise the K→0 limit
        // with coupling far below f64 resolution of the state.
        let model = linear(5, 1e-300);
        let y: Vec<f64> = (0..10)
            .map(|i| if i % 2 == 0 { i as f64 } else { 0.0 })
            .collect();
        let out = integrate_step(&model, &y, 0.1, 3).unwrap();
        let diff = out
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-250);
    }

    #[test]
    fn undamped_linear_mode_conserves_energy() {
        let n = 20;
        let model = linear(n, 0.5);
        let mut y = vec![0.0; 2 * n];
        for i in 0..n {
            y[2 * i] = (std::f64::consts::PI * (i + 1) as f64 / (n + 1) as f64).sin();
        }
        let e0 = energy(&model, &y);
        for _ in 0..1000 {
            y = integrate_step(&model, &y, 1e-3, 1).unwrap();
        }
        let drift = (energy(&model, &y) - e0).abs() / e0;
        assert!(drift < 1e-6, "relative energy drift {drift:e}");
    }

    #[test]
    fn rk4_converges_at_fourth_order() {
        let model = WaveModel::new(
            0.8,
            Nonlinearity::SineGordon {
                c: 0.1,
                eps: 1.0,
                l: 0.1,
            },
            8,
            1.0,
        )
        .unwrap();
        let y0: Vec<f64> = (0..16).map(|i| 0.3 * ((i as f64) * 0.7).sin()).collect();
        let ts = 0.5;
        let reference = integrate_step(&model, &y0, ts, 400).unwrap();
        let err = |sub: usize| -> f64 {
            let y = integrate_step(&model, &y0, ts, sub).unwrap();
            y.iter()
                .zip(&reference)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(4) / err(8);
        assert!((ratio - 16.0).abs() < 2.0, "error ratio {ratio}");
    }

    #[test]
    fn divergence_is_reported() {
        let model = linear(4, 1e30);
        let y: Vec<f64> = (0..8)
            .map(|i| if i % 2 == 0 { 1e300 } else { -1e300 })
            .collect();
        assert!(matches!(
            integrate_step(&model, &y, 1.0, 1),
            Err(Error::IntegrationDiverged { .. })
        ));
    }

    #[test]
    fn noiseless_measurement_selects_positions() {
        let model = linear(6, 1.0);
        let ss = build_state_space(&model, &[2, 5]).unwrap();
        let y: Vec<f64> = (0..12).map(|i| i as f64 * 1.5).collect();
        let z = measure(&y, &ss.c, 0.0, &[], &mut sim_rng(1)).unwrap();
        assert_eq!(z, vec![y[2], y[8]]);
    }

    #[test]
    fn bias_on_sensor_22_shifts_state_85() {
        let model = linear(50, 0.0405);
        let ss = build_state_space(&model, &odd_sensor_layout(50)).unwrap();
        let y: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).cos()).collect();
        let fault = FaultSpec::sensor_bias(22, 0.5, 0);
        let z = measure(&y, &ss.c, 0.0, &[&fault], &mut sim_rng(3)).unwrap();
        let clean = measure(&y, &ss.c, 0.0, &[], &mut sim_rng(3)).unwrap();
        assert_eq!(z[21], y[84] + 0.5);
        for j in (0..25).filter(|&j| j != 21) {
            assert_eq!(z[j], clean[j]);
        }
    }

    #[test]
    fn stuck_and_inflation_faults() {
        let model = linear(4, 1.0);
        let ss = build_state_space(&model, &[1, 3]).unwrap();
        let y = vec![1.0, 0.0, 2.0, 0.0, 3.0, 0.0, 4.0, 0.0];
        let stuck = FaultSpec {
            kind: FaultKind::SensorStuck,
            target: FaultTarget::Sensor(2),
            magnitude: -7.0,
            onset: 0,
            duration: None,
        };
        let z = measure(&y, &ss.c, 0.1, &[&stuck], &mut sim_rng(0)).unwrap();
        assert_eq!(z[1], -7.0);

        let inflate = FaultSpec {
            kind: FaultKind::SensorNoiseInflation,
            magnitude: 10.0,
            ..stuck.clone()
        };
        let base = measure(&y, &ss.c, 0.1, &[], &mut sim_rng(5)).unwrap();
        let z = measure(&y, &ss.c, 0.1, &[&inflate], &mut sim_rng(5)).unwrap();
        assert!(((z[1] - 3.0) - 10.0 * (base[1] - 3.0)).abs() < 1e-12);
        assert_eq!(z[0], base[0]);
    }

    #[test]
    fn fault_on_missing_sensor_is_rejected() {
        let model = linear(4, 1.0);
        let ss = build_state_space(&model, &[1, 3]).unwrap();
        let f = FaultSpec::sensor_bias(3, 1.0, 0);
        assert!(matches!(
            measure(&[0.0; 8], &ss.c, 0.0, &[&f], &mut sim_rng(0)),
            Err(Error::Sensor(_))
        ));
    }

    #[test]
    fn fault_windows() {
        let f = FaultSpec {
            duration: Some(3),
            ..FaultSpec::sensor_bias(1, 1.0, 10)
        };
        assert!(!f.is_active(9));
        assert!(f.is_active(10) && f.is_active(12));
        assert!(!f.is_active(13));
        assert!(FaultSpec::k_drift(0.01, 5).is_active(1_000_000));
    }

    #[test]
    fn empty_run() {
        let model = linear(5, 1.0);
        let cfg = SimConfig {
            steps: 0,
            ..SimConfig::default()
        };
        assert!(simulate(&model, &cfg, &[1, 3, 5], &[]).unwrap().is_empty());
    }

    #[test]
    fn default_scenario_dimensions() {
        let model = linear(50, 0.0405);
        let cfg = SimConfig {
            steps: 20,
            ..SimConfig::default()
        };
        let traj = simulate(&model, &cfg, &odd_sensor_layout(50), &[]).unwrap();
        assert_eq!(traj.len(), 20);
        assert!(traj.states.iter().all(|s| s.len() == 100));
        assert!(traj.measurements.iter().all(|z| z.len() == 25));
        assert!(traj.inputs.iter().all(|v| v.len() == 50));
    }

    #[test]
    fn k_drift_leaves_prefix_untouched() {
        let model = WaveModel::new(
            0.0405,
            Nonlinearity::SineGordon {
                c: 0.05,
                eps: 0.5,
                l: 0.0,
            },
            12,
            1.0,
        )
        .unwrap();
        let cfg = SimConfig {
            steps: 800,
            seed: 11,
            ..SimConfig::default()
        };
        let sensors = odd_sensor_layout(12);
        let clean = simulate(&model, &cfg, &sensors, &[]).unwrap();
        let drift = simulate(&model, &cfg, &sensors, &[FaultSpec::k_drift(0.01, 500)]).unwrap();
        assert_eq!(clean.states[..=500], drift.states[..=500]);
        assert_eq!(clean.measurements[..=500], drift.measurements[..=500]);
        assert_ne!(clean.states[501..], drift.states[501..]);
    }

    #[test]
    fn seeded_runs_are_bit_identical() {
        let model = linear(8, 0.3);
        let cfg = SimConfig {
            steps: 50,
            seed: 99,
            ..SimConfig::default()
        };
        let a = simulate(&model, &cfg, &[1, 4, 8], &[]).unwrap();
        let b = simulate(&model, &cfg, &[1, 4, 8], &[]).unwrap();
        assert_eq!(a, b);
        let bits = |t: &Trajectory| -> Vec<u64> {
            t.measurements
                .iter()
                .flatten()
                .map(|v| v.to_bits())
                .collect()
        };
        assert_eq!(bits(&a), bits(&b));
    }
}
