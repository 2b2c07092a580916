// Runs a 2-state Kalman filter on the last grid subsystem of a noise-free
// sine-Gordon simulation and checks that, once the gain has settled, its
// one-step prediction equals the ARMAX predictor `w · X(k)`.

use nalgebra::{DMatrix, DVector};
use wavefdi::armax::{build_regressor, kf_to_armax, subsystem_model, ArmaxModel};
use wavefdi::kalman::FilterState;
use wavefdi::simulator::{simulate, InitialProfile, PlantIntegrator, SimConfig};
use wavefdi::wave_model::{odd_sensor_layout, position_index, SineGordonParams, WaveModel};

pub struct ArmaxSummary {
    pub armax: ArmaxModel,
    pub compared_steps: usize,
    pub max_abs_diff: f64,
}

pub fn run_example() -> wavefdi::Result<ArmaxSummary> {
    let params = SineGordonParams {
        c: 0.05,
        k: 0.0405,
        eps: 0.5,
        l: 0.0,
    };
    let model = WaveModel::sine_gordon(&params, 50, 1.0)?;
    let ts = 0.01;
    let steps = 3000;
    let cfg = SimConfig {
        steps,
        process_noise_std: 0.0,
        measurement_noise_std: 0.0,
        integrator: PlantIntegrator::Euler,
        // Pulse next to the right boundary so the last subsystem moves.
        initial_profile: InitialProfile::GaussianPulse {
            center: 46.0,
            width: 3.0,
            amplitude: 1.0,
        },
        ..SimConfig::default()
    };
    let traj = simulate(&model, &cfg, &odd_sensor_layout(model.n), &[])?;

    let grid = model.n;
    let dm = subsystem_model(&model, ts, 1e-3, 1e-4)?;
    let mut fs = FilterState::new(DVector::zeros(2), DMatrix::identity(2, 2), 1);
    let (mut zhat, mut innov, mut input, mut gains) = (vec![], vec![], vec![], vec![]);
    for state in &traj.states {
        let z = DVector::from_element(1, state[position_index(grid)]);
        zhat.push(fs.xhat_prior[0]);
        fs.measurement_update(&dm, &z)?;
        innov.push(fs.innovation[0]);
        gains.push(fs.gain.column(0).into_owned());
        // Noise-free run: the subsystem input is known exactly.
        let v = model.subsystem_input(grid, state);
        input.push(v);
        fs.time_update(&dm, &DVector::from_element(1, v))?;
    }

    // First step at which the gain history passes the steady-state check.
    let settle = (1..=steps)
        .find(|&k| kf_to_armax(&dm, &gains[..k]).is_ok())
        .ok_or(wavefdi::Error::NotSteadyState {
            max_change: f64::NAN,
        })?;
    let armax = kf_to_armax(&dm, &gains[..settle])?;
    let mut max_abs_diff: f64 = 0.0;
    let mut compared_steps = 0;
    for k in settle..steps - 1 {
        let x = build_regressor(&zhat, &input, &innov, k)?;
        max_abs_diff = max_abs_diff.max((armax.predict(&x) - zhat[k + 1]).abs());
        compared_steps += 1;
    }
    println!("gain settled at step {settle}");
    println!("ARMAX weights: {:?}", armax.weights);
    let scale = zhat[settle..].iter().fold(0.0_f64, |m, z| m.max(z.abs()));
    println!("largest |ẑ| in that range: {scale:.4}");
    println!("max |ẑ(k+1) − w·X(k)| over {compared_steps} steps: {max_abs_diff:e}");
    Ok(ArmaxSummary {
        armax,
        compared_steps,
        max_abs_diff,
    })
}

#[allow(dead_code)]
fn main() -> wavefdi::Result<()> {
    run_example().map(|_| ())
}
