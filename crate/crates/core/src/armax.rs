//! ARMAX form of the steady-state Kalman filter on one grid subsystem.
//!
//! For the 2-state subsystem `(y₁,ᵢ, y₂,ᵢ)` with input `vᵢ` and output
//! `y₁,ᵢ`, the one-step predictor of a converged filter satisfies
//!
//! ```text
//! ẑ(k+1) = w · [ẑ(k), ẑ(k−1), v(k−1), ê(k), ê(k−1)]
//! ```
//!
//! with `w = [tr Ad, −det Ad, (Ad·Bd)₁, κ₁, (Ad·κ)₁ − tr(Ad)·κ₁]` and
//! `κ = Ad·K` the predictor-form gain. Under forward-Euler discretization
//! this is `w = [2, −(1 + Ts²·2K/Δx²), Ts², κ₁, κ₂·Ts − κ₁]`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kalman::{steady_state_gain, DiscreteModel};
use crate::wave_model::WaveModel;

/// Number of monitored ARMAX weights.
pub const ARMAX_ORDER: usize = 5;

/// Tolerance on consecutive gain changes for a steady-state gain.
pub const GAIN_TOLERANCE: f64 = 1e-9;

/// Consecutive calm steps required for a steady-state gain.
pub const GAIN_WINDOW: usize = 10;

/// Weights of the scalar ARMAX predictor.
///
/// Regressor layout: `[ẑ(k), ẑ(k−1), v(k−1), ê(k), ê(k−1)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmaxModel {
    pub weights: [f64; ARMAX_ORDER],
}

impl ArmaxModel {
    pub fn predict(&self, regressor: &[f64; ARMAX_ORDER]) -> f64 {
        armax_predict(self, regressor)
    }
}

/// Forward-Euler model of the isolated subsystem at any grid point:
/// `Ad = [[1, Ts], [−2K/Δx²·Ts, 1]]`, `Bd = [0, Ts]ᵀ`, `Cd = [1, 0]`.
pub fn subsystem_model(model: &WaveModel, ts: f64, q: f64, r: f64) -> Result<DiscreteModel> {
    if !(ts > 0.0) || !ts.is_finite() {
        return Err(Error::Domain("Ts must be finite and > 0".into()));
    }
    let b = model.coupling_b();
    DiscreteModel::new(
        DMatrix::from_row_slice(2, 2, &[1.0, ts, b * ts, 1.0]),
        DMatrix::from_row_slice(2, 1, &[0.0, ts]),
        DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        DMatrix::identity(2, 2) * q,
        DMatrix::identity(1, 1) * r,
    )
}

fn check_subsystem(dm: &DiscreteModel) -> Result<()> {
    if dm.state_dim() != 2 || dm.output_dim() != 1 || dm.input_dim() != 1 {
        return Err(Error::Dimension(
            "ARMAX conversion needs a 2-state, single-input, single-output model".into(),
        ));
    }
    if dm.cd[(0, 0)] != 1.0 || dm.cd[(0, 1)] != 0.0 {
        return Err(Error::Domain("subsystem output must be Cd = [1, 0]".into()));
    }
    if dm.bd[(0, 0)] != 0.0 {
        return Err(Error::Domain(
            "input must not reach the output in one step (Cd·Bd ≠ 0)".into(),
        ));
    }
    Ok(())
}

/// ARMAX weights from a fixed measurement-update gain, without checking
/// that the gain is stationary.
pub fn armax_from_gain(dm: &DiscreteModel, gain: &DVector<f64>) -> Result<ArmaxModel> {
    check_subsystem(dm)?;
    if gain.len() != 2 {
        return Err(Error::Dimension(
            "subsystem gain must have 2 entries".into(),
        ));
    }
    let ad = &dm.ad;
    let trace = ad.trace();
    let det = ad[(0, 0)] * ad[(1, 1)] - ad[(0, 1)] * ad[(1, 0)];
    let kappa = ad * gain;
    let ad_kappa = ad * &kappa;
    let ad_bd = ad * &dm.bd;
    Ok(ArmaxModel {
        weights: [
            trace,
            -det,
            ad_bd[(0, 0)],
            kappa[0],
            ad_kappa[0] - trace * kappa[0],
        ],
    })
}

/// ARMAX weights from the recent measurement-gain history of a subsystem
/// filter. The last [`GAIN_WINDOW`] consecutive changes must all be below
/// [`GAIN_TOLERANCE`].
pub fn kf_to_armax(dm: &DiscreteModel, gain_history: &[DVector<f64>]) -> Result<ArmaxModel> {
    if gain_history.len() <= GAIN_WINDOW {
        return Err(Error::NotSteadyState {
            max_change: f64::INFINITY,
        });
    }
    let tail = &gain_history[gain_history.len() - GAIN_WINDOW - 1..];
    let max_change = tail
        .windows(2)
        .map(|w| (&w[1] - &w[0]).amax())
        .fold(0.0, f64::max);
    if !(max_change < GAIN_TOLERANCE) {
        return Err(Error::NotSteadyState { max_change });
    }
    armax_from_gain(dm, gain_history.last().unwrap())
}

/// Steady-state gain of a subsystem model via the Riccati recursion,
/// converted to ARMAX weights.
pub fn steady_state_armax(
    dm: &DiscreteModel,
    p0: &DMatrix<f64>,
) -> Result<(ArmaxModel, DVector<f64>)> {
    let gain = steady_state_gain(dm, p0, GAIN_TOLERANCE, GAIN_WINDOW, 1_000_000)?;
    let gain = gain.column(0).into_owned();
    Ok((armax_from_gain(dm, &gain)?, gain))
}

/// `X(k) = [ẑ(k), ẑ(k−1), v(k−1), ê(k), ê(k−1)]`.
pub fn build_regressor(
    zhat: &[f64],
    v: &[f64],
    innov: &[f64],
    k: usize,
) -> Result<[f64; ARMAX_ORDER]> {
    let available = zhat.len().min(v.len()).min(innov.len());
    if k == 0 {
        return Err(Error::InsufficientHistory {
            needed: 1,
            available: 0,
        });
    }
    if k >= available {
        return Err(Error::InsufficientHistory {
            needed: k + 1,
            available,
        });
    }
    Ok([zhat[k], zhat[k - 1], v[k - 1], innov[k], innov[k - 1]])
}

/// `w · X`.
pub fn armax_predict(m: &ArmaxModel, x: &[f64; ARMAX_ORDER]) -> f64 {
    m.weights.iter().zip(x).map(|(w, x)| w * x).sum()
}
