//! Nonlinear wave PDE `φ_tt = K φ_xx + f(φ, φ_t)` on a uniform 1D grid.
//!
//! The state vector is interleaved per grid point,
//! `[y₁,₁, y₂,₁, y₁,₂, y₂,₂, …]` with `y₁,ᵢ = φᵢ` and `y₂,ᵢ = φ̇ᵢ`, so the
//! position of grid point `i` (1-based) lives at 0-based index `2(i-1)`.
//! The coupled canonical form keeps the finite-difference coupling inside
//! `A` and routes only boundary terms and `f` through the virtual inputs.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// 0-based index of the position state of grid point `i` (1-based).
#[inline]
pub fn position_index(i: usize) -> usize {
    2 * (i - 1)
}

/// 0-based index of the velocity state of grid point `i` (1-based).
#[inline]
pub fn velocity_index(i: usize) -> usize {
    2 * (i - 1) + 1
}

/// Parameters of the forced damped sine-Gordon equation
/// `φ_tt + c φ_t − k φ_xx + ε sin φ = l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineGordonParams {
    /// Viscous damping.
    pub c: f64,
    /// Nearest-neighbour coupling.
    pub k: f64,
    /// Amplitude of the `sin φ` restoring term.
    pub eps: f64,
    /// Constant torque.
    pub l: f64,
}

impl SineGordonParams {
    pub fn validate(&self) -> Result<()> {
        ensure_finite(&[self.c, self.k, self.eps, self.l], "sine-gordon")?;
        if self.k <= 0.0 {
            return Err(Error::Domain("sine-gordon coupling k must be > 0".into()));
        }
        if self.c < 0.0 {
            return Err(Error::Domain("sine-gordon damping c must be >= 0".into()));
        }
        Ok(())
    }
}

/// Pointwise source term `f(φᵢ, φ̇ᵢ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Nonlinearity {
    /// `f ≡ 0`: the linear wave equation.
    Zero,
    /// `f = −stiffness·φ − damping·φ̇`.
    Linear { stiffness: f64, damping: f64 },
    /// `f = l − c·φ̇ − ε·sin φ`.
    SineGordon { c: f64, eps: f64, l: f64 },
}

impl Nonlinearity {
    #[inline]
    pub fn eval(&self, phi: f64, phi_dot: f64) -> f64 {
        match *self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear { stiffness, damping } => -stiffness * phi - damping * phi_dot,
            Nonlinearity::SineGordon { c, eps, l } => l - c * phi_dot - eps * phi.sin(),
        }
    }

    fn params(&self) -> Vec<f64> {
        match *self {
            Nonlinearity::Zero => vec![],
            Nonlinearity::Linear { stiffness, damping } => vec![stiffness, damping],
            Nonlinearity::SineGordon { c, eps, l } => vec![c, eps, l],
        }
    }
}

/// Continuous wave model and its grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveModel {
    /// Wave/stiffness coefficient `K` (length²/time²).
    pub k: f64,
    pub nonlinearity: Nonlinearity,
    /// Number of interior grid points.
    pub n: usize,
    /// Grid spacing.
    pub dx: f64,
    /// Dirichlet boundary sample `φ₀`.
    pub phi_left: f64,
    /// Dirichlet boundary sample `φ_{N+1}`.
    pub phi_right: f64,
}

impl WaveModel {
    pub fn new(k: f64, nonlinearity: Nonlinearity, n: usize, dx: f64) -> Result<Self> {
        let model = Self {
            k,
            nonlinearity,
            n,
            dx,
            phi_left: 0.0,
            phi_right: 0.0,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn sine_gordon(params: &SineGordonParams, n: usize, dx: f64) -> Result<Self> {
        params.validate()?;
        Self::new(
            params.k,
            Nonlinearity::SineGordon {
                c: params.c,
                eps: params.eps,
                l: params.l,
            },
            n,
            dx,
        )
    }

    pub fn with_boundaries(mut self, phi_left: f64, phi_right: f64) -> Result<Self> {
        self.phi_left = phi_left;
        self.phi_right = phi_right;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::Domain(format!("grid needs N >= 3, got {}", self.n)));
        }
        ensure_finite(
            &[self.k, self.dx, self.phi_left, self.phi_right],
            "wave model",
        )?;
        ensure_finite(&self.nonlinearity.params(), "nonlinearity")?;
        if self.dx <= 0.0 {
            return Err(Error::Domain("dx must be > 0".into()));
        }
        if self.k <= 0.0 {
            return Err(Error::Domain("K must be > 0".into()));
        }
        Ok(())
    }

    /// Number of states `2N`.
    pub fn state_dim(&self) -> usize {
        2 * self.n
    }

    /// Off-diagonal coupling `a = K/Δx²`.
    pub fn coupling_a(&self) -> f64 {
        self.k / (self.dx * self.dx)
    }

    /// Diagonal coupling `b = −2K/Δx²`.
    pub fn coupling_b(&self) -> f64 {
        -2.0 * self.k / (self.dx * self.dx)
    }

    /// Copy of the model with `K` replaced.
    pub fn with_k(&self, k: f64) -> Self {
        Self { k, ..self.clone() }
    }

    /// Canonical-form matrices for the given 1-based sensor grid indices.
    pub fn state_space(&self, sensors: &[usize]) -> Result<StateSpace> {
        build_state_space(self, sensors)
    }

    /// Virtual inputs `v` evaluated at the given grid positions and velocities.
    pub fn virtual_inputs(&self, positions: &[f64], velocities: &[f64]) -> Result<Vec<f64>> {
        virtual_inputs(self, positions, velocities)
    }

    /// Virtual inputs from an interleaved state vector (no validation).
    pub fn virtual_inputs_from_state(&self, state: &[f64]) -> Vec<f64> {
        let n = self.n;
        let a = self.coupling_a();
        let mut v: Vec<f64> = (0..n)
            .map(|i| self.nonlinearity.eval(state[2 * i], state[2 * i + 1]))
            .collect();
        v[0] += a * self.phi_left;
        v[n - 1] += a * self.phi_right;
        v
    }

    /// Right-hand side `A·y + B·v(y)` of the semi-discrete ODE, evaluated
    /// without forming the matrices.
    pub fn rhs(&self, state: &[f64], out: &mut [f64]) {
        let n = self.n;
        let a = self.coupling_a();
        let b = self.coupling_b();
        for i in 0..n {
            let phi = state[2 * i];
            let phi_dot = state[2 * i + 1];
            let left = if i == 0 {
                self.phi_left
            } else {
                state[2 * (i - 1)]
            };
            let right = if i + 1 == n {
                self.phi_right
            } else {
                state[2 * (i + 1)]
            };
            out[2 * i] = phi_dot;
            out[2 * i + 1] = a * (left + right) + b * phi + self.nonlinearity.eval(phi, phi_dot);
        }
    }

    /// Input of the isolated 2-state subsystem at grid point `i` (1-based):
    /// neighbour coupling, boundary samples and `f` bundled together.
    pub fn subsystem_input(&self, i: usize, state: &[f64]) -> f64 {
        let n = self.n;
        let a = self.coupling_a();
        let left = if i == 1 {
            self.phi_left
        } else {
            state[position_index(i - 1)]
        };
        let right = if i == n {
            self.phi_right
        } else {
            state[position_index(i + 1)]
        };
        a * (left + right)
            + self
                .nonlinearity
                .eval(state[position_index(i)], state[velocity_index(i)])
    }
}

/// Continuous-time canonical form `ẏ = A y + B v`, `z = C y`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// `K/Δx²`.
    pub coupling_a: f64,
    /// `−2K/Δx²`.
    pub coupling_b: f64,
    /// 1-based sensor grid indices, one per row of `C`.
    pub sensors: Vec<usize>,
}

impl StateSpace {
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }
}

/// Second difference `(φ_{i+1} − 2φ_i + φ_{i−1})/Δx²` with Dirichlet samples.
pub fn laplacian_1d(phi: &[f64], dx: f64, phi_left: f64, phi_right: f64) -> Result<Vec<f64>> {
    if phi.is_empty() {
        return Err(Error::Dimension(
            "laplacian needs at least one point".into(),
        ));
    }
    if !(dx > 0.0) || !dx.is_finite() {
        return Err(Error::Domain("dx must be finite and > 0".into()));
    }
    ensure_finite(phi, "phi")?;
    ensure_finite(&[phi_left, phi_right], "boundary")?;
    let n = phi.len();
    let inv = 1.0 / (dx * dx);
    Ok((0..n)
        .map(|i| {
            let left = if i == 0 { phi_left } else { phi[i - 1] };
            let right = if i + 1 == n { phi_right } else { phi[i + 1] };
            (right - 2.0 * phi[i] + left) * inv
        })
        .collect())
}

/// Builds the coupled canonical matrices `A`, `B`, `C`.
pub fn build_state_space(model: &WaveModel, sensors: &[usize]) -> Result<StateSpace> {
    model.validate()?;
    let n = model.n;
    validate_sensors(sensors, n)?;
    let a = model.coupling_a();
    let b = model.coupling_b();
    let dim = 2 * n;

    let mut am = DMatrix::zeros(dim, dim);
    for i in 1..=n {
        let p = position_index(i);
        let v = velocity_index(i);
        am[(p, v)] = 1.0;
        am[(v, p)] = b;
        if i > 1 {
            am[(v, position_index(i - 1))] = a;
        }
        if i < n {
            am[(v, position_index(i + 1))] = a;
        }
    }

    let mut bm = DMatrix::zeros(dim, n);
    for j in 1..=n {
        bm[(velocity_index(j), j - 1)] = 1.0;
    }

    let mut cm = DMatrix::zeros(sensors.len(), dim);
    for (row, &i) in sensors.iter().enumerate() {
        cm[(row, position_index(i))] = 1.0;
    }

    Ok(StateSpace {
        a: am,
        b: bm,
        c: cm,
        coupling_a: a,
        coupling_b: b,
        sensors: sensors.to_vec(),
    })
}

pub(crate) fn validate_sensors(sensors: &[usize], n: usize) -> Result<()> {
    if sensors.is_empty() {
        return Err(Error::Sensor("at least one sensor is required".into()));
    }
    let mut seen = vec![false; n + 1];
    for (idx, &s) in sensors.iter().enumerate() {
        if s == 0 || s > n {
            return Err(Error::Sensor(format!(
                "sensors[{idx}] = {s} is outside 1..={n}"
            )));
        }
        if seen[s] {
            return Err(Error::Sensor(format!("sensors[{idx}] = {s} is duplicated")));
        }
        seen[s] = true;
    }
    Ok(())
}

/// Virtual inputs: `f` at every grid point plus the boundary terms
/// `(K/Δx²)·φ₀` on `v₁` and `(K/Δx²)·φ_{N+1}` on `v_N`.
pub fn virtual_inputs(
    model: &WaveModel,
    positions: &[f64],
    velocities: &[f64],
) -> Result<Vec<f64>> {
    let n = model.n;
    if positions.len() != n || velocities.len() != n {
        return Err(Error::Dimension(format!(
            "expected {n} positions and velocities, got {} and {}",
            positions.len(),
            velocities.len()
        )));
    }
    ensure_finite(positions, "positions")?;
    ensure_finite(velocities, "velocities")?;
    let a = model.coupling_a();
    let mut v: Vec<f64> = positions
        .iter()
        .zip(velocities)
        .map(|(&p, &q)| model.nonlinearity.eval(p, q))
        .collect();
    v[0] += a * model.phi_left;
    v[n - 1] += a * model.phi_right;
    Ok(v)
}

/// Odd grid points `1, 3, …` up to `n`: the default sensor layout.
pub fn odd_sensor_layout(n: usize) -> Vec<usize> {
    (1..=n).step_by(2).collect()
}
