//! State reconstruction and fault diagnosis for 1D nonlinear wave equations.
//!
//! The wave PDE is semi-discretized on a uniform grid and written in a
//! coupled canonical state-space form in which every nonlinearity is pushed
//! into a virtual input. A standard linear Kalman filter then reconstructs
//! the full position/velocity field from a sparse set of noisy sensors
//! without ever forming a Jacobian. The filter's output on one grid
//! subsystem is expressed as an ARMAX regressor model, and changes in that
//! model are detected and isolated with the local statistical approach
//! (global chi-square, sensitivity and min-max tests).
//!
//! Module map:
//! - [`wave_model`]: PDE parameters, finite differences, canonical form.
//! - [`simulator`]: ground-truth integration, sensor model, fault injection.
//! - [`kalman`]: discretization and the Kalman filter recursion.
//! - [`armax`]: steady-state filter to ARMAX conversion and regressors.
//! - [`fdi`]: primary residuals, M/S matrices and the chi-square tests.
//! - [`harness`]: configuration, scenarios, CSV and SVG output.

pub mod armax;
pub mod error;
pub mod fdi;
pub mod harness;
pub mod kalman;
pub mod linalg;
pub mod simulator;
pub mod stats;
pub mod wave_model;

pub use error::{Error, Result};
