//! Point-mass Cartesian impedance simulator.
//!
//! Each translational axis obeys `Λ ẍ = K (x_d - x) - 2 sqrt(K) ẋ + F_env`,
//! integrated by explicit Euler with the position advanced by the pre-step
//! velocity.

mod demo;
mod env;
mod rollout;
mod tasks;

use serde::{Deserialize, Serialize};

use crate::error::SimError;

pub use demo::{generate_demonstration, simulate_demonstration, Script, Waypoint};
pub use env::{Disturbance, DoorEnv, EnvState, TaskEnv, TaskKind, TrackEnv, WipeEnv};
pub use rollout::{compute_attractors, rollout, start_state, Rollout};
pub use tasks::TaskSetup;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpedanceConfig {
    /// Diagonal inertia per axis (kg).
    pub lambda: Vec<f64>,
    /// Integration step (s).
    pub dt_sim: f64,
    /// Per-axis limit on `|x_d - x|` applied by the controller during
    /// rollouts (m). `None` renders the pure impedance law.
    #[serde(default)]
    pub max_offset: Option<f64>,
}

impl ImpedanceConfig {
    pub fn new(n_axes: usize) -> Self {
        Self {
            lambda: vec![1.0; n_axes],
            dt_sim: 1e-3,
            max_offset: None,
        }
    }

    pub fn n_axes(&self) -> usize {
        self.lambda.len()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.lambda.is_empty() || self.lambda.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(SimError::Invalid("inertia entries must be positive".into()));
        }
        if !(self.dt_sim > 0.0 && self.dt_sim.is_finite()) {
            return Err(SimError::Invalid(format!("dt_sim must be positive, got {}", self.dt_sim)));
        }
        if let Some(m) = self.max_offset {
            if !(m > 0.0) {
                return Err(SimError::Invalid(format!("max_offset must be positive, got {m}")));
            }
        }
        Ok(())
    }

    /// Number of integration steps per control period `dt`.
    pub fn substeps(&self, dt: f64) -> Result<usize, SimError> {
        let ratio = dt / self.dt_sim;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-6 * ratio.max(1.0) {
            return Err(SimError::Invalid(format!(
                "dt_sim {} does not divide the control period {dt}",
                self.dt_sim
            )));
        }
        Ok(n as usize)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImpedanceState {
    pub x: Vec<f64>,
    pub xdot: Vec<f64>,
}

impl ImpedanceState {
    pub fn at_rest(x: Vec<f64>) -> Self {
        let n = x.len();
        Self { x, xdot: vec![0.0; n] }
    }

    /// Free-response energy `½ ẋᵀΛẋ + ½ (x_d - x)ᵀ K (x_d - x)`.
    pub fn energy(&self, x_d: &[f64], k: &[f64], cfg: &ImpedanceConfig) -> f64 {
        (0..self.x.len())
            .map(|a| {
                let e = x_d[a] - self.x[a];
                0.5 * cfg.lambda[a] * self.xdot[a].powi(2) + 0.5 * k[a] * e * e
            })
            .sum()
    }
}

/// One explicit Euler step of the impedance dynamics.
///
/// On a non-finite result the error carries step 0; callers that loop
/// relabel it with their own index.
pub fn step(
    state: &ImpedanceState,
    x_d: &[f64],
    k: &[f64],
    f_env: &[f64],
    cfg: &ImpedanceConfig,
) -> Result<ImpedanceState, SimError> {
    let n = state.x.len();
    let dt = cfg.dt_sim;
    let mut x = Vec::with_capacity(n);
    let mut xdot = Vec::with_capacity(n);
    for a in 0..n {
        let acc = (k[a] * (x_d[a] - state.x[a]) - 2.0 * k[a].sqrt() * state.xdot[a] + f_env[a])
            / cfg.lambda[a];
        x.push(state.x[a] + state.xdot[a] * dt);
        xdot.push(state.xdot[a] + acc * dt);
    }
    if x.iter().chain(&xdot).any(|v| !v.is_finite()) {
        return Err(SimError::Diverged { step: 0 });
    }
    Ok(ImpedanceState { x, xdot })
}
