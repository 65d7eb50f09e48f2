//! Desk-scale task presets: environment geometry, demonstration script and
//! controller settings.

use crate::error::SimError;
use crate::rng::RandomStream;
use crate::trajectory::Trajectory;

use super::demo::{generate_demonstration, simulate_demonstration};
use super::{
    Disturbance, DoorEnv, ImpedanceConfig, Script, TaskEnv, TaskKind, TrackEnv, WipeEnv, Waypoint,
};

/// Everything needed to produce a demonstration and evaluate rollouts.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskSetup {
    pub env: TaskEnv,
    pub script: Script,
    pub cfg: ImpedanceConfig,
    /// Phase count suited to the task.
    pub default_m: usize,
    /// Worst tracking error sum used as the task reference (track only).
    pub error_bound: f64,
}

const DT: f64 = 0.05;
const DEMO_STIFFNESS: f64 = 1000.0;
const MAX_OFFSET: f64 = 0.03;

fn wp(time: f64, x: &[f64]) -> Waypoint {
    Waypoint {
        time,
        x: x.to_vec(),
    }
}

fn cfg(n: usize) -> ImpedanceConfig {
    ImpedanceConfig {
        max_offset: Some(MAX_OFFSET),
        ..ImpedanceConfig::new(n)
    }
}

pub fn door1d() -> TaskSetup {
    TaskSetup {
        env: TaskEnv::Door1d(DoorEnv {
            latch: 0.10,
            k_obs: 200.0,
            release_force: 2.0,
            damping: 10.0,
            open_threshold: 0.20,
            disturbance: None,
        }),
        script: Script {
            waypoints: vec![
                wp(0.0, &[0.0]),
                wp(1.0, &[0.10]),
                wp(1.6, &[0.115]),
                wp(3.0, &[0.25]),
                wp(4.0, &[0.25]),
            ],
            dt: DT,
            stiffness: DEMO_STIFFNESS,
        },
        cfg: cfg(1),
        default_m: 3,
        error_bound: 0.0,
    }
}

pub fn wipe2d() -> TaskSetup {
    // The demo presses the surface 12.5 mm deep; dirt lies along that line.
    let depth = -0.0125;
    let sites = (0..7).map(|i| [0.10 + 0.05 * i as f64, depth]).collect();
    TaskSetup {
        env: TaskEnv::Wipe2d(WipeEnv {
            surface: 0.0,
            k_surface: 200.0,
            sites,
            radius: 0.01,
            disturbance: Some(Disturbance::middle_third(vec![1.0, 3.0])),
        }),
        script: Script {
            waypoints: vec![
                wp(0.0, &[0.0, 0.08]),
                wp(1.0, &[0.05, -0.015]),
                wp(4.0, &[0.45, -0.015]),
                wp(5.0, &[0.50, 0.08]),
            ],
            dt: DT,
            stiffness: DEMO_STIFFNESS,
        },
        cfg: cfg(2),
        default_m: 2,
        error_bound: 0.0,
    }
}

pub fn track() -> TaskSetup {
    let waypoints = (0..=8)
        .map(|i| {
            let a = std::f64::consts::PI * 2.0 * i as f64 / 8.0;
            wp(0.5 * i as f64, &[0.1 - 0.1 * a.cos(), 0.1 * a.sin()])
        })
        .collect();
    TaskSetup {
        env: TaskEnv::Track(TrackEnv {
            n_axes: 2,
            reference: Vec::new(),
            disturbance: Some(Disturbance::middle_third(vec![1.5, 1.5])),
        }),
        script: Script {
            waypoints,
            dt: DT,
            stiffness: DEMO_STIFFNESS,
        },
        cfg: cfg(2),
        default_m: 2,
        error_bound: 10.0,
    }
}

impl TaskSetup {
    pub fn preset(kind: TaskKind) -> Self {
        match kind {
            TaskKind::Wipe2d => wipe2d(),
            TaskKind::Door1d => door1d(),
            TaskKind::Track => track(),
        }
    }

    /// Generates the demonstration and returns the environment ready for
    /// evaluation; the tracking task takes the noiseless demonstration as
    /// its reference.
    pub fn demonstrate(
        &self,
        noise: f64,
        stream: &mut RandomStream,
    ) -> Result<(TaskEnv, Trajectory), SimError> {
        let env = match &self.env {
            TaskEnv::Track(t) => {
                let probe = TaskEnv::Track(TrackEnv {
                    reference: vec![vec![0.0; t.n_axes]],
                    ..t.clone()
                });
                let (clean, _) = simulate_demonstration(&probe, &self.script, &self.cfg)?;
                TaskEnv::Track(TrackEnv {
                    reference: clean.positions().to_vec(),
                    ..t.clone()
                })
            }
            other => other.clone(),
        };
        let demo = generate_demonstration(&env, &self.script, &self.cfg, noise, stream)?;
        Ok((env, demo))
    }
}
