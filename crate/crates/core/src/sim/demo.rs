use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::rng::RandomStream;
use crate::trajectory::Trajectory;

use super::rollout::simulate;
use super::{ImpedanceConfig, ImpedanceState, TaskEnv};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    /// Arrival time (s).
    pub time: f64,
    /// Position per axis (m).
    pub x: Vec<f64>,
}

/// Timed waypoints joined by quintic smoothstep segments, executed at a
/// fixed demonstration stiffness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Script {
    pub waypoints: Vec<Waypoint>,
    /// Control period (s).
    pub dt: f64,
    /// Demonstration stiffness on every axis (N/m).
    pub stiffness: f64,
}

fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * u * (10.0 + u * (6.0 * u - 15.0))
}

impl Script {
    pub fn validate(&self, n_axes: usize) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Invalid(m));
        if self.waypoints.len() < 2 {
            return bad("script needs at least two waypoints".into());
        }
        if !(self.dt > 0.0) || !(self.stiffness > 0.0) {
            return bad("script period and stiffness must be positive".into());
        }
        for w in self.waypoints.windows(2) {
            if !(w[1].time > w[0].time) {
                return bad(format!("waypoint times must increase (at {})", w[1].time));
            }
        }
        if let Some(w) = self.waypoints.iter().find(|w| w.x.len() != n_axes) {
            return bad(format!("waypoint at {} has {} axes, expected {n_axes}", w.time, w.x.len()));
        }
        if self.waypoints[0].time != 0.0 {
            return bad("first waypoint must be at time 0".into());
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.waypoints.last().map_or(0.0, |w| w.time)
    }

    /// Number of control samples covering the script.
    pub fn samples(&self) -> usize {
        (self.duration() / self.dt).round() as usize + 1
    }

    pub fn position(&self, time: f64) -> Vec<f64> {
        let wp = &self.waypoints;
        let i = wp.partition_point(|w| w.time <= time);
        if i == 0 {
            return wp[0].x.clone();
        }
        if i == wp.len() {
            return wp[i - 1].x.clone();
        }
        let (a, b) = (&wp[i - 1], &wp[i]);
        let s = smoothstep((time - a.time) / (b.time - a.time));
        a.x.iter().zip(&b.x).map(|(p, q)| p + s * (q - p)).collect()
    }
}

/// Runs the script without disturbances and returns the sampled
/// demonstration together with the attractors that produced it.
pub fn simulate_demonstration(
    env: &TaskEnv,
    script: &Script,
    cfg: &ImpedanceConfig,
) -> Result<(Trajectory, Vec<Vec<f64>>), SimError> {
    script.validate(cfg.n_axes())?;
    let len = script.samples();
    let targets: Vec<Vec<f64>> = (0..len)
        .map(|t| script.position(t as f64 * script.dt))
        .collect();
    let k = vec![script.stiffness; cfg.n_axes()];
    let rows: Vec<&[f64]> = vec![&k; len];
    let start = ImpedanceState::at_rest(script.waypoints[0].x.clone());
    let out = simulate(env, start, &targets, &rows, script.dt, cfg, false)?;
    // Demonstrations carry positions and forces only.
    Ok((out.trajectory.without_velocities(), targets))
}

/// Scripted stand-in for a human demonstration, with optional additive
/// Gaussian position noise of standard deviation `noise` (m).
pub fn generate_demonstration(
    env: &TaskEnv,
    script: &Script,
    cfg: &ImpedanceConfig,
    noise: f64,
    stream: &mut RandomStream,
) -> Result<Trajectory, SimError> {
    let (demo, _) = simulate_demonstration(env, script, cfg)?;
    if noise <= 0.0 {
        return Ok(demo);
    }
    let positions = demo
        .positions()
        .iter()
        .map(|row| row.iter().map(|x| x + noise * stream.normal()).collect())
        .collect();
    Trajectory::new(demo.dt(), positions, demo.forces().to_vec(), None)
        .map_err(|e| SimError::Invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::TrackEnv;

    fn line() -> Script {
        Script {
            waypoints: vec![
                Waypoint { time: 0.0, x: vec![0.0, 0.0] },
                Waypoint { time: 1.0, x: vec![0.2, 0.1] },
                Waypoint { time: 1.5, x: vec![0.2, 0.1] },
            ],
            dt: 0.05,
            stiffness: 1000.0,
        }
    }

    #[test]
    fn interpolation_hits_waypoints_smoothly() {
        let s = line();
        assert_eq!(s.position(0.0), vec![0.0, 0.0]);
        assert_eq!(s.position(1.0), vec![0.2, 0.1]);
        assert_eq!(s.position(9.0), vec![0.2, 0.1]);
        let mid = s.position(0.5);
        assert!((mid[0] - 0.1).abs() < 1e-12);
        assert_eq!(s.samples(), 31);
    }

    #[test]
    fn free_space_demo_has_no_force() {
        let env = TaskEnv::Track(TrackEnv {
            n_axes: 2,
            reference: vec![vec![0.0; 2]],
            disturbance: None,
        });
        let cfg = ImpedanceConfig::new(2);
        let demo = generate_demonstration(&env, &line(), &cfg, 0.0, &mut RandomStream::new(0, "d"))
            .unwrap();
        assert_eq!(demo.dt(), 0.05);
        assert_eq!(demo.len(), 31);
        assert!(demo.forces().iter().flatten().all(|f| *f == 0.0));
        let end = demo.position(30);
        assert!((end[0] - 0.2).abs() < 1e-3 && (end[1] - 0.1).abs() < 1e-3);
    }

    #[test]
    fn noise_is_seeded() {
        let env = TaskEnv::Track(TrackEnv {
            n_axes: 2,
            reference: vec![vec![0.0; 2]],
            disturbance: None,
        });
        let cfg = ImpedanceConfig::new(2);
        let a = generate_demonstration(&env, &line(), &cfg, 1e-3, &mut RandomStream::new(4, "d"))
            .unwrap();
        let b = generate_demonstration(&env, &line(), &cfg, 1e-3, &mut RandomStream::new(4, "d"))
            .unwrap();
        assert_eq!(a, b);
        let clean = simulate_demonstration(&env, &line(), &cfg).unwrap().0;
        assert_ne!(a, clean);
    }
}
