use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::SimError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Wipe2d,
    Door1d,
    Track,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::Wipe2d, TaskKind::Door1d, TaskKind::Track];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Wipe2d => "wipe2d",
            TaskKind::Door1d => "door1d",
            TaskKind::Track => "track",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown task `{s}` (valid: wipe2d, door1d, track)"))
    }
}

/// Constant push active over a fraction of the episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    /// Force on the end-effector per axis (N).
    pub force: Vec<f64>,
    /// Active window as fractions of the episode duration.
    pub window: (f64, f64),
}

impl Disturbance {
    pub fn middle_third(force: Vec<f64>) -> Self {
        Self {
            force,
            window: (1.0 / 3.0, 2.0 / 3.0),
        }
    }

    fn active(&self, time: f64, horizon: f64) -> bool {
        time >= self.window.0 * horizon && time < self.window.1 * horizon
    }
}

/// Surface wiping on two axes: axis 0 runs along the surface, axis 1 is the
/// surface normal. The surface occupies `x[1] < surface` and pushes back
/// with a linear spring.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WipeEnv {
    pub surface: f64,
    pub k_surface: f64,
    pub sites: Vec<[f64; 2]>,
    pub radius: f64,
    pub disturbance: Option<Disturbance>,
}

/// Latched door on one axis. Past `latch` the latch spring resists until
/// the contact force reaches `release_force`; afterwards the door only
/// resists with viscous damping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoorEnv {
    pub latch: f64,
    pub k_obs: f64,
    pub release_force: f64,
    pub damping: f64,
    pub open_threshold: f64,
    pub disturbance: Option<Disturbance>,
}

/// Free-space tracking of a reference trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackEnv {
    pub n_axes: usize,
    pub reference: Vec<Vec<f64>>,
    pub disturbance: Option<Disturbance>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TaskEnv {
    Wipe2d(WipeEnv),
    Door1d(DoorEnv),
    Track(TrackEnv),
}

/// Mutable environment state during one episode.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvState {
    pub latched: bool,
    pub collected: Vec<bool>,
}

impl TaskEnv {
    pub fn kind(&self) -> TaskKind {
        match self {
            TaskEnv::Wipe2d(_) => TaskKind::Wipe2d,
            TaskEnv::Door1d(_) => TaskKind::Door1d,
            TaskEnv::Track(_) => TaskKind::Track,
        }
    }

    pub fn n_axes(&self) -> usize {
        match self {
            TaskEnv::Wipe2d(_) => 2,
            TaskEnv::Door1d(_) => 1,
            TaskEnv::Track(e) => e.n_axes,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Invalid(m.into()));
        match self {
            TaskEnv::Wipe2d(w) => {
                if w.sites.is_empty() {
                    return bad("wipe2d needs at least one dirt site");
                }
                if !(w.radius > 0.0) || w.k_surface < 0.0 {
                    return bad("wipe2d radius must be positive and surface stiffness non-negative");
                }
            }
            TaskEnv::Door1d(d) => {
                if !(d.release_force > 0.0) {
                    return bad("door1d release force must be positive");
                }
                if d.k_obs < 0.0 || d.damping < 0.0 {
                    return bad("door1d stiffness and damping must be non-negative");
                }
            }
            TaskEnv::Track(t) => {
                if t.reference.is_empty() {
                    return bad("track needs a reference trajectory");
                }
                if t.reference.iter().any(|r| r.len() != t.n_axes) {
                    return bad("track reference width differs from n_axes");
                }
            }
        }
        if let Some(d) = self.disturbance() {
            if d.force.len() != self.n_axes() {
                return bad("disturbance width differs from the task axes");
            }
        }
        Ok(())
    }

    pub fn disturbance(&self) -> Option<&Disturbance> {
        match self {
            TaskEnv::Wipe2d(w) => w.disturbance.as_ref(),
            TaskEnv::Door1d(d) => d.disturbance.as_ref(),
            TaskEnv::Track(t) => t.disturbance.as_ref(),
        }
    }

    pub fn without_disturbance(&self) -> Self {
        let mut env = self.clone();
        match &mut env {
            TaskEnv::Wipe2d(w) => w.disturbance = None,
            TaskEnv::Door1d(d) => d.disturbance = None,
            TaskEnv::Track(t) => t.disturbance = None,
        }
        env
    }

    pub fn reset(&self) -> EnvState {
        let sites = match self {
            TaskEnv::Wipe2d(w) => w.sites.len(),
            _ => 0,
        };
        EnvState {
            latched: true,
            collected: vec![false; sites],
        }
    }

    /// Force the environment exerts on the end-effector at state `(x, v)`.
    ///
    /// A latch whose contact force reaches the release threshold opens
    /// before the force is returned, so the releasing step already sees the
    /// free door.
    pub fn force(
        &self,
        st: &mut EnvState,
        x: &[f64],
        v: &[f64],
        time: f64,
        horizon: f64,
        disturbed: bool,
    ) -> Vec<f64> {
        let mut f = vec![0.0; x.len()];
        match self {
            TaskEnv::Wipe2d(w) => {
                let depth = w.surface - x[1];
                if depth > 0.0 {
                    f[1] = w.k_surface * depth;
                }
            }
            TaskEnv::Door1d(d) => {
                let pen = x[0] - d.latch;
                if pen > 0.0 {
                    if st.latched && d.k_obs * pen >= d.release_force {
                        st.latched = false;
                    }
                    f[0] = if st.latched {
                        -d.k_obs * pen
                    } else {
                        -d.damping * v[0]
                    };
                }
            }
            TaskEnv::Track(_) => {}
        }
        if disturbed {
            if let Some(d) = self.disturbance() {
                if d.active(time, horizon) {
                    f.iter_mut().zip(&d.force).for_each(|(a, b)| *a += b);
                }
            }
        }
        f
    }

    /// Marks dirt sites within reach of `x`; returns how many were new.
    pub fn collect(&self, st: &mut EnvState, x: &[f64]) -> usize {
        let TaskEnv::Wipe2d(w) = self else {
            return 0;
        };
        let mut new = 0;
        for (site, done) in w.sites.iter().zip(st.collected.iter_mut()) {
            if !*done && (x[0] - site[0]).hypot(x[1] - site[1]) <= w.radius {
                *done = true;
                new += 1;
            }
        }
        new
    }

    /// Per-sample reward for door and track; wipe rewards come from
    /// [`TaskEnv::collect`].
    pub fn sample_reward(&self, st: &EnvState, t: usize, x: &[f64]) -> f64 {
        match self {
            TaskEnv::Wipe2d(_) => 0.0,
            TaskEnv::Door1d(d) => {
                if !st.latched && x[0] >= d.open_threshold {
                    1.0
                } else {
                    0.0
                }
            }
            TaskEnv::Track(tr) => {
                let r = &tr.reference[t.min(tr.reference.len() - 1)];
                -x.iter().zip(r).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            }
        }
    }

    /// Largest achievable reward sum over `len` samples.
    pub fn max_reward(&self, len: usize) -> f64 {
        match self {
            TaskEnv::Wipe2d(w) => w.sites.len() as f64,
            TaskEnv::Door1d(_) => len as f64,
            TaskEnv::Track(_) => 0.0,
        }
    }
}
