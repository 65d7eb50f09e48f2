use crate::error::{SimError, SimError::Invalid};
use crate::segmentation::Segmentation;
use crate::stiffness::StiffnessParams;
use crate::trajectory::Trajectory;

use super::{step, ImpedanceConfig, ImpedanceState, TaskEnv};

/// Result of executing an attractor sequence in an environment.
#[derive(Clone, Debug)]
pub struct Rollout {
    /// Sampled states at the control period, with the environment force
    /// seen at the start of each interval.
    pub trajectory: Trajectory,
    /// Reward earned in each control interval.
    pub rewards: Vec<f64>,
}

impl Rollout {
    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

/// Attractor positions that make the impedance law reproduce `demo` under
/// stiffness `theta`:
/// `x_d = x + K⁻¹ (2 sqrt(K) ẋ + Λ ẍ - F)`.
///
/// Velocities and accelerations are forward differences of the sampled
/// positions, which is the exact inverse of one Euler step per sample; the
/// last samples fall back to backward differences.
pub fn compute_attractors(
    demo: &Trajectory,
    seg: &Segmentation,
    theta: &StiffnessParams,
    cfg: &ImpedanceConfig,
) -> Vec<Vec<f64>> {
    let len = demo.len();
    let dt = demo.dt();
    let x = demo.positions();
    (0..len)
        .map(|t| {
            let k = theta.phase(seg.label(t));
            (0..demo.n_axes())
                .map(|a| {
                    let v = if t + 1 < len {
                        (x[t + 1][a] - x[t][a]) / dt
                    } else {
                        (x[t][a] - x[t - 1][a]) / dt
                    };
                    let acc = if t + 2 < len {
                        (x[t + 2][a] - 2.0 * x[t + 1][a] + x[t][a]) / (dt * dt)
                    } else {
                        (x[t][a] - 2.0 * x[t - 1][a] + x[t - 2][a]) / (dt * dt)
                    };
                    x[t][a]
                        + (2.0 * k[a].sqrt() * v + cfg.lambda[a] * acc - demo.force(t)[a]) / k[a]
                })
                .collect()
        })
        .collect()
}

/// Initial state matching the first forward difference of `demo`.
pub fn start_state(demo: &Trajectory) -> ImpedanceState {
    let dt = demo.dt();
    let (x0, x1) = (demo.position(0), demo.position(1));
    ImpedanceState {
        x: x0.to_vec(),
        xdot: x0.iter().zip(x1).map(|(a, b)| (b - a) / dt).collect(),
    }
}

/// Zero-order-hold execution of per-sample attractors and stiffness rows.
pub(crate) fn simulate(
    env: &TaskEnv,
    start: ImpedanceState,
    targets: &[Vec<f64>],
    stiffness: &[&[f64]],
    dt: f64,
    cfg: &ImpedanceConfig,
    disturbed: bool,
) -> Result<Rollout, SimError> {
    cfg.validate()?;
    env.validate()?;
    let n = cfg.n_axes();
    if env.n_axes() != n || start.x.len() != n {
        return Err(Invalid(format!(
            "axis mismatch: config {n}, task {}, start {}",
            env.n_axes(),
            start.x.len()
        )));
    }
    let len = targets.len();
    if len < 3 || stiffness.len() != len {
        return Err(Invalid(format!(
            "need at least 3 attractors with matching stiffness rows, got {len} and {}",
            stiffness.len()
        )));
    }
    let substeps = cfg.substeps(dt)?;
    let horizon = dt * (len - 1) as f64;
    let mut es = env.reset();
    let mut state = start;
    let mut xs = Vec::with_capacity(len);
    let mut vs = Vec::with_capacity(len);
    let mut fs = Vec::with_capacity(len);
    let mut rewards = Vec::with_capacity(len);
    let mut x_d = vec![0.0; n];
    for t in 0..len {
        let t0 = t as f64 * dt;
        let f0 = env.force(&mut es, &state.x, &state.xdot, t0, horizon, disturbed);
        let mut reward = env.collect(&mut es, &state.x) as f64;
        reward += env.sample_reward(&es, t, &state.x);
        xs.push(state.x.clone());
        vs.push(state.xdot.clone());
        if t + 1 == len {
            fs.push(f0);
            rewards.push(reward);
            break;
        }
        let k = stiffness[t];
        for s in 0..substeps {
            let f = if s == 0 {
                f0.clone()
            } else {
                let time = t0 + s as f64 * cfg.dt_sim;
                reward += env.collect(&mut es, &state.x) as f64;
                env.force(&mut es, &state.x, &state.xdot, time, horizon, disturbed)
            };
            for a in 0..n {
                let offset = targets[t][a] - state.x[a];
                x_d[a] = state.x[a]
                    + match cfg.max_offset {
                        Some(m) => offset.clamp(-m, m),
                        None => offset,
                    };
            }
            state = step(&state, &x_d, k, &f, cfg).map_err(|e| e.at_step(t * substeps + s))?;
        }
        fs.push(f0);
        rewards.push(reward);
    }
    let trajectory = Trajectory::new(dt, xs, fs, Some(vs))
        .map_err(|e| Invalid(format!("rollout produced an invalid trajectory: {e}")))?;
    Ok(Rollout {
        trajectory,
        rewards,
    })
}

/// Executes `attractors` in `env` with the phase stiffness given by `seg`
/// and `theta`, starting from `start`.
///
/// Rollouts are deterministic: the environment has no random elements.
pub fn rollout(
    env: &TaskEnv,
    seg: &Segmentation,
    theta: &StiffnessParams,
    attractors: &[Vec<f64>],
    start: &ImpedanceState,
    dt: f64,
    cfg: &ImpedanceConfig,
) -> Result<Rollout, SimError> {
    if seg.len() != attractors.len() {
        return Err(Invalid(format!(
            "segmentation has {} samples, attractors {}",
            seg.len(),
            attractors.len()
        )));
    }
    if theta.m() != seg.m() || theta.n_axes() != cfg.n_axes() {
        return Err(Invalid(format!(
            "stiffness is {}x{}, expected {}x{}",
            theta.m(),
            theta.n_axes(),
            seg.m(),
            cfg.n_axes()
        )));
    }
    let rows: Vec<&[f64]> = seg.labels().iter().map(|&j| theta.phase(j)).collect();
    simulate(env, start.clone(), attractors, &rows, dt, cfg, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::TrackEnv;
    use crate::stiffness::StiffnessBounds;

    fn one_axis(dt_sim: f64) -> ImpedanceConfig {
        ImpedanceConfig {
            lambda: vec![1.0],
            dt_sim,
            max_offset: None,
        }
    }

    fn free(n: usize) -> TaskEnv {
        TaskEnv::Track(TrackEnv {
            n_axes: n,
            reference: vec![vec![0.0; n]],
            disturbance: None,
        })
    }

    #[test]
    fn static_sample_gives_own_position() {
        let demo = Trajectory::new(0.1, vec![vec![0.5]; 4], vec![vec![0.0]; 4], None).unwrap();
        let seg = Segmentation::single(4);
        let theta = StiffnessParams::constant(1, 1, 100.0, StiffnessBounds::default());
        let xd = compute_attractors(&demo, &seg, &theta, &one_axis(0.1));
        assert!(xd.iter().all(|r| r[0] == 0.5));
    }

    #[test]
    fn hand_substitution() {
        // k=4, Λ=1, ẋ=1, ẍ=0, F=0 -> x_d = x + (2*2*1)/4
        let dt = 0.1;
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 * dt]).collect();
        let demo = Trajectory::new(dt, x, vec![vec![0.0]; 5], None).unwrap();
        let theta =
            StiffnessParams::constant(1, 1, 4.0, StiffnessBounds::new(1.0, 10.0).unwrap());
        let xd = compute_attractors(&demo, &Segmentation::single(5), &theta, &one_axis(dt));
        for t in 0..5 {
            assert!((xd[t][0] - (demo.position(t)[0] + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_order_hold_with_single_substep_equals_stepping() {
        let cfg = one_axis(0.05);
        let env = free(1);
        let targets: Vec<Vec<f64>> = (0..20).map(|t| vec![(t as f64 * 0.3).sin()]).collect();
        let k = [150.0];
        let rows: Vec<&[f64]> = vec![&k; 20];
        let out = simulate(&env, ImpedanceState::at_rest(vec![0.0]), &targets, &rows, 0.05, &cfg, true)
            .unwrap();
        let mut s = ImpedanceState::at_rest(vec![0.0]);
        for t in 0..20 {
            assert_eq!(out.trajectory.position(t), s.x.as_slice());
            s = step(&s, &targets[t], &k, &[0.0], &cfg).unwrap();
        }
    }

    #[test]
    fn rollout_checks_shapes() {
        let cfg = one_axis(0.05);
        let seg = Segmentation::single(5);
        let theta = StiffnessParams::constant(1, 1, 100.0, StiffnessBounds::default());
        let start = ImpedanceState::at_rest(vec![0.0]);
        let err = rollout(&free(1), &seg, &theta, &vec![vec![0.0]; 4], &start, 0.05, &cfg);
        assert!(matches!(err, Err(Invalid(_))));
        let err = rollout(&free(1), &seg, &theta, &vec![vec![0.0]; 5], &start, 0.03, &one_axis(0.02));
        assert!(matches!(err, Err(Invalid(_))));
    }

    #[test]
    fn divergence_names_the_step() {
        let cfg = one_axis(0.05);
        let seg = Segmentation::single(200);
        let theta = StiffnessParams::constant(1, 1, 1e6, StiffnessBounds::new(1.0, 1e7).unwrap());
        let start = ImpedanceState::at_rest(vec![0.0]);
        let err = rollout(&free(1), &seg, &theta, &vec![vec![1.0]; 200], &start, 0.05, &cfg);
        assert!(matches!(err, Err(SimError::Diverged { step }) if step > 0));
    }
}
