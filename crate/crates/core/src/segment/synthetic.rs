//! Synthetic trajectories with known phase structure, used as recovery
//! oracles.

use crate::rng::RandomStream;
use crate::segmentation::Segmentation;
use crate::trajectory::Trajectory;

/// Smooth two-tone motion per axis with seeded phases: roughly 0.2 m
/// amplitude around 1 Hz.
fn smooth_positions(len: usize, n_axes: usize, dt: f64, stream: &mut RandomStream) -> Vec<Vec<f64>> {
    use std::f64::consts::TAU;
    let params: Vec<[f64; 4]> = (0..n_axes)
        .map(|_| {
            [
                TAU * stream.uniform(),
                TAU * stream.uniform(),
                0.8 + 0.3 * stream.uniform(),
                1.6 + 0.4 * stream.uniform(),
            ]
        })
        .collect();
    (0..len)
        .map(|t| {
            let time = t as f64 * dt;
            params
                .iter()
                .map(|p| 0.15 * (TAU * p[2] * time + p[0]).sin() + 0.08 * (TAU * p[3] * time + p[1]).sin())
                .collect()
        })
        .collect()
}

/// Trajectory whose impedance residual is zero at every interior sample
/// under the per-phase stiffness `k[seg.label(t)]`: positions are smooth
/// and the forces are solved from the discretized impedance equation with
/// backward-difference velocities.
pub fn impedance_trajectory(
    seg: &Segmentation,
    k: &[Vec<f64>],
    dt: f64,
    lambda: &[f64],
    seed: u64,
) -> Trajectory {
    let len = seg.len();
    let n = lambda.len();
    let mut stream = RandomStream::new(seed, "synthetic/impedance");
    let x = smooth_positions(len, n, dt, &mut stream);
    let vel = |t: usize, a: usize| {
        if t == 0 {
            0.0
        } else {
            (x[t][a] - x[t - 1][a]) / dt
        }
    };
    let forces = (0..len)
        .map(|t| {
            if t + 1 == len {
                return vec![0.0; n];
            }
            let kt = &k[seg.label(t)];
            (0..n)
                .map(|a| {
                    lambda[a] * (vel(t + 1, a) - vel(t, a)) / dt - kt[a] * (x[t + 1][a] - x[t][a])
                        + 2.0 * kt[a].sqrt() * vel(t, a)
                })
                .collect()
        })
        .collect();
    Trajectory::new(dt, x, forces, None).expect("synthetic trajectory is well formed")
}

/// Per-axis linear switching dynamics
/// `ẋ_{t+1} = a ẋ_t + b Δx_t + b' F_t` with stored velocities, smooth
/// positions and seeded random forces. `params[j][axis] = [a, b, b']`.
pub fn linear_switching_trajectory(
    seg: &Segmentation,
    params: &[Vec<[f64; 3]>],
    dt: f64,
    seed: u64,
) -> Trajectory {
    let len = seg.len();
    let n = params[0].len();
    let mut stream = RandomStream::new(seed, "synthetic/linear");
    let x = smooth_positions(len, n, dt, &mut stream);
    let forces: Vec<Vec<f64>> = (0..len)
        .map(|_| (0..n).map(|_| stream.normal()).collect())
        .collect();
    let mut v = vec![vec![0.0; n]; len];
    v[0] = (0..n).map(|_| 0.1 * stream.normal()).collect();
    for t in 0..len - 1 {
        let p = &params[seg.label(t)];
        for a in 0..n {
            let [ga, gb, gf] = p[a];
            v[t + 1][a] = ga * v[t][a] + gb * (x[t + 1][a] - x[t][a]) + gf * forces[t][a];
        }
    }
    Trajectory::new(dt, x, forces, Some(v)).expect("synthetic trajectory is well formed")
}
