use nalgebra::{DMatrix, DVector};

use crate::error::SegmentError;
use crate::rng::RandomStream;
use crate::segmentation::Segmentation;
use crate::trajectory::Trajectory;

use super::dp::best_labels;
use super::{jittered_start, FitOptions};

const VAR_FLOOR: f64 = 1e-12;

/// One axis of one phase: `ẋ_{t+1} = a ẋ_t + b Δx_t + b_f F_t + ε`,
/// `ε ~ N(0, variance)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SldAxis {
    pub a: f64,
    pub b: f64,
    pub b_f: f64,
    pub variance: f64,
}

impl SldAxis {
    fn residual(&self, row: &[f64; 4]) -> f64 {
        row[3] - self.a * row[0] - self.b * row[1] - self.b_f * row[2]
    }

    fn log_density(&self, row: &[f64; 4]) -> f64 {
        let r = self.residual(row);
        -0.5 * (r * r / self.variance + (std::f64::consts::TAU * self.variance).ln())
    }
}

/// Impedance-unaware switching linear model with diagonal gains.
#[derive(Clone, Debug)]
pub struct SldModel {
    /// `phases[j][axis]`.
    pub phases: Vec<Vec<SldAxis>>,
    pub objective: f64,
    pub history: Vec<f64>,
}

/// Regression rows `[ẋ_t, Δx_t, F_t, ẋ_{t+1}]` per sample and axis.
fn rows(traj: &Trajectory) -> Vec<Vec<[f64; 4]>> {
    (0..traj.len())
        .map(|t| {
            (0..traj.n_axes())
                .map(|a| {
                    if t == 0 || t + 1 >= traj.len() {
                        return [0.0; 4];
                    }
                    [
                        traj.velocity(t, a),
                        traj.position(t + 1)[a] - traj.position(t)[a],
                        traj.force(t)[a],
                        traj.velocity(t + 1, a),
                    ]
                })
                .collect()
        })
        .collect()
}

/// Minimum-norm least squares through the SVD pseudo-inverse.
fn fit_axis(samples: &[[f64; 4]]) -> SldAxis {
    let n = samples.len();
    let x = DMatrix::from_fn(n, 3, |i, j| samples[i][j]);
    let y = DVector::from_fn(n, |i, _| samples[i][3]);
    let svd = x.svd(true, true);
    let eps = 1e-12 * svd.singular_values.max().max(f64::MIN_POSITIVE);
    let w = svd
        .solve(&y, eps)
        .unwrap_or_else(|_| DVector::zeros(3));
    let mut axis = SldAxis {
        a: w[0],
        b: w[1],
        b_f: w[2],
        variance: 1.0,
    };
    let mse = samples.iter().map(|r| axis.residual(r).powi(2)).sum::<f64>() / n as f64;
    axis.variance = mse.max(VAR_FLOOR);
    axis
}

fn mstep(data: &[Vec<[f64; 4]>], seg: &Segmentation) -> Vec<Vec<SldAxis>> {
    let n_axes = data[0].len();
    (0..seg.m())
        .map(|j| {
            (0..n_axes)
                .map(|a| {
                    let samples: Vec<[f64; 4]> = (1..data.len() - 1)
                        .filter(|&t| seg.label(t) == j)
                        .map(|t| data[t][a])
                        .collect();
                    fit_axis(&samples)
                })
                .collect()
        })
        .collect()
}

fn gain(data: &[Vec<[f64; 4]>], phases: &[Vec<SldAxis>], t: usize, j: usize) -> f64 {
    phases[j]
        .iter()
        .zip(&data[t])
        .map(|(p, row)| p.log_density(row))
        .sum()
}

fn objective(data: &[Vec<[f64; 4]>], phases: &[Vec<SldAxis>], seg: &Segmentation) -> f64 {
    (1..data.len() - 1)
        .map(|t| gain(data, phases, t, seg.label(t)))
        .sum()
}

/// EM fit of the switching linear baseline: exact left-to-right E-step,
/// per-axis least squares M-step.
pub fn sld_fit(
    traj: &Trajectory,
    m: usize,
    opts: &FitOptions,
    stream: &mut RandomStream,
) -> Result<(SldModel, Segmentation), SegmentError> {
    let interior = traj.len().saturating_sub(2);
    if m == 0 || interior < m {
        return Err(SegmentError::InfeasibleM { m, interior });
    }
    let data = rows(traj);
    let mut best: Option<(SldModel, Segmentation)> = None;
    for r in 0..opts.restarts.max(1) {
        let mut seg = if r == 0 {
            Segmentation::uniform(traj.len(), m)?
        } else {
            jittered_start(traj.len(), m, stream)
        };
        let mut history: Vec<f64> = Vec::new();
        let mut phases = mstep(&data, &seg);
        loop {
            let next = best_labels(traj.len(), m, |t, j| gain(&data, &phases, t, j))?;
            let j = objective(&data, &phases, &next);
            let converged = history.last().is_some_and(|&l| (j - l).abs() < opts.tol);
            history.push(j);
            let unchanged = next == seg;
            seg = next;
            if converged || unchanged || history.len() >= opts.max_iters {
                break;
            }
            phases = mstep(&data, &seg);
        }
        let obj = *history.last().unwrap();
        if best.as_ref().is_none_or(|(b, _)| obj > b.objective) {
            best = Some((
                SldModel {
                    phases,
                    objective: obj,
                    history,
                },
                seg,
            ));
        }
    }
    Ok(best.expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::synthetic::linear_switching_trajectory;

    #[test]
    fn single_model_recovered_exactly() {
        let seg = Segmentation::single(80);
        let p = [0.9, 3.0, 0.04];
        let traj = linear_switching_trajectory(&seg, &[vec![p, p]], 0.05, 3);
        let (model, labels) =
            sld_fit(&traj, 1, &FitOptions::default(), &mut RandomStream::new(0, "s")).unwrap();
        assert_eq!(labels, seg);
        for ax in &model.phases[0] {
            assert!((ax.a - p[0]).abs() < 1e-6);
            assert!((ax.b - p[1]).abs() < 1e-6);
            assert!((ax.b_f - p[2]).abs() < 1e-6);
            assert_eq!(ax.variance, VAR_FLOOR);
        }
    }

    #[test]
    fn two_regimes_and_monotone_objective() {
        let truth = Segmentation::from_boundaries(100, &[55]).unwrap();
        let params = [vec![[0.9, 2.0, 0.05]; 2], vec![[0.5, 8.0, -0.05]; 2]];
        let traj = linear_switching_trajectory(&truth, &params, 0.05, 8);
        let (model, seg) =
            sld_fit(&traj, 2, &FitOptions::default(), &mut RandomStream::new(1, "s")).unwrap();
        assert!(seg.boundaries()[0].abs_diff(55) <= 3, "{:?}", seg.boundaries());
        for w in model.history.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
    }

    #[test]
    fn infeasible_m() {
        let traj = Trajectory::new(0.05, vec![vec![0.0]; 4], vec![vec![0.0]; 4], None).unwrap();
        let err = sld_fit(&traj, 3, &FitOptions::default(), &mut RandomStream::new(0, "s"));
        assert!(matches!(err, Err(SegmentError::InfeasibleM { m: 3, interior: 2 })));
    }
}
