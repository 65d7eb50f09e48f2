use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::SegmentError;
use crate::rng::RandomStream;
use crate::segmentation::Segmentation;
use crate::trajectory::Trajectory;

use super::dp::best_labels;
use super::FitOptions;

const MIN_WEIGHT: f64 = 1e-8;
const COV_REG: f64 = 1e-6;
const MAX_PERMUTED: usize = 6;

/// Full-covariance Gaussian mixture over standardized per-sample features
/// `(x, ẋ, ẍ, F)`.
#[derive(Clone, Debug)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
    /// Feature centering and scaling applied before fitting.
    pub feature_mean: DVector<f64>,
    pub feature_scale: DVector<f64>,
    /// Penalized log-likelihood after the last iteration.
    pub log_likelihood: f64,
    pub history: Vec<f64>,
}

/// Central differences inside, one-sided at the ends.
fn derivative(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|t| {
            if t == 0 {
                (values[1] - values[0]) / dt
            } else if t + 1 == n {
                (values[t] - values[t - 1]) / dt
            } else {
                (values[t + 1] - values[t - 1]) / (2.0 * dt)
            }
        })
        .collect()
}

fn features(traj: &Trajectory) -> Vec<DVector<f64>> {
    let n = traj.n_axes();
    let len = traj.len();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(4 * n);
    for a in 0..n {
        let x: Vec<f64> = (0..len).map(|t| traj.position(t)[a]).collect();
        let v = derivative(&x, traj.dt());
        let acc = derivative(&v, traj.dt());
        let f: Vec<f64> = (0..len).map(|t| traj.force(t)[a]).collect();
        cols.extend([x, v, acc, f]);
    }
    (0..len)
        .map(|t| DVector::from_iterator(cols.len(), cols.iter().map(|c| c[t])))
        .collect()
}

fn standardize(xs: &mut [DVector<f64>]) -> (DVector<f64>, DVector<f64>) {
    let d = xs[0].len();
    let n = xs.len() as f64;
    let mean = xs.iter().fold(DVector::zeros(d), |acc, x| acc + x) / n;
    let mut scale = DVector::from_element(d, 0.0);
    for x in xs.iter() {
        scale += (x - &mean).map(|v| v * v);
    }
    let scale = scale.map(|s| {
        let sd = (s / n).sqrt();
        if sd > 1e-12 {
            sd
        } else {
            1.0
        }
    });
    for x in xs.iter_mut() {
        *x = (&*x - &mean).component_div(&scale);
    }
    (mean, scale)
}

/// k-means++ seeding: first centre uniform, later ones by squared distance.
fn seed_centres(xs: &[DVector<f64>], m: usize, stream: &mut RandomStream) -> Vec<DVector<f64>> {
    let mut centres = vec![xs[stream.below(xs.len())].clone()];
    while centres.len() < m {
        let d2: Vec<f64> = xs
            .iter()
            .map(|x| {
                centres
                    .iter()
                    .map(|c| (x - c).norm_squared())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = stream.uniform() * total;
            let mut idx = d2.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                if u < *w {
                    idx = i;
                    break;
                }
                u -= w;
            }
            idx
        } else {
            stream.below(xs.len())
        };
        centres.push(xs[pick].clone());
    }
    centres
}

struct Component {
    chol: Cholesky<f64, Dyn>,
    log_norm: f64,
}

fn component(cov: &DMatrix<f64>) -> Result<Component, SegmentError> {
    let d = cov.nrows() as f64;
    let chol = Cholesky::new(cov.clone()).ok_or(SegmentError::DegenerateComponent {
        component: 0,
        weight: 0.0,
    })?;
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(Component {
        chol,
        log_norm: -0.5 * (d * std::f64::consts::TAU.ln() + log_det),
    })
}

fn log_pdf(c: &Component, mean: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let diff = x - mean;
    let z = c.chol.l().solve_lower_triangular(&diff).expect("triangular solve");
    c.log_norm - 0.5 * z.norm_squared()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Fits the mixture by EM and turns the per-sample argmax labels into a
/// valid left-to-right segmentation.
///
/// Covariance updates are `(S_j + ψ I) / N_j` with `ψ = 1e-6 · T / M`, the
/// maximizer of the log-likelihood penalized by `-½ ψ Σ_j tr(Σ_j⁻¹)`; that
/// penalized value is what the history tracks, so it never decreases.
pub fn gmm_fit(
    traj: &Trajectory,
    m: usize,
    opts: &FitOptions,
    stream: &mut RandomStream,
) -> Result<(GmmModel, Segmentation), SegmentError> {
    let interior = traj.len().saturating_sub(2);
    if m == 0 || interior < m {
        return Err(SegmentError::InfeasibleM { m, interior });
    }
    let mut xs = features(traj);
    let (feature_mean, feature_scale) = standardize(&mut xs);
    let n = xs.len();
    let d = xs[0].len();
    let psi = COV_REG * n as f64 / m as f64;

    let centres = seed_centres(&xs, m, stream);
    let global = xs
        .iter()
        .fold(DMatrix::zeros(d, d), |acc, x| acc + x * x.transpose())
        / n as f64
        + DMatrix::identity(d, d) * COV_REG;
    let mut weights = vec![1.0 / m as f64; m];
    let mut means = centres;
    let mut covs = vec![global; m];

    let mut history: Vec<f64> = Vec::new();
    let mut resp = vec![vec![0.0; m]; n];
    for _ in 0..opts.max_iters.max(1) {
        // E-step
        let comps = covs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                component(c).map_err(|_| SegmentError::DegenerateComponent {
                    component: j,
                    weight: weights[j],
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut ll = 0.0;
        let mut logp = vec![0.0; m];
        for (x, r) in xs.iter().zip(resp.iter_mut()) {
            for j in 0..m {
                logp[j] = weights[j].ln() + log_pdf(&comps[j], &means[j], x);
            }
            let lse = log_sum_exp(&logp);
            ll += lse;
            for j in 0..m {
                r[j] = (logp[j] - lse).exp();
            }
        }
        let penalty: f64 = comps
            .iter()
            .map(|c| {
                let inv = c.chol.inverse();
                -0.5 * psi * inv.trace()
            })
            .sum();
        let objective = ll + penalty;
        let converged = history.last().is_some_and(|&l| (objective - l).abs() < opts.tol);
        history.push(objective);
        if converged {
            break;
        }
        // M-step
        for j in 0..m {
            let nj: f64 = resp.iter().map(|r| r[j]).sum();
            if nj / (n as f64) < MIN_WEIGHT {
                return Err(SegmentError::DegenerateComponent {
                    component: j,
                    weight: nj / n as f64,
                });
            }
            weights[j] = nj / n as f64;
            let mu = xs
                .iter()
                .zip(&resp)
                .fold(DVector::zeros(d), |acc, (x, r)| acc + x * r[j])
                / nj;
            let mut s = DMatrix::zeros(d, d);
            for (x, r) in xs.iter().zip(&resp) {
                let diff = x - &mu;
                s += &diff * diff.transpose() * r[j];
            }
            covs[j] = (s + DMatrix::identity(d, d) * psi) / nj;
            means[j] = mu;
        }
    }
    if let Some((j, w)) = weights.iter().enumerate().find(|(_, w)| **w < MIN_WEIGHT) {
        return Err(SegmentError::DegenerateComponent {
            component: j,
            weight: *w,
        });
    }
    let raw: Vec<usize> = resp
        .iter()
        .map(|r| {
            let mut best = 0;
            for j in 1..m {
                if r[j] > r[best] {
                    best = j;
                }
            }
            best
        })
        .collect();
    let seg = monotonize(&raw, m)?;
    let model = GmmModel {
        weights,
        means,
        covariances: covs,
        feature_mean,
        feature_scale,
        log_likelihood: *history.last().unwrap(),
        history,
    };
    Ok((model, seg))
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Closest left-to-right labelling to arbitrary component labels: the
/// phase order of components and the boundaries are chosen jointly to
/// maximize agreement. Above six components the order is fixed by each
/// component's mean time index.
pub fn monotonize(raw: &[usize], m: usize) -> Result<Segmentation, SegmentError> {
    let len = raw.len();
    let fit = |order: &[usize]| -> Result<(Segmentation, usize), SegmentError> {
        // order[phase] = component
        let mut phase_of = vec![0; m];
        for (phase, &c) in order.iter().enumerate() {
            phase_of[c] = phase;
        }
        let seg = best_labels(len, m, |t, j| if phase_of[raw[t]] == j { 1.0 } else { 0.0 })?;
        let agree = (0..len).filter(|&t| phase_of[raw[t]] == seg.label(t)).count();
        Ok((seg, agree))
    };
    let orders = if m <= MAX_PERMUTED {
        permutations(m)
    } else {
        let mut centroid: Vec<(f64, usize)> = (0..m)
            .map(|c| {
                let ts: Vec<usize> = (0..len).filter(|&t| raw[t] == c).collect();
                let mean = if ts.is_empty() {
                    f64::INFINITY
                } else {
                    ts.iter().sum::<usize>() as f64 / ts.len() as f64
                };
                (mean, c)
            })
            .collect();
        centroid.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        vec![centroid.into_iter().map(|(_, c)| c).collect()]
    };
    let mut best: Option<(Segmentation, usize)> = None;
    for order in orders {
        let cand = fit(&order)?;
        if best.as_ref().is_none_or(|b| cand.1 > b.1) {
            best = Some(cand);
        }
    }
    Ok(best.expect("at least one order").0)
}
