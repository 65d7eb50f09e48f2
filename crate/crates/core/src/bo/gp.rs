//! Gaussian-process regression with an ARD Matérn-5/2 kernel.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::SurrogateError;
use crate::rng::RandomStream;

pub const NOISE_FLOOR: f64 = 1e-6;
const LOG_LS: (f64, f64) = (-4.6, 2.3); // lengthscale in [0.01, 10]
const LOG_SF: (f64, f64) = (-4.6, 4.6); // signal variance in [0.01, 100]
const LOG_SN: (f64, f64) = (-13.8, 0.0); // noise variance in [1e-6, 1]

/// Kernel hyperparameters, all on log scale.
#[derive(Clone, Debug, PartialEq)]
pub struct GpParams {
    pub log_lengthscales: Vec<f64>,
    pub log_signal: f64,
    pub log_noise: f64,
}

impl GpParams {
    pub fn new(lengthscales: &[f64], signal: f64, noise: f64) -> Self {
        Self {
            log_lengthscales: lengthscales.iter().map(|l| l.ln()).collect(),
            log_signal: signal.ln(),
            log_noise: noise.max(NOISE_FLOOR).ln(),
        }
    }

    pub fn default_for(dim: usize) -> Self {
        Self::new(&vec![0.3; dim], 1.0, 1e-4)
    }

    pub fn signal_variance(&self) -> f64 {
        self.log_signal.exp()
    }

    pub fn noise_variance(&self) -> f64 {
        self.log_noise.exp().max(NOISE_FLOOR)
    }

    fn to_vec(&self) -> Vec<f64> {
        let mut v = self.log_lengthscales.clone();
        v.push(self.log_signal);
        v.push(self.log_noise);
        v
    }

    fn from_vec(v: &[f64]) -> Self {
        let d = v.len() - 2;
        Self {
            log_lengthscales: v[..d].to_vec(),
            log_signal: v[d],
            log_noise: v[d + 1],
        }
    }

    fn box_for(i: usize, dim: usize) -> (f64, f64) {
        if i < dim {
            LOG_LS
        } else if i == dim {
            LOG_SF
        } else {
            LOG_SN
        }
    }

    fn random(dim: usize, stream: &mut RandomStream) -> Self {
        let v: Vec<f64> = (0..dim + 2)
            .map(|i| {
                let (lo, hi) = Self::box_for(i, dim);
                // Keep random starts away from the extreme corners.
                let (lo, hi) = (lo + 0.25 * (hi - lo), hi - 0.25 * (hi - lo));
                lo + stream.uniform() * (hi - lo)
            })
            .collect();
        Self::from_vec(&v)
    }
}

pub fn matern52(r: f64) -> f64 {
    let s = 5f64.sqrt() * r;
    (1.0 + s + s * s / 3.0) * (-s).exp()
}

fn scaled_distance(a: &[f64], b: &[f64], inv_ls: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(inv_ls)
        .map(|((x, y), l)| ((x - y) * l).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn factor(
    x: &[Vec<f64>],
    p: &GpParams,
) -> Result<(Cholesky<f64, Dyn>, f64), SurrogateError> {
    let n = x.len();
    let inv_ls: Vec<f64> = p.log_lengthscales.iter().map(|l| (-l).exp()).collect();
    let sf = p.signal_variance();
    let sn = p.noise_variance();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = sf + sn;
        for j in 0..i {
            let v = sf * matern52(scaled_distance(&x[i], &x[j], &inv_ls));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    if let Some(c) = Cholesky::new(k.clone()) {
        return Ok((c, 0.0));
    }
    let mut jitter = 1e-10;
    while jitter <= 1e-4 * 1.000_001 {
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(kj) {
            return Ok((c, jitter));
        }
        jitter *= 10.0;
    }
    Err(SurrogateError::NotPositiveDefinite { jitter: 1e-4 })
}

fn log_marginal(x: &[Vec<f64>], y: &DVector<f64>, p: &GpParams) -> Option<f64> {
    let (chol, _) = factor(x, p).ok()?;
    let alpha = chol.solve(y);
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
    let n = y.len() as f64;
    let v = -0.5 * y.dot(&alpha) - log_det - 0.5 * n * std::f64::consts::TAU.ln();
    v.is_finite().then_some(v)
}

/// Fitted posterior in standardized target units.
#[derive(Clone, Debug)]
pub struct Gp {
    inputs: Vec<Vec<f64>>,
    params: GpParams,
    inv_ls: Vec<f64>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    y_mean: f64,
    y_scale: f64,
    log_marginal: f64,
    /// Accepted log marginal likelihood values of the winning search.
    trace: Vec<f64>,
}

/// Search effort for hyperparameter fitting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GpFitOptions {
    pub starts: usize,
    /// Total coordinate probes shared by all starts.
    pub steps: usize,
}

impl Default for GpFitOptions {
    fn default() -> Self {
        Self {
            starts: 5,
            steps: 100,
        }
    }
}

fn standardize(y: &[f64]) -> (DVector<f64>, f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let scale = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    (
        DVector::from_iterator(y.len(), y.iter().map(|v| (v - mean) / scale)),
        mean,
        scale,
    )
}

/// Coordinate search on the log hyperparameters: each probe tries one
/// coordinate in one direction; a full failed sweep halves the step.
fn coordinate_search(
    x: &[Vec<f64>],
    y: &DVector<f64>,
    start: GpParams,
    budget: usize,
) -> Option<(GpParams, f64, Vec<f64>)> {
    let dim = start.log_lengthscales.len();
    let mut p = start.to_vec();
    let mut best = log_marginal(x, y, &GpParams::from_vec(&p))?;
    let mut trace = vec![best];
    let mut step = 0.5;
    let mut used = 0;
    let mut failed_in_row = 0;
    let probes = 2 * p.len();
    let mut probe = 0;
    while used < budget && step > 1e-3 {
        let i = (probe / 2) % p.len();
        let dir = if probe % 2 == 0 { 1.0 } else { -1.0 };
        probe += 1;
        let (lo, hi) = GpParams::box_for(i, dim);
        let cand_v = (p[i] + dir * step).clamp(lo, hi);
        if cand_v == p[i] {
            failed_in_row += 1;
        } else {
            let mut cand = p.clone();
            cand[i] = cand_v;
            used += 1;
            match log_marginal(x, y, &GpParams::from_vec(&cand)) {
                Some(v) if v > best => {
                    best = v;
                    p = cand;
                    trace.push(v);
                    failed_in_row = 0;
                }
                _ => failed_in_row += 1,
            }
        }
        if failed_in_row >= probes {
            step *= 0.5;
            failed_in_row = 0;
        }
    }
    Some((GpParams::from_vec(&p), best, trace))
}

impl Gp {
    /// Posterior under fixed hyperparameters.
    pub fn with_params(
        inputs: &[Vec<f64>],
        targets: &[f64],
        params: GpParams,
    ) -> Result<Self, SurrogateError> {
        if inputs.is_empty() {
            return Err(SurrogateError::Empty);
        }
        let (y, y_mean, y_scale) = standardize(targets);
        let (chol, _) = factor(inputs, &params)?;
        let alpha = chol.solve(&y);
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
        let log_marginal =
            -0.5 * y.dot(&alpha) - log_det - 0.5 * y.len() as f64 * std::f64::consts::TAU.ln();
        Ok(Self {
            inputs: inputs.to_vec(),
            inv_ls: params.log_lengthscales.iter().map(|l| (-l).exp()).collect(),
            params,
            chol,
            alpha,
            y_mean,
            y_scale,
            log_marginal,
            trace: vec![log_marginal],
        })
    }

    /// Maximizes the log marginal likelihood from `warm` (if given) plus
    /// random starts, then conditions on the data.
    pub fn fit(
        inputs: &[Vec<f64>],
        targets: &[f64],
        warm: Option<&GpParams>,
        opts: &GpFitOptions,
        stream: &mut RandomStream,
    ) -> Result<Self, SurrogateError> {
        if inputs.is_empty() {
            return Err(SurrogateError::Empty);
        }
        let dim = inputs[0].len();
        let (y, _, _) = standardize(targets);
        let starts = opts.starts.max(1);
        let mut candidates: Vec<GpParams> = Vec::with_capacity(starts);
        candidates.push(warm.cloned().unwrap_or_else(|| GpParams::default_for(dim)));
        while candidates.len() < starts {
            candidates.push(GpParams::random(dim, stream));
        }
        let per_start = opts.steps / starts;
        let mut best: Option<(GpParams, f64, Vec<f64>)> = None;
        for c in candidates {
            if let Some(found) = coordinate_search(inputs, &y, c, per_start) {
                if best.as_ref().is_none_or(|b| found.1 > b.1) {
                    best = Some(found);
                }
            }
        }
        let (params, _, trace) = best.ok_or(SurrogateError::NotPositiveDefinite { jitter: 1e-4 })?;
        let mut gp = Self::with_params(inputs, targets, params)?;
        gp.trace = trace;
        Ok(gp)
    }

    pub fn params(&self) -> &GpParams {
        &self.params
    }

    pub fn log_marginal(&self) -> f64 {
        self.log_marginal
    }

    pub fn trace(&self) -> &[f64] {
        &self.trace
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Mean and latent variance in standardized units.
    pub fn predict_standardized(&self, x: &[f64]) -> (f64, f64) {
        let sf = self.params.signal_variance();
        let ks = DVector::from_iterator(
            self.inputs.len(),
            self.inputs
                .iter()
                .map(|xi| sf * matern52(scaled_distance(x, xi, &self.inv_ls))),
        );
        let mean = ks.dot(&self.alpha);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&ks)
            .expect("cholesky factor has a positive diagonal");
        (mean, (sf - v.norm_squared()).max(0.0))
    }

    /// Mean and latent variance in target units.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let (m, v) = self.predict_standardized(x);
        (self.y_mean + self.y_scale * m, v * self.y_scale * self.y_scale)
    }
}
