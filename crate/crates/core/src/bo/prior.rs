use crate::rng::RandomStream;
use crate::stiffness::StiffnessBounds;

use super::space::SearchSpace;

/// Product of per-entry Gaussians centred on a reference stiffness and
/// truncated to the bounds. The truncation mass is not renormalized.
#[derive(Clone, Debug, PartialEq)]
pub struct StiffnessPrior {
    pub mean: Vec<f64>,
    pub sigma: Vec<f64>,
    pub bounds: StiffnessBounds,
    pub beta: f64,
    /// Constant multiplier on the density; leaves every argmax unchanged.
    pub scale: f64,
    /// Constant density over the box; `mean` and `sigma` are unused.
    pub flat: bool,
}

impl StiffnessPrior {
    /// Width per entry is the distance to the nearer bound, floored at
    /// 0.1% of the range.
    pub fn new(mean: Vec<f64>, bounds: StiffnessBounds, beta: f64) -> Self {
        let floor = 1e-3 * bounds.width();
        let sigma = mean
            .iter()
            .map(|&k| (bounds.k_max - k).min(k - bounds.k_min).max(floor))
            .collect();
        Self {
            mean,
            sigma,
            bounds,
            beta,
            scale: 1.0,
            flat: false,
        }
    }

    /// Uniform prior: sampling matches plain uniform draws on the cube.
    pub fn flat(dim: usize, bounds: StiffnessBounds, beta: f64) -> Self {
        let centre = (bounds.k_min * bounds.k_max).sqrt();
        Self {
            mean: vec![centre; dim],
            sigma: vec![f64::INFINITY; dim],
            bounds,
            beta,
            scale: 1.0,
            flat: true,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        assert!(scale > 0.0, "density scale must be positive");
        self.scale = scale;
        self
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `ln π(θ)` for a flat stiffness vector; `-inf` outside the box.
    pub fn log_density(&self, theta: &[f64]) -> f64 {
        let mut acc = self.scale.ln();
        if self.flat {
            return if theta.iter().all(|&k| self.bounds.contains(k)) {
                acc
            } else {
                f64::NEG_INFINITY
            };
        }
        for ((&k, &m), &s) in theta.iter().zip(&self.mean).zip(&self.sigma) {
            if !self.bounds.contains(k) {
                return f64::NEG_INFINITY;
            }
            let z = (k - m) / s;
            acc += -0.5 * z * z - (s * (std::f64::consts::TAU).sqrt()).ln();
        }
        acc
    }

    pub fn density(&self, theta: &[f64]) -> f64 {
        self.log_density(theta).exp()
    }

    /// One draw in unit-cube coordinates, by per-entry rejection.
    pub fn sample_unit(&self, space: &SearchSpace, stream: &mut RandomStream) -> Vec<f64> {
        if self.flat {
            return (0..self.dim()).map(|_| stream.uniform()).collect();
        }
        self.mean
            .iter()
            .zip(&self.sigma)
            .map(|(&m, &s)| {
                let k = loop {
                    let k = m + s * stream.normal();
                    if self.bounds.contains(k) {
                        break k;
                    }
                };
                space.to_unit_scalar(k)
            })
            .collect()
    }

    pub fn mode_unit(&self, space: &SearchSpace) -> Vec<f64> {
        space.to_unit(&self.mean)
    }
}

/// Decaying prior weight `π(θ)^{β/n}`.
pub fn pibo_weight(theta: &[f64], prior: &StiffnessPrior, n: usize) -> f64 {
    assert!(n >= 1, "iteration index starts at 1");
    if prior.beta == 0.0 {
        return 1.0;
    }
    (prior.beta / n as f64 * prior.log_density(theta)).exp()
}
