//! Discretized impedance residuals.
//!
//! For interior sample `t` and one axis the velocity residual is
//! `r(k) = ẋ_{t+1} - ẋ_t - Λ⁻¹ (k Δx_t - 2 sqrt(k) ẋ_t + F_t) dt`
//! with `Δx_t = x_{t+1} - x_t`, which is affine in `(k, sqrt(k))`:
//! `r(k) = a - k b + sqrt(k) c`.

use crate::error::SegmentError;
use crate::trajectory::Trajectory;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ResidualTerms {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ResidualTerms {
    pub fn at(&self, k: f64) -> f64 {
        self.a - k * self.b + k.sqrt() * self.c
    }
}

/// Residual coefficients for every sample and axis; rows outside the
/// interior are zero.
#[derive(Clone, Debug)]
pub struct ResidualTable {
    terms: Vec<Vec<ResidualTerms>>,
}

impl ResidualTable {
    pub fn new(traj: &Trajectory, lambda: &[f64]) -> Self {
        let len = traj.len();
        let dt = traj.dt();
        let mut terms = vec![vec![ResidualTerms::default(); traj.n_axes()]; len];
        for (t, row) in terms.iter_mut().enumerate().take(len - 1).skip(1) {
            for (ax, term) in row.iter_mut().enumerate() {
                let v0 = traj.velocity(t, ax);
                let v1 = traj.velocity(t + 1, ax);
                let dx = traj.position(t + 1)[ax] - traj.position(t)[ax];
                let f = traj.force(t)[ax];
                let s = dt / lambda[ax];
                *term = ResidualTerms {
                    a: v1 - v0 - f * s,
                    b: dx * s,
                    c: 2.0 * v0 * s,
                };
            }
        }
        Self { terms }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_axes(&self) -> usize {
        self.terms[0].len()
    }

    pub fn get(&self, t: usize, axis: usize) -> ResidualTerms {
        self.terms[t][axis]
    }

    /// Per-sample log-gain `-Σ_a r_a²/k_a - κ Σ_a log k_a`.
    pub fn gain(&self, t: usize, k: &[f64], kappa: f64) -> f64 {
        self.terms[t]
            .iter()
            .zip(k)
            .map(|(term, &k)| -term.at(k).powi(2) / k - kappa * k.ln())
            .sum()
    }
}

/// Velocity residual at interior index `t` (0-based, `1..=len-2`).
pub fn icsld_residual(
    traj: &Trajectory,
    t: usize,
    k: &[f64],
    lambda: &[f64],
) -> Result<Vec<f64>, SegmentError> {
    let max = traj.len() - 2;
    if t < 1 || t > max {
        return Err(SegmentError::IndexOutOfRange { t, max });
    }
    let dt = traj.dt();
    Ok((0..traj.n_axes())
        .map(|a| {
            let v0 = traj.velocity(t, a);
            let v1 = traj.velocity(t + 1, a);
            let dx = traj.position(t + 1)[a] - traj.position(t)[a];
            let drive = k[a] * dx - 2.0 * k[a].sqrt() * v0 + traj.force(t)[a];
            v1 - v0 - drive * dt / lambda[a]
        })
        .collect())
}

/// Sufficient statistics of `Σ r(k)²` over a set of samples for one axis.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SquareSums {
    aa: f64,
    bb: f64,
    cc: f64,
    ab: f64,
    ac: f64,
    bc: f64,
    pub n: usize,
}

impl SquareSums {
    pub fn add(&mut self, r: ResidualTerms) {
        self.aa += r.a * r.a;
        self.bb += r.b * r.b;
        self.cc += r.c * r.c;
        self.ab += r.a * r.b;
        self.ac += r.a * r.c;
        self.bc += r.b * r.c;
        self.n += 1;
    }

    /// `Σ (a - k b + sqrt(k) c)²`.
    pub fn sum_sq(&self, k: f64) -> f64 {
        let s = k.sqrt();
        (self.aa + k * k * self.bb + k * self.cc - 2.0 * k * self.ab + 2.0 * s * self.ac
            - 2.0 * k * s * self.bc)
            .max(0.0)
    }
}
