use serde::{Deserialize, Serialize};

use crate::error::DataError;

/// Scalar stiffness bounds in N/m, applied to every diagonal entry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StiffnessBounds {
    pub k_min: f64,
    pub k_max: f64,
}

impl Default for StiffnessBounds {
    fn default() -> Self {
        Self {
            k_min: 10.0,
            k_max: 1000.0,
        }
    }
}

impl StiffnessBounds {
    pub fn new(k_min: f64, k_max: f64) -> Result<Self, DataError> {
        if !(k_min > 0.0 && k_max > k_min && k_max.is_finite()) {
            return Err(DataError::Stiffness(format!(
                "bounds must satisfy 0 < k_min < k_max, got [{k_min}, {k_max}]"
            )));
        }
        Ok(Self { k_min, k_max })
    }

    pub fn contains(&self, k: f64) -> bool {
        k >= self.k_min && k <= self.k_max
    }

    pub fn clamp(&self, k: f64) -> f64 {
        k.clamp(self.k_min, self.k_max)
    }

    pub fn width(&self) -> f64 {
        self.k_max - self.k_min
    }
}

/// One diagonal stiffness matrix per phase, stored as `[phase][axis]`.
/// Damping is derived, never stored: `d = 2 sqrt(k)` per entry.
#[derive(Clone, Debug, PartialEq)]
pub struct StiffnessParams {
    values: Vec<Vec<f64>>,
    bounds: StiffnessBounds,
}

impl StiffnessParams {
    pub fn new(values: Vec<Vec<f64>>, bounds: StiffnessBounds) -> Result<Self, DataError> {
        if values.is_empty() || values[0].is_empty() {
            return Err(DataError::Stiffness("no stiffness entries".into()));
        }
        let n = values[0].len();
        for (j, row) in values.iter().enumerate() {
            if row.len() != n {
                return Err(DataError::Stiffness(format!(
                    "phase {} has {} axes, expected {n}",
                    j + 1,
                    row.len()
                )));
            }
            if let Some(k) = row.iter().find(|k| !bounds.contains(**k)) {
                return Err(DataError::Stiffness(format!(
                    "entry {k} outside [{}, {}]",
                    bounds.k_min, bounds.k_max
                )));
            }
        }
        Ok(Self { values, bounds })
    }

    /// Every entry set to `k`, clamped into bounds.
    pub fn constant(m: usize, n_axes: usize, k: f64, bounds: StiffnessBounds) -> Self {
        Self {
            values: vec![vec![bounds.clamp(k); n_axes]; m],
            bounds,
        }
    }

    /// Phase-major flat layout: `[k_{1,1}, .., k_{1,n}, k_{2,1}, ..]`.
    pub fn from_flat(
        flat: &[f64],
        m: usize,
        bounds: StiffnessBounds,
    ) -> Result<Self, DataError> {
        if m == 0 || flat.len() % m != 0 {
            return Err(DataError::Stiffness(format!(
                "{} entries cannot form {m} phases",
                flat.len()
            )));
        }
        let n = flat.len() / m;
        Self::new(flat.chunks(n).map(|c| c.to_vec()).collect(), bounds)
    }

    pub fn flat(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn n_axes(&self) -> usize {
        self.values[0].len()
    }

    pub fn bounds(&self) -> StiffnessBounds {
        self.bounds
    }

    pub fn phase(&self, j: usize) -> &[f64] {
        &self.values[j]
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn trace(&self, j: usize) -> f64 {
        self.values[j].iter().sum()
    }
}
