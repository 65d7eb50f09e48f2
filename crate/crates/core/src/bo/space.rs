use crate::stiffness::StiffnessBounds;

/// Log-stiffness box mapped affinely onto `[0, 1]^d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchSpace {
    dim: usize,
    bounds: StiffnessBounds,
}

impl SearchSpace {
    pub fn new(dim: usize, bounds: StiffnessBounds) -> Self {
        assert!(dim >= 1, "search space needs at least one dimension");
        Self { dim, bounds }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> StiffnessBounds {
        self.bounds
    }

    fn log_range(&self) -> (f64, f64) {
        (self.bounds.k_min.ln(), self.bounds.k_max.ln())
    }

    pub fn to_unit_scalar(&self, k: f64) -> f64 {
        let (lo, hi) = self.log_range();
        ((self.bounds.clamp(k).ln() - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    pub fn from_unit_scalar(&self, u: f64) -> f64 {
        let (lo, hi) = self.log_range();
        self.bounds.clamp((lo + u.clamp(0.0, 1.0) * (hi - lo)).exp())
    }

    pub fn to_unit(&self, k: &[f64]) -> Vec<f64> {
        k.iter().map(|&v| self.to_unit_scalar(v)).collect()
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|&v| self.from_unit_scalar(v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corners_and_round_trip() {
        let s = SearchSpace::new(2, StiffnessBounds::default());
        assert_eq!(s.to_unit(&[10.0, 1000.0]), vec![0.0, 1.0]);
        assert!((s.to_unit_scalar(100.0) - 0.5).abs() < 1e-12);
        for k in [10.0, 37.5, 250.0, 999.0] {
            assert!((s.from_unit_scalar(s.to_unit_scalar(k)) - k).abs() < 1e-9 * k);
        }
    }
}
