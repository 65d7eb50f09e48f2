use crate::error::SurrogateError;
use crate::pareto::ObjectivePoint;
use crate::rng::RandomStream;

use super::gp::{Gp, GpFitOptions, GpParams};

/// Independent posteriors for the task and compliance objectives.
#[derive(Clone, Debug)]
pub struct Surrogate {
    pub task: Gp,
    pub compliance: Gp,
}

impl Surrogate {
    /// `warm` holds the previous (task, compliance) hyperparameters.
    pub fn fit(
        inputs: &[Vec<f64>],
        ys: &[ObjectivePoint],
        warm: Option<&(GpParams, GpParams)>,
        opts: &GpFitOptions,
        stream: &mut RandomStream,
    ) -> Result<Self, SurrogateError> {
        let yt: Vec<f64> = ys.iter().map(|y| y.y_t).collect();
        let yc: Vec<f64> = ys.iter().map(|y| y.y_c).collect();
        let task = Gp::fit(inputs, &yt, warm.map(|w| &w.0), opts, &mut stream.fork("task"))?;
        let compliance = Gp::fit(inputs, &yc, warm.map(|w| &w.1), opts, &mut stream.fork("compliance"))?;
        Ok(Self { task, compliance })
    }

    pub fn params(&self) -> (GpParams, GpParams) {
        (self.task.params().clone(), self.compliance.params().clone())
    }

    /// Predictive means and latent variances `(var_T, var_C)`.
    pub fn predict(&self, x: &[f64]) -> (ObjectivePoint, (f64, f64)) {
        let (mt, vt) = self.task.predict(x);
        let (mc, vc) = self.compliance.predict(x);
        (ObjectivePoint::new(mt, mc), (vt, vc))
    }
}
