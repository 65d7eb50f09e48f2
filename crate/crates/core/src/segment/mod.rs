//! Phase segmentation of demonstrations: the impedance-aware switching
//! model plus mixture-model and plain linear-switching baselines.

mod dp;
mod gmm;
mod icsld;
mod residual;
mod sld;
pub mod synthetic;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::SegmentError;
use crate::rng::RandomStream;
use crate::segmentation::Segmentation;
use crate::trajectory::Trajectory;

pub use dp::best_labels;
pub use gmm::{gmm_fit, GmmModel};
pub use icsld::{
    icsld_estep, icsld_fit, icsld_mstep, prior_from_segmentation, segment_objective, IcsldConfig,
    IcsldModel, MStep,
};
pub use residual::{icsld_residual, ResidualTable, ResidualTerms};
pub use sld::{sld_fit, SldAxis, SldModel};

/// EM loop controls shared by all segmenters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub restarts: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iters: 50,
            tol: 1e-9,
            restarts: 5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Icsld,
    Gmm,
    Sld,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Icsld, Method::Gmm, Method::Sld];

    pub fn name(self) -> &'static str {
        match self {
            Method::Icsld => "icsld",
            Method::Gmm => "gmm",
            Method::Sld => "sld",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method `{s}` (valid: icsld, gmm, sld)"))
    }
}

/// Labelling plus the impedance-derived prior stiffness for it.
#[derive(Clone, Debug)]
pub struct SegmentResult {
    pub method: Method,
    pub segmentation: Segmentation,
    pub prior: MStep,
    /// Final objective of the method's own fit.
    pub objective: f64,
}

/// Segments `traj` with `method` and derives the prior stiffness. For the
/// baselines the prior comes from one impedance M-step on their labelling.
pub fn segment(
    traj: &Trajectory,
    method: Method,
    m: usize,
    cfg: &IcsldConfig,
    opts: &FitOptions,
    stream: &mut RandomStream,
) -> Result<SegmentResult, SegmentError> {
    let (segmentation, objective, prior) = match method {
        Method::Icsld => {
            let model = icsld_fit(traj, m, cfg, opts, stream)?;
            let prior = MStep {
                stiffness: model.stiffness,
                at_bound: model.at_bound,
            };
            (model.segmentation, model.objective, prior)
        }
        Method::Gmm => {
            let (model, seg) = gmm_fit(traj, m, opts, stream)?;
            let prior = prior_from_segmentation(traj, &seg, cfg)?;
            (seg, model.log_likelihood, prior)
        }
        Method::Sld => {
            let (model, seg) = sld_fit(traj, m, opts, stream)?;
            let prior = prior_from_segmentation(traj, &seg, cfg)?;
            (seg, model.objective, prior)
        }
    };
    Ok(SegmentResult {
        method,
        segmentation,
        prior,
        objective,
    })
}

/// Equal-length phases with every boundary moved by up to half a phase.
pub(crate) fn jittered_start(len: usize, m: usize, stream: &mut RandomStream) -> Segmentation {
    let interior = len - 2;
    let width = interior as f64 / m as f64;
    let mut b: Vec<i64> = (1..m)
        .map(|j| {
            let base = 1.0 + j as f64 * width;
            (base + (stream.uniform() - 0.5) * width).round() as i64
        })
        .collect();
    b.sort_unstable();
    let lo = 2i64;
    let hi = len as i64 - 2;
    for j in 0..b.len() {
        let floor = if j == 0 { lo } else { b[j - 1] + 1 };
        b[j] = b[j].max(floor);
    }
    for j in (0..b.len()).rev() {
        let ceil = if j + 1 == b.len() { hi } else { b[j + 1] - 1 };
        b[j] = b[j].min(ceil);
    }
    let starts: Vec<usize> = b.into_iter().map(|v| v as usize).collect();
    Segmentation::from_boundaries(len, &starts).expect("jittered boundaries stay feasible")
}
