//! Demonstration to Pareto set: segmentation, prior, initial design and
//! the prior-weighted BO loop, plus the benchmark grid built on top.

mod benchmark;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bo::{
    initial_design, suggest, AcquisitionContext, GpParams, SearchSpace, StiffnessPrior,
    SuggestOptions,
};
use crate::error::{PipelineError, SimError};
use crate::pareto::{ObjectivePoint, ParetoArchive};
use crate::rng::RandomStream;
use crate::segment::{segment, FitOptions, IcsldConfig, Method, SegmentResult};
use crate::segmentation::Segmentation;
use crate::sim::{
    compute_attractors, rollout, start_state, ImpedanceConfig, TaskEnv, TaskKind, TaskSetup,
};
use crate::stiffness::{StiffnessBounds, StiffnessParams};
use crate::trajectory::Trajectory;

pub use benchmark::{
    run_benchmark, run_sensitivity, BenchmarkCell, BenchmarkReport, CellSummary, SensitivityRow,
};

/// `-Σ_t trace(K_{s_t})`.
pub fn eval_compliance(theta: &StiffnessParams, seg: &Segmentation) -> f64 {
    let traces: Vec<f64> = (0..theta.m()).map(|j| theta.trace(j)).collect();
    -seg.counts()
        .iter()
        .zip(&traces)
        .map(|(&c, tr)| c as f64 * tr)
        .sum::<f64>()
}

/// Reward sum of replaying `demo` through the attractors implied by `theta`.
pub fn eval_task(
    theta: &StiffnessParams,
    seg: &Segmentation,
    demo: &Trajectory,
    env: &TaskEnv,
    cfg: &ImpedanceConfig,
) -> Result<f64, SimError> {
    let xd = compute_attractors(demo, seg, theta, cfg);
    let out = rollout(env, seg, theta, &xd, &start_state(demo), demo.dt(), cfg)?;
    Ok(out.total_reward())
}

/// Residual regularization used for the desk-scale tasks. The weight carries
/// units of squared velocity per unit stiffness; at 1e-5 the 20 Hz residual
/// pushes every moving-phase estimate onto `k_max`.
pub const DESK_KAPPA: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    /// Phase count; `None` takes the task default.
    pub m: Option<usize>,
    pub kappa: f64,
    pub beta: f64,
    /// Total evaluations including the initial design.
    pub n_iters: usize,
    pub n_init: usize,
    pub seeds: Vec<u64>,
    pub method: Method,
    pub use_prior: bool,
    pub k_min: f64,
    pub k_max: f64,
    /// `[y_T, y_C]` worst corner; `None` derives it from the task.
    pub reference: Option<[f64; 2]>,
    /// `[y_T, y_C]` best corner; `None` derives it from the task.
    pub ideal: Option<[f64; 2]>,
    /// Simulator override; `None` uses the task preset.
    pub sim: Option<ImpedanceConfig>,
    /// Standard deviation of demonstration position noise (m).
    pub demo_noise: f64,
    pub fit: FitOptions,
    /// Candidate pool size per suggestion.
    pub pool: usize,
    /// Record wall-clock per iteration. Off keeps outputs reproducible.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: TaskKind::Wipe2d,
            m: None,
            kappa: DESK_KAPPA,
            beta: 1.0,
            n_iters: 100,
            n_init: 8,
            seeds: vec![0],
            method: Method::Icsld,
            use_prior: true,
            k_min: 10.0,
            k_max: 1000.0,
            reference: None,
            ideal: None,
            sim: None,
            demo_noise: 1e-4,
            fit: FitOptions::default(),
            pool: 1024,
            timing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn for_task(task: TaskKind) -> Self {
        Self {
            task,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        if self.n_init < 1 || self.n_iters < self.n_init {
            return bad(format!(
                "need n_iters >= n_init >= 1, got n_iters={} n_init={}",
                self.n_iters, self.n_init
            ));
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.m == Some(0) {
            return bad("m must be at least 1".into());
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad(format!("kappa must be positive, got {}", self.kappa));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be non-negative, got {}", self.beta));
        }
        if !(self.demo_noise >= 0.0 && self.demo_noise.is_finite()) {
            return bad(format!("demo_noise must be non-negative, got {}", self.demo_noise));
        }
        if self.pool < 2 {
            return bad("pool must hold at least 2 candidates".into());
        }
        StiffnessBounds::new(self.k_min, self.k_max)
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if let Some(sim) = &self.sim {
            sim.validate()
                .map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn bounds(&self) -> StiffnessBounds {
        StiffnessBounds {
            k_min: self.k_min,
            k_max: self.k_max,
        }
    }

    /// Prior weighting is on only with `use_prior` and a non-zero `beta`.
    pub fn prior_active(&self) -> bool {
        self.use_prior && self.beta != 0.0
    }

    pub fn setup(&self) -> TaskSetup {
        let mut setup = TaskSetup::preset(self.task);
        if let Some(sim) = &self.sim {
            setup.cfg = sim.clone();
        }
        setup
    }

    pub fn phases(&self) -> usize {
        self.m.unwrap_or_else(|| self.setup().default_m)
    }

    /// Demonstration and evaluation environment for one seed.
    pub fn demonstrate(&self, seed: u64) -> Result<(TaskEnv, Trajectory), SimError> {
        self.setup()
            .demonstrate(self.demo_noise, &mut RandomStream::new(seed, "demo"))
    }

    /// Worst and best objective corners used for normalization.
    pub fn corners(&self, env: &TaskEnv, demo: &Trajectory) -> (ObjectivePoint, ObjectivePoint) {
        let setup = self.setup();
        let len = demo.len() as f64;
        let n = demo.n_axes() as f64;
        let (r_t, i_t) = match env {
            TaskEnv::Track(_) => (-setup.error_bound, 0.0),
            other => (0.0, other.max_reward(demo.len())),
        };
        let r = self.reference.map_or(
            ObjectivePoint::new(r_t, -len * n * self.k_max),
            |v| ObjectivePoint::new(v[0], v[1]),
        );
        let i = self.ideal.map_or(
            ObjectivePoint::new(i_t, -len * n * self.k_min),
            |v| ObjectivePoint::new(v[0], v[1]),
        );
        (r, i)
    }
}

/// One evaluated candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRow {
    pub n: usize,
    /// Phase-major stiffness (N/m).
    pub theta: Vec<f64>,
    pub y_t: f64,
    pub y_c: f64,
    /// Normalized hypervolume of the archive after this row.
    pub hv: f64,
    pub ms: f64,
    /// The rollout diverged and `y_t` was set to the reference.
    pub diverged: bool,
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub seed: u64,
    pub method: Method,
    pub use_prior: bool,
    pub segmentation: Segmentation,
    pub prior: StiffnessParams,
    pub rows: Vec<RunRow>,
    pub archive: ParetoArchive,
    /// Suggestions that fell back to the prior mode.
    pub fallbacks: usize,
}

impl RunRecord {
    pub fn final_hv(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.hv)
    }

    pub fn hv_curve(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.hv).collect()
    }

    /// Pareto set `(θ, y)` in ascending `y_C`.
    pub fn pareto(&self) -> Vec<(Vec<f64>, ObjectivePoint)> {
        self.archive.front()
    }
}

/// Segments the demonstration with the configured method.
pub fn segment_demo(
    config: &ExperimentConfig,
    demo: &Trajectory,
    seed: u64,
) -> Result<SegmentResult, PipelineError> {
    let setup = config.setup();
    let cfg = IcsldConfig {
        kappa: config.kappa,
        bounds: config.bounds(),
        lambda: setup.cfg.lambda.clone(),
    };
    Ok(segment(
        demo,
        config.method,
        config.phases(),
        &cfg,
        &config.fit,
        &mut RandomStream::new(seed, "segment"),
    )?)
}

/// Full optimization for one seed on a given demonstration.
pub fn run_optimization(
    config: &ExperimentConfig,
    env: &TaskEnv,
    demo: &Trajectory,
    seed: u64,
) -> Result<RunRecord, PipelineError> {
    config.validate()?;
    let seg = segment_demo(config, demo, seed)?;
    run_with_segmentation(config, env, demo, &seg.segmentation, &seg.prior.stiffness, seed)
}

/// Optimization loop on a fixed segmentation and prior stiffness.
pub fn run_with_segmentation(
    config: &ExperimentConfig,
    env: &TaskEnv,
    demo: &Trajectory,
    seg: &Segmentation,
    prior_k: &StiffnessParams,
    seed: u64,
) -> Result<RunRecord, PipelineError> {
    config.validate()?;
    if seg.len() != demo.len() {
        return Err(PipelineError::Config(format!(
            "segmentation has {} samples, demonstration {}",
            seg.len(),
            demo.len()
        )));
    }
    let setup = config.setup();
    let cfg = &setup.cfg;
    let bounds = config.bounds();
    let m = seg.m();
    let d = m * demo.n_axes();
    let space = SearchSpace::new(d, bounds);
    let prior = config
        .prior_active()
        .then(|| StiffnessPrior::new(prior_k.flat(), bounds, config.beta));
    let (reference, ideal) = config.corners(env, demo);
    let mut archive = ParetoArchive::new(reference, ideal);
    let root = RandomStream::new(seed, "optimize");

    let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(config.n_iters);
    let mut normalized: Vec<ObjectivePoint> = Vec::with_capacity(config.n_iters);
    let mut rows: Vec<RunRow> = Vec::with_capacity(config.n_iters);
    let mut fallbacks = 0;

    let mut evaluate = |n: usize,
                        u: Vec<f64>,
                        started: Instant,
                        inputs: &mut Vec<Vec<f64>>,
                        normalized: &mut Vec<ObjectivePoint>|
     -> Result<(), PipelineError> {
        let flat = space.from_unit(&u);
        let theta = StiffnessParams::from_flat(&flat, m, bounds)?;
        let y_c = eval_compliance(&theta, seg);
        let (y_t, diverged) = match eval_task(&theta, seg, demo, env, cfg) {
            Ok(v) => (v, false),
            Err(SimError::Diverged { .. }) => (reference.y_t, true),
            Err(e) => {
                return Err(PipelineError::AtIteration {
                    iteration: n,
                    source: Box::new(e.into()),
                })
            }
        };
        let y = ObjectivePoint::new(y_t, y_c);
        archive.push(flat.clone(), y);
        normalized.push(archive.normalize(&y));
        inputs.push(u);
        let ms = if config.timing {
            started.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        rows.push(RunRow {
            n,
            theta: flat,
            y_t,
            y_c,
            hv: archive.hypervolume(),
            ms,
            diverged,
        });
        Ok(())
    };

    let mut design = initial_design(config.n_init, d, &mut root.fork("design"));
    if let Some(p) = &prior {
        design[0] = p.mode_unit(&space);
    }
    for (i, u) in design.into_iter().enumerate() {
        evaluate(i + 1, u, Instant::now(), &mut inputs, &mut normalized)?;
    }

    let opts = SuggestOptions {
        pool: config.pool,
        ..SuggestOptions::default()
    };
    let mut warm: Option<(GpParams, GpParams)> = None;
    for n in config.n_init + 1..=config.n_iters {
        let started = Instant::now();
        let ctx = AcquisitionContext {
            space: &space,
            prior: prior.as_ref(),
            n: n - config.n_init,
            reference: ObjectivePoint::new(0.0, 0.0),
        };
        let s = suggest(
            &inputs,
            &normalized,
            &ctx,
            warm.as_ref(),
            &opts,
            &mut root.fork(&format!("suggest/{n}")),
        );
        if s.fallback {
            fallbacks += 1;
        }
        if s.params.is_some() {
            warm = s.params;
        }
        evaluate(n, s.point, started, &mut inputs, &mut normalized)?;
    }

    Ok(RunRecord {
        seed,
        method: config.method,
        use_prior: config.use_prior,
        segmentation: seg.clone(),
        prior: prior_k.clone(),
        rows,
        archive,
        fallbacks,
    })
}
