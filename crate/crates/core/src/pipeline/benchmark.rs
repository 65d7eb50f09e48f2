use rayon::prelude::*;

use crate::error::PipelineError;
use crate::pareto::{pareto_indices, ObjectivePoint};
use crate::segment::Method;
use crate::sim::{TaskEnv, TaskKind};
use crate::trajectory::Trajectory;

use super::{run_optimization, ExperimentConfig, RunRecord};

/// Runs of one (method, prior) combination, one entry per seed.
#[derive(Clone, Debug)]
pub struct BenchmarkCell {
    pub method: Method,
    pub use_prior: bool,
    pub seeds: Vec<u64>,
    pub runs: Vec<Result<RunRecord, String>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub method: Method,
    pub use_prior: bool,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub completed: usize,
    pub failed: usize,
}

pub(crate) fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

impl CellSummary {
    /// Statistics of the final hypervolumes of completed runs.
    pub fn from_finals(method: Method, use_prior: bool, finals: &[f64], failed: usize) -> Self {
        let (mean, std) = mean_std(finals);
        Self {
            method,
            use_prior,
            mean,
            std,
            median: median(finals),
            completed: finals.len(),
            failed,
        }
    }
}

impl BenchmarkCell {
    pub fn ok_runs(&self) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter_map(|r| r.as_ref().ok())
    }

    pub fn final_hvs(&self) -> Vec<f64> {
        self.ok_runs().map(RunRecord::final_hv).collect()
    }

    pub fn summary(&self) -> CellSummary {
        let finals = self.final_hvs();
        CellSummary::from_finals(self.method, self.use_prior, &finals, self.runs.len() - finals.len())
    }

    /// Pointwise median of the hypervolume curves.
    pub fn median_curve(&self) -> Vec<f64> {
        let curves: Vec<Vec<f64>> = self.ok_runs().map(RunRecord::hv_curve).collect();
        let len = curves.iter().map(Vec::len).min().unwrap_or(0);
        (0..len)
            .map(|i| median(&curves.iter().map(|c| c[i]).collect::<Vec<_>>()))
            .collect()
    }

    /// Non-dominated points over all seeds, ascending in `y_C`.
    pub fn union_front(&self) -> Vec<(Vec<f64>, ObjectivePoint)> {
        let all: Vec<(Vec<f64>, ObjectivePoint)> =
            self.ok_runs().flat_map(|r| r.pareto()).collect();
        let ys: Vec<ObjectivePoint> = all.iter().map(|(_, y)| *y).collect();
        pareto_indices(&ys).into_iter().map(|i| all[i].clone()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct BenchmarkReport {
    pub task: TaskKind,
    pub cells: Vec<BenchmarkCell>,
}

impl BenchmarkReport {
    pub fn summaries(&self) -> Vec<CellSummary> {
        self.cells.iter().map(BenchmarkCell::summary).collect()
    }

    pub fn cell(&self, method: Method, use_prior: bool) -> Option<&BenchmarkCell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.use_prior == use_prior)
    }
}

type Demos = Vec<Result<(TaskEnv, Trajectory), String>>;

fn demos(base: &ExperimentConfig) -> Demos {
    base.seeds
        .par_iter()
        .map(|&s| base.demonstrate(s).map_err(|e| e.to_string()))
        .collect()
}

/// Runs `configs` over every seed, all (config, seed) jobs in parallel.
fn run_grid(
    base: &ExperimentConfig,
    configs: &[ExperimentConfig],
) -> Vec<Vec<Result<RunRecord, String>>> {
    let demos = demos(base);
    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..base.seeds.len()).map(move |s| (c, s)))
        .collect();
    let results: Vec<Result<RunRecord, String>> = jobs
        .par_iter()
        .map(|&(c, s)| {
            let (env, demo) = demos[s].as_ref().map_err(Clone::clone)?;
            run_optimization(&configs[c], env, demo, base.seeds[s]).map_err(|e| e.to_string())
        })
        .collect();
    let mut out: Vec<Vec<Result<RunRecord, String>>> = vec![Vec::new(); configs.len()];
    for ((c, _), r) in jobs.into_iter().zip(results) {
        out[c].push(r);
    }
    out
}

/// The {icsld, gmm, sld} × {prior, no prior} grid on `base.task` over
/// `base.seeds`. Failed runs are kept as messages in their cell.
pub fn run_benchmark(base: &ExperimentConfig) -> Result<BenchmarkReport, PipelineError> {
    base.validate()?;
    let mut configs = Vec::new();
    for method in Method::ALL {
        for use_prior in [true, false] {
            configs.push(ExperimentConfig {
                method,
                use_prior,
                ..base.clone()
            });
        }
    }
    let cells = run_grid(base, &configs)
        .into_iter()
        .zip(&configs)
        .map(|(runs, c)| BenchmarkCell {
            method: c.method,
            use_prior: c.use_prior,
            seeds: base.seeds.clone(),
            runs,
        })
        .collect();
    Ok(BenchmarkReport {
        task: base.task,
        cells,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityRow {
    pub m: usize,
    pub beta: f64,
    pub median: f64,
    pub mean: f64,
    pub std: f64,
    pub finals: Vec<f64>,
    pub failed: usize,
}

/// Final hypervolume of the base method for each (M, β) setting.
pub fn run_sensitivity(
    base: &ExperimentConfig,
    ms: &[usize],
    betas: &[f64],
) -> Result<Vec<SensitivityRow>, PipelineError> {
    base.validate()?;
    let mut configs = Vec::new();
    for &m in ms {
        for &beta in betas {
            let c = ExperimentConfig {
                m: Some(m),
                beta,
                ..base.clone()
            };
            c.validate()?;
            configs.push(c);
        }
    }
    Ok(run_grid(base, &configs)
        .into_iter()
        .zip(&configs)
        .map(|(runs, c)| {
            let finals: Vec<f64> = runs
                .iter()
                .filter_map(|r| r.as_ref().ok().map(RunRecord::final_hv))
                .collect();
            let (mean, std) = mean_std(&finals);
            SensitivityRow {
                m: c.phases(),
                beta: c.beta,
                median: median(&finals),
                mean,
                std,
                failed: runs.len() - finals.len(),
                finals,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn small_grid_has_six_cells() {
        let base = ExperimentConfig {
            task: TaskKind::Door1d,
            n_iters: 10,
            n_init: 8,
            pool: 64,
            seeds: vec![0, 1],
            ..ExperimentConfig::default()
        };
        let report = run_benchmark(&base).unwrap();
        assert_eq!(report.cells.len(), 6);
        for cell in &report.cells {
            let s = cell.summary();
            assert_eq!(s.completed + s.failed, 2);
            let curve = cell.median_curve();
            assert_eq!(curve.len(), 10);
        }
    }
}
