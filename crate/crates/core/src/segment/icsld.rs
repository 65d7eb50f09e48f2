use serde::{Deserialize, Serialize};

use crate::error::SegmentError;
use crate::rng::RandomStream;
use crate::segmentation::Segmentation;
use crate::stiffness::{StiffnessBounds, StiffnessParams};
use crate::trajectory::Trajectory;

use super::dp::best_labels;
use super::residual::{ResidualTable, SquareSums};
use super::{jittered_start, FitOptions};

/// Settings shared by the impedance-aware fit and the prior computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IcsldConfig {
    pub kappa: f64,
    pub bounds: StiffnessBounds,
    /// Inertia per axis (kg).
    pub lambda: Vec<f64>,
}

impl IcsldConfig {
    pub fn new(n_axes: usize) -> Self {
        Self {
            kappa: 1e-5,
            bounds: StiffnessBounds::default(),
            lambda: vec![1.0; n_axes],
        }
    }
}

/// Fitted impedance-aware switching model.
#[derive(Clone, Debug)]
pub struct IcsldModel {
    pub stiffness: StiffnessParams,
    /// `at_bound[j][a]` is set when the optimum for phase `j`, axis `a`
    /// was clamped to a stiffness bound.
    pub at_bound: Vec<Vec<bool>>,
    pub kappa: f64,
    pub lambda: Vec<f64>,
    pub segmentation: Segmentation,
    pub objective: f64,
    /// Objective after every EM iteration of the winning restart.
    pub history: Vec<f64>,
}

/// Per-phase stiffness from one M-step.
#[derive(Clone, Debug, PartialEq)]
pub struct MStep {
    pub stiffness: StiffnessParams,
    pub at_bound: Vec<Vec<bool>>,
}

/// `Σ_t [-δẋ_tᵀ K⁻¹ δẋ_t - κ log det K]` over interior samples.
pub fn segment_objective(
    traj: &Trajectory,
    seg: &Segmentation,
    theta: &StiffnessParams,
    kappa: f64,
    lambda: &[f64],
) -> f64 {
    objective_from_table(&ResidualTable::new(traj, lambda), seg, theta, kappa)
}

fn objective_from_table(
    table: &ResidualTable,
    seg: &Segmentation,
    theta: &StiffnessParams,
    kappa: f64,
) -> f64 {
    (1..table.len() - 1)
        .map(|t| table.gain(t, theta.phase(seg.label(t)), kappa))
        .sum()
}

/// Most likely left-to-right labelling for fixed stiffness.
pub fn icsld_estep(
    traj: &Trajectory,
    theta: &StiffnessParams,
    kappa: f64,
    lambda: &[f64],
) -> Result<Segmentation, SegmentError> {
    estep_from_table(&ResidualTable::new(traj, lambda), theta, kappa)
}

fn estep_from_table(
    table: &ResidualTable,
    theta: &StiffnessParams,
    kappa: f64,
) -> Result<Segmentation, SegmentError> {
    best_labels(table.len(), theta.m(), |t, j| {
        table.gain(t, theta.phase(j), kappa)
    })
}

/// Maximizes `g(k) = -S(k)/k - κ n log k` over `[k_min, k_max]`, where
/// `S(k)` is the residual sum of squares. Returns the stiffness and whether
/// it sits on a bound.
fn maximize_axis(
    sums: &SquareSums,
    kappa: f64,
    bounds: StiffnessBounds,
    previous: Option<f64>,
) -> (f64, bool) {
    let n = sums.n as f64;
    let g = |z: f64| {
        let k = z.exp();
        -sums.sum_sq(k) / k - kappa * n * z
    };
    let (lo, hi) = (bounds.k_min.ln(), bounds.k_max.ln());
    let clamp = |z: f64| z.clamp(lo, hi);

    let mut best = (lo, g(lo));
    let consider = |best: &mut (f64, f64), z: f64, v: f64| {
        if v > best.1 {
            *best = (z, v);
        }
    };

    const GRID: usize = 41;
    let grid: Vec<f64> = (0..GRID)
        .map(|i| lo + (hi - lo) * i as f64 / (GRID - 1) as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&z| g(z)).collect();
    let mut grid_best = 0;
    for i in 0..GRID {
        consider(&mut best, grid[i], values[i]);
        if values[i] > values[grid_best] {
            grid_best = i;
        }
    }

    let mut starts: Vec<f64> = Vec::new();
    let mut k = bounds.k_min;
    while k < bounds.k_max {
        starts.push(k.ln());
        k *= 10.0;
    }
    starts.push(hi);
    starts.push(grid[grid_best]);
    if let Some(p) = previous {
        let z = clamp(p.ln());
        consider(&mut best, z, g(z));
        starts.push(z);
    }

    const H: f64 = 1e-4;
    for &z0 in &starts {
        let mut z = z0;
        let mut gz = g(z);
        let mut ok = gz.is_finite();
        for _ in 0..60 {
            if !ok {
                break;
            }
            let (gp, gm) = (g(z + H), g(z - H));
            let d1 = (gp - gm) / (2.0 * H);
            let d2 = (gp - 2.0 * gz + gm) / (H * H);
            if !d1.is_finite() || !d2.is_finite() {
                ok = false;
                break;
            }
            // Newton where concave, otherwise a bounded ascent step.
            let mut dz = if d2 < 0.0 { -d1 / d2 } else { d1.signum() * 0.5 };
            dz = dz.clamp(-2.0, 2.0);
            let mut accepted = false;
            for _ in 0..30 {
                let zn = clamp(z + dz);
                let gn = g(zn);
                if gn.is_finite() && gn >= gz {
                    accepted = (zn - z).abs() > 1e-12;
                    z = zn;
                    gz = gn;
                    break;
                }
                dz *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if ok {
            consider(&mut best, z, gz);
        }
    }

    // Golden-section polish on the grid bracket around the incumbent.
    let step = (hi - lo) / (GRID - 1) as f64;
    let (mut a, mut b) = (clamp(best.0 - step), clamp(best.0 + step));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..80 {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + phi * (b - a);
            gd = g(d);
        }
    }
    consider(&mut best, c, gc);
    consider(&mut best, d, gd);

    let best_z = best.0;
    let k = bounds.clamp(best_z.exp());
    let at_bound = (best_z - lo).abs() < 1e-9 || (hi - best_z).abs() < 1e-9;
    let k = if at_bound {
        if best_z - lo < hi - best_z {
            bounds.k_min
        } else {
            bounds.k_max
        }
    } else {
        k
    };
    (k, at_bound)
}

fn mstep_from_table(
    table: &ResidualTable,
    seg: &Segmentation,
    kappa: f64,
    bounds: StiffnessBounds,
    previous: Option<&StiffnessParams>,
) -> Result<MStep, SegmentError> {
    let n_axes = table.n_axes();
    let mut sums = vec![vec![SquareSums::default(); n_axes]; seg.m()];
    for t in 1..table.len() - 1 {
        let j = seg.label(t);
        for (a, s) in sums[j].iter_mut().enumerate() {
            s.add(table.get(t, a));
        }
    }
    let mut values = Vec::with_capacity(seg.m());
    let mut flags = Vec::with_capacity(seg.m());
    for (j, row) in sums.iter().enumerate() {
        let (ks, fs): (Vec<f64>, Vec<bool>) = row
            .iter()
            .enumerate()
            .map(|(a, s)| maximize_axis(s, kappa, bounds, previous.map(|p| p.phase(j)[a])))
            .unzip();
        values.push(ks);
        flags.push(fs);
    }
    Ok(MStep {
        stiffness: StiffnessParams::new(values, bounds)?,
        at_bound: flags,
    })
}

/// Per-phase, per-axis stiffness maximizing the objective for a fixed
/// labelling. `previous`, when given, is used as an extra starting point and
/// is never beaten by a worse answer.
pub fn icsld_mstep(
    traj: &Trajectory,
    seg: &Segmentation,
    cfg: &IcsldConfig,
    previous: Option<&StiffnessParams>,
) -> Result<MStep, SegmentError> {
    check(traj, seg, cfg)?;
    let table = ResidualTable::new(traj, &cfg.lambda);
    mstep_from_table(&table, seg, cfg.kappa, cfg.bounds, previous)
}

/// Prior stiffness for a segmentation produced by any method: a single
/// M-step with the labelling held fixed.
pub fn prior_from_segmentation(
    traj: &Trajectory,
    seg: &Segmentation,
    cfg: &IcsldConfig,
) -> Result<MStep, SegmentError> {
    icsld_mstep(traj, seg, cfg, None)
}

fn check(traj: &Trajectory, seg: &Segmentation, cfg: &IcsldConfig) -> Result<(), SegmentError> {
    use crate::error::DataError;
    if seg.len() != traj.len() {
        return Err(DataError::LengthMismatch {
            field: "labels",
            got: seg.len(),
            expected: traj.len(),
        }
        .into());
    }
    if cfg.lambda.len() != traj.n_axes() {
        return Err(DataError::LengthMismatch {
            field: "lambda",
            got: cfg.lambda.len(),
            expected: traj.n_axes(),
        }
        .into());
    }
    if !(cfg.kappa > 0.0) {
        return Err(DataError::Stiffness(format!("kappa must be positive, got {}", cfg.kappa)).into());
    }
    Ok(())
}

struct Run {
    seg: Segmentation,
    mstep: MStep,
    objective: f64,
    history: Vec<f64>,
}

fn em_run(
    table: &ResidualTable,
    init: Segmentation,
    cfg: &IcsldConfig,
    opts: &FitOptions,
) -> Result<Run, SegmentError> {
    let mut seg = init;
    let mut prev: Option<MStep> = None;
    let mut history = Vec::new();
    loop {
        let mstep = mstep_from_table(
            table,
            &seg,
            cfg.kappa,
            cfg.bounds,
            prev.as_ref().map(|m| &m.stiffness),
        )?;
        let next = estep_from_table(table, &mstep.stiffness, cfg.kappa)?;
        let j = objective_from_table(table, &next, &mstep.stiffness, cfg.kappa);
        let converged = history
            .last()
            .is_some_and(|&last: &f64| (j - last).abs() < opts.tol);
        history.push(j);
        let done = converged || history.len() >= opts.max_iters || next == seg;
        seg = next;
        prev = Some(mstep);
        if done {
            break;
        }
    }
    // Report the stiffness of the final labelling itself, computed exactly
    // as a fixed-labelling prior would be, unless that loses ground.
    let last = prev.expect("at least one iteration");
    let last_j = *history.last().unwrap();
    let fresh = mstep_from_table(table, &seg, cfg.kappa, cfg.bounds, None)?;
    let fresh_j = objective_from_table(table, &seg, &fresh.stiffness, cfg.kappa);
    let mstep = if fresh_j >= last_j - 1e-12 * last_j.abs().max(1.0) {
        if fresh_j != last_j {
            history.push(fresh_j);
        }
        fresh
    } else {
        last
    };
    Ok(Run {
        objective: *history.last().unwrap(),
        seg,
        mstep,
        history,
    })
}

/// Expectation-maximization fit of `m` impedance phases. The first run
/// starts from equal-length phases, the remaining `opts.restarts - 1` from
/// boundaries jittered by `stream`; the best final objective wins.
pub fn icsld_fit(
    traj: &Trajectory,
    m: usize,
    cfg: &IcsldConfig,
    opts: &FitOptions,
    stream: &mut RandomStream,
) -> Result<IcsldModel, SegmentError> {
    let init = Segmentation::uniform(traj.len(), m).map_err(|_| SegmentError::InfeasibleM {
        m,
        interior: traj.len().saturating_sub(2),
    })?;
    check(traj, &init, cfg)?;
    let table = ResidualTable::new(traj, &cfg.lambda);
    let mut best: Option<Run> = None;
    for r in 0..opts.restarts.max(1) {
        let start = if r == 0 {
            init.clone()
        } else {
            jittered_start(traj.len(), m, stream)
        };
        let run = em_run(&table, start, cfg, opts)?;
        if best.as_ref().is_none_or(|b| run.objective > b.objective) {
            best = Some(run);
        }
    }
    let run = best.expect("at least one restart");
    Ok(IcsldModel {
        stiffness: run.mstep.stiffness,
        at_bound: run.mstep.at_bound,
        kappa: cfg.kappa,
        lambda: cfg.lambda.clone(),
        segmentation: run.seg,
        objective: run.objective,
        history: run.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::synthetic;

    fn cfg(n: usize) -> IcsldConfig {
        IcsldConfig::new(n)
    }

    #[test]
    fn perfect_fit_with_zero_kappa_has_zero_objective() {
        let seg = Segmentation::single(60);
        let traj = synthetic::impedance_trajectory(&seg, &[vec![200.0]], 0.05, &[1.0], 3);
        let theta = StiffnessParams::constant(1, 1, 200.0, StiffnessBounds::default());
        let j = segment_objective(&traj, &seg, &theta, 0.0, &[1.0]);
        assert!(j.abs() < 1e-20, "{j}");
    }

    #[test]
    fn closed_form_when_residual_ignores_stiffness() {
        // Static positions with a force: r = -F dt for every k.
        let len = 30;
        let forces: Vec<Vec<f64>> = (0..len).map(|t| vec![if t % 2 == 0 { 1.0 } else { -0.5 }]).collect();
        let traj = Trajectory::new(0.05, vec![vec![0.0]; len], forces, None).unwrap();
        let seg = Segmentation::single(len);
        let sum_sq: f64 = (1..len - 1).map(|t| (traj.force(t)[0] * 0.05).powi(2)).sum();
        let n = (len - 2) as f64;
        let c = IcsldConfig { kappa: 1e-4, ..cfg(1) };
        let got = icsld_mstep(&traj, &seg, &c, None).unwrap();
        let want = c.bounds.clamp(sum_sq / (c.kappa * n));
        assert!((got.stiffness.phase(0)[0] - want).abs() < 1e-6 * want);
        assert!(!got.at_bound[0][0]);
        let c = IcsldConfig { kappa: 1e-6, ..cfg(1) };
        let got = icsld_mstep(&traj, &seg, &c, None).unwrap();
        assert_eq!(got.stiffness.phase(0)[0], c.bounds.k_max);
        assert!(got.at_bound[0][0]);
    }

    #[test]
    fn recovers_generating_stiffness() {
        let seg = Segmentation::single(60);
        let traj = synthetic::impedance_trajectory(&seg, &[vec![200.0]], 0.05, &[1.0], 9);
        let got = icsld_mstep(&traj, &seg, &cfg(1), None).unwrap();
        let k = got.stiffness.phase(0)[0];
        assert!((180.0..=220.0).contains(&k), "{k}");
    }

    #[test]
    fn large_kappa_drives_to_lower_bound() {
        let seg = Segmentation::single(60);
        let traj = synthetic::impedance_trajectory(&seg, &[vec![200.0]], 0.05, &[1.0], 9);
        let c = IcsldConfig { kappa: 1e3, ..cfg(1) };
        let got = icsld_mstep(&traj, &seg, &c, None).unwrap();
        assert_eq!(got.stiffness.phase(0)[0], c.bounds.k_min);
    }

    #[test]
    fn doubling_kappa_lowers_objective() {
        let seg = Segmentation::single(40);
        let traj = synthetic::impedance_trajectory(&seg, &[vec![300.0]], 0.05, &[1.0], 1);
        let theta = StiffnessParams::constant(1, 1, 300.0, StiffnessBounds::default());
        let a = segment_objective(&traj, &seg, &theta, 1e-5, &[1.0]);
        let b = segment_objective(&traj, &seg, &theta, 2e-5, &[1.0]);
        assert!(b < a);
    }

    #[test]
    fn single_phase_estep() {
        let seg = Segmentation::single(40);
        let traj = synthetic::impedance_trajectory(&seg, &[vec![300.0]], 0.05, &[1.0], 1);
        let theta = StiffnessParams::constant(1, 1, 300.0, StiffnessBounds::default());
        assert_eq!(icsld_estep(&traj, &theta, 1e-5, &[1.0]).unwrap(), seg);
    }

    #[test]
    fn tiny_segment_is_guarded() {
        let seg = Segmentation::from_boundaries(40, &[2, 3]).unwrap();
        let traj = synthetic::impedance_trajectory(
            &Segmentation::single(40),
            &[vec![300.0]],
            0.05,
            &[1.0],
            2,
        );
        let got = prior_from_segmentation(&traj, &seg, &cfg(1)).unwrap();
        for row in got.stiffness.values() {
            assert!(cfg(1).bounds.contains(row[0]));
        }
    }

    #[test]
    fn em_is_monotone_and_recovers_phases() {
        let truth = Segmentation::from_boundaries(120, &[40, 70]).unwrap();
        let k = [vec![50.0, 50.0], vec![400.0, 400.0], vec![100.0, 100.0]];
        let traj = synthetic::impedance_trajectory(&truth, &k, 0.05, &[1.0, 1.0], 4);
        let model = icsld_fit(
            &traj,
            3,
            &cfg(2),
            &FitOptions::default(),
            &mut RandomStream::new(4, "fit"),
        )
        .unwrap();
        for w in model.history.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
        let b = model.segmentation.boundaries();
        assert!(b[0].abs_diff(40) <= 3 && b[1].abs_diff(70) <= 3, "{b:?}");
        for (j, row) in model.stiffness.values().iter().enumerate() {
            for (a, &v) in row.iter().enumerate() {
                assert!((v - k[j][a]).abs() <= 0.15 * k[j][a], "phase {j} axis {a}: {v}");
            }
        }
        let again = prior_from_segmentation(&traj, &model.segmentation, &cfg(2)).unwrap();
        let refit = icsld_mstep(&traj, &model.segmentation, &cfg(2), None).unwrap();
        assert_eq!(again, refit);
    }
}
