use rayon::prelude::*;

use crate::pareto::ObjectivePoint;
use crate::rng::RandomStream;

use super::ehvi::{ehvi_gaussian, NormalDraws, DEFAULT_SAMPLES};
use super::gp::{GpFitOptions, GpParams};
use super::hypervolume::Staircase;
use super::prior::StiffnessPrior;
use super::space::SearchSpace;
use super::surrogate::Surrogate;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuggestOptions {
    /// Candidate pool size, half prior draws and half uniform.
    pub pool: usize,
    pub refine_top: usize,
    pub refine_rounds: usize,
    pub refine_radius: f64,
    pub mc_samples: usize,
    pub gp: GpFitOptions,
}

impl Default for SuggestOptions {
    fn default() -> Self {
        Self {
            pool: 1024,
            refine_top: 8,
            refine_rounds: 3,
            refine_radius: 0.1,
            mc_samples: DEFAULT_SAMPLES,
            gp: GpFitOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Suggestion {
    /// Unit-cube coordinates.
    pub point: Vec<f64>,
    /// `ln α + (β/n) ln π` at the chosen point.
    pub score: f64,
    /// The surrogate could not be fitted and the prior mode was returned.
    pub fallback: bool,
    pub params: Option<(GpParams, GpParams)>,
}

/// Everything the acquisition needs besides the data.
pub struct AcquisitionContext<'a> {
    pub space: &'a SearchSpace,
    /// `None` means no prior weighting and a uniform pool.
    pub prior: Option<&'a StiffnessPrior>,
    /// Iteration index used in the decaying exponent, from 1.
    pub n: usize,
    pub reference: ObjectivePoint,
}

fn draw_pool(
    ctx: &AcquisitionContext,
    size: usize,
    stream: &mut RandomStream,
) -> Vec<Vec<f64>> {
    let d = ctx.space.dim();
    let from_prior = size / 2;
    let mut pool = Vec::with_capacity(size);
    for _ in 0..from_prior {
        pool.push(match ctx.prior {
            Some(p) => p.sample_unit(ctx.space, stream),
            None => (0..d).map(|_| stream.uniform()).collect(),
        });
    }
    for _ in from_prior..size {
        pool.push((0..d).map(|_| stream.uniform()).collect());
    }
    pool
}

fn better(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Proposes the next point by maximizing prior-weighted EHVI over a random
/// pool followed by coordinate-wise local refinement of the best few.
pub fn suggest(
    inputs: &[Vec<f64>],
    ys: &[ObjectivePoint],
    ctx: &AcquisitionContext,
    warm: Option<&(GpParams, GpParams)>,
    opts: &SuggestOptions,
    stream: &mut RandomStream,
) -> Suggestion {
    let fallback = || Suggestion {
        point: match ctx.prior {
            Some(p) => p.mode_unit(ctx.space),
            None => vec![0.5; ctx.space.dim()],
        },
        score: f64::NEG_INFINITY,
        fallback: true,
        params: None,
    };
    let model = match Surrogate::fit(inputs, ys, warm, &opts.gp, &mut stream.fork("gp")) {
        Ok(m) => m,
        Err(_) => return fallback(),
    };
    let stair = Staircase::new(ys, &ctx.reference);
    let draws = NormalDraws::new(opts.mc_samples, &mut stream.fork("mc"));
    let weight = match ctx.prior {
        Some(p) if p.beta != 0.0 => Some((p, p.beta / ctx.n as f64)),
        _ => None,
    };
    let score = |u: &[f64]| -> f64 {
        let (mean, var) = model.predict(u);
        let a = ehvi_gaussian(&mean, (var.0.sqrt(), var.1.sqrt()), &stair, &draws);
        let mut s = a.ln();
        if let Some((p, e)) = weight {
            s += e * p.log_density(&ctx.space.from_unit(u));
        }
        if s.is_nan() {
            f64::NEG_INFINITY
        } else {
            s
        }
    };

    let mut points = draw_pool(ctx, opts.pool, &mut stream.fork("pool"));
    let mut scores: Vec<f64> = points.par_iter().map(|u| score(u)).collect();

    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut seeds: Vec<(Vec<f64>, f64)> = order
        .iter()
        .take(opts.refine_top)
        .map(|&i| (points[i].clone(), scores[i]))
        .collect();
    for round in 0..opts.refine_rounds {
        let radius = opts.refine_radius * 0.5f64.powi(round as i32);
        let mut batch: Vec<(usize, Vec<f64>)> = Vec::new();
        for (s, (p, _)) in seeds.iter().enumerate() {
            for i in 0..p.len() {
                for dir in [1.0, -1.0] {
                    let mut q = p.clone();
                    q[i] = (q[i] + dir * radius).clamp(0.0, 1.0);
                    batch.push((s, q));
                }
            }
        }
        let batch_scores: Vec<f64> = batch.par_iter().map(|(_, q)| score(q)).collect();
        for ((s, q), v) in batch.into_iter().zip(batch_scores) {
            if v > seeds[s].1 {
                seeds[s] = (q.clone(), v);
            }
            points.push(q);
            scores.push(v);
        }
    }

    let mut best = (scores[0], 0);
    for (i, &v) in scores.iter().enumerate().skip(1) {
        if better((v, i), best) {
            best = (v, i);
        }
    }
    Suggestion {
        point: points.swap_remove(best.1),
        score: best.0,
        fallback: false,
        params: Some(model.params()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stiffness::StiffnessBounds;

    fn toy(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<ObjectivePoint>) {
        let mut s = RandomStream::new(seed, "toy");
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![s.uniform(), s.uniform()]).collect();
        let y = x
            .iter()
            .map(|p| ObjectivePoint::new(0.5 * (p[0] + p[1]), 1.0 - 0.5 * (p[0] * p[0] + p[1])))
            .collect();
        (x, y)
    }

    fn small() -> SuggestOptions {
        SuggestOptions {
            pool: 128,
            ..SuggestOptions::default()
        }
    }

    #[test]
    fn huge_beta_lands_on_prior_mode() {
        let space = SearchSpace::new(2, StiffnessBounds::default());
        let prior = StiffnessPrior::new(vec![150.0, 600.0], space.bounds(), 1e6);
        let (x, y) = toy(8, 1);
        let ctx = AcquisitionContext {
            space: &space,
            prior: Some(&prior),
            n: 1,
            reference: ObjectivePoint::new(0.0, 0.0),
        };
        let s = suggest(&x, &y, &ctx, None, &small(), &mut RandomStream::new(2, "s"));
        let mode = prior.mode_unit(&space);
        let dist = s
            .point
            .iter()
            .zip(&mode)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(dist < 0.05, "{:?} vs {:?}", s.point, mode);
    }

    #[test]
    fn density_scale_keeps_argmax() {
        let space = SearchSpace::new(2, StiffnessBounds::default());
        let base = StiffnessPrior::new(vec![80.0, 300.0], space.bounds(), 1.0);
        let scaled = base.clone().with_scale(1234.5);
        let (x, y) = toy(10, 3);
        let run = |p: &StiffnessPrior| {
            let ctx = AcquisitionContext {
                space: &space,
                prior: Some(p),
                n: 4,
                reference: ObjectivePoint::new(0.0, 0.0),
            };
            suggest(&x, &y, &ctx, None, &small(), &mut RandomStream::new(5, "s")).point
        };
        assert_eq!(run(&base), run(&scaled));
    }

    #[test]
    fn zero_beta_matches_unweighted() {
        let space = SearchSpace::new(2, StiffnessBounds::default());
        let (x, y) = toy(9, 4);
        let run = |prior: Option<&StiffnessPrior>| {
            let ctx = AcquisitionContext {
                space: &space,
                prior,
                n: 2,
                reference: ObjectivePoint::new(0.0, 0.0),
            };
            suggest(&x, &y, &ctx, None, &small(), &mut RandomStream::new(6, "s")).point
        };
        let flat = StiffnessPrior::flat(2, space.bounds(), 1.0);
        assert_eq!(run(None), run(Some(&flat)));
    }
}
