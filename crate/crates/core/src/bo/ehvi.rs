//! Monte-Carlo expected hypervolume improvement.

use crate::pareto::ObjectivePoint;
use crate::rng::RandomStream;

use super::hypervolume::Staircase;
use super::surrogate::Surrogate;

pub const DEFAULT_SAMPLES: usize = 512;

/// Standard normal pairs shared by every candidate of one acquisition pass.
#[derive(Clone, Debug)]
pub struct NormalDraws {
    z: Vec<(f64, f64)>,
    max: (f64, f64),
}

impl NormalDraws {
    pub fn new(n: usize, stream: &mut RandomStream) -> Self {
        assert!(n >= 1, "need at least one sample");
        let z: Vec<(f64, f64)> = (0..n).map(|_| (stream.normal(), stream.normal())).collect();
        let max = z.iter().fold((f64::NEG_INFINITY, f64::NEG_INFINITY), |m, p| {
            (m.0.max(p.0), m.1.max(p.1))
        });
        Self { z, max }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }
}

/// Sample mean of the improvement over independent Gaussians with the
/// given means and standard deviations. `sd = (σ_T, σ_C)`.
pub fn ehvi_gaussian(
    mean: &ObjectivePoint,
    sd: (f64, f64),
    front: &Staircase,
    draws: &NormalDraws,
) -> f64 {
    let at = |z: (f64, f64)| ObjectivePoint::new(mean.y_t + sd.0 * z.0, mean.y_c + sd.1 * z.1);
    // Improvement is monotone in both coordinates, so if the largest draw
    // adds nothing, no draw does.
    if front.improvement(&at(draws.max)) <= 0.0 {
        return 0.0;
    }
    let total: f64 = draws.z.iter().map(|&z| front.improvement(&at(z))).sum();
    total / draws.z.len() as f64
}

/// EHVI of `candidate` (unit-cube coordinates) under `model`.
pub fn ehvi_mc(
    candidate: &[f64],
    model: &Surrogate,
    front: &[ObjectivePoint],
    r: &ObjectivePoint,
    n_samples: usize,
    stream: &mut RandomStream,
) -> f64 {
    let draws = NormalDraws::new(n_samples, stream);
    let stair = Staircase::new(front, r);
    let (mean, var) = model.predict(candidate);
    ehvi_gaussian(&mean, (var.0.sqrt(), var.1.sqrt()), &stair, &draws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bo::hypervolume::hypervolume;

    fn p(t: f64, c: f64) -> ObjectivePoint {
        ObjectivePoint::new(t, c)
    }

    #[test]
    fn degenerate_gaussian_is_plain_improvement() {
        let front = [p(0.8, 0.2), p(0.3, 0.7)];
        let r = p(0.0, 0.0);
        let stair = Staircase::new(&front, &r);
        let draws = NormalDraws::new(DEFAULT_SAMPLES, &mut RandomStream::new(0, "z"));
        let mean = p(0.6, 0.6);
        let mut with = front.to_vec();
        with.push(mean);
        let exact = hypervolume(&with, &r) - hypervolume(&front, &r);
        let got = ehvi_gaussian(&mean, (1e-6, 1e-6), &stair, &draws);
        assert!((got - exact).abs() < 1e-6, "{got} {exact}");
    }

    #[test]
    fn deeply_dominated_mean_gives_nothing() {
        let front = [p(0.9, 0.9)];
        let stair = Staircase::new(&front, &p(-100.0, -100.0));
        let draws = NormalDraws::new(DEFAULT_SAMPLES, &mut RandomStream::new(1, "z"));
        let v = ehvi_gaussian(&p(-1.1, -1.1), (0.2, 0.2), &stair, &draws);
        assert!(v < 1e-6);
    }

    #[test]
    fn matches_high_resolution_estimate() {
        let mut s = RandomStream::new(5, "front");
        let front = [
            p(s.uniform() * 2.0 + 1.0, s.uniform()),
            p(s.uniform(), s.uniform() * 2.0 + 1.0),
        ];
        let r = p(-3.0, -3.0);
        let stair = Staircase::new(&front, &r);
        let mean = p(0.8, 0.8);
        let draws = NormalDraws::new(DEFAULT_SAMPLES, &mut RandomStream::new(6, "z"));
        let est = ehvi_gaussian(&mean, (1.0, 1.0), &stair, &draws);
        // standard error of the small estimate from its own samples
        let vals: Vec<f64> = draws
            .z
            .iter()
            .map(|z| stair.improvement(&p(mean.y_t + z.0, mean.y_c + z.1)))
            .collect();
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let sd = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt();
        let se_small = sd / (vals.len() as f64).sqrt();
        let big = NormalDraws::new(1_000_000, &mut RandomStream::new(7, "z"));
        let oracle = ehvi_gaussian(&mean, (1.0, 1.0), &stair, &big);
        let se_big = sd / 1000.0;
        let se = (se_small * se_small + se_big * se_big).sqrt();
        assert!((est - oracle).abs() <= 3.0 * se, "{est} {oracle} {se}");
    }

    #[test]
    fn never_negative() {
        let mut s = RandomStream::new(9, "neg");
        let draws = NormalDraws::new(64, &mut s.fork("z"));
        for _ in 0..200 {
            let front: Vec<ObjectivePoint> = (0..4).map(|_| p(s.uniform(), s.uniform())).collect();
            let stair = Staircase::new(&front, &p(0.0, 0.0));
            let v = ehvi_gaussian(&p(s.uniform(), s.uniform()), (s.uniform(), s.uniform()), &stair, &draws);
            assert!(v >= 0.0);
        }
    }
}
