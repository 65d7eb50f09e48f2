use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use stiffctl_core::bo::{
    ehvi_gaussian, hypervolume, suggest, AcquisitionContext, Gp, GpFitOptions, NormalDraws,
    SearchSpace, Staircase, StiffnessPrior, SuggestOptions,
};
use stiffctl_core::pipeline::{eval_task, ExperimentConfig};
use stiffctl_core::segment::{icsld_fit, synthetic, FitOptions, IcsldConfig};
use stiffctl_core::sim::TaskKind;
use stiffctl_core::{ObjectivePoint, RandomStream, Segmentation, StiffnessBounds, StiffnessParams};

fn points(n: usize, seed: u64) -> Vec<ObjectivePoint> {
    let mut s = RandomStream::new(seed, "bench");
    (0..n)
        .map(|_| ObjectivePoint::new(s.uniform(), s.uniform()))
        .collect()
}

fn bench_hypervolume(c: &mut Criterion) {
    let mut group = c.benchmark_group("hypervolume");
    let r = ObjectivePoint::new(0.0, 0.0);
    for n in [10, 100, 1000] {
        let front = points(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &front, |b, f| {
            b.iter(|| hypervolume(black_box(f), &r))
        });
    }
    group.finish();
}

fn bench_ehvi(c: &mut Criterion) {
    let r = ObjectivePoint::new(0.0, 0.0);
    let stair = Staircase::new(&points(20, 2), &r);
    let draws = NormalDraws::new(512, &mut RandomStream::new(3, "mc"));
    let mean = ObjectivePoint::new(0.6, 0.6);
    c.bench_function("ehvi_512_draws", |b| {
        b.iter(|| ehvi_gaussian(black_box(&mean), (0.1, 0.1), &stair, &draws))
    });
}

fn bench_gp(c: &mut Criterion) {
    let mut s = RandomStream::new(4, "gp");
    let x: Vec<Vec<f64>> = (0..50).map(|_| (0..6).map(|_| s.uniform()).collect()).collect();
    let y: Vec<f64> = x.iter().map(|p| p.iter().map(|v| v.sin()).sum()).collect();
    c.bench_function("gp_fit_50x6", |b| {
        b.iter(|| {
            Gp::fit(&x, &y, None, &GpFitOptions::default(), &mut RandomStream::new(0, "fit")).unwrap()
        })
    });
}

fn bench_suggest(c: &mut Criterion) {
    let space = SearchSpace::new(3, StiffnessBounds::default());
    let prior = StiffnessPrior::new(vec![50.0, 400.0, 20.0], space.bounds(), 1.0);
    let mut s = RandomStream::new(5, "suggest");
    let x: Vec<Vec<f64>> = (0..30).map(|_| (0..3).map(|_| s.uniform()).collect()).collect();
    let y: Vec<ObjectivePoint> = x
        .iter()
        .map(|p| ObjectivePoint::new(p[0] * p[1], 1.0 - p[2]))
        .collect();
    let ctx = AcquisitionContext {
        space: &space,
        prior: Some(&prior),
        n: 10,
        reference: ObjectivePoint::new(0.0, 0.0),
    };
    let mut group = c.benchmark_group("suggest");
    group.sample_size(10);
    group.bench_function("pool_1024_n30", |b| {
        b.iter(|| {
            suggest(&x, &y, &ctx, None, &SuggestOptions::default(), &mut RandomStream::new(0, "s"))
        })
    });
    group.finish();
}

fn bench_segmentation(c: &mut Criterion) {
    let seg = Segmentation::from_boundaries(120, &[40, 70]).unwrap();
    let k = [vec![50.0, 50.0], vec![400.0, 400.0], vec![100.0, 100.0]];
    let traj = synthetic::impedance_trajectory(&seg, &k, 0.05, &[1.0, 1.0], 0);
    let cfg = IcsldConfig::new(2);
    c.bench_function("icsld_fit_T120_M3", |b| {
        b.iter(|| {
            icsld_fit(&traj, 3, &cfg, &FitOptions::default(), &mut RandomStream::new(0, "seg")).unwrap()
        })
    });
}

fn bench_rollout(c: &mut Criterion) {
    let mut group = c.benchmark_group("rollout");
    for task in TaskKind::ALL {
        let config = ExperimentConfig::for_task(task);
        let (env, demo) = config.demonstrate(0).unwrap();
        let m = config.phases();
        let seg = Segmentation::uniform(demo.len(), m).unwrap();
        let theta = StiffnessParams::constant(m, demo.n_axes(), 300.0, config.bounds());
        let cfg = config.setup().cfg;
        group.bench_function(task.name(), |b| {
            b.iter(|| eval_task(&theta, &seg, &demo, &env, &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_hypervolume,
    bench_ehvi,
    bench_gp,
    bench_suggest,
    bench_segmentation,
    bench_rollout
);
criterion_main!(benches);
