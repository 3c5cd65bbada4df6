use criterion::{black_box, criterion_group, criterion_main, Criterion};

use mzq_core::geometry::{maximal_separated_set, probe_points};
use mzq_core::mzfamily::{build_layer, weighted_gram};
use mzq_core::quadrature::build_rule;
use mzq_core::{BasisEvaluator, Domain, LeastSquares};

fn basis(c: &mut Criterion) {
    for domain in [Domain::disk(0.5), Domain::sphere()] {
        let points = probe_points(&domain, 1000);
        let eval = BasisEvaluator::new(domain, 32);
        c.bench_function(&format!("basis block {:?} n=32 x1000", domain.kind), |b| {
            b.iter(|| eval.block(black_box(&points)))
        });
    }
}

fn greedy_net(c: &mut Criterion) {
    let mut group = c.benchmark_group("greedy net");
    group.sample_size(10);
    for domain in [Domain::disk(0.5), Domain::sphere()] {
        group.bench_function(format!("{:?} eps=1/16", domain.kind), |b| {
            b.iter(|| maximal_separated_set(&domain, black_box(1.0 / 16.0), 1).unwrap())
        });
    }
    group.finish();
}

fn gram_and_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("layer linear algebra");
    group.sample_size(10);
    let domain = Domain::sphere();
    let layer = build_layer(&domain, 12, 0.5, 1).unwrap();
    group.bench_function("weighted gram sphere n=12", |b| {
        b.iter(|| weighted_gram(&domain, 12, black_box(&layer.points), &layer.tau).unwrap())
    });
    group.bench_function("least squares factor sphere n=12", |b| b.iter(|| LeastSquares::new(black_box(&layer)).unwrap()));
    group.bench_function("quadrature weights sphere n=12", |b| b.iter(|| build_rule(black_box(&layer)).unwrap()));
    group.finish();
}

criterion_group!(benches, basis, greedy_net, gram_and_solve);
criterion_main!(benches);
