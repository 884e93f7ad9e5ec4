use criterion::{black_box, criterion_group, criterion_main, Criterion};
use dichotomy::corpus::{gaussian_matrix, hyperbolic_corpus, rng};
use dichotomy::green::{green_regularized, splitting_projection};
use dichotomy::linalg::{c, identity};
use dichotomy::multiplier::apply_multiplier;
use dichotomy::operator_core::expm;
use dichotomy::{GridFunction, MultiplierConfig, QuadratureParams};

fn bench_expm(cr: &mut Criterion) {
    let a = gaussian_matrix(&mut rng(1), 8, 8, 1.0);
    cr.bench_function("expm 8x8", |b| b.iter(|| expm(black_box(&a))));
}

fn bench_multiplier(cr: &mut Criterion) {
    let g = hyperbolic_corpus(2, 1, 8, 0.5, 100.0).remove(0);
    let cfg = MultiplierConfig::new(&g, 0.0).unwrap();
    let v = gaussian_matrix(&mut rng(3), 8, 1, 1.0).column(0).into_owned();
    let f = GridFunction::from_fn(-10.0, 0.01, 2001, |t| &v * c((-t * t).exp(), 0.0)).unwrap();
    cr.bench_function("apply_multiplier 8x8, 2001 samples", |b| {
        b.iter(|| apply_multiplier(&g, &cfg, black_box(&f)).unwrap())
    });
}

fn bench_green(cr: &mut Criterion) {
    let g = hyperbolic_corpus(4, 1, 8, 0.5, 100.0).remove(0);
    let id = identity(8);
    cr.bench_function("green_regularized 8x8", |b| {
        b.iter(|| green_regularized(&g, black_box(0.7), &id).unwrap())
    });
}

fn bench_projection(cr: &mut Criterion) {
    let g = hyperbolic_corpus(5, 1, 8, 0.5, 100.0).remove(0);
    let params = QuadratureParams::default();
    let mut group = cr.benchmark_group("projection");
    group.sample_size(10);
    group.bench_function("splitting_projection 8x8", |b| {
        b.iter(|| splitting_projection(black_box(&g), &params).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_expm, bench_multiplier, bench_green, bench_projection);
criterion_main!(benches);
