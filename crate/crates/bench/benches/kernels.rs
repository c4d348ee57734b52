use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use csimeta::channel::{channel_to_csi, simulate_ue, SimScenario};
use csimeta::metaenv::{build_meta_env, MetaEnvConfig};
use csimeta::model::{loss_and_grad, ModelConfig, ModelParams, QuantMode};
use csimeta::numerics::{complex_gaussian, gram_schmidt, hermitian_eig, top_eigvec};
use csimeta::{CsiEigen, RngStream, SystemConfig};

fn linear_algebra(c: &mut Criterion) {
    let mut rng = RngStream::new(1, 0);
    for n in [8usize, 16, 32] {
        let x = complex_gaussian(&mut rng, n, n);
        let psd = x.matmul(&x.adjoint());
        c.bench_with_input(BenchmarkId::new("gram_schmidt", n), &x, |b, x| {
            b.iter(|| gram_schmidt(black_box(x)).unwrap())
        });
        c.bench_with_input(BenchmarkId::new("hermitian_eig", n), &psd, |b, a| {
            b.iter(|| hermitian_eig(black_box(a)).unwrap())
        });
        c.bench_with_input(BenchmarkId::new("top_eigvec", n), &psd, |b, a| {
            b.iter(|| top_eigvec(black_box(a)).unwrap())
        });
    }
}

fn pipeline(c: &mut Criterion) {
    let sys = SystemConfig::desk();
    let channels = simulate_ue(
        &sys,
        &SimScenario::desk(&sys),
        &mut RngStream::new(2, 0),
        1,
        0,
    );
    c.bench_function("channel_to_csi/desk", |b| {
        b.iter(|| channel_to_csi(&sys, black_box(&channels[0])).unwrap())
    });

    let env = build_meta_env(
        &sys,
        &MetaEnvConfig {
            tasks: 20,
            ..MetaEnvConfig::desk(&sys)
        },
    )
    .unwrap();
    let samples: Vec<CsiEigen> = env
        .tasks
        .into_iter()
        .flat_map(|t| t.samples)
        .take(32)
        .collect();
    let batch: Vec<&CsiEigen> = samples.iter().collect();
    let mcfg = ModelConfig::desk(sys.n_t, sys.n_sb);
    let params = ModelParams::init(&mcfg, 3);
    c.bench_function("loss_and_grad/desk_batch32", |b| {
        b.iter(|| loss_and_grad(black_box(&params), &mcfg, &batch, QuantMode::Active).unwrap())
    });
}

criterion_group!(benches, linear_algebra, pipeline);
criterion_main!(benches);
