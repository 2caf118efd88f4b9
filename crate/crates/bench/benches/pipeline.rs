use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use imbf_bench::{imbalanced, minority_pool, scored};
use imbf_core::evaluation::roc_auc;
use imbf_core::learners::{BiGruParams, ClassifierSpec, GbtParams};
use imbf_core::resampling::{kmeans_fit, knn_indices, smote_generate, smote_kmeans_resample};
use imbf_core::rng::rng_for;
use imbf_core::SmoteKmeansConfig;
use std::hint::black_box;

fn resampling(c: &mut Criterion) {
    let ds = imbalanced(5000, 100, 30);
    let pool = minority_pool(&ds);
    c.bench_function("knn_minority_100x30", |b| {
        b.iter(|| (0..100).map(|q| knn_indices(&pool, 30, q, 5).unwrap().len()).sum::<usize>())
    });
    c.bench_function("smote_generate_1000", |b| {
        b.iter(|| {
            let mut rng = rng_for(1, "bench", 0);
            smote_generate(&pool, 30, 1000, 5, &mut rng).unwrap()
        })
    });
    c.bench_function("kmeans_5000x30_k50", |b| {
        b.iter(|| kmeans_fit(ds.features(), 30, 50, 3, 100, 1e-4).unwrap())
    });
    let mut group = c.benchmark_group("smote_kmeans_resample");
    group.sample_size(10);
    for n in [2000, 5000] {
        let ds = imbalanced(n, n / 50, 30);
        group.bench_with_input(BenchmarkId::from_parameter(n), &ds, |b, ds| {
            b.iter(|| smote_kmeans_resample(ds, &SmoteKmeansConfig::default()).unwrap())
        });
    }
    group.finish();
}

fn learners(c: &mut Criterion) {
    let ds = imbalanced(1000, 1000, 30);
    let mut group = c.benchmark_group("fit_2000x30");
    group.sample_size(10);
    group.bench_function("gbt_default_rounds", |b| {
        b.iter(|| ClassifierSpec::Gbt(GbtParams::default()).fit(&ds, 1).unwrap())
    });
    group.bench_function("bigru_h16_1_epoch", |b| {
        let spec = ClassifierSpec::Bigru(BiGruParams { epochs: 1, ..BiGruParams::default() });
        b.iter(|| spec.fit(&ds, 1).unwrap())
    });
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let (labels, scores) = scored(50_000);
    c.bench_function("roc_auc_50k", |b| b.iter(|| roc_auc(black_box(&labels), black_box(&scores)).unwrap().1));
}

criterion_group!(benches, resampling, learners, metrics);
criterion_main!(benches);
