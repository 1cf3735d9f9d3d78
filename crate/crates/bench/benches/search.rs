use std::hint::black_box;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use ctgen_core::catalog::check_raw;
use ctgen_core::experiment::{read_catalog, read_sut};
use ctgen_core::generation::generate_valid;
use ctgen_core::model::evaluate;
use ctgen_core::rng::seeded;
use ctgen_core::sut::CoverageRecorder;
use ctgen_core::{
    evolve, Budget, ConstraintCatalog, GenConfig, GenContext, Mode, RawConstraint, SearchConfig,
    SutModule,
};

fn corpus(kind: &str, module: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(kind)
        .join(format!("{module}.json"))
}

fn load(module: &str) -> (SutModule, ConstraintCatalog) {
    let sut = read_sut(&corpus("sut", module)).unwrap();
    let catalog = read_catalog(&corpus("catalog", module)).unwrap();
    (sut, catalog)
}

fn generation(c: &mut Criterion) {
    let raw = RawConstraint {
        dtype: Some(vec!["float32".into(), "float64".into()]),
        ndim: Some(vec![2, 3, 4]),
        range: Some([-1.0, 1.0]),
        ..RawConstraint::default()
    };
    let constraint = Arc::new(check_raw(&raw).unwrap());
    let cfg = GenConfig::default();
    let mut rng = seeded(1);
    c.bench_function("generate_valid_tensor", |b| {
        b.iter(|| generate_valid(black_box(&constraint), &cfg, &mut rng))
    });
}

fn evaluation(c: &mut Criterion) {
    let (sut, catalog) = load("conv2d");
    let ctx = GenContext::new(
        &sut,
        Some(&catalog),
        Mode::Constrained,
        GenConfig::default(),
    );
    let mut rng = seeded(2);
    let cases: Vec<_> = (0..64).map(|_| ctx.random_test_case(&mut rng)).collect();
    c.bench_function("evaluate_64_test_cases", |b| {
        b.iter(|| {
            let mut rec = CoverageRecorder::new(&sut);
            for tc in &cases {
                black_box(evaluate(tc, &sut, &mut rec));
            }
        })
    });
}

fn search(c: &mut Criterion) {
    let (sut, catalog) = load("loss");
    let mut group = c.benchmark_group("evolve_5_generations");
    group.sample_size(10);
    for mode in [Mode::Constrained, Mode::Unconstrained] {
        let ctx = GenContext::new(&sut, Some(&catalog), mode, GenConfig::default());
        let cfg = SearchConfig {
            budget: Budget::Iterations(5),
            ..SearchConfig::default()
        };
        group.bench_function(mode.as_str(), |b| {
            b.iter(|| evolve(&sut, &ctx, black_box(&cfg)))
        });
    }
    group.finish();
}

criterion_group!(benches, generation, evaluation, search);
criterion_main!(benches);
