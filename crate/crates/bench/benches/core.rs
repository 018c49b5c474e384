use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ohlcast::model::fit_var;
use ohlcast::ohlc::{inverse_transform, transform};
use ohlcast::pipeline::{rolling_backtest, run_window, transform_series, PipelineConfig, WindowSpec};
use ohlcast::simgen::{generate, preset};
use ohlcast::stats::{adf_test, johansen_trace_test, Significance};

fn transforms(c: &mut Criterion) {
    let (_, series) = generate(&preset("1").unwrap()).unwrap();
    let bars = series.bars().to_vec();
    c.bench_function("transform_roundtrip_200", |b| {
        b.iter(|| {
            for bar in &bars {
                let v = transform(black_box(bar)).unwrap();
                black_box(inverse_transform(&v, bar.t).unwrap());
            }
        })
    });
}

fn estimators(c: &mut Criterion) {
    let (y, _) = generate(&preset("1").unwrap()).unwrap();
    let window = y.rows(0, 70).into_owned();
    let col: Vec<f64> = window.column(0).iter().copied().collect();
    c.bench_function("adf_q70", |b| b.iter(|| adf_test(black_box(&col), Significance::Five).unwrap()));
    let mut g = c.benchmark_group("fit_var");
    for p in [1, 2, 4] {
        g.bench_with_input(BenchmarkId::from_parameter(p), &p, |b, &p| b.iter(|| fit_var(black_box(&y), p).unwrap()));
    }
    g.finish();
    c.bench_function("johansen_t200_p2", |b| {
        b.iter(|| johansen_trace_test(black_box(&y), 2, Significance::Five).unwrap())
    });
}

fn pipeline(c: &mut Criterion) {
    let (_, series) = generate(&preset("1").unwrap()).unwrap();
    let y = transform_series(&series).unwrap();
    let cfg = PipelineConfig::default();
    let mut g = c.benchmark_group("run_window");
    for q in [30, 50, 70] {
        let window = y.rows(0, q).into_owned();
        g.bench_with_input(BenchmarkId::from_parameter(q), &window, |b, w| {
            b.iter(|| run_window(black_box(w), 3, &cfg).unwrap())
        });
    }
    g.finish();
    let mut g = c.benchmark_group("backtest");
    g.sample_size(10);
    g.bench_function("scenario1_q40_m3", |b| {
        b.iter(|| rolling_backtest(black_box(&series), WindowSpec::new(40, 3).unwrap(), &cfg).unwrap())
    });
    g.finish();
}

criterion_group!(benches, transforms, estimators, pipeline);
criterion_main!(benches);
