use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use polymart::calculus::{otimes, RegimeTag};
use polymart::envelope::{MomentEnvelope, SlowlyVarying};
use polymart::mcverify::{battery_model, battery_p_grid};
use polymart::polymodel::sample_q;

fn bench_otimes(c: &mut Criterion) {
    let a = MomentEnvelope::power_singularity(1.0, 8.0, 0.125, SlowlyVarying::ONE).unwrap();
    let b = MomentEnvelope::power_growth(1.0, 0.5, SlowlyVarying::ONE).unwrap();
    c.bench_function("otimes/ps_r8_pgrow05", |bch| bch.iter(|| otimes(black_box(&a), black_box(&b), 3.0).unwrap()));
}

fn bench_zeta(c: &mut Criterion) {
    let mut g = c.benchmark_group("zeta_chain");
    for tag in [RegimeTag::CommonIndependent, RegimeTag::Martingale] {
        for d in [2usize, 3] {
            let rs = vec![8.0; d];
            let model = battery_model(tag, d, 5, &rs).unwrap();
            let grid = battery_p_grid(model.combined_exponent());
            g.bench_with_input(BenchmarkId::new(format!("{tag:?}"), d), &grid, |bch, grid| {
                bch.iter(|| model.zeta(grid).unwrap())
            });
        }
    }
    g.finish();
}

fn bench_sample(c: &mut Criterion) {
    let mut g = c.benchmark_group("sample_q");
    let reps = 20_000;
    g.throughput(Throughput::Elements(reps as u64));
    g.sample_size(20);
    for n in [5usize, 20] {
        let model = battery_model(RegimeTag::CommonIndependent, 2, n, &[6.0, 6.0]).unwrap();
        g.bench_with_input(BenchmarkId::new("d2", n), &model, |bch, m| bch.iter(|| sample_q(m, 1, reps).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bench_otimes, bench_zeta, bench_sample);
criterion_main!(benches);
