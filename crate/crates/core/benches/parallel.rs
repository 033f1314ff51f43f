//! Sequential against parallel particle execution. Without the `parallel`
//! feature both rows run on one thread.

use std::hint::black_box;

use alignppl::inference::{Alignment, Compiled, SmcConfig};
use alignppl::models;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn smc_threads(c: &mut Criterion) {
    let mut g = c.benchmark_group("smc");
    g.sample_size(10);
    for id in ["aircraft", "crbd6"] {
        let model = Compiled::new(&models::find(id).unwrap().program());
        for threads in [1, 4] {
            let cfg = SmcConfig { threads, ..SmcConfig::new(2_000, 1, Alignment::Aligned) };
            g.bench_with_input(BenchmarkId::new(id, format!("{threads} threads")), &cfg, |b, cfg| {
                b.iter(|| black_box(model.smc(cfg).unwrap().log_z))
            });
        }
    }
    g.finish();
}

criterion_group!(benches, smc_threads);
criterion_main!(benches);
