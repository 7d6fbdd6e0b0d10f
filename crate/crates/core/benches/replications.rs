use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use fixedwidth::chain::{Method, StoppingConfig};
use fixedwidth::exec;
use fixedwidth::rng::stream_rng;
use fixedwidth::samplers::{ParetoChain, ParetoIndepMh};
use fixedwidth::stopping::{run_until_width, CheckpointPolicy};

fn one_replication(rep: u64) -> f64 {
    let sampler = ParetoIndepMh::new(1.0, 10.0, 9.0, 1.5).unwrap();
    let mut chain = ParetoChain::new(sampler, stream_rng(1, rep));
    let cfg = StoppingConfig::new(0.005, 0.05, 45).unwrap();
    let method = Method::ConsistentBatchMeans { theta: 0.5 };
    run_until_width(&mut chain, method, &cfg, CheckpointPolicy::EveryIterations(100), 1_000_000)
        .unwrap()
        .estimate
}

fn replications(c: &mut Criterion) {
    let mut group = c.benchmark_group("pareto_cbm_replications");
    group.sample_size(10);
    for reps in [64u64, 256] {
        group.bench_with_input(BenchmarkId::new("sequential", reps), &reps, |b, &reps| {
            b.iter(|| exec::map_sequential(reps, one_replication))
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", reps), &reps, |b, &reps| {
            b.iter(|| exec::map_parallel(reps, None, one_replication))
        });
    }
    group.finish();
}

criterion_group!(benches, replications);
criterion_main!(benches);
