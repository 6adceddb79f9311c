use std::hint::black_box;

use adastop::perm::extend_pool;
use adastop::rng::{rng_for, InterimStream};
use adastop::{AdaStop, Batch, DistributionSpec, PermutationPool, TestConfig};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

const AGENTS: usize = 10;
const N: usize = 5;
const M: usize = 10_000;

fn batch(interim: u64) -> Batch {
    (0..AGENTS)
        .map(|a| {
            let dist = DistributionSpec::normal(0.05 * a as f64, 1.0);
            Some(dist.sample(N, &mut rng_for(interim, &[a as u64])).unwrap())
        })
        .collect()
}

fn labels() -> Vec<String> {
    (0..AGENTS).map(|a| format!("A{a}")).collect()
}

/// A test after `k` interims on near-null data, so all 45 comparisons stay open.
fn running(k: usize) -> AdaStop {
    let config = TestConfig::new(N, 6).with_permutations(M).with_seed(1);
    let mut test = AdaStop::new(config, labels()).unwrap();
    for i in 1..=k {
        test.interim_step(batch(i as u64)).unwrap();
    }
    test
}

fn interim_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("interim_step");
    group.sample_size(20);
    for k in [0, 2] {
        let start = running(k);
        let next = batch(k as u64 + 1);
        group.bench_function(format!("L=10 N=5 m=1e4 k={}", k + 1), |b| {
            b.iter_batched(
                || (start.clone(), next.clone()),
                |(mut test, batch)| black_box(test.interim_step(batch).unwrap()),
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn pool_extension(c: &mut Criterion) {
    let mut group = c.benchmark_group("extend_pool");
    for k in [1, 3] {
        let mut pool = PermutationPool::new(N, M, 1 << 20).unwrap();
        for i in 1..k {
            pool.extend(&InterimStream::new(1, i)).unwrap();
        }
        let stream = InterimStream::new(1, k);
        group.bench_function(format!("N=5 m=1e4 k={k}"), |b| {
            b.iter_batched(
                || pool.clone(),
                |p| black_box(extend_pool(p, &stream).unwrap()),
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, interim_step, pool_extension);
criterion_main!(benches);
