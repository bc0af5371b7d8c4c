//! Sequential against data-parallel execution of the enumeration oracles
//! and of batch counting. Build with `--no-default-features` to see the
//! parallel rows fall back to sequential code.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pbmc_core::counter::{count_many, CountConfig};
use pbmc_core::generators::{self, random_formula, KnapsackSpec, RandomSpec, SensorSpec};
use pbmc_core::oracle::{bit_parallel_count, brute_count_with};
use pbmc_core::par::Exec;
use pbmc_core::{parse_opb, PbFormula};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn knapsack(items: u32) -> PbFormula {
    let text = generators::knapsack(&KnapsackSpec {
        dims: 2,
        items,
        seed: 1,
        ..KnapsackSpec::default()
    })
    .unwrap();
    parse_opb(&text).unwrap().formula
}

fn oracles(c: &mut Criterion) {
    let mut g = c.benchmark_group("oracle");
    g.sample_size(10);
    let small = knapsack(18);
    let wide = knapsack(26);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("enumeration-18", name), &exec, |b, &exec| {
            b.iter(|| brute_count_with(black_box(&small), 24, exec).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("bit-parallel-26", name), &exec, |b, &exec| {
            b.iter(|| bit_parallel_count(black_box(&wide), exec).unwrap())
        });
    }
    g.finish();
}

fn batches(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut batch: Vec<PbFormula> = (0..64)
        .map(|_| random_formula(&RandomSpec::default(), &mut rng))
        .collect();
    for seed in 0..16 {
        let text = generators::sensor(&SensorSpec {
            targets: 15,
            sensors: 30,
            seed,
            ..SensorSpec::default()
        })
        .unwrap();
        batch.push(parse_opb(&text).unwrap().formula);
    }
    let config = CountConfig::default();
    let mut g = c.benchmark_group("count-many");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("mixed-80", name), &exec, |b, &exec| {
            b.iter(|| count_many(black_box(&batch), &config, exec))
        });
    }
    g.finish();
}

criterion_group!(benches, oracles, batches);
criterion_main!(benches);
