use std::time::{Duration, Instant};

use num_bigint::BigUint;
use pbmc_core::generators::{knapsack, KnapsackSpec};
use pbmc_core::oracle::bit_parallel_count;
use pbmc_core::par::Exec;
use pbmc_core::{count_pbmc, parse_opb, CountConfig, PbFormula};

/// Models of the seeded two-dimensional 30-item knapsack, from one full
/// enumeration of its 2^30 assignments.
const KNAPSACK_2X30_MODELS: u64 = 405_970_939;

fn instance() -> PbFormula {
    let text = knapsack(&KnapsackSpec {
        dims: 2,
        items: 30,
        seed: 1,
        ..KnapsackSpec::default()
    })
    .unwrap();
    parse_opb(&text).unwrap().formula
}

#[test]
fn knapsack_2x30_is_counted_quickly() {
    let f = instance();
    let start = Instant::now();
    let n = count_pbmc(&f, &CountConfig::default()).unwrap();
    assert!(start.elapsed() < Duration::from_secs(60), "took {:?}", start.elapsed());
    assert_eq!(n, BigUint::from(KNAPSACK_2X30_MODELS));
}

#[test]
#[ignore = "enumerates 2^30 assignments; run to regenerate the golden value"]
fn knapsack_2x30_enumeration() {
    let n = bit_parallel_count(&instance(), Exec::Sequential).unwrap();
    assert_eq!(n, BigUint::from(KNAPSACK_2X30_MODELS));
}
