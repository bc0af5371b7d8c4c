use num_bigint::BigUint;
use pbmc_core::formula::{parse_opb_raw, RelOp};
use pbmc_core::generators::{
    auction, knapsack, sensor, AuctionInstance, AuctionSpec, GenError, KnapsackSpec, SensorSpec,
};
use pbmc_core::oracle::brute_count;
use pbmc_core::{count_pbmc, parse_opb, CountConfig};

fn count(text: &str) -> BigUint {
    let parsed = parse_opb(text).unwrap();
    assert!(parsed.warnings.is_empty(), "{:?}", parsed.warnings);
    let n = count_pbmc(&parsed.formula, &CountConfig::default()).unwrap();
    if parsed.formula.num_vars() <= 16 {
        assert_eq!(n, brute_count(&parsed.formula, 24).unwrap());
    }
    n
}

#[test]
fn plain_sensor_instances_have_unit_structure() {
    for seed in 0..100 {
        let spec = SensorSpec {
            targets: 5 + (seed % 11) as u32,
            sensors: 6 + (seed % 13) as u32,
            seed,
            ..SensorSpec::default()
        };
        let raw = parse_opb_raw(&sensor(&spec).unwrap()).unwrap();
        assert!(raw.constraints.iter().all(|c| c.terms.iter().all(|t| t.0.abs() == 1)));
        let non_unit = raw.constraints.iter().filter(|c| c.degree != 1).count();
        assert_eq!(non_unit, 1, "seed {seed}");
    }
}

#[test]
fn output_is_reproducible() {
    let k = KnapsackSpec {
        dims: 2,
        items: 10,
        seed: 1,
        ..KnapsackSpec::default()
    };
    assert_eq!(knapsack(&k).unwrap(), knapsack(&k).unwrap());
    let s = SensorSpec {
        cost_aware: true,
        seed: 4,
        ..SensorSpec::default()
    };
    assert_eq!(sensor(&s).unwrap(), sensor(&s).unwrap());
    assert!(sensor(&s).unwrap().contains("* generator: sensor-cost seed=4"));
}

#[test]
fn knapsack_examples() {
    let text = knapsack(&KnapsackSpec {
        dims: 1,
        items: 3,
        seed: 7,
        ..KnapsackSpec::default()
    })
    .unwrap();
    let raw = parse_opb_raw(&text).unwrap();
    assert_eq!(raw.constraints.len(), 1);
    assert_eq!(raw.constraints[0].op, RelOp::Le);
    assert_eq!(raw.num_vars(), 3);

    let full = |fraction| KnapsackSpec {
        dims: 3,
        items: 8,
        capacity_fraction: fraction,
        seed: 2,
        ..KnapsackSpec::default()
    };
    assert_eq!(count(&knapsack(&full(1.0)).unwrap()), BigUint::from(256u32));
    assert_eq!(count(&knapsack(&full(0.0)).unwrap()), BigUint::from(1u32));
    let no_dims = KnapsackSpec { dims: 0, ..full(0.5) };
    assert!(matches!(knapsack(&no_dims), Err(GenError::Zero(_))));
}

fn render(inst: &AuctionInstance) -> String {
    inst.to_opb("auction test")
}

#[test]
fn auction_examples() {
    let shared = AuctionInstance {
        items: 1,
        bundles: vec![vec![0], vec![0]],
        prices: vec![3, 4],
        revenue: 0,
    };
    assert_eq!(count(&render(&shared)), BigUint::from(3u32));
    let disjoint = AuctionInstance {
        items: 3,
        bundles: vec![vec![0], vec![1], vec![2]],
        prices: vec![3, 4, 5],
        revenue: 0,
    };
    assert_eq!(count(&render(&disjoint)), BigUint::from(8u32));
    let greedy = AuctionInstance {
        revenue: 13,
        ..disjoint
    };
    assert_eq!(count(&render(&greedy)), BigUint::from(0u32));

    let base = AuctionSpec {
        revenue_fraction: 0.0,
        ..AuctionSpec::default()
    };
    let over = AuctionSpec {
        bids: 6,
        items: 4,
        revenue_fraction: 1.0,
        ..base.clone()
    };
    // Full revenue needs every bid, which clashes as soon as two bids share an item.
    let n = count(&auction(&over).unwrap());
    assert!(n <= BigUint::from(1u32));
    for seed in 0..10 {
        let spec = AuctionSpec {
            bids: 8,
            items: 5,
            seed,
            ..base.clone()
        };
        count(&auction(&spec).unwrap());
    }
}

#[test]
fn sensor_examples() {
    // One target seen by all five sensors, budget of all sensors.
    let spec = SensorSpec {
        targets: 1,
        sensors: 5,
        coverage: 5,
        budget_fraction: 1.0,
        ..SensorSpec::default()
    };
    assert_eq!(count(&sensor(&spec).unwrap()), BigUint::from(31u32));
    let starved = SensorSpec {
        budget_fraction: 0.0,
        ..spec
    };
    assert_eq!(count(&sensor(&starved).unwrap()), BigUint::from(0u32));
}
