use num_bigint::BigUint;
use pbmc_core::components::CacheMode;
use pbmc_core::counter::{count_pbmc, CountConfig, Counter, Heuristic};
use pbmc_core::generators::{self, random_formula, AuctionSpec, KnapsackSpec, RandomSpec, SensorSpec};
use pbmc_core::oracle::brute_count;
use pbmc_core::PbFormula;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn configs() -> Vec<(&'static str, CountConfig)> {
    let base = CountConfig::default();
    vec![
        ("vcis", base.clone()),
        (
            "vcis-nosat",
            CountConfig {
                cache_saturation: false,
                ..base.clone()
            },
        ),
        (
            "baseline",
            CountConfig {
                heuristic: Heuristic::Baseline,
                ..base.clone()
            },
        ),
        (
            "static",
            CountConfig {
                vcis_static_only: true,
                ..base.clone()
            },
        ),
        (
            "tiny-learned-cap",
            CountConfig {
                learned_cap: 2,
                ..base.clone()
            },
        ),
        (
            "fingerprint-tiny-cache",
            CountConfig {
                cache_mode: CacheMode::Fingerprint,
                cache_bytes: 2048,
                ..base
            },
        ),
    ]
}

fn check(f: &PbFormula, what: &str) {
    let expected = brute_count(f, 24).unwrap();
    for (name, config) in configs() {
        let got = count_pbmc(f, &config).unwrap();
        assert_eq!(
            got,
            expected,
            "{what}, config {name}, formula:\n{}",
            pbmc_core::formula::emit_opb(f)
        );
    }
}

#[test]
fn matches_enumeration_on_random_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for i in 0..1500 {
        let f = random_formula(&RandomSpec::default(), &mut rng);
        check(&f, &format!("formula {i}"));
    }
}

#[test]
fn matches_enumeration_on_dense_formulas() {
    // Many overlapping constraints over few variables force conflicts.
    let spec = RandomSpec {
        max_vars: 15,
        max_constraints: 14,
        max_terms: 5,
        max_coeff: 20,
        looseness: (0.55, 0.95),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut nonzero, mut learned, mut backjumps, mut hits) = (0, 0, 0, 0);
    for i in 0..600 {
        let f = random_formula(&spec, &mut rng);
        check(&f, &format!("dense formula {i}"));
        nonzero += (brute_count(&f, 24).unwrap() > BigUint::from(0u32)) as u32;
        let mut counter = Counter::new(&f, &CountConfig::default());
        counter.run().unwrap();
        let s = counter.stats();
        learned += s.learned;
        backjumps += s.backjumps;
        hits += s.cache.hits;
    }
    eprintln!("satisfiable {nonzero}, learned {learned}, backjumps {backjumps}, cache hits {hits}");
    assert!(
        nonzero > 50,
        "generator produced too few satisfiable formulas ({nonzero})"
    );
    assert!(
        learned > 20 && hits > 100,
        "sweep did not exercise learning and caching"
    );
}

fn sweep_family(name: &str, instances: impl Iterator<Item = String>) -> (u64, u64) {
    let (mut learned, mut hits) = (0, 0);
    for (i, text) in instances.enumerate() {
        let f = pbmc_core::parse_opb(&text).unwrap().formula;
        check(&f, &format!("{name} instance {i}"));
        let mut counter = Counter::new(&f, &CountConfig::default());
        counter.run().unwrap();
        learned += counter.stats().learned;
        hits += counter.stats().cache.hits;
    }
    eprintln!("{name}: learned {learned}, cache hits {hits}");
    (learned, hits)
}

#[test]
fn matches_enumeration_on_generated_families() {
    let mut learned = 0;
    learned += sweep_family(
        "knapsack",
        (0..40).map(|seed| {
            generators::knapsack(&KnapsackSpec {
                dims: 1 + (seed % 3) as u32,
                items: 10 + (seed % 7) as u32,
                capacity_fraction: 0.3 + 0.1 * (seed % 4) as f64,
                seed,
                ..KnapsackSpec::default()
            })
            .unwrap()
        }),
    )
    .0;
    learned += sweep_family(
        "auction",
        (0..40).map(|seed| {
            generators::auction(&AuctionSpec {
                bids: 10 + (seed % 8) as u32,
                items: 4 + (seed % 5) as u32,
                revenue_fraction: 0.2 + 0.05 * (seed % 5) as f64,
                seed,
                ..AuctionSpec::default()
            })
            .unwrap()
        }),
    )
    .0;
    learned += sweep_family(
        "sensor",
        (0..40).map(|seed| {
            generators::sensor(&SensorSpec {
                targets: 6 + (seed % 6) as u32,
                sensors: 10 + (seed % 8) as u32,
                coverage: 2 + (seed % 3) as u32,
                budget_fraction: 0.2 + 0.1 * (seed % 4) as f64,
                cost_aware: seed % 2 == 1,
                seed,
                ..SensorSpec::default()
            })
            .unwrap()
        }),
    )
    .0;
    assert!(learned > 100, "family sweep learned only {learned} constraints");
}
