//! Seeded benchmark generators emitting OPB text.
//!
//! The same spec and seed always produce byte-identical output. Every file
//! starts with the size header and a `* generator:` line recording the
//! family, seed and parameters.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::formula::{normalize, Lit, PbFormula, RelOp, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("{name} must be a finite value in [0, 1], got {value}")]
    Fraction { name: &'static str, value: f64 },
    #[error("{0}")]
    Invalid(String),
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_fraction(name: &'static str, value: f64) -> Result<(), GenError> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(GenError::Fraction { name, value })
    }
}

fn at_least_one(name: &'static str, v: u64) -> Result<(), GenError> {
    if v == 0 {
        Err(GenError::Zero(name))
    } else {
        Ok(())
    }
}

/// One constraint as it will be written: `(coef, var id)` terms, operator, rhs.
type Row = (Vec<(i64, u32)>, RelOp, i64);

fn render(num_vars: u32, manifest: &str, rows: &[Row]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "* #variable= {} #constraint= {}", num_vars, rows.len());
    let _ = writeln!(out, "* generator: {manifest}");
    for (terms, op, rhs) in rows {
        for &(a, v) in terms {
            let _ = write!(out, "{a:+} x{v} ");
        }
        let _ = writeln!(out, "{op} {rhs} ;");
    }
    out
}

fn floor_fraction(total: i64, fraction: f64) -> i64 {
    (total as f64 * fraction).floor() as i64
}

/// Multi-dimensional 0/1 knapsack: `dims` capacity constraints over `items`
/// variables. Capacity of each dimension is `floor(fraction * total weight)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KnapsackSpec {
    pub dims: u32,
    pub items: u32,
    pub max_coeff: u64,
    pub capacity_fraction: f64,
    pub seed: u64,
}

impl Default for KnapsackSpec {
    fn default() -> KnapsackSpec {
        KnapsackSpec {
            dims: 1,
            items: 20,
            max_coeff: 20,
            capacity_fraction: 0.5,
            seed: 0,
        }
    }
}

pub fn knapsack(spec: &KnapsackSpec) -> Result<String, GenError> {
    at_least_one("dims", spec.dims as u64)?;
    at_least_one("items", spec.items as u64)?;
    at_least_one("max_coeff", spec.max_coeff)?;
    check_fraction("capacity_fraction", spec.capacity_fraction)?;
    if spec.max_coeff > (i64::MAX as u64) / spec.items as u64 {
        return Err(GenError::Invalid("max_coeff * items overflows".into()));
    }
    let mut rng = rng(spec.seed);
    let mut rows = Vec::with_capacity(spec.dims as usize);
    for _ in 0..spec.dims {
        let weights: Vec<i64> = (0..spec.items)
            .map(|_| rng.gen_range(1..=spec.max_coeff) as i64)
            .collect();
        let capacity = floor_fraction(weights.iter().sum(), spec.capacity_fraction);
        let terms = weights.iter().enumerate().map(|(i, &w)| (w, i as u32 + 1)).collect();
        rows.push((terms, RelOp::Le, capacity));
    }
    let manifest = format!(
        "knapsack seed={} dims={} items={} max_coeff={} capacity_fraction={}",
        spec.seed, spec.dims, spec.items, spec.max_coeff, spec.capacity_fraction
    );
    Ok(render(spec.items, &manifest, &rows))
}

/// Combinatorial auction winner determination: one variable per bid, at most
/// one accepted bid per item, accepted revenue at least `R`.
#[derive(Clone, Debug, PartialEq)]
pub struct AuctionSpec {
    pub bids: u32,
    pub items: u32,
    pub max_bundle: u32,
    pub max_price: u64,
    pub revenue_fraction: f64,
    pub seed: u64,
}

impl Default for AuctionSpec {
    fn default() -> AuctionSpec {
        AuctionSpec {
            bids: 20,
            items: 10,
            max_bundle: 3,
            max_price: 100,
            revenue_fraction: 0.3,
            seed: 0,
        }
    }
}

/// A concrete auction, before rendering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuctionInstance {
    pub items: u32,
    /// Item ids (0-based) wanted by each bid.
    pub bundles: Vec<Vec<u32>>,
    pub prices: Vec<u64>,
    pub revenue: u64,
}

impl AuctionInstance {
    pub fn sample(spec: &AuctionSpec) -> Result<AuctionInstance, GenError> {
        at_least_one("bids", spec.bids as u64)?;
        at_least_one("items", spec.items as u64)?;
        at_least_one("max_bundle", spec.max_bundle as u64)?;
        at_least_one("max_price", spec.max_price)?;
        check_fraction("revenue_fraction", spec.revenue_fraction)?;
        let mut rng = rng(spec.seed);
        let mut bundles = Vec::with_capacity(spec.bids as usize);
        let mut prices = Vec::with_capacity(spec.bids as usize);
        for _ in 0..spec.bids {
            let size = rng.gen_range(1..=spec.max_bundle.min(spec.items));
            let mut bundle: Vec<u32> = sample(&mut rng, spec.items as usize, size as usize)
                .into_iter()
                .map(|i| i as u32)
                .collect();
            bundle.sort_unstable();
            bundles.push(bundle);
            prices.push(rng.gen_range(1..=spec.max_price));
        }
        let total: u64 = prices.iter().sum();
        let revenue = floor_fraction(total as i64, spec.revenue_fraction) as u64;
        Ok(AuctionInstance {
            items: spec.items,
            bundles,
            prices,
            revenue,
        })
    }

    pub fn to_opb(&self, manifest: &str) -> String {
        let mut rows: Vec<Row> = Vec::new();
        for item in 0..self.items {
            let bidders: Vec<(i64, u32)> = (0..self.bundles.len())
                .filter(|&b| self.bundles[b].contains(&item))
                .map(|b| (-1, b as u32 + 1))
                .collect();
            if bidders.len() >= 2 {
                rows.push((bidders, RelOp::Ge, -1));
            }
        }
        let revenue = self
            .prices
            .iter()
            .enumerate()
            .map(|(b, &p)| (p as i64, b as u32 + 1))
            .collect();
        rows.push((revenue, RelOp::Ge, self.revenue as i64));
        render(self.bundles.len() as u32, manifest, &rows)
    }
}

pub fn auction(spec: &AuctionSpec) -> Result<String, GenError> {
    let inst = AuctionInstance::sample(spec)?;
    let manifest = format!(
        "auction seed={} bids={} items={} max_bundle={} max_price={} revenue_fraction={}",
        spec.seed, spec.bids, spec.items, spec.max_bundle, spec.max_price, spec.revenue_fraction
    );
    Ok(inst.to_opb(&manifest))
}

/// Sensor placement: every target must be covered by enough chosen sensors,
/// and the chosen sensors must fit a budget. In the plain variant the
/// budget counts sensors and every target needs one; in the cost-aware
/// variant sensors have costs in `[1, max_cost]` and each target needs
/// coverage 2 with probability `redundancy` (when it has two sensors).
#[derive(Clone, Debug, PartialEq)]
pub struct SensorSpec {
    pub targets: u32,
    pub sensors: u32,
    /// Sensors that can see each target.
    pub coverage: u32,
    pub budget_fraction: f64,
    pub cost_aware: bool,
    pub max_cost: u64,
    pub redundancy: f64,
    pub seed: u64,
}

impl Default for SensorSpec {
    fn default() -> SensorSpec {
        SensorSpec {
            targets: 10,
            sensors: 20,
            coverage: 3,
            budget_fraction: 0.5,
            cost_aware: false,
            max_cost: 10,
            redundancy: 0.3,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SensorInstance {
    pub sensors: u32,
    /// Per target: sensor ids (0-based) that see it, and required coverage.
    pub targets: Vec<(Vec<u32>, u32)>,
    /// `None` when the budget counts sensors.
    pub costs: Option<Vec<u64>>,
    pub budget: u64,
}

impl SensorInstance {
    pub fn sample(spec: &SensorSpec) -> Result<SensorInstance, GenError> {
        at_least_one("targets", spec.targets as u64)?;
        at_least_one("sensors", spec.sensors as u64)?;
        check_fraction("budget_fraction", spec.budget_fraction)?;
        check_fraction("redundancy", spec.redundancy)?;
        if spec.coverage > spec.sensors {
            return Err(GenError::Invalid(format!(
                "coverage {} exceeds the number of sensors {}",
                spec.coverage, spec.sensors
            )));
        }
        if spec.cost_aware {
            at_least_one("max_cost", spec.max_cost)?;
        }
        let mut rng = rng(spec.seed);
        let costs = spec.cost_aware.then(|| {
            (0..spec.sensors)
                .map(|_| rng.gen_range(1..=spec.max_cost))
                .collect::<Vec<_>>()
        });
        let mut targets = Vec::with_capacity(spec.targets as usize);
        for _ in 0..spec.targets {
            let mut seen: Vec<u32> = sample(&mut rng, spec.sensors as usize, spec.coverage as usize)
                .into_iter()
                .map(|i| i as u32)
                .collect();
            seen.sort_unstable();
            let need = if spec.cost_aware && seen.len() >= 2 && rng.gen_bool(spec.redundancy) {
                2
            } else {
                1
            };
            targets.push((seen, need));
        }
        let total = match &costs {
            Some(c) => c.iter().sum::<u64>(),
            None => spec.sensors as u64,
        };
        let budget = floor_fraction(total as i64, spec.budget_fraction) as u64;
        Ok(SensorInstance {
            sensors: spec.sensors,
            targets,
            costs,
            budget,
        })
    }

    pub fn to_opb(&self, manifest: &str) -> String {
        let mut rows: Vec<Row> = Vec::new();
        for (seen, need) in &self.targets {
            rows.push((seen.iter().map(|&s| (1, s + 1)).collect(), RelOp::Ge, *need as i64));
        }
        let budget_terms = (0..self.sensors)
            .map(|s| {
                let cost = self.costs.as_ref().map_or(1, |c| c[s as usize]);
                (-(cost as i64), s + 1)
            })
            .collect();
        rows.push((budget_terms, RelOp::Ge, -(self.budget as i64)));
        render(self.sensors, manifest, &rows)
    }
}

pub fn sensor(spec: &SensorSpec) -> Result<String, GenError> {
    let inst = SensorInstance::sample(spec)?;
    let family = if spec.cost_aware { "sensor-cost" } else { "sensor" };
    let mut manifest = format!(
        "{family} seed={} targets={} sensors={} coverage={} budget_fraction={}",
        spec.seed, spec.targets, spec.sensors, spec.coverage, spec.budget_fraction
    );
    if spec.cost_aware {
        let _ = write!(manifest, " max_cost={} redundancy={}", spec.max_cost, spec.redundancy);
    }
    Ok(inst.to_opb(&manifest))
}

/// Uniformly random small formulas with mixed operators, for testing.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomSpec {
    pub max_vars: u32,
    pub max_constraints: u32,
    pub max_terms: u32,
    pub max_coeff: i64,
    /// Range of the position of inequality right-hand sides between the
    /// tightest (0) and trivially true (1) values.
    pub looseness: (f64, f64),
}

impl Default for RandomSpec {
    fn default() -> RandomSpec {
        RandomSpec {
            max_vars: 15,
            max_constraints: 10,
            max_terms: 6,
            max_coeff: 10,
            looseness: (0.0, 1.0),
        }
    }
}

/// Draws one formula from `spec` using `rng`.
pub fn random_formula(spec: &RandomSpec, rng: &mut impl Rng) -> PbFormula {
    let n = rng.gen_range(1..=spec.max_vars);
    let m = rng.gen_range(1..=spec.max_constraints);
    let mut f = PbFormula::new(n);
    for _ in 0..m {
        let len = rng.gen_range(1..=spec.max_terms.min(n));
        let vars = sample(rng, n as usize, len as usize);
        let terms: Vec<(i64, Lit)> = vars
            .into_iter()
            .map(|v| {
                let mut a = rng.gen_range(1..=spec.max_coeff);
                if rng.gen_bool(0.3) {
                    a = -a;
                }
                (a, Lit::new(Var::from_index(v), rng.gen_bool(0.3)))
            })
            .collect();
        let pos: i64 = terms.iter().filter(|t| t.0 > 0).map(|t| t.0).sum();
        let neg: i64 = terms.iter().filter(|t| t.0 < 0).map(|t| t.0).sum();
        let op = match rng.gen_range(0..10) {
            0..=5 => RelOp::Ge,
            6..=8 => RelOp::Le,
            _ => RelOp::Eq,
        };
        let t = rng.gen_range(spec.looseness.0..=spec.looseness.1);
        let span = (pos - neg) as f64;
        let rhs = match op {
            RelOp::Ge => pos - (t * span).round() as i64,
            RelOp::Le => neg + (t * span).round() as i64,
            RelOp::Eq => rng.gen_range(neg..=pos),
        };
        let normalized = normalize(&terms, op, rhs).expect("small coefficients");
        f.add_normalized(normalized).expect("variables in range");
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_opb, parse_opb_raw};
    use crate::oracle::brute_count;
    use num_bigint::BigUint;

    #[test]
    fn knapsack_is_deterministic() {
        let spec = KnapsackSpec {
            dims: 2,
            items: 8,
            seed: 7,
            ..KnapsackSpec::default()
        };
        assert_eq!(knapsack(&spec).unwrap(), knapsack(&spec).unwrap());
        let other = KnapsackSpec {
            seed: 8,
            ..spec.clone()
        };
        assert_ne!(knapsack(&spec).unwrap(), knapsack(&other).unwrap());
    }

    #[test]
    fn knapsack_structure() {
        let spec = KnapsackSpec {
            dims: 3,
            items: 12,
            max_coeff: 9,
            seed: 1,
            ..KnapsackSpec::default()
        };
        let raw = parse_opb_raw(&knapsack(&spec).unwrap()).unwrap();
        assert_eq!(raw.declared_vars, Some(12));
        assert_eq!(raw.constraints.len(), 3);
        for c in &raw.constraints {
            assert_eq!(c.op, RelOp::Le);
            assert_eq!(c.terms.len(), 12);
            assert!(c.terms.iter().all(|&(a, _)| (1..=9).contains(&a)));
        }
        assert!(raw.comments[0].starts_with("generator: knapsack seed=1"));
    }

    #[test]
    fn knapsack_capacity_extremes() {
        let full = KnapsackSpec {
            items: 6,
            capacity_fraction: 1.0,
            ..KnapsackSpec::default()
        };
        let f = parse_opb(&knapsack(&full).unwrap()).unwrap().formula;
        assert_eq!(brute_count(&f, 24).unwrap(), BigUint::from(64u32));
        let empty = KnapsackSpec {
            capacity_fraction: 0.0,
            ..full
        };
        let f = parse_opb(&knapsack(&empty).unwrap()).unwrap().formula;
        assert_eq!(brute_count(&f, 24).unwrap(), BigUint::from(1u32));
    }

    #[test]
    fn zero_dimensions_rejected() {
        let spec = KnapsackSpec {
            dims: 0,
            ..KnapsackSpec::default()
        };
        assert_eq!(knapsack(&spec), Err(GenError::Zero("dims")));
    }

    #[test]
    fn auction_structure() {
        let spec = AuctionSpec {
            seed: 3,
            ..AuctionSpec::default()
        };
        let raw = parse_opb_raw(&auction(&spec).unwrap()).unwrap();
        let (last, rest) = raw.constraints.split_last().unwrap();
        assert!(last.terms.iter().all(|&(a, _)| a >= 1));
        for c in rest {
            assert_eq!(c.degree, -1);
            assert!(c.terms.iter().all(|&(a, _)| a == -1));
            assert!(c.terms.len() >= 2);
        }
    }

    #[test]
    fn auction_small_cases() {
        let shared = AuctionInstance {
            items: 1,
            bundles: vec![vec![0], vec![0]],
            prices: vec![5, 7],
            revenue: 0,
        };
        let f = parse_opb(&shared.to_opb("test")).unwrap().formula;
        assert_eq!(brute_count(&f, 24).unwrap(), BigUint::from(3u32));
        let disjoint = AuctionInstance {
            items: 3,
            bundles: vec![vec![0], vec![1], vec![2]],
            prices: vec![1, 2, 3],
            revenue: 0,
        };
        let f = parse_opb(&disjoint.to_opb("test")).unwrap().formula;
        assert_eq!(brute_count(&f, 24).unwrap(), BigUint::from(8u32));
    }

    #[test]
    fn sensor_structure() {
        let spec = SensorSpec {
            seed: 5,
            ..SensorSpec::default()
        };
        let raw = parse_opb_raw(&sensor(&spec).unwrap()).unwrap();
        let (budget, targets) = raw.constraints.split_last().unwrap();
        assert!(targets
            .iter()
            .all(|c| c.degree == 1 && c.terms.iter().all(|&(a, _)| a == 1)));
        assert!(budget.terms.iter().all(|&(a, _)| a == -1));
        assert_ne!(budget.degree, 1);
    }

    #[test]
    fn sensor_single_target_full_coverage() {
        let spec = SensorSpec {
            targets: 1,
            sensors: 6,
            coverage: 6,
            budget_fraction: 1.0,
            ..SensorSpec::default()
        };
        let f = parse_opb(&sensor(&spec).unwrap()).unwrap().formula;
        assert_eq!(brute_count(&f, 24).unwrap(), BigUint::from(63u32));
    }

    #[test]
    fn uncovered_target_is_unsat() {
        let spec = SensorSpec {
            targets: 2,
            sensors: 4,
            coverage: 0,
            ..SensorSpec::default()
        };
        let f = parse_opb(&sensor(&spec).unwrap()).unwrap().formula;
        assert_eq!(brute_count(&f, 24).unwrap(), BigUint::from(0u32));
    }

    #[test]
    fn sensor_cost_has_costs_and_redundancy() {
        let spec = SensorSpec {
            cost_aware: true,
            redundancy: 1.0,
            seed: 2,
            ..SensorSpec::default()
        };
        let raw = parse_opb_raw(&sensor(&spec).unwrap()).unwrap();
        let (budget, targets) = raw.constraints.split_last().unwrap();
        assert!(budget.terms.iter().all(|&(a, _)| (-10..=-1).contains(&a)));
        assert!(targets.iter().all(|c| c.degree == 2));
        assert!(raw.comments[0].starts_with("generator: sensor-cost seed=2"));
    }

    #[test]
    fn random_formulas_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let f = random_formula(&RandomSpec::default(), &mut rng);
            assert!(f.num_vars() <= 15);
            assert!(f.num_constraints() <= 20);
        }
    }
}
