//! The `pbmc` command line: `count`, `verify` and `generate`.
//!
//! Every flag can also be set through an environment variable named after
//! it with a `PBMC_` prefix, e.g. `PBMC_TIMEOUT=30`.

mod report;

pub use report::{CacheReport, RunReport, SearchReport, Status};

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use pbmc_core::counter::{CountConfig, CountError, Counter, Heuristic};
use pbmc_core::generators::{self, AuctionSpec, KnapsackSpec, SensorSpec};
use pbmc_core::oracle::{brute_count, DEFAULT_VAR_LIMIT};
use pbmc_core::{parse_opb, PbFormula};

#[derive(Debug, Parser)]
#[command(name = "pbmc", version, about = "Exact model counting for pseudo-Boolean formulas")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count the models of an OPB file.
    Count(CountArgs),
    /// Count under every heuristic and saturation setting and compare
    /// against exhaustive enumeration.
    Verify(VerifyArgs),
    /// Write a benchmark instance in OPB format.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum HeuristicArg {
    Vcis,
    Baseline,
}

impl From<HeuristicArg> for Heuristic {
    fn from(h: HeuristicArg) -> Heuristic {
        match h {
            HeuristicArg::Vcis => Heuristic::Vcis,
            HeuristicArg::Baseline => Heuristic::Baseline,
        }
    }
}

#[derive(Debug, Args)]
pub struct CountArgs {
    pub path: PathBuf,
    #[arg(long, value_enum, default_value = "vcis", env = "PBMC_HEURISTIC")]
    pub heuristic: HeuristicArg,
    /// Key constraints by their exact gap instead of the saturated one.
    #[arg(long, env = "PBMC_NO_CACHE_SATURATION")]
    pub no_cache_saturation: bool,
    /// Branch on the static coefficient score alone.
    #[arg(long, env = "PBMC_VCIS_STATIC_ONLY")]
    pub vcis_static_only: bool,
    /// Wall-clock limit in seconds.
    #[arg(long, env = "PBMC_TIMEOUT", value_parser = positive_seconds)]
    pub timeout: Option<Duration>,
    /// Memory limit in MiB for the cache, learned constraints and search stack.
    #[arg(long, env = "PBMC_MEM", value_parser = clap::value_parser!(u64).range(1..))]
    pub mem: Option<u64>,
    /// Print search statistics to standard error.
    #[arg(long, env = "PBMC_STATS")]
    pub stats: bool,
    /// Break heuristic ties by a seeded hash instead of the smallest id.
    #[arg(long, env = "PBMC_SEED")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub path: PathBuf,
    #[arg(long, env = "PBMC_SEED")]
    pub seed: Option<u64>,
    /// Make every cache hit return a wrong count. Checks that verify fails.
    #[arg(long, hide = true, env = "PBMC_DEBUG_CORRUPT_CACHE")]
    pub debug_corrupt_cache: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(subcommand)]
    pub family: Family,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write here instead of standard output.
    #[arg(long, env = "PBMC_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0, env = "PBMC_SEED")]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Family {
    /// Multi-dimensional knapsack.
    Knapsack {
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..), env = "PBMC_DIMS")]
        dims: u32,
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..), env = "PBMC_ITEMS")]
        items: u32,
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..), env = "PBMC_MAX_COEFF")]
        max_coeff: u64,
        #[arg(long, default_value_t = 0.5, value_parser = fraction, env = "PBMC_CAPACITY_FRACTION")]
        capacity_fraction: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Combinatorial auction winner determination.
    Auction {
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..), env = "PBMC_BIDS")]
        bids: u32,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..), env = "PBMC_ITEMS")]
        items: u32,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..), env = "PBMC_MAX_BUNDLE")]
        max_bundle: u32,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..), env = "PBMC_MAX_PRICE")]
        max_price: u64,
        #[arg(long, default_value_t = 0.3, value_parser = fraction, env = "PBMC_REVENUE_FRACTION")]
        revenue_fraction: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Sensor placement with unit costs.
    Sensor {
        #[command(flatten)]
        sizes: SensorSizes,
        #[command(flatten)]
        output: Output,
    },
    /// Sensor placement with varying costs and optional double coverage.
    SensorCost {
        #[command(flatten)]
        sizes: SensorSizes,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..), env = "PBMC_MAX_COST")]
        max_cost: u64,
        /// Probability that a target needs two sensors.
        #[arg(long, default_value_t = 0.3, value_parser = fraction, env = "PBMC_REDUNDANCY")]
        redundancy: f64,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Args)]
pub struct SensorSizes {
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..), env = "PBMC_TARGETS")]
    targets: u32,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..), env = "PBMC_SENSORS")]
    sensors: u32,
    /// Sensors that see each target.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..), env = "PBMC_COVERAGE")]
    coverage: u32,
    #[arg(long, default_value_t = 0.5, value_parser = fraction, env = "PBMC_BUDGET_FRACTION")]
    budget_fraction: f64,
}

fn positive_seconds(s: &str) -> Result<Duration, String> {
    let secs: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if secs.is_finite() && secs > 0.0 {
        Ok(Duration::from_secs_f64(secs))
    } else {
        Err("expected a positive number of seconds".into())
    }
}

fn fraction(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err("expected a value in [0, 1]".into())
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let result = match cli.command {
        Command::Count(args) => count(&args, out, err),
        Command::Verify(args) => verify(&args, out, err),
        Command::Generate(args) => generate(args.family, out),
    };
    result.unwrap_or_else(|e| {
        let _ = writeln!(err, "error: {e:#}");
        2
    })
}

fn load(path: &Path, err: &mut dyn Write) -> anyhow::Result<Option<PbFormula>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match parse_opb(&text) {
        Ok(parsed) => {
            for w in &parsed.warnings {
                writeln!(err, "warning: {w}")?;
            }
            Ok(Some(parsed.formula))
        }
        Err(e) => {
            writeln!(err, "error: {}: {e}", path.display())?;
            Ok(None)
        }
    }
}

fn count(args: &CountArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<u8> {
    let start = Instant::now();
    let Some(formula) = load(&args.path, err)? else {
        let report = RunReport::empty(Status::ParseError);
        writeln!(out, "c report {}", report.to_json())?;
        return Ok(report.status.exit_code());
    };
    let config = CountConfig {
        heuristic: args.heuristic.into(),
        cache_saturation: !args.no_cache_saturation,
        vcis_static_only: args.vcis_static_only,
        seed: args.seed,
        timeout: args.timeout,
        memory_limit: args.mem.map(|m| (m as usize).saturating_mul(1 << 20)),
        ..CountConfig::default()
    };
    let mut report = RunReport::empty(Status::Counted);
    report.variables = formula.num_vars();
    let mut counter = Counter::new(&formula, &config);
    if counter.formula().is_unsat() {
        // Found while parsing or by root propagation.
        report.status = Status::UnsatTrivial;
        report.count = Some("0".into());
    } else {
        let result = counter.run();
        report.fill_stats(&counter.stats());
        match result {
            Ok(n) => report.count = Some(n.to_string()),
            Err(CountError::Timeout) => report.status = Status::Timeout,
            Err(CountError::MemoryLimit) => report.status = Status::Memout,
        }
    }
    report.wall_seconds = start.elapsed().as_secs_f64();
    if args.stats {
        writeln!(err, "{}", serde_json::to_string_pretty(&report)?)?;
    }
    match report.status {
        Status::Timeout => writeln!(err, "time limit reached")?,
        Status::Memout => writeln!(err, "memory limit reached")?,
        _ => {}
    }
    writeln!(out, "c report {}", report.to_json())?;
    if let Some(n) = &report.count {
        writeln!(out, "s mc {n}")?;
    }
    Ok(report.status.exit_code())
}

fn verify(args: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<u8> {
    let Some(formula) = load(&args.path, err)? else {
        return Ok(2);
    };
    if formula.num_vars() > DEFAULT_VAR_LIMIT {
        writeln!(
            err,
            "error: {} has {} variables; verify enumerates at most {DEFAULT_VAR_LIMIT}",
            args.path.display(),
            formula.num_vars()
        )?;
        return Ok(2);
    }
    let mut values = Vec::new();
    for heuristic in [Heuristic::Vcis, Heuristic::Baseline] {
        for saturation in [true, false] {
            let config = CountConfig {
                heuristic,
                cache_saturation: saturation,
                seed: args.seed,
                corrupt_cache: args.debug_corrupt_cache,
                ..CountConfig::default()
            };
            let n = Counter::new(&formula, &config).run()?;
            let name = format!(
                "{}/{}",
                match heuristic {
                    Heuristic::Vcis => "vcis",
                    Heuristic::Baseline => "baseline",
                },
                if saturation { "saturation" } else { "no-saturation" }
            );
            values.push((name, n));
        }
    }
    values.push(("enumeration".into(), brute_count(&formula, DEFAULT_VAR_LIMIT)?));
    for (name, n) in &values {
        writeln!(out, "c {name} {n}")?;
    }
    let pass = values.iter().all(|(_, n)| n == &values[0].1);
    writeln!(out, "{}", if pass { "PASS" } else { "FAIL" })?;
    Ok(if pass { 0 } else { 1 })
}

fn generate(family: Family, out: &mut dyn Write) -> anyhow::Result<u8> {
    let (text, output) = match family {
        Family::Knapsack {
            dims,
            items,
            max_coeff,
            capacity_fraction,
            output,
        } => (
            generators::knapsack(&KnapsackSpec {
                dims,
                items,
                max_coeff,
                capacity_fraction,
                seed: output.seed,
            }),
            output,
        ),
        Family::Auction {
            bids,
            items,
            max_bundle,
            max_price,
            revenue_fraction,
            output,
        } => (
            generators::auction(&AuctionSpec {
                bids,
                items,
                max_bundle,
                max_price,
                revenue_fraction,
                seed: output.seed,
            }),
            output,
        ),
        Family::Sensor { sizes, output } => (generators::sensor(&sensor_spec(&sizes, output.seed)), output),
        Family::SensorCost {
            sizes,
            max_cost,
            redundancy,
            output,
        } => (
            generators::sensor(&SensorSpec {
                cost_aware: true,
                max_cost,
                redundancy,
                ..sensor_spec(&sizes, output.seed)
            }),
            output,
        ),
    };
    let text = text?;
    match &output.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(0)
}

fn sensor_spec(sizes: &SensorSizes, seed: u64) -> SensorSpec {
    SensorSpec {
        targets: sizes.targets,
        sensors: sizes.sensors,
        coverage: sizes.coverage,
        budget_fraction: sizes.budget_fraction,
        seed,
        ..SensorSpec::default()
    }
}
