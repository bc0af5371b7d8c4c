//! Top-down exact model counting.
//!
//! The search keeps an explicit stack of frames instead of recursing. A
//! component is first looked up in the cache; on a miss it is split into
//! independent parts (a product frame) or, when it is a single connected
//! piece, branched on (a branch frame). Conflicts are analyzed as in a
//! CDCL solver; a backjump discards the frames above the target level and
//! re-evaluates the component of the branch frame at that level.
//!
//! Learned constraints only remove assignments that cannot be extended to a
//! model of the whole formula. A count is therefore exact whenever the rest
//! of the formula is satisfiable, and never too large. When a product frame
//! meets a zero factor, or a partly evaluated product is discarded, the
//! entries stored since the frame started are dropped, since they may have
//! been computed in an unsatisfiable context.

mod heuristics;
mod preprocess;

pub use heuristics::{Brancher, Candidates, Heuristic, VcisScores};
pub use preprocess::preprocess;

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::components::{CacheKey, CacheMark, CacheMode, CacheStats, Component, CountCache, KeyEncoder, Splitter};
use crate::engine::{Analysis, ConstraintRef, Engine, Propagation};
use crate::formula::{Lit, PbConstraint, PbFormula, Valuation, Var};
use crate::par::{self, Exec};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountConfig {
    pub heuristic: Heuristic,
    pub cache_saturation: bool,
    /// Branch on the static score alone, ignoring conflict activity.
    pub vcis_static_only: bool,
    pub cache_mode: CacheMode,
    pub cache_bytes: usize,
    pub learned_cap: usize,
    /// Breaks heuristic ties by a seeded hash instead of smallest id.
    pub seed: Option<u64>,
    pub timeout: Option<Duration>,
    /// Bound on cache, learned constraints and search stack, in bytes.
    pub memory_limit: Option<usize>,
    #[doc(hidden)]
    pub corrupt_cache: bool,
}

impl Default for CountConfig {
    fn default() -> CountConfig {
        CountConfig {
            heuristic: Heuristic::Vcis,
            cache_saturation: true,
            vcis_static_only: false,
            cache_mode: CacheMode::FullKey,
            cache_bytes: 4 << 30,
            learned_cap: 10_000,
            seed: None,
            timeout: None,
            memory_limit: None,
            corrupt_cache: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CountError {
    #[error("time limit reached")]
    Timeout,
    #[error("memory limit reached")]
    MemoryLimit,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CountStats {
    pub decisions: u64,
    pub conflicts: u64,
    pub propagations: u64,
    pub learned: u64,
    pub learned_removed: u64,
    pub backjumps: u64,
    /// Constraints left after root simplification.
    pub constraints: u64,
    pub components_split: u64,
    /// Deepest search stack, in frames.
    pub peak_frames: u64,
    pub cache: CacheStats,
}

/// Hooks into the search, for tests and tracing.
pub trait SearchObserver {
    fn on_decision(&mut self, _lit: Lit, _level: u32) {}
    fn on_conflict(&mut self, _level: u32) {}
    /// Called after the backjump and before the constraint is attached;
    /// `state` is the assignment it must propagate under.
    fn on_learned(&mut self, _constraint: &PbConstraint, _backjump: u32, _state: &dyn Valuation) {}
}

impl SearchObserver for () {}

enum Kind {
    Product {
        children: Vec<Component>,
        next: usize,
        acc: BigUint,
    },
    Branch {
        lit: Lit,
        second: bool,
        acc: BigUint,
    },
}

struct Frame {
    level: u32,
    key: CacheKey,
    comp: Component,
    mark: CacheMark,
    kind: Kind,
}

enum Step {
    Eval(Component),
    Deliver(BigUint),
    Conflict(ConstraintRef),
    Done(BigUint),
}

fn pow2(n: usize) -> BigUint {
    BigUint::one() << n
}

pub struct Counter {
    config: CountConfig,
    formula: PbFormula,
    engine: Engine,
    cache: CountCache,
    splitter: Splitter,
    encoder: KeyEncoder,
    brancher: Brancher,
    frames: Vec<Frame>,
    occ_scratch: Vec<u32>,
    stats: CountStats,
    steps: u64,
    deadline: Option<Instant>,
}

const CHECK_EVERY: u64 = 1 << 14;

impl Counter {
    /// Simplifies `f` at the root and sets up the search.
    pub fn new(f: &PbFormula, config: &CountConfig) -> Counter {
        let formula = preprocess(f);
        let budget = match config.memory_limit {
            Some(limit) => config.cache_bytes.min(limit / 4 * 3),
            None => config.cache_bytes,
        };
        let mut cache = CountCache::new(config.cache_mode, budget);
        cache.corrupt_lookups_for_testing(config.corrupt_cache);
        let n = formula.num_vars();
        Counter {
            engine: Engine::new(&formula, config.learned_cap),
            cache,
            splitter: Splitter::new(n),
            encoder: KeyEncoder::new(n),
            brancher: Brancher::new(&formula, config.heuristic, config.vcis_static_only, config.seed),
            frames: Vec::new(),
            occ_scratch: vec![0; n as usize],
            stats: CountStats {
                constraints: formula.num_constraints() as u64,
                ..CountStats::default()
            },
            steps: 0,
            deadline: None,
            config: config.clone(),
            formula,
        }
    }

    /// The simplified formula the search runs on. Cache keys refer to its
    /// constraint ids.
    pub fn formula(&self) -> &PbFormula {
        &self.formula
    }

    pub fn cache(&self) -> &CountCache {
        &self.cache
    }

    pub fn learned_constraints(&self) -> Vec<PbConstraint> {
        self.engine.learned_constraints().collect()
    }

    pub fn stats(&self) -> CountStats {
        let e = self.engine.stats();
        CountStats {
            conflicts: e.conflicts,
            propagations: e.propagations,
            learned: e.learned,
            learned_removed: e.learned_removed,
            cache: self.cache.stats(),
            ..self.stats
        }
    }

    pub fn run(&mut self) -> Result<BigUint, CountError> {
        self.run_observed(&mut ())
    }

    pub fn run_observed(&mut self, obs: &mut dyn SearchObserver) -> Result<BigUint, CountError> {
        self.deadline = self.config.timeout.map(|t| Instant::now() + t);
        if self.formula.is_unsat() {
            return Ok(BigUint::zero());
        }
        let root = Component {
            vars: self.formula.vars().collect(),
            cstrs: (0..self.formula.num_constraints() as u32).collect(),
            gaps: Vec::new(),
        };
        let mut step = match self.engine.propagate() {
            Propagation::Done => Step::Eval(root),
            Propagation::Conflict(_) => return Ok(BigUint::zero()),
        };
        loop {
            if self.steps.is_multiple_of(CHECK_EVERY) {
                self.check_limits()?;
            }
            self.steps += 1;
            step = match step {
                Step::Eval(comp) => self.eval(comp, obs),
                Step::Deliver(count) => self.deliver(count, obs),
                Step::Conflict(c) => self.conflict(c, obs),
                Step::Done(count) => {
                    debug_assert!(count <= pow2(self.formula.num_vars() as usize));
                    return Ok(count);
                }
            };
        }
    }

    fn check_limits(&self) -> Result<(), CountError> {
        if let Some(deadline) = self.deadline {
            if Instant::now() >= deadline {
                return Err(CountError::Timeout);
            }
        }
        if let Some(limit) = self.config.memory_limit {
            let frames: usize = self
                .frames
                .iter()
                .map(|f| 96 + f.key.len() + 8 * (f.comp.vars.len() + f.comp.cstrs.len() + f.comp.gaps.len()))
                .sum();
            if self.cache.bytes() + self.engine.approx_bytes() + frames > limit {
                return Err(CountError::MemoryLimit);
            }
        }
        Ok(())
    }

    fn eval(&mut self, comp: Component, obs: &mut dyn SearchObserver) -> Step {
        let res = self.splitter.residual(&comp.vars, &comp.cstrs, &self.engine);
        if res.cstrs.is_empty() {
            return Step::Deliver(pow2(res.vars.len()));
        }
        let key = self.encoder.encode(&res, &self.formula, self.config.cache_saturation);
        if let Some(count) = self.cache.lookup(&key) {
            return Step::Deliver(count);
        }
        let split = self.splitter.split(&res, &self.formula, &self.engine);
        self.stats.components_split += 1;
        let mark = self.cache.mark();
        let level = self.engine.decision_level();
        let step = if split.components.len() == 1 && split.free.is_empty() {
            let lit = self.pick(&res);
            self.frames.push(Frame {
                level,
                key,
                comp: res,
                mark,
                kind: Kind::Branch {
                    lit,
                    second: false,
                    acc: BigUint::zero(),
                },
            });
            self.decide(lit, obs)
        } else {
            let mut children = split.components;
            let first = std::mem::take(&mut children[0]);
            self.frames.push(Frame {
                level,
                key,
                comp: res,
                mark,
                kind: Kind::Product {
                    children,
                    next: 0,
                    acc: pow2(split.free.len()),
                },
            });
            Step::Eval(first)
        };
        self.stats.peak_frames = self.stats.peak_frames.max(self.frames.len() as u64);
        step
    }

    fn pick(&mut self, res: &Component) -> Lit {
        let baseline = self.brancher_uses_occurrences();
        if baseline {
            for &c in &res.cstrs {
                for t in self.formula.constraint(c as usize).terms() {
                    if self.engine.value(t.lit.var()).is_none() {
                        self.occ_scratch[t.lit.var().index()] += 1;
                    }
                }
            }
        }
        let engine = &self.engine;
        let occ = &self.occ_scratch;
        let lit = self.brancher.pick(&Candidates {
            vars: &res.vars,
            activity: &|v: Var| engine.var_activity(v),
            occurrences: &|v: Var| occ[v.index()],
        });
        if baseline {
            for v in &res.vars {
                self.occ_scratch[v.index()] = 0;
            }
        }
        lit
    }

    fn brancher_uses_occurrences(&self) -> bool {
        self.config.heuristic == Heuristic::Baseline
    }

    fn decide(&mut self, lit: Lit, obs: &mut dyn SearchObserver) -> Step {
        self.engine.decide(lit);
        self.stats.decisions += 1;
        obs.on_decision(lit, self.engine.decision_level());
        match self.engine.propagate() {
            Propagation::Done => Step::Eval(self.frames.last().expect("branch frame").comp.clone()),
            Propagation::Conflict(c) => Step::Conflict(c),
        }
    }

    fn deliver(&mut self, count: BigUint, obs: &mut dyn SearchObserver) -> Step {
        let Some(top) = self.frames.last_mut() else {
            return Step::Done(count);
        };
        match &mut top.kind {
            Kind::Product { children, next, acc } => {
                if count.is_zero() {
                    *acc = BigUint::zero();
                    self.cache.purge_since(top.mark);
                } else {
                    *acc *= count;
                    *next += 1;
                    if *next < children.len() {
                        let child = std::mem::take(&mut children[*next]);
                        return Step::Eval(child);
                    }
                }
            }
            Kind::Branch { lit, second, acc } => {
                let level = top.level;
                if !*second {
                    *acc = count;
                    *second = true;
                    let other = !*lit;
                    self.engine.backjump(level);
                    return self.decide(other, obs);
                }
                *acc += count;
                self.engine.backjump(level);
            }
        }
        let frame = self.frames.pop().expect("frame present");
        let total = match frame.kind {
            Kind::Product { acc, .. } | Kind::Branch { acc, .. } => acc,
        };
        self.cache.store(frame.key, total.clone());
        Step::Deliver(total)
    }

    fn conflict(&mut self, c: ConstraintRef, obs: &mut dyn SearchObserver) -> Step {
        obs.on_conflict(self.engine.decision_level());
        if let Some(top) = self.frames.last() {
            if matches!(top.kind, Kind::Branch { .. })
                && self.engine.is_original(c)
                && top.comp.cstrs.binary_search(&(c.index() as u32)).is_ok()
            {
                // The residual contains a falsified original constraint.
                let res = self.splitter.residual(&top.comp.vars, &top.comp.cstrs, &self.engine);
                let key = self.encoder.encode(&res, &self.formula, self.config.cache_saturation);
                self.cache.store(key, BigUint::zero());
            }
        }
        match self.engine.analyze(c) {
            Analysis::TopLevel => {
                self.cache.clear();
                self.frames.clear();
                Step::Done(BigUint::zero())
            }
            Analysis::Learned { constraint, backjump } => {
                self.stats.backjumps += 1;
                let i = self
                    .frames
                    .iter()
                    .position(|f| f.level > backjump || (f.level == backjump && matches!(f.kind, Kind::Branch { .. })))
                    .expect("a branch frame opened every level above the backjump target");
                if let Some(f) = self.frames[i..].iter().find(|f| matches!(f.kind, Kind::Product { .. })) {
                    self.cache.purge_since(f.mark);
                }
                let comp = std::mem::take(&mut self.frames[i].comp);
                self.frames.truncate(i);
                self.engine.backjump(backjump);
                obs.on_learned(&constraint, backjump, &self.engine);
                self.engine.add_learned(&constraint);
                match self.engine.propagate() {
                    Propagation::Done => Step::Eval(comp),
                    Propagation::Conflict(c) => Step::Conflict(c),
                }
            }
        }
    }
}

/// Counts the models of `f` over variables `1..=num_vars`.
pub fn count_pbmc(f: &PbFormula, config: &CountConfig) -> Result<BigUint, CountError> {
    Counter::new(f, config).run()
}

/// Counts several formulas, in parallel when `exec` allows it.
pub fn count_many(formulas: &[PbFormula], config: &CountConfig, exec: Exec) -> Vec<Result<BigUint, CountError>> {
    par::map(exec, formulas, |f| count_pbmc(f, config))
}
