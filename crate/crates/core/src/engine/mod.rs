//! Trail, counter-based propagation and learned-constraint storage.
//!
//! Each constraint keeps two running sums that are updated when a literal is
//! assigned or unassigned: the mass of its true literals (giving the gap) and
//! the mass of its non-false literals minus the degree (the slack). A
//! constraint only needs to be scanned when its slack drops below its
//! largest coefficient.

mod analysis;

pub use analysis::Analysis;

use crate::formula::{Lit, PbConstraint, PbFormula, Term, Valuation, Var};

/// Index of a constraint inside an [`Engine`]. Original constraints keep
/// the id they have in the formula; learned ones come after them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstraintRef(u32);

impl ConstraintRef {
    /// Reference to the original constraint with formula id `id`.
    pub fn original(id: usize) -> ConstraintRef {
        ConstraintRef(id as u32)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Propagation {
    Done,
    Conflict(ConstraintRef),
}

/// Values and bookkeeping of one trail entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrailEntry {
    pub lit: Lit,
    pub level: u32,
    /// `None` for decisions.
    pub reason: Option<ConstraintRef>,
}

#[derive(Clone, Debug)]
struct Stored {
    terms: Vec<Term>,
    degree: u64,
    max_coef: u64,
    learned: bool,
    activity: f64,
}

impl Stored {
    fn new(c: &PbConstraint, learned: bool) -> Stored {
        Stored {
            terms: c.terms().to_vec(),
            degree: c.degree(),
            max_coef: c.terms().iter().map(|t| t.coef).max().unwrap_or(0),
            learned,
            activity: 0.0,
        }
    }

    fn bytes(&self) -> usize {
        std::mem::size_of::<Stored>() + self.terms.len() * (std::mem::size_of::<Term>() + 2 * 12)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub propagations: u64,
    pub conflicts: u64,
    pub learned: u64,
    pub learned_removed: u64,
}

const VAR_DECAY: f64 = 0.98;
const CLA_DECAY: f64 = 0.999;
const RESCALE: f64 = 1e100;

pub struct Engine {
    num_vars: usize,
    num_original: usize,
    cs: Vec<Stored>,
    /// Per literal code: constraints containing that literal, with coefficient.
    occurs: Vec<Vec<(u32, u64)>>,
    slack: Vec<i64>,
    true_sum: Vec<i64>,

    value: Vec<Option<bool>>,
    level: Vec<u32>,
    reason: Vec<Option<ConstraintRef>>,
    trail_pos: Vec<u32>,
    trail: Vec<Lit>,
    /// Trail index at which each decision level >= 1 starts.
    level_start: Vec<usize>,
    qhead: usize,
    pending: Vec<u32>,

    var_activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    learned_cap: usize,
    learned_count: usize,
    learned_bytes: usize,
    stats: EngineStats,
    work: analysis::Work,
}

impl Engine {
    pub fn new(f: &PbFormula, learned_cap: usize) -> Engine {
        let n = f.num_vars() as usize;
        let mut e = Engine {
            num_vars: n,
            num_original: f.num_constraints(),
            cs: Vec::with_capacity(f.num_constraints()),
            occurs: vec![Vec::new(); 2 * n],
            slack: Vec::new(),
            true_sum: Vec::new(),
            value: vec![None; n],
            level: vec![0; n],
            reason: vec![None; n],
            trail_pos: vec![0; n],
            trail: Vec::with_capacity(n),
            level_start: Vec::new(),
            qhead: 0,
            pending: Vec::new(),
            var_activity: vec![0.0; n],
            var_inc: 1.0,
            cla_inc: 1.0,
            learned_cap: learned_cap.max(1),
            learned_count: 0,
            learned_bytes: 0,
            stats: EngineStats::default(),
            work: analysis::Work::new(n),
        };
        for c in f.constraints() {
            e.attach(Stored::new(c, false));
        }
        e
    }

    fn attach(&mut self, s: Stored) -> u32 {
        let id = self.cs.len() as u32;
        let mut open = 0i64;
        let mut true_sum = 0i64;
        for t in &s.terms {
            self.occurs[t.lit.code()].push((id, t.coef));
            match self.lit_val(t.lit) {
                Some(false) => {}
                Some(true) => {
                    open += t.coef as i64;
                    true_sum += t.coef as i64;
                }
                None => open += t.coef as i64,
            }
        }
        self.slack.push(open - s.degree as i64);
        self.true_sum.push(true_sum);
        self.pending.push(id);
        self.cs.push(s);
        id
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_original(&self) -> usize {
        self.num_original
    }

    pub fn num_learned(&self) -> usize {
        self.learned_count
    }

    pub fn is_original(&self, c: ConstraintRef) -> bool {
        c.index() < self.num_original
    }

    pub fn stats(&self) -> EngineStats {
        self.stats
    }

    /// Approximate heap usage of the constraint store and trail.
    pub fn approx_bytes(&self) -> usize {
        self.learned_bytes + self.num_vars * 64 + self.cs.len() * 24
    }

    pub fn decision_level(&self) -> u32 {
        self.level_start.len() as u32
    }

    pub fn trail(&self) -> &[Lit] {
        &self.trail
    }

    pub fn trail_entry(&self, i: usize) -> TrailEntry {
        let lit = self.trail[i];
        TrailEntry {
            lit,
            level: self.level[lit.var().index()],
            reason: self.reason[lit.var().index()],
        }
    }

    pub fn level_of(&self, var: Var) -> Option<u32> {
        self.value[var.index()].map(|_| self.level[var.index()])
    }

    /// The decision literal that opened `level` (1-based).
    pub fn decision_at(&self, level: u32) -> Lit {
        self.trail[self.level_start[level as usize - 1]]
    }

    /// Degree minus true mass of a constraint under the current trail.
    pub fn gap(&self, c: ConstraintRef) -> i64 {
        self.cs[c.index()].degree as i64 - self.true_sum[c.index()]
    }

    pub fn slack(&self, c: ConstraintRef) -> i64 {
        self.slack[c.index()]
    }

    pub fn constraint(&self, c: ConstraintRef) -> PbConstraint {
        let s = &self.cs[c.index()];
        PbConstraint::from_normalized(s.terms.clone(), s.degree)
    }

    pub fn var_activity(&self, var: Var) -> f64 {
        self.var_activity[var.index()]
    }

    pub fn learned_constraints(&self) -> impl Iterator<Item = PbConstraint> + '_ {
        self.cs[self.num_original..]
            .iter()
            .map(|s| PbConstraint::from_normalized(s.terms.clone(), s.degree))
    }

    fn lit_val(&self, lit: Lit) -> Option<bool> {
        self.value[lit.var().index()].map(|v| lit.eval(v))
    }

    fn assign(&mut self, lit: Lit, reason: Option<ConstraintRef>) {
        let v = lit.var().index();
        debug_assert!(self.value[v].is_none(), "{lit} assigned twice");
        self.value[v] = Some(!lit.is_negated());
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail_pos[v] = self.trail.len() as u32;
        self.trail.push(lit);
        for &(c, a) in &self.occurs[lit.code()] {
            self.true_sum[c as usize] += a as i64;
        }
        for &(c, a) in &self.occurs[(!lit).code()] {
            self.slack[c as usize] -= a as i64;
        }
    }

    /// Opens a new decision level and makes `lit` true.
    pub fn decide(&mut self, lit: Lit) {
        self.level_start.push(self.trail.len());
        self.assign(lit, None);
    }

    /// Undoes every assignment above `level`.
    pub fn backjump(&mut self, level: u32) {
        if level >= self.decision_level() {
            return;
        }
        let keep = self.level_start[level as usize];
        while self.trail.len() > keep {
            let lit = self.trail.pop().unwrap();
            self.value[lit.var().index()] = None;
            self.reason[lit.var().index()] = None;
            for &(c, a) in &self.occurs[lit.code()] {
                self.true_sum[c as usize] -= a as i64;
            }
            for &(c, a) in &self.occurs[(!lit).code()] {
                self.slack[c as usize] += a as i64;
            }
        }
        self.level_start.truncate(level as usize);
        self.qhead = self.trail.len();
        self.pending.clear();
    }

    /// Checks one constraint, assigning every literal it forces.
    fn check(&mut self, c: u32) -> Option<ConstraintRef> {
        let ci = c as usize;
        let slack = self.slack[ci];
        if slack < 0 {
            return Some(ConstraintRef(c));
        }
        if (slack as u64) >= self.cs[ci].max_coef {
            return None;
        }
        for i in 0..self.cs[ci].terms.len() {
            let t = self.cs[ci].terms[i];
            if t.coef as i64 > slack && self.lit_val(t.lit).is_none() {
                self.stats.propagations += 1;
                self.assign(t.lit, Some(ConstraintRef(c)));
            }
        }
        None
    }

    /// Runs unit propagation to a fixpoint or the first conflict.
    pub fn propagate(&mut self) -> Propagation {
        loop {
            while let Some(c) = self.pending.pop() {
                if let Some(conflict) = self.check(c) {
                    self.pending.clear();
                    self.stats.conflicts += 1;
                    return Propagation::Conflict(conflict);
                }
            }
            if self.qhead == self.trail.len() {
                return Propagation::Done;
            }
            let falsified = !self.trail[self.qhead];
            self.qhead += 1;
            let mut i = 0;
            while i < self.occurs[falsified.code()].len() {
                let (c, _) = self.occurs[falsified.code()][i];
                if let Some(conflict) = self.check(c) {
                    self.stats.conflicts += 1;
                    return Propagation::Conflict(conflict);
                }
                i += 1;
            }
        }
    }

    /// Adds a learned constraint and queues it for propagation. It must not
    /// be falsified by the current trail. Returns its reference and the
    /// number of literals it forced right away.
    pub fn add_learned(&mut self, c: &PbConstraint) -> (ConstraintRef, usize) {
        if self.learned_count >= self.learned_cap {
            self.reduce_learned();
        }
        let mut s = Stored::new(c, true);
        s.activity = self.cla_inc;
        self.learned_bytes += s.bytes();
        self.learned_count += 1;
        self.stats.learned += 1;
        let id = self.attach(s);
        self.pending.pop();
        debug_assert!(self.slack[id as usize] >= 0, "learned constraint is falsified");
        let before = self.trail.len();
        let conflict = self.check(id);
        debug_assert!(conflict.is_none());
        (ConstraintRef(id), self.trail.len() - before)
    }

    fn bump_constraint(&mut self, c: ConstraintRef) {
        let s = &mut self.cs[c.index()];
        if !s.learned {
            return;
        }
        s.activity += self.cla_inc;
        if s.activity > RESCALE {
            for s in &mut self.cs[self.num_original..] {
                s.activity /= RESCALE;
            }
            self.cla_inc /= RESCALE;
        }
    }

    fn bump_var(&mut self, v: Var) {
        let a = &mut self.var_activity[v.index()];
        *a += self.var_inc;
        if *a > RESCALE {
            for a in &mut self.var_activity {
                *a /= RESCALE;
            }
            self.var_inc /= RESCALE;
        }
    }

    fn decay_activities(&mut self) {
        self.var_inc /= VAR_DECAY;
        self.cla_inc /= CLA_DECAY;
    }

    /// Drops the less active half of the learned constraints that are not
    /// currently the reason of a trail literal, then rebuilds occurrence lists.
    fn reduce_learned(&mut self) {
        let mut locked = vec![false; self.cs.len()];
        for lit in &self.trail {
            if let Some(r) = self.reason[lit.var().index()] {
                locked[r.index()] = true;
            }
        }
        let mut candidates: Vec<usize> = (self.num_original..self.cs.len()).filter(|&i| !locked[i]).collect();
        candidates.sort_by(|&a, &b| self.cs[a].activity.total_cmp(&self.cs[b].activity).then(a.cmp(&b)));
        let mut drop = vec![false; self.cs.len()];
        for &i in &candidates[..candidates.len().div_ceil(2)] {
            drop[i] = true;
        }

        let mut remap = vec![u32::MAX; self.cs.len()];
        let old = std::mem::take(&mut self.cs);
        let old_slack = std::mem::take(&mut self.slack);
        let old_true = std::mem::take(&mut self.true_sum);
        for (i, s) in old.into_iter().enumerate() {
            if drop[i] {
                self.learned_bytes -= s.bytes();
                self.learned_count -= 1;
                self.stats.learned_removed += 1;
                continue;
            }
            remap[i] = self.cs.len() as u32;
            self.cs.push(s);
            self.slack.push(old_slack[i]);
            self.true_sum.push(old_true[i]);
        }
        for occ in &mut self.occurs {
            occ.clear();
        }
        for (i, s) in self.cs.iter().enumerate() {
            for t in &s.terms {
                self.occurs[t.lit.code()].push((i as u32, t.coef));
            }
        }
        for lit in &self.trail {
            let r = &mut self.reason[lit.var().index()];
            if let Some(c) = *r {
                *r = Some(ConstraintRef(remap[c.index()]));
            }
        }
        self.pending.clear();
    }
}

impl Valuation for Engine {
    fn value(&self, var: Var) -> Option<bool> {
        self.value[var.index()]
    }
}
