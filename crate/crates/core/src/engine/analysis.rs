//! Conflict analysis by cutting-planes resolution with division.
//!
//! The working constraint starts as the conflicting one and is combined with
//! reasons of trail literals, latest first. Before a reason with propagating
//! coefficient `c > 1` is added, its non-falsified literals whose
//! coefficient is not a multiple of `c` are weakened away and the rest is
//! divided by `c` (rounding up), so the propagated literal cancels exactly.
//! The working constraint stays falsified by the part of the trail that has
//! not been resolved yet.

use super::{ConstraintRef, Engine};
use crate::formula::{Lit, PbConstraint, Term, Var};

/// Coefficients and degree above this make the analysis fall back to a
/// clause over the current decisions.
const COEF_LIMIT: u128 = 1 << 40;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Analysis {
    /// The conflict does not depend on any decision: the formula is unsatisfiable.
    TopLevel,
    /// A constraint implied by the formula that propagates at `backjump`.
    Learned { constraint: PbConstraint, backjump: u32 },
}

/// Dense scratch copy of the working constraint.
#[derive(Clone, Debug, Default)]
pub(super) struct Work {
    coef: Vec<u128>,
    negated: Vec<bool>,
    vars: Vec<usize>,
    listed: Vec<bool>,
    degree: i128,
}

impl Work {
    pub(super) fn new(num_vars: usize) -> Work {
        Work {
            coef: vec![0; num_vars],
            negated: vec![false; num_vars],
            vars: Vec::new(),
            listed: vec![false; num_vars],
            degree: 0,
        }
    }

    fn clear(&mut self) {
        for &v in &self.vars {
            self.coef[v] = 0;
            self.listed[v] = false;
        }
        self.vars.clear();
        self.degree = 0;
    }

    /// Adds `coef * lit`, cancelling against an opposite literal.
    fn add(&mut self, coef: u128, lit: Lit) {
        let v = lit.var().index();
        if !self.listed[v] {
            self.listed[v] = true;
            self.vars.push(v);
        }
        let have = self.coef[v];
        if have == 0 || self.negated[v] == lit.is_negated() {
            self.coef[v] = have + coef;
            self.negated[v] = lit.is_negated();
        } else {
            let cancelled = have.min(coef);
            self.degree -= cancelled as i128;
            if coef > have {
                self.coef[v] = coef - have;
                self.negated[v] = lit.is_negated();
            } else {
                self.coef[v] = have - coef;
            }
        }
    }

    fn coef_of(&self, lit: Lit) -> u128 {
        let v = lit.var().index();
        if self.negated[v] == lit.is_negated() {
            self.coef[v]
        } else {
            0
        }
    }

    fn lit(&self, v: usize) -> Lit {
        Lit::new(Var::from_index(v), self.negated[v])
    }

    fn saturate(&mut self) {
        let d = self.degree.max(0) as u128;
        for &v in &self.vars {
            self.coef[v] = self.coef[v].min(d);
        }
    }

    fn too_large(&self) -> bool {
        let sum: u128 = self.vars.iter().map(|&v| self.coef[v]).sum();
        self.degree > COEF_LIMIT as i128 || sum > COEF_LIMIT << 20
    }

    fn to_constraint(&self) -> PbConstraint {
        let mut vars = self.vars.clone();
        vars.sort_unstable();
        let terms = vars
            .into_iter()
            .filter(|&v| self.coef[v] > 0)
            .map(|v| Term::new(self.coef[v] as u64, self.lit(v)))
            .collect();
        PbConstraint::from_normalized(terms, self.degree as u64)
    }
}

impl Engine {
    /// Value of `lit` restricted to the first `prefix` trail entries.
    fn prefix_level(&self, v: usize, prefix: usize) -> Option<u32> {
        match self.value[v] {
            Some(_) if (self.trail_pos[v] as usize) < prefix => Some(self.level[v]),
            _ => None,
        }
    }

    fn prefix_false(&self, lit: Lit, prefix: usize) -> Option<u32> {
        let v = lit.var().index();
        let level = self.prefix_level(v, prefix)?;
        (self.value[v] == Some(lit.is_negated())).then_some(level)
    }

    /// Smallest level at which the working constraint is already falsified,
    /// looking only at the first `prefix` trail entries.
    fn work_conflict_level(&self, prefix: usize) -> Option<u32> {
        let w = &self.work;
        let mut open: i128 = w.vars.iter().map(|&v| w.coef[v] as i128).sum::<i128>() - w.degree;
        if open < 0 {
            return Some(0);
        }
        let mut falses: Vec<(u32, u128)> = w
            .vars
            .iter()
            .filter(|&&v| w.coef[v] > 0)
            .filter_map(|&v| self.prefix_false(w.lit(v), prefix).map(|l| (l, w.coef[v])))
            .collect();
        falses.sort_unstable();
        for (level, coef) in falses {
            open -= coef as i128;
            if open < 0 {
                return Some(level);
            }
        }
        None
    }

    /// Smallest level below `conflict_level` at which the working constraint
    /// propagates some literal, if any.
    fn work_assertion_level(&self, conflict_level: u32, prefix: usize) -> Option<u32> {
        let w = &self.work;
        let mut slack: i128 = w.vars.iter().map(|&v| w.coef[v] as i128).sum::<i128>() - w.degree;
        // (assignment level or MAX, coefficient, is false)
        let mut entries: Vec<(u32, u128, bool)> = w
            .vars
            .iter()
            .filter(|&&v| w.coef[v] > 0)
            .map(|&v| {
                let level = self.prefix_level(v, prefix).unwrap_or(u32::MAX);
                let is_false = self.prefix_false(w.lit(v), prefix).is_some();
                (level, w.coef[v], is_false)
            })
            .collect();
        entries.sort_unstable();
        let mut suffix_max = vec![0u128; entries.len() + 1];
        for i in (0..entries.len()).rev() {
            suffix_max[i] = suffix_max[i + 1].max(entries[i].1);
        }
        let mut next = 0;
        for level in 0..conflict_level {
            while next < entries.len() && entries[next].0 <= level {
                if entries[next].2 {
                    slack -= entries[next].1 as i128;
                }
                next += 1;
            }
            debug_assert!(slack >= 0);
            if suffix_max[next] as i128 > slack {
                return Some(level);
            }
        }
        None
    }

    /// Learns from the conflict on `conflict`. The trail is left untouched;
    /// callers backjump to the returned level and add the constraint.
    pub fn analyze(&mut self, conflict: ConstraintRef) -> Analysis {
        if self.decision_level() == 0 {
            return Analysis::TopLevel;
        }
        let mut work = std::mem::take(&mut self.work);
        work.clear();
        for t in &self.cs[conflict.index()].terms {
            work.add(t.coef as u128, t.lit);
        }
        work.degree = self.cs[conflict.index()].degree as i128;
        self.work = work;
        self.bump_constraint(conflict);
        self.bump_work_vars();

        let result = self.resolve_loop();
        self.decay_activities();
        result.unwrap_or_else(|| self.decision_clause())
    }

    fn bump_work_vars(&mut self) {
        for i in 0..self.work.vars.len() {
            let v = self.work.vars[i];
            if self.work.coef[v] > 0 {
                self.bump_var(Var::from_index(v));
            }
        }
    }

    /// `None` means the fallback clause should be learned instead.
    fn resolve_loop(&mut self) -> Option<Analysis> {
        let mut prefix = self.trail.len();
        loop {
            let d = self.work_conflict_level(prefix)?;
            if d == 0 {
                return Some(Analysis::TopLevel);
            }
            if let Some(backjump) = self.work_assertion_level(d, prefix) {
                return Some(Analysis::Learned {
                    constraint: self.work.to_constraint(),
                    backjump,
                });
            }
            // Literals above the conflict level play no part any more.
            if (d as usize) < self.level_start.len() {
                prefix = prefix.min(self.level_start[d as usize]);
            }
            let pivot = loop {
                if prefix == 0 {
                    return None;
                }
                prefix -= 1;
                let lit = self.trail[prefix];
                if self.work.coef_of(!lit) > 0 {
                    break lit;
                }
            };
            let reason = self.reason[pivot.var().index()]?;
            self.bump_constraint(reason);
            self.resolve(pivot, reason, prefix);
            if self.work.too_large() {
                return None;
            }
        }
    }

    /// Adds the weakened and divided reason of `pivot` (trail position
    /// `pos`) to the working constraint so that `pivot` cancels.
    fn resolve(&mut self, pivot: Lit, reason: ConstraintRef, pos: usize) {
        let r = &self.cs[reason.index()];
        let c = r
            .terms
            .iter()
            .find(|t| t.lit == pivot)
            .expect("reason contains its literal")
            .coef as u128;
        let mut degree = r.degree as i128;
        let mut terms: Vec<(u128, Lit)> = Vec::with_capacity(r.terms.len());
        for t in &r.terms {
            let a = t.coef as u128;
            if c > 1 && t.lit != pivot && !a.is_multiple_of(c) && self.prefix_false(t.lit, pos).is_none() {
                degree -= a as i128;
            } else {
                terms.push((a, t.lit));
            }
        }
        if c > 1 {
            for t in &mut terms {
                t.0 = t.0.div_ceil(c);
            }
            degree = (degree + c as i128 - 1).div_euclid(c as i128);
        }
        let k = self.work.coef_of(!pivot);
        for (a, lit) in terms {
            self.work.add(k * a, lit);
            self.bump_var(lit.var());
        }
        self.work.degree += k as i128 * degree;
        self.work.saturate();
    }

    /// `sum of negated decisions >= 1`, asserting one level up.
    fn decision_clause(&self) -> Analysis {
        let level = self.decision_level();
        let terms = (1..=level).map(|l| Term::new(1, !self.decision_at(l))).collect();
        Analysis::Learned {
            constraint: PbConstraint::from_normalized(terms, 1),
            backjump: level - 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Propagation;
    use crate::formula::{PbFormula, RelOp, Valuation};

    fn x(i: u32) -> Lit {
        Var::new(i).positive()
    }

    fn implies(f: &PbFormula, c: &PbConstraint) -> bool {
        let n = f.num_vars();
        (0u32..1 << n).all(|bits| {
            let mut a = crate::formula::Assignment::new(n);
            for v in 1..=n {
                a.set(Var::new(v), bits >> (v - 1) & 1 == 1);
            }
            !f.constraints().iter().all(|k| k.slack(&a) >= 0) || c.slack(&a) >= 0
        })
    }

    #[test]
    fn learns_implied_asserting_constraint() {
        // x1 + x2 >= 1, x1 + ~x2 >= 1: deciding ~x1 conflicts, x1 is implied.
        let f = PbFormula::from_raw(
            3,
            [
                (&[(1, x(1)), (1, x(2))][..], RelOp::Ge, 1),
                (&[(1, x(1)), (-1, x(2))][..], RelOp::Ge, 0),
            ],
        )
        .unwrap();
        let mut e = Engine::new(&f, 100);
        assert_eq!(e.propagate(), Propagation::Done);
        e.decide(x(3));
        assert_eq!(e.propagate(), Propagation::Done);
        e.decide(!x(1));
        let Propagation::Conflict(c) = e.propagate() else {
            panic!("expected a conflict")
        };
        let Analysis::Learned { constraint, backjump } = e.analyze(c) else {
            panic!("expected a learned constraint")
        };
        assert!(implies(&f, &constraint));
        assert_eq!(backjump, 0);
        e.backjump(backjump);
        let (_, implied) = e.add_learned(&constraint);
        assert!(implied >= 1);
        assert_eq!(e.value(Var::new(1)), Some(true));
    }

    #[test]
    fn pb_reasons_are_divided() {
        // 3 x1 + 3 x2 + 2 x3 >= 5 and 2 ~x1 + 2 ~x2 + x4 >= 3.
        let f = PbFormula::from_raw(
            4,
            [
                (&[(3, x(1)), (3, x(2)), (2, x(3))][..], RelOp::Ge, 5),
                (&[(-2, x(1)), (-2, x(2)), (1, x(4))][..], RelOp::Ge, -1),
            ],
        )
        .unwrap();
        let mut e = Engine::new(&f, 100);
        assert_eq!(e.propagate(), Propagation::Done);
        e.decide(!x(3));
        let r = e.propagate();
        if let Propagation::Conflict(c) = r {
            match e.analyze(c) {
                Analysis::Learned { constraint, backjump } => {
                    assert!(implies(&f, &constraint));
                    assert_eq!(backjump, 0);
                }
                Analysis::TopLevel => panic!("conflict depends on ~x3"),
            }
        } else {
            // ~x3 forces x1, x2 which forces ~x1 or ~x2: must conflict.
            panic!("expected a conflict, got {r:?}");
        }
    }

    #[test]
    fn top_level_conflict() {
        let f = PbFormula::from_raw(1, [(&[(1, x(1))][..], RelOp::Ge, 1), (&[(1, x(1))][..], RelOp::Le, 0)]).unwrap();
        let mut e = Engine::new(&f, 100);
        let Propagation::Conflict(c) = e.propagate() else {
            panic!()
        };
        assert_eq!(e.analyze(c), Analysis::TopLevel);
    }
}
