//! Residual components: splitting, canonical keys and the count cache.

mod cache;
mod key;

pub use cache::{CacheMark, CacheMode, CacheStats, CountCache};
pub use key::{encode_component, saturate_gap, CacheKey, DecodedKey, KeyEncoder};

use crate::formula::{PbFormula, Valuation, Var};

/// A set of unassigned variables together with the active constraints
/// (positive gap) that live on them.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Component {
    /// Ascending.
    pub vars: Vec<Var>,
    /// Constraint ids, ascending.
    pub cstrs: Vec<u32>,
    /// Gap of each constraint in `cstrs`, all positive.
    pub gaps: Vec<u64>,
}

/// What the splitter needs from a search state: variable values and the gap
/// of each original constraint.
pub trait ResidualState: Valuation {
    fn gap(&self, cstr: usize) -> i64;
}

/// Computes gaps directly from an assignment. Slow but independent of the
/// engine's incremental counters.
pub struct AssignmentView<'a, V: Valuation> {
    pub formula: &'a PbFormula,
    pub sigma: &'a V,
}

impl<V: Valuation> Valuation for AssignmentView<'_, V> {
    fn value(&self, var: Var) -> Option<bool> {
        self.sigma.value(var)
    }
}

impl<V: Valuation> ResidualState for AssignmentView<'_, V> {
    fn gap(&self, cstr: usize) -> i64 {
        self.formula.constraint(cstr).gap(self.sigma)
    }
}

impl ResidualState for crate::engine::Engine {
    fn gap(&self, cstr: usize) -> i64 {
        crate::engine::Engine::gap(self, crate::engine::ConstraintRef::original(cstr))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Split {
    /// Ordered by smallest variable.
    pub components: Vec<Component>,
    /// Unassigned variables that occur in no active constraint.
    pub free: Vec<Var>,
}

/// Union-find based component splitting with reusable scratch space.
#[derive(Clone, Debug, Default)]
pub struct Splitter {
    local: Vec<u32>,
    stamp: Vec<u32>,
    epoch: u32,
    parent: Vec<u32>,
    covered: Vec<bool>,
    group: Vec<u32>,
}

impl Splitter {
    pub fn new(num_vars: u32) -> Splitter {
        Splitter {
            local: vec![0; num_vars as usize],
            stamp: vec![0; num_vars as usize],
            ..Splitter::default()
        }
    }

    fn find(&mut self, mut i: u32) -> u32 {
        while self.parent[i as usize] != i {
            let p = self.parent[i as usize];
            self.parent[i as usize] = self.parent[p as usize];
            i = p;
        }
        i
    }

    /// The unassigned variables of `vars` and the constraints of `cstrs` that
    /// are still active under `state`.
    pub fn residual(&self, vars: &[Var], cstrs: &[u32], state: &impl ResidualState) -> Component {
        let vars: Vec<Var> = vars.iter().copied().filter(|&v| state.value(v).is_none()).collect();
        let mut kept = Vec::with_capacity(cstrs.len());
        let mut gaps = Vec::with_capacity(cstrs.len());
        for &c in cstrs {
            let g = state.gap(c as usize);
            if g > 0 {
                kept.push(c);
                gaps.push(g as u64);
            }
        }
        Component {
            vars,
            cstrs: kept,
            gaps,
        }
    }

    /// Partitions a residual component into connected components of the
    /// variable/constraint incidence graph, plus the free variables.
    ///
    /// Every active constraint must have an unassigned variable in `comp.vars`.
    pub fn split(&mut self, comp: &Component, formula: &PbFormula, state: &impl ResidualState) -> Split {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        let n = comp.vars.len();
        self.parent.clear();
        self.parent.extend(0..n as u32);
        self.covered.clear();
        self.covered.resize(n, false);
        for (i, v) in comp.vars.iter().enumerate() {
            self.local[v.index()] = i as u32;
            self.stamp[v.index()] = self.epoch;
        }

        let mut anchors = Vec::with_capacity(comp.cstrs.len());
        for &c in &comp.cstrs {
            let mut anchor = None;
            for t in formula.constraint(c as usize).terms() {
                let v = t.lit.var();
                if state.value(v).is_some() {
                    continue;
                }
                debug_assert_eq!(
                    self.stamp[v.index()],
                    self.epoch,
                    "{v} is unassigned but outside the component"
                );
                let i = self.local[v.index()];
                self.covered[i as usize] = true;
                match anchor {
                    None => anchor = Some(i),
                    Some(a) => {
                        let (ra, ri) = (self.find(a), self.find(i));
                        if ra != ri {
                            self.parent[ra.max(ri) as usize] = ra.min(ri);
                        }
                    }
                }
            }
            debug_assert!(anchor.is_some(), "active constraint {c} has no unassigned variable");
            anchors.push(anchor.unwrap_or(0));
        }

        let mut split = Split::default();
        self.group.clear();
        self.group.resize(n, u32::MAX);
        for i in 0..n {
            if !self.covered[i] {
                split.free.push(comp.vars[i]);
                continue;
            }
            let r = self.find(i as u32) as usize;
            if self.group[r] == u32::MAX {
                self.group[r] = split.components.len() as u32;
                split.components.push(Component::default());
            }
            split.components[self.group[r] as usize].vars.push(comp.vars[i]);
        }
        for (j, &c) in comp.cstrs.iter().enumerate() {
            let r = self.find(anchors[j]) as usize;
            let target = &mut split.components[self.group[r] as usize];
            target.cstrs.push(c);
            target.gaps.push(comp.gaps[j]);
        }
        split
    }
}

/// One-shot split of the residual of `vars`/`cstrs` under an assignment.
pub fn split_component(vars: &[Var], cstrs: &[u32], formula: &PbFormula, sigma: &impl Valuation) -> Split {
    let view = AssignmentView { formula, sigma };
    let mut splitter = Splitter::new(formula.num_vars());
    let residual = splitter.residual(vars, cstrs, &view);
    splitter.split(&residual, formula, &view)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_opb, Assignment};

    #[test]
    fn splits_disjoint_constraints() {
        let f = parse_opb("+1 x1 +1 x2 >= 1 ;\n+1 x3 +1 x4 >= 1 ;\n").unwrap().formula;
        let vars: Vec<Var> = f.vars().collect();
        let s = split_component(&vars, &[0, 1], &f, &Assignment::new(4));
        assert_eq!(s.components.len(), 2);
        assert_eq!(s.components[0].vars, vec![Var::new(1), Var::new(2)]);
        assert_eq!(s.components[1].cstrs, vec![1]);
        assert!(s.free.is_empty());
    }

    #[test]
    fn satisfied_constraints_drop_out() {
        let f = parse_opb("* #variable= 5 #constraint= 2\n+1 x1 +1 x2 +1 x3 >= 1 ;\n+1 x3 +1 x4 >= 1 ;\n")
            .unwrap()
            .formula;
        let vars: Vec<Var> = f.vars().collect();
        let mut a = Assignment::new(5);
        a.set(Var::new(3), true);
        let s = split_component(&vars, &[0, 1], &f, &a);
        assert!(s.components.is_empty());
        assert_eq!(s.free, vec![Var::new(1), Var::new(2), Var::new(4), Var::new(5)]);
    }

    #[test]
    fn shared_variable_joins() {
        let f = parse_opb("+1 x1 +1 x2 >= 1 ;\n+1 x2 +1 x3 >= 1 ;\n+2 x4 +1 x5 >= 2 ;\n")
            .unwrap()
            .formula;
        let vars: Vec<Var> = f.vars().collect();
        let s = split_component(&vars, &[0, 1, 2], &f, &Assignment::new(5));
        assert_eq!(s.components.len(), 2);
        assert_eq!(s.components[0].cstrs, vec![0, 1]);
        assert_eq!(s.components[1].gaps, vec![2]);
        let mut a = Assignment::new(5);
        a.set(Var::new(2), false);
        let s = split_component(&vars, &[0, 1, 2], &f, &a);
        assert_eq!(s.components.len(), 3);
    }
}
