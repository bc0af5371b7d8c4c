//! Root-level simplification.

use std::collections::HashSet;

use crate::engine::{Engine, Propagation};
use crate::formula::{normalize, PbFormula, RelOp, Term, Valuation};

/// Propagates at the root and returns a formula with the same models:
/// one unit constraint per forced literal, followed by the remaining
/// constraints with assigned terms removed, satisfied ones dropped and
/// duplicates merged. A root conflict yields a formula flagged unsat.
pub fn preprocess(f: &PbFormula) -> PbFormula {
    let mut out = PbFormula::new(f.num_vars());
    if f.is_unsat() {
        out.mark_unsat();
        return out;
    }
    let mut engine = Engine::new(f, usize::MAX);
    if let Propagation::Conflict(_) = engine.propagate() {
        out.mark_unsat();
        return out;
    }
    let mut forced: Vec<_> = engine.trail().to_vec();
    forced.sort_by_key(|l| l.var());
    for lit in forced {
        let unit = crate::formula::PbConstraint::from_normalized(vec![Term::new(1, lit)], 1);
        out.push(unit).expect("forced literal is in range");
    }
    let mut seen = HashSet::new();
    for c in f.constraints() {
        let mut degree = c.degree() as i64;
        let mut terms = Vec::new();
        for t in c.terms() {
            match engine.lit_value(t.lit) {
                Some(true) => degree -= t.coef as i64,
                Some(false) => {}
                None => terms.push((t.coef as i64, t.lit)),
            }
        }
        let n = normalize(&terms, RelOp::Ge, degree).expect("simplification only shrinks constraints");
        debug_assert!(!n.unsatisfiable, "root propagation missed a conflict");
        for k in n.constraints {
            if seen.insert(k.clone()) {
                out.push(k).expect("same variables as the input");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_opb, Var};
    use crate::oracle::brute_count;

    #[test]
    fn forced_literals_become_units() {
        let f = parse_opb("+1 x1 >= 1 ;\n-1 x1 +1 x2 +1 x3 >= 0 ;\n+1 x2 +1 x3 +1 x4 >= 1 ;\n")
            .unwrap()
            .formula;
        let p = preprocess(&f);
        assert_eq!(p.constraints()[0].terms(), &[Term::new(1, Var::new(1).positive())]);
        // x1 forces x2 + x3 >= 1, which then subsumes nothing but stays.
        assert_eq!(brute_count(&p, 24), brute_count(&f, 24));
    }

    #[test]
    fn root_conflict_is_unsat() {
        let f = parse_opb("+1 x1 >= 1 ;\n+1 x1 <= 0 ;\n").unwrap().formula;
        assert!(preprocess(&f).is_unsat());
    }

    #[test]
    fn duplicates_merge() {
        let f = parse_opb("+1 x1 +1 x2 >= 1 ;\n+1 x2 +1 x1 >= 1 ;\n").unwrap().formula;
        assert_eq!(preprocess(&f).num_constraints(), 1);
    }
}
