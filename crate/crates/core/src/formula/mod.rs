//! Pseudo-Boolean formulas in normalized `>=` form.
//!
//! Every stored constraint has the shape `sum a_i * l_i >= k` with `a_i > 0`,
//! at most one term per variable, saturated coefficients (`a_i <= k`) and
//! `k >= 1`. Constraints that normalize to something trivially true are not
//! stored; constraints that can never hold only raise the formula-level
//! `unsat` flag.

mod opb;

pub use opb::{emit_opb, parse_opb, parse_opb_raw, ParseError, ParseErrorKind, ParsedOpb, RawConstraint, RawOpb};

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Not;

use thiserror::Error;

/// A Boolean variable. Ids are 1-based, as in OPB.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u32);

impl Var {
    pub fn new(id: u32) -> Var {
        assert!(id >= 1, "variable ids start at 1");
        Var(id)
    }

    pub fn from_index(index: usize) -> Var {
        Var(index as u32 + 1)
    }

    pub fn id(self) -> u32 {
        self.0
    }

    /// Zero-based index, for dense per-variable arrays.
    pub fn index(self) -> usize {
        (self.0 - 1) as usize
    }

    pub fn positive(self) -> Lit {
        Lit::new(self, false)
    }

    pub fn negative(self) -> Lit {
        Lit::new(self, true)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// A variable or its negation, packed as `2 * index + negated`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, negated: bool) -> Lit {
        Lit(((var.0 - 1) << 1) | negated as u32)
    }

    pub fn from_code(code: usize) -> Lit {
        Lit(code as u32)
    }

    pub fn var(self) -> Var {
        Var((self.0 >> 1) + 1)
    }

    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    /// Dense index over both polarities.
    pub fn code(self) -> usize {
        self.0 as usize
    }

    /// The truth value of this literal when its variable takes `value`.
    pub fn eval(self, value: bool) -> bool {
        value != self.is_negated()
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_negated() {
            write!(f, "~{}", self.var())
        } else {
            write!(f, "{}", self.var())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub coef: u64,
    pub lit: Lit,
}

impl Term {
    pub fn new(coef: u64, lit: Lit) -> Term {
        Term { coef, lit }
    }
}

/// Anything that can report the (partial) value of a variable.
pub trait Valuation {
    fn value(&self, var: Var) -> Option<bool>;

    fn lit_value(&self, lit: Lit) -> Option<bool> {
        self.value(lit.var()).map(|v| lit.eval(v))
    }
}

/// A partial assignment with at most one value per variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment {
    values: Vec<Option<bool>>,
}

impl Assignment {
    pub fn new(num_vars: u32) -> Assignment {
        Assignment {
            values: vec![None; num_vars as usize],
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.values.len() as u32
    }

    pub fn set(&mut self, var: Var, value: bool) {
        self.values[var.index()] = Some(value);
    }

    /// Makes `lit` true.
    pub fn assign(&mut self, lit: Lit) {
        self.set(lit.var(), !lit.is_negated());
    }

    pub fn unset(&mut self, var: Var) {
        self.values[var.index()] = None;
    }

    pub fn get(&self, var: Var) -> Option<bool> {
        self.values[var.index()]
    }

    pub fn unassigned(&self) -> impl Iterator<Item = Var> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_none())
            .map(|(i, _)| Var::from_index(i))
    }
}

impl Valuation for Assignment {
    fn value(&self, var: Var) -> Option<bool> {
        self.values.get(var.index()).copied().flatten()
    }
}

/// A normalized `>=` constraint.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PbConstraint {
    terms: Vec<Term>,
    degree: u64,
}

impl PbConstraint {
    /// Builds a constraint from terms that already satisfy the normal-form
    /// invariants (positive, one term per variable, saturated, `degree >= 1`).
    ///
    /// Terms are sorted by variable. Panics if the invariants are violated.
    pub fn from_normalized(mut terms: Vec<Term>, degree: u64) -> PbConstraint {
        terms.sort_by_key(|t| t.lit.var());
        assert!(degree >= 1, "stored constraints have a positive degree");
        assert!(
            terms.windows(2).all(|w| w[0].lit.var() != w[1].lit.var()),
            "duplicate variable in constraint"
        );
        assert!(
            terms.iter().all(|t| t.coef >= 1 && t.coef <= degree),
            "unsaturated or zero coefficient"
        );
        let sum = terms
            .iter()
            .try_fold(0i64, |acc, t| acc.checked_add(i64::try_from(t.coef).ok()?));
        assert!(sum.is_some(), "coefficient sum exceeds the 64-bit range");
        PbConstraint { terms, degree }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn degree(&self) -> u64 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coef_sum(&self) -> u64 {
        self.terms.iter().map(|t| t.coef).sum()
    }

    /// An ordinary clause: degree 1, which after saturation forces every
    /// coefficient to 1.
    pub fn is_clausal(&self) -> bool {
        self.degree == 1
    }

    pub fn coef_of(&self, var: Var) -> Option<Term> {
        self.terms
            .binary_search_by_key(&var, |t| t.lit.var())
            .ok()
            .map(|i| self.terms[i])
    }

    /// Degree minus the coefficients of literals that are true under `sigma`.
    /// A value `<= 0` means the constraint holds whatever happens next.
    pub fn gap(&self, sigma: &impl Valuation) -> i64 {
        let true_sum: i64 = self
            .terms
            .iter()
            .filter(|t| sigma.lit_value(t.lit) == Some(true))
            .map(|t| t.coef as i64)
            .sum();
        self.degree as i64 - true_sum
    }

    /// Coefficients of literals that are not false under `sigma`, minus the
    /// degree. Negative iff no extension of `sigma` satisfies the constraint.
    pub fn slack(&self, sigma: &impl Valuation) -> i64 {
        let open_sum: i64 = self
            .terms
            .iter()
            .filter(|t| sigma.lit_value(t.lit) != Some(false))
            .map(|t| t.coef as i64)
            .sum();
        open_sum - self.degree as i64
    }

    /// Multiplies every coefficient and the degree by `factor`.
    pub fn scaled(&self, factor: u64) -> Option<PbConstraint> {
        let terms = self
            .terms
            .iter()
            .map(|t| Some(Term::new(t.coef.checked_mul(factor)?, t.lit)))
            .collect::<Option<Vec<_>>>()?;
        let degree = self.degree.checked_mul(factor)?;
        let sum = terms.iter().try_fold(0u64, |acc, t| acc.checked_add(t.coef))?;
        if sum > i64::MAX as u64 {
            return None;
        }
        Some(PbConstraint { terms, degree })
    }
}

impl fmt::Display for PbConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            write!(f, "+{} {} ", t.coef, t.lit)?;
        }
        write!(f, ">= {}", self.degree)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelOp {
    Ge,
    Eq,
    Le,
}

impl fmt::Display for RelOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelOp::Ge => ">=",
            RelOp::Eq => "=",
            RelOp::Le => "<=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error("coefficient or degree overflows the 64-bit range")]
    Overflow,
    #[error("variable {var} is out of range for a formula over {num_vars} variables")]
    VariableOutOfRange { var: u32, num_vars: u32 },
}

/// Result of normalizing one input constraint.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Normalized {
    /// Non-trivial `>=` constraints; an `=` input yields up to two.
    pub constraints: Vec<PbConstraint>,
    /// Set when some emitted constraint can never be satisfied
    /// (coefficient sum below the degree). Such constraints are not listed.
    pub unsatisfiable: bool,
}

/// Rewrites `sum a_i l_i <op> k` into normalized `>=` constraints.
pub fn normalize(raw_terms: &[(i64, Lit)], op: RelOp, degree: i64) -> Result<Normalized, NormalizeError> {
    let mut out = Normalized::default();
    let mut push = |geq: Option<PbConstraint>| match geq {
        Some(c) if c.coef_sum() < c.degree => out.unsatisfiable = true,
        Some(c) => out.constraints.push(c),
        None => {}
    };
    if matches!(op, RelOp::Ge | RelOp::Eq) {
        push(normalize_geq(
            raw_terms.iter().map(|&(a, l)| (a as i128, l)),
            degree as i128,
        )?);
    }
    if matches!(op, RelOp::Le | RelOp::Eq) {
        push(normalize_geq(
            raw_terms.iter().map(|&(a, l)| (-(a as i128), l)),
            -(degree as i128),
        )?);
    }
    Ok(out)
}

/// Returns `None` for a trivially true constraint. The returned constraint
/// may have a coefficient sum below its degree (never satisfiable).
fn normalize_geq(
    terms: impl Iterator<Item = (i128, Lit)>,
    degree: i128,
) -> Result<Option<PbConstraint>, NormalizeError> {
    // Coefficient of the positive literal of each variable; a * ~x = a - a * x.
    let mut by_var: BTreeMap<Var, i128> = BTreeMap::new();
    let mut degree = degree;
    for (a, lit) in terms {
        let entry = by_var.entry(lit.var()).or_insert(0);
        if lit.is_negated() {
            *entry -= a;
            degree -= a;
        } else {
            *entry += a;
        }
    }
    let mut merged = Vec::with_capacity(by_var.len());
    for (var, c) in by_var {
        match c {
            0 => {}
            c if c > 0 => merged.push((c, var.positive())),
            c => {
                // c * x = c + |c| * ~x
                degree -= c;
                merged.push((-c, var.negative()));
            }
        }
    }
    if degree <= 0 {
        return Ok(None);
    }
    if degree > i64::MAX as i128 {
        return Err(NormalizeError::Overflow);
    }
    let degree = degree as u64;
    let terms: Vec<Term> = merged
        .into_iter()
        .map(|(c, lit)| Term::new((c as u64).min(degree), lit))
        .collect();
    let sum: u128 = terms.iter().map(|t| t.coef as u128).sum();
    if sum > i64::MAX as u128 {
        return Err(NormalizeError::Overflow);
    }
    Ok(Some(PbConstraint { terms, degree }))
}

/// A conjunction of normalized constraints over variables `1..=num_vars`.
/// The id of a constraint is its index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PbFormula {
    num_vars: u32,
    constraints: Vec<PbConstraint>,
    unsat: bool,
}

impl PbFormula {
    pub fn new(num_vars: u32) -> PbFormula {
        PbFormula {
            num_vars,
            constraints: Vec::new(),
            unsat: false,
        }
    }

    /// Normalizes each raw `(terms, op, degree)` triple into a fresh formula.
    pub fn from_raw<'a>(
        num_vars: u32,
        raw: impl IntoIterator<Item = (&'a [(i64, Lit)], RelOp, i64)>,
    ) -> Result<PbFormula, NormalizeError> {
        let mut f = PbFormula::new(num_vars);
        for (terms, op, degree) in raw {
            f.add_normalized(normalize(terms, op, degree)?)?;
        }
        Ok(f)
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn constraints(&self) -> &[PbConstraint] {
        &self.constraints
    }

    pub fn constraint(&self, id: usize) -> &PbConstraint {
        &self.constraints[id]
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// True when normalization met a constraint that can never hold.
    pub fn is_unsat(&self) -> bool {
        self.unsat
    }

    pub fn mark_unsat(&mut self) {
        self.unsat = true;
    }

    pub fn push(&mut self, c: PbConstraint) -> Result<usize, NormalizeError> {
        if let Some(t) = c.terms.iter().find(|t| t.lit.var().id() > self.num_vars) {
            return Err(NormalizeError::VariableOutOfRange {
                var: t.lit.var().id(),
                num_vars: self.num_vars,
            });
        }
        self.constraints.push(c);
        Ok(self.constraints.len() - 1)
    }

    pub fn add_normalized(&mut self, n: Normalized) -> Result<(), NormalizeError> {
        self.unsat |= n.unsatisfiable;
        for c in n.constraints {
            self.push(c)?;
        }
        Ok(())
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> {
        (1..=self.num_vars).map(Var::new)
    }
}
