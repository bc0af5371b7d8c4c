//! Exhaustive model counting by enumeration, used to check the counter.
//!
//! Nothing here shares code with the search: constraints are evaluated by
//! summing the coefficients of true literals under a total assignment.

use num_bigint::BigUint;
use thiserror::Error;

use crate::formula::{Assignment, PbConstraint, PbFormula, Valuation, Var};
use crate::par::{self, Exec};

/// Default refusal threshold for [`brute_count`].
pub const DEFAULT_VAR_LIMIT: u32 = 24;
/// Hard ceiling for [`bit_parallel_count`].
pub const BIT_PARALLEL_VAR_LIMIT: u32 = 36;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("refusing to enumerate {num_vars} variables (limit {limit})")]
    TooManyVariables { num_vars: u32, limit: u32 },
}

/// `(var index, negated, coef)`.
type FlatTerm = (usize, bool, u64);

/// Constraints flattened to term lists and degrees.
struct Flat {
    cs: Vec<(Vec<FlatTerm>, u64)>,
}

impl Flat {
    fn new(f: &PbFormula) -> Flat {
        Flat {
            cs: f
                .constraints()
                .iter()
                .map(|c| {
                    let terms = c
                        .terms()
                        .iter()
                        .map(|t| (t.lit.var().index(), t.lit.is_negated(), t.coef))
                        .collect();
                    (terms, c.degree())
                })
                .collect(),
        }
    }

    fn holds(&self, values: &[bool]) -> bool {
        self.cs.iter().all(|(terms, degree)| {
            let lhs: u64 = terms
                .iter()
                .filter(|&&(v, neg, _)| values[v] != neg)
                .map(|&(_, _, a)| a)
                .sum();
            lhs >= *degree
        })
    }
}

const CHUNK_BITS: u32 = 12;

/// Counts total extensions of `fixed` that satisfy `f`.
fn count_extensions(f: &PbFormula, fixed: &[Option<bool>], exec: Exec) -> u64 {
    if f.is_unsat() {
        return 0;
    }
    let flat = Flat::new(f);
    let free: Vec<usize> = (0..fixed.len()).filter(|&i| fixed[i].is_none()).collect();
    let k = free.len() as u32;
    let chunk_bits = k.min(CHUNK_BITS);
    let base: Vec<bool> = fixed.iter().map(|v| v.unwrap_or(false)).collect();
    par::sum_range(exec, 1u64 << (k - chunk_bits), |chunk| {
        let mut values = base.clone();
        let mut models = 0;
        for low in 0..1u64 << chunk_bits {
            let bits = (chunk << chunk_bits) | low;
            for (j, &v) in free.iter().enumerate() {
                values[v] = bits >> j & 1 == 1;
            }
            models += flat.holds(&values) as u64;
        }
        models
    })
}

/// Number of total assignments over `1..=num_vars` that satisfy `f`.
pub fn brute_count(f: &PbFormula, limit_vars: u32) -> Result<BigUint, OracleError> {
    brute_count_with(f, limit_vars, Exec::Parallel)
}

pub fn brute_count_with(f: &PbFormula, limit_vars: u32, exec: Exec) -> Result<BigUint, OracleError> {
    if f.num_vars() > limit_vars {
        return Err(OracleError::TooManyVariables {
            num_vars: f.num_vars(),
            limit: limit_vars,
        });
    }
    let fixed = vec![None; f.num_vars() as usize];
    Ok(BigUint::from(count_extensions(f, &fixed, exec)))
}

/// Number of models of `f` that agree with `sigma`.
pub fn brute_residual_count(f: &PbFormula, sigma: &Assignment, limit_vars: u32) -> Result<BigUint, OracleError> {
    let fixed: Vec<Option<bool>> = f.vars().map(|v| sigma.value(v)).collect();
    let free = fixed.iter().filter(|v| v.is_none()).count() as u32;
    if free > limit_vars {
        return Err(OracleError::TooManyVariables {
            num_vars: free,
            limit: limit_vars,
        });
    }
    Ok(BigUint::from(count_extensions(f, &fixed, Exec::Parallel)))
}

/// Number of assignments to `vars` that, together with `sigma`, satisfy
/// every constraint listed in `cstrs`. Variables outside `vars` that `sigma`
/// leaves open are read as false.
pub fn brute_component_count(
    f: &PbFormula,
    vars: &[Var],
    cstrs: &[u32],
    sigma: &impl Valuation,
    limit_vars: u32,
) -> Result<BigUint, OracleError> {
    if vars.len() as u32 > limit_vars {
        return Err(OracleError::TooManyVariables {
            num_vars: vars.len() as u32,
            limit: limit_vars,
        });
    }
    let mut values: Vec<bool> = f.vars().map(|v| sigma.value(v).unwrap_or(false)).collect();
    let mut sub = PbFormula::new(f.num_vars());
    for &c in cstrs {
        sub.push(f.constraint(c as usize).clone()).expect("same variables");
    }
    let flat = Flat::new(&sub);
    let mut models = 0u64;
    for bits in 0..1u64 << vars.len() {
        for (j, v) in vars.iter().enumerate() {
            values[v.index()] = bits >> j & 1 == 1;
        }
        models += flat.holds(&values) as u64;
    }
    Ok(BigUint::from(models))
}

/// Whether every model of `f` satisfies `c`.
pub fn implies(f: &PbFormula, c: &PbConstraint, limit_vars: u32) -> Result<bool, OracleError> {
    let mut both = f.clone();
    both.push(c.clone()).expect("constraint over the formula's variables");
    Ok(brute_count(f, limit_vars)? == brute_count(&both, limit_vars)?)
}

/// Whether `c` is not falsified under `sigma` and forces at least one of its
/// open literals.
pub fn propagates(c: &PbConstraint, sigma: &impl Valuation) -> bool {
    let value = |t: &crate::formula::Term| sigma.value(t.lit.var()).map(|b| b != t.lit.is_negated());
    let open_sum: i128 = c
        .terms()
        .iter()
        .filter(|t| value(t) != Some(false))
        .map(|t| t.coef as i128)
        .sum();
    let slack = open_sum - c.degree() as i128;
    slack >= 0 && c.terms().iter().any(|t| value(t).is_none() && t.coef as i128 > slack)
}

const LANE_BITS: u32 = 6;

/// Enumeration with the lowest six variables packed into the 64 bits of a
/// word and the rest visited in Gray-code order, so each step updates the
/// partial sums of only one variable. Usable up to about 2^32 assignments.
pub fn bit_parallel_count(f: &PbFormula, exec: Exec) -> Result<BigUint, OracleError> {
    let n = f.num_vars();
    if n > BIT_PARALLEL_VAR_LIMIT {
        return Err(OracleError::TooManyVariables {
            num_vars: n,
            limit: BIT_PARALLEL_VAR_LIMIT,
        });
    }
    if f.is_unsat() {
        return Ok(BigUint::from(0u32));
    }
    let lane_bits = n.min(LANE_BITS);
    let lanes = 1usize << lane_bits;
    let all_lanes: u64 = if lanes == 64 { u64::MAX } else { (1u64 << lanes) - 1 };
    let high = n - lane_bits;

    struct Prepared {
        degree: i64,
        /// Sum over high negated literals: their contribution when all high vars are false.
        high_base: i64,
        /// Distinct low-part sums, ascending, with the mask of lanes reaching each.
        values: Vec<i64>,
        masks_ge: Vec<u64>,
    }
    // Per high variable: (constraint, change in high sum when the variable becomes true).
    let mut flips: Vec<Vec<(usize, i64)>> = vec![Vec::new(); high as usize];
    let mut prepared = Vec::with_capacity(f.num_constraints());
    for (j, c) in f.constraints().iter().enumerate() {
        let mut low = vec![0i64; lanes];
        let mut high_base = 0;
        for t in c.terms() {
            let v = t.lit.var().index();
            let a = t.coef as i64;
            if (v as u32) < lane_bits {
                for (lane, sum) in low.iter_mut().enumerate() {
                    if (lane >> v & 1 == 1) != t.lit.is_negated() {
                        *sum += a;
                    }
                }
            } else if t.lit.is_negated() {
                high_base += a;
                flips[v - lane_bits as usize].push((j, -a));
            } else {
                flips[v - lane_bits as usize].push((j, a));
            }
        }
        let mut values = low.clone();
        values.sort_unstable();
        values.dedup();
        let masks_ge = values
            .iter()
            .map(|&val| {
                low.iter()
                    .enumerate()
                    .filter(|&(_, &s)| s >= val)
                    .fold(0u64, |m, (lane, _)| m | 1 << lane)
            })
            .collect();
        prepared.push(Prepared {
            degree: c.degree() as i64,
            high_base,
            values,
            masks_ge,
        });
    }

    let chunk_bits = high.min(10);
    let per_chunk_bits = high - chunk_bits;
    let total = par::sum_range(exec, 1u64 << chunk_bits, |chunk| {
        let start = chunk << per_chunk_bits;
        let gray = start ^ (start >> 1);
        let mut sums: Vec<i64> = prepared.iter().map(|p| p.high_base).collect();
        for (h, fl) in flips.iter().enumerate() {
            if gray >> h & 1 == 1 {
                for &(j, d) in fl {
                    sums[j] += d;
                }
            }
        }
        let mut state = gray;
        let mut models = 0u64;
        for i in start..start + (1u64 << per_chunk_bits) {
            if i != start {
                let h = i.trailing_zeros() as usize;
                state ^= 1 << h;
                let sign = if state >> h & 1 == 1 { 1 } else { -1 };
                for &(j, d) in &flips[h] {
                    sums[j] += sign * d;
                }
            }
            let mut mask = all_lanes;
            for (p, &s) in prepared.iter().zip(&sums) {
                let need = p.degree - s;
                if need <= 0 {
                    continue;
                }
                let idx = p.values.partition_point(|&v| v < need);
                mask &= p.masks_ge.get(idx).copied().unwrap_or(0);
                if mask == 0 {
                    break;
                }
            }
            models += mask.count_ones() as u64;
        }
        models
    });
    Ok(BigUint::from(total))
}
