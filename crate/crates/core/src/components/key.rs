//! Canonical byte keys for residual components.
//!
//! Layout, every number an unsigned LEB128 varint:
//! `#vars, first var, deltas..., #cstrs, first id, deltas..., gaps...`
//! where the gap list holds `saturated gap - 1` for each non-clausal
//! constraint in id order. Clausal constraints always have gap 1 in an
//! active component, so their gap is left out.

use std::fmt;

use super::Component;
use crate::formula::{PbFormula, Var};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheKey(Box<[u8]>);

impl CacheKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Reconstructs the variables, constraint ids and (saturated) gaps.
    pub fn decode(&self, formula: &PbFormula) -> Option<DecodedKey> {
        let mut r = Reader { bytes: &self.0, pos: 0 };
        let vars = r
            .sorted_list()?
            .into_iter()
            .map(|v| Var::new(v as u32))
            .collect::<Vec<_>>();
        let cstrs = r.sorted_list()?.into_iter().map(|c| c as u32).collect::<Vec<_>>();
        let mut gaps = Vec::with_capacity(cstrs.len());
        for &c in &cstrs {
            if formula.constraints().get(c as usize)?.is_clausal() {
                gaps.push(1);
            } else {
                gaps.push(r.varint()?.checked_add(1)?);
            }
        }
        (r.pos == r.bytes.len()).then_some(DecodedKey { vars, cstrs, gaps })
    }
}

impl fmt::Debug for CacheKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CacheKey(")?;
        for b in self.0.iter() {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodedKey {
    pub vars: Vec<Var>,
    pub cstrs: Vec<u32>,
    pub gaps: Vec<u64>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn varint(&mut self) -> Option<u64> {
        let mut value = 0u64;
        for shift in (0..64).step_by(7) {
            let b = *self.bytes.get(self.pos)?;
            self.pos += 1;
            value |= ((b & 0x7f) as u64).checked_shl(shift)?;
            if b & 0x80 == 0 {
                return Some(value);
            }
        }
        None
    }

    fn sorted_list(&mut self) -> Option<Vec<u64>> {
        let n = self.varint()? as usize;
        let mut out = Vec::with_capacity(n.min(self.bytes.len()));
        let mut prev = 0u64;
        for i in 0..n {
            let d = self.varint()?;
            prev = if i == 0 { d } else { prev.checked_add(d)? };
            out.push(prev);
        }
        Some(out)
    }
}

fn push_varint(buf: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        buf.push((v as u8) | 0x80);
        v >>= 7;
    }
    buf.push(v as u8);
}

fn push_sorted(buf: &mut Vec<u8>, items: impl ExactSizeIterator<Item = u64>) {
    push_varint(buf, items.len() as u64);
    let mut prev = None;
    for x in items {
        match prev {
            None => push_varint(buf, x),
            Some(p) => push_varint(buf, x - p),
        }
        prev = Some(x);
    }
}

/// Raises a positive gap below every unassigned coefficient to the smallest
/// one: the residual then holds iff any unassigned literal is true, exactly
/// as it would with that larger gap.
pub fn saturate_gap(gap: u64, unassigned_coefs: impl IntoIterator<Item = u64>) -> u64 {
    match unassigned_coefs.into_iter().min() {
        Some(min) if gap > 0 && gap < min => min,
        _ => gap,
    }
}

/// Builds keys, reusing a membership table across calls.
#[derive(Clone, Debug)]
pub struct KeyEncoder {
    stamp: Vec<u32>,
    epoch: u32,
    buf: Vec<u8>,
}

impl KeyEncoder {
    pub fn new(num_vars: u32) -> KeyEncoder {
        KeyEncoder {
            stamp: vec![0; num_vars as usize],
            epoch: 0,
            buf: Vec::new(),
        }
    }

    /// Encodes `comp`. Its `gaps` must be the current gaps of `cstrs`; a
    /// term of a listed constraint counts as unassigned iff its variable is
    /// in `comp.vars`.
    pub fn encode(&mut self, comp: &Component, formula: &PbFormula, saturate: bool) -> CacheKey {
        self.buf.clear();
        push_sorted(&mut self.buf, comp.vars.iter().map(|v| v.id() as u64));
        push_sorted(&mut self.buf, comp.cstrs.iter().map(|&c| c as u64));
        if saturate {
            self.epoch = self.epoch.wrapping_add(1);
            if self.epoch == 0 {
                self.stamp.fill(0);
                self.epoch = 1;
            }
            for v in &comp.vars {
                self.stamp[v.index()] = self.epoch;
            }
        }
        for (&c, &gap) in comp.cstrs.iter().zip(&comp.gaps) {
            let k = formula.constraint(c as usize);
            if k.is_clausal() {
                continue;
            }
            let gap = if saturate {
                let epoch = self.epoch;
                let stamp = &self.stamp;
                saturate_gap(
                    gap,
                    k.terms()
                        .iter()
                        .filter(|t| stamp[t.lit.var().index()] == epoch)
                        .map(|t| t.coef),
                )
            } else {
                gap
            };
            push_varint(&mut self.buf, gap.saturating_sub(1));
        }
        CacheKey(self.buf.as_slice().into())
    }
}

pub fn encode_component(comp: &Component, formula: &PbFormula, saturate: bool) -> CacheKey {
    KeyEncoder::new(formula.num_vars()).encode(comp, formula, saturate)
}
