//! Component count cache with an insertion journal.
//!
//! Entries are journaled in insertion order. The journal gives cheap
//! rollback of everything stored after a mark, which the counter uses when
//! a search context turns out to be unsatisfiable, and oldest-first eviction
//! under a byte budget.

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, VecDeque};
use std::hash::{Hash, Hasher};

use num_bigint::BigUint;

use super::CacheKey;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum CacheMode {
    /// Store the whole key. Exact.
    #[default]
    FullKey,
    /// Store a 128-bit hash of the key. Smaller, but a collision silently
    /// returns a wrong count.
    Fingerprint,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub entries: u64,
    pub hits: u64,
    pub misses: u64,
    pub stores: u64,
    pub evictions: u64,
    pub purged: u64,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Slot {
    Full(CacheKey),
    Hashed(u128),
}

/// Position in the insertion journal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CacheMark(u64);

const ENTRY_OVERHEAD: usize = 64;

#[derive(Clone, Debug)]
pub struct CountCache {
    mode: CacheMode,
    map: HashMap<Slot, BigUint>,
    journal: VecDeque<Slot>,
    /// Absolute journal position of `journal[0]`.
    base: u64,
    budget: usize,
    bytes: usize,
    stats: CacheStats,
    corrupt: bool,
}

fn fingerprint(key: &CacheKey) -> u128 {
    let mut lo = DefaultHasher::new();
    key.as_bytes().hash(&mut lo);
    let mut hi = DefaultHasher::new();
    0xa5u8.hash(&mut hi);
    key.as_bytes().hash(&mut hi);
    ((hi.finish() as u128) << 64) | lo.finish() as u128
}

fn entry_bytes(slot: &Slot, count: &BigUint) -> usize {
    let key = match slot {
        Slot::Full(k) => k.len(),
        Slot::Hashed(_) => 16,
    };
    ENTRY_OVERHEAD + key + count.bits().div_ceil(8) as usize
}

impl CountCache {
    pub fn new(mode: CacheMode, budget_bytes: usize) -> CountCache {
        CountCache {
            mode,
            map: HashMap::new(),
            journal: VecDeque::new(),
            base: 0,
            budget: budget_bytes,
            bytes: 0,
            stats: CacheStats::default(),
            corrupt: false,
        }
    }

    /// Makes every hit return the stored count plus one. Only useful to
    /// check that result validation notices a bad cache.
    #[doc(hidden)]
    pub fn corrupt_lookups_for_testing(&mut self, on: bool) {
        self.corrupt = on;
    }

    fn slot(&self, key: &CacheKey) -> Slot {
        match self.mode {
            CacheMode::FullKey => Slot::Full(key.clone()),
            CacheMode::Fingerprint => Slot::Hashed(fingerprint(key)),
        }
    }

    pub fn mode(&self) -> CacheMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn bytes(&self) -> usize {
        self.bytes
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            entries: self.map.len() as u64,
            bytes: self.bytes as u64,
            ..self.stats
        }
    }

    pub fn lookup(&mut self, key: &CacheKey) -> Option<BigUint> {
        let found = match self.mode {
            CacheMode::FullKey => self.map.get(&Slot::Full(key.clone())),
            CacheMode::Fingerprint => self.map.get(&Slot::Hashed(fingerprint(key))),
        };
        match found {
            Some(c) => {
                self.stats.hits += 1;
                Some(if self.corrupt { c + 1u32 } else { c.clone() })
            }
            None => {
                self.stats.misses += 1;
                None
            }
        }
    }

    /// Looks up without touching statistics.
    pub fn peek(&self, key: &CacheKey) -> Option<&BigUint> {
        self.map.get(&self.slot(key))
    }

    pub fn store(&mut self, key: CacheKey, count: BigUint) {
        let slot = match self.mode {
            CacheMode::FullKey => Slot::Full(key),
            CacheMode::Fingerprint => Slot::Hashed(fingerprint(&key)),
        };
        let size = entry_bytes(&slot, &count);
        if let Some(old) = self.map.insert(slot.clone(), count) {
            self.bytes -= entry_bytes(&slot, &old);
        }
        self.bytes += size;
        self.stats.stores += 1;
        self.journal.push_back(slot);
        if self.bytes > self.budget {
            self.evict();
        }
    }

    /// Drops the oldest entries until the cache is at three quarters of its
    /// budget.
    fn evict(&mut self) {
        let target = self.budget / 4 * 3;
        while self.bytes > target {
            let Some(slot) = self.journal.pop_front() else { break };
            self.base += 1;
            if let Some(count) = self.map.remove(&slot) {
                self.bytes -= entry_bytes(&slot, &count);
                self.stats.evictions += 1;
            }
        }
    }

    pub fn mark(&self) -> CacheMark {
        CacheMark(self.base + self.journal.len() as u64)
    }

    /// Removes every entry stored at or after `mark`.
    pub fn purge_since(&mut self, mark: CacheMark) {
        while self.base + self.journal.len() as u64 > mark.0 {
            // Entries before the mark may already have been evicted.
            let Some(slot) = self.journal.pop_back() else { break };
            if let Some(count) = self.map.remove(&slot) {
                self.bytes -= entry_bytes(&slot, &count);
                self.stats.purged += 1;
            }
        }
    }

    pub fn clear(&mut self) {
        self.stats.purged += self.map.len() as u64;
        self.map.clear();
        self.base += self.journal.len() as u64;
        self.journal.clear();
        self.bytes = 0;
    }

    /// Stored entries with their full keys (empty in fingerprint mode).
    pub fn entries(&self) -> impl Iterator<Item = (&CacheKey, &BigUint)> {
        self.map.iter().filter_map(|(slot, count)| match slot {
            Slot::Full(k) => Some((k, count)),
            Slot::Hashed(_) => None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::{encode_component, Component};
    use crate::formula::{PbFormula, Var};

    fn key(v: u32) -> CacheKey {
        let f = PbFormula::new(100);
        encode_component(
            &Component {
                vars: vec![Var::new(v)],
                cstrs: vec![],
                gaps: vec![],
            },
            &f,
            false,
        )
    }

    #[test]
    fn store_and_lookup() {
        for mode in [CacheMode::FullKey, CacheMode::Fingerprint] {
            let mut c = CountCache::new(mode, 1 << 20);
            assert_eq!(c.lookup(&key(1)), None);
            c.store(key(1), BigUint::from(7u32));
            assert_eq!(c.lookup(&key(1)), Some(BigUint::from(7u32)));
            let s = c.stats();
            assert_eq!((s.hits, s.misses, s.entries), (1, 1, 1));
        }
    }

    #[test]
    fn purge_rolls_back_to_mark() {
        let mut c = CountCache::new(CacheMode::FullKey, 1 << 20);
        c.store(key(1), BigUint::from(1u32));
        let m = c.mark();
        c.store(key(2), BigUint::from(2u32));
        c.store(key(3), BigUint::from(3u32));
        c.purge_since(m);
        assert_eq!(c.len(), 1);
        assert!(c.peek(&key(1)).is_some());
        assert!(c.peek(&key(2)).is_none());
        assert_eq!(c.mark(), m);
    }

    #[test]
    fn evicts_oldest_first() {
        let mut c = CountCache::new(CacheMode::FullKey, 10 * (ENTRY_OVERHEAD + 8));
        for v in 1..=40 {
            c.store(key(v), BigUint::from(v));
        }
        assert!(c.bytes() <= 10 * (ENTRY_OVERHEAD + 8));
        assert!(c.stats().evictions > 0);
        assert!(c.peek(&key(1)).is_none());
        assert!(c.peek(&key(40)).is_some());
        // Marks stay valid across eviction.
        let m = c.mark();
        c.store(key(41), BigUint::from(41u32));
        c.purge_since(m);
        assert!(c.peek(&key(41)).is_none());
        assert!(c.peek(&key(40)).is_some());
    }

    #[test]
    fn corrupt_lookups_add_one() {
        let mut c = CountCache::new(CacheMode::FullKey, 1 << 20);
        c.store(key(1), BigUint::from(4u32));
        c.corrupt_lookups_for_testing(true);
        assert_eq!(c.lookup(&key(1)), Some(BigUint::from(5u32)));
    }
}
