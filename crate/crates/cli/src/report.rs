use serde::Serialize;

use pbmc_core::counter::CountStats;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Counted,
    Timeout,
    Memout,
    ParseError,
    UnsatTrivial,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Counted | Status::UnsatTrivial => 0,
            Status::Timeout => 10,
            Status::Memout => 20,
            Status::ParseError => 2,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CacheReport {
    pub entries: u64,
    pub hits: u64,
    pub misses: u64,
    pub stores: u64,
    pub evictions: u64,
    pub purged: u64,
    pub bytes: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchReport {
    pub decisions: u64,
    pub conflicts: u64,
    pub propagations: u64,
    pub learned: u64,
    pub learned_removed: u64,
    pub backjumps: u64,
    pub components_split: u64,
    /// Deepest stack of open components.
    pub peak_frames: u64,
}

/// The machine-readable outcome of `pbmc count`, printed as one JSON line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub status: Status,
    /// Decimal; absent unless the count finished.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<String>,
    pub wall_seconds: f64,
    pub variables: u32,
    /// Constraints left after root simplification.
    pub constraints: u64,
    pub search: SearchReport,
    pub cache: CacheReport,
}

impl RunReport {
    pub fn empty(status: Status) -> RunReport {
        RunReport {
            status,
            count: None,
            wall_seconds: 0.0,
            variables: 0,
            constraints: 0,
            search: SearchReport::default(),
            cache: CacheReport::default(),
        }
    }

    pub fn fill_stats(&mut self, s: &CountStats) {
        self.constraints = s.constraints;
        self.search = SearchReport {
            decisions: s.decisions,
            conflicts: s.conflicts,
            propagations: s.propagations,
            learned: s.learned,
            learned_removed: s.learned_removed,
            backjumps: s.backjumps,
            components_split: s.components_split,
            peak_frames: s.peak_frames,
        };
        self.cache = CacheReport {
            entries: s.cache.entries,
            hits: s.cache.hits,
            misses: s.cache.misses,
            stores: s.cache.stores,
            evictions: s.cache.evictions,
            purged: s.cache.purged,
            bytes: s.cache.bytes,
        };
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}
