//! Trace-driven two-level set-associative cache-hierarchy simulator.
//!
//! Models the L2/L3 interaction modes found in server parts: an
//! *inclusive* hierarchy (every L2 line also lives in L3; evicting an L3
//! line force-invalidates its L2 copy) and a strict *exclusive* one (L3
//! acts as a victim cache for L2, and an L3 hit migrates the line back).
//! Replacement is LRU per set, with no prefetcher, TLB, or coherence
//! traffic, so results are a pure function of `(config, trace)`.
//!
//! Traces are byte-address streams, normally produced from embedding-table
//! lookups via [`trace_from_lookups`], which emits one address per cache
//! line each looked-up row touches (adjacent elements of a row share
//! lines, so finer granularity adds nothing at 64-byte lines).

use serde::{Deserialize, Serialize};
use std::str::FromStr;
use thiserror::Error;

use crate::config::RecModelConfig;
use crate::workload::InferenceRequest;

/// Line granularity used when emitting traces from lookups.
pub const DEFAULT_LINE_SIZE: u64 = 64;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("invalid cache level: {0}")]
    InvalidLevel(String),
    #[error("invalid hierarchy: {0}")]
    InvalidHierarchy(String),
    #[error("table {table} has no element at row {row}, col {col}")]
    OutOfBounds { table: usize, row: u64, col: u64 },
    #[error("unknown table index {table}")]
    UnknownTable { table: usize },
    #[error("misses-per-kilo-lookups is undefined for zero lookups")]
    ZeroLookups,
    #[error("unknown inclusion policy {0:?}: expected inclusive or exclusive")]
    UnknownPolicy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Replacement {
    Lru,
}

/// Geometry of one cache level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheLevelConfig {
    pub capacity_bytes: u64,
    pub line_size: u64,
    pub associativity: u32,
    pub replacement: Replacement,
}

impl CacheLevelConfig {
    pub fn lru(capacity_bytes: u64, line_size: u64, associativity: u32) -> Self {
        Self { capacity_bytes, line_size, associativity, replacement: Replacement::Lru }
    }

    pub fn lines(&self) -> u64 {
        self.capacity_bytes / self.line_size
    }

    pub fn sets(&self) -> u64 {
        self.capacity_bytes / (self.line_size * self.associativity as u64)
    }

    pub fn validate(&self) -> Result<(), CacheError> {
        if self.line_size == 0 || !self.line_size.is_power_of_two() {
            return Err(CacheError::InvalidLevel(format!(
                "line size must be a power of two, got {}",
                self.line_size
            )));
        }
        if self.associativity == 0 {
            return Err(CacheError::InvalidLevel("associativity must be at least 1".into()));
        }
        let way_bytes = self.line_size * self.associativity as u64;
        if self.capacity_bytes == 0 || self.capacity_bytes % way_bytes != 0 {
            return Err(CacheError::InvalidLevel(format!(
                "capacity {} is not a multiple of line_size * associativity = {}",
                self.capacity_bytes, way_bytes
            )));
        }
        let sets = self.sets();
        if !sets.is_power_of_two() {
            return Err(CacheError::InvalidLevel(format!(
                "set count must be a power of two, got {sets}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InclusionPolicy {
    Inclusive,
    Exclusive,
}

impl FromStr for InclusionPolicy {
    type Err = CacheError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "inclusive" => Ok(InclusionPolicy::Inclusive),
            "exclusive" => Ok(InclusionPolicy::Exclusive),
            other => Err(CacheError::UnknownPolicy(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyConfig {
    pub l2: CacheLevelConfig,
    pub l3: CacheLevelConfig,
    pub policy: InclusionPolicy,
}

impl HierarchyConfig {
    pub fn validate(&self) -> Result<(), CacheError> {
        self.l2.validate()?;
        self.l3.validate()?;
        if self.l3.capacity_bytes < self.l2.capacity_bytes {
            return Err(CacheError::InvalidHierarchy(format!(
                "L3 capacity {} below L2 capacity {}",
                self.l3.capacity_bytes, self.l2.capacity_bytes
            )));
        }
        if self.l3.line_size != self.l2.line_size {
            return Err(CacheError::InvalidHierarchy(
                "L2 and L3 must share one line size".into(),
            ));
        }
        Ok(())
    }
}

/// Ordered stream of byte addresses.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccessTrace(Vec<u64>);

impl AccessTrace {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn from_addresses(addresses: Vec<u64>) -> Self {
        Self(addresses)
    }

    pub fn push(&mut self, addr: u64) {
        self.0.push(addr);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn addresses(&self) -> &[u64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LevelStats {
    pub accesses: u64,
    pub hits: u64,
    pub misses: u64,
    pub evictions: u64,
}

/// Counters from one simulation run. `back_invalidations` is zero by
/// construction under the exclusive policy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub l2: LevelStats,
    pub l3: LevelStats,
    pub dram_accesses: u64,
    pub back_invalidations: u64,
}

/// DRAM misses per thousand embedding lookups, the trace-level analog of a
/// per-instruction miss rate.
pub fn misses_per_kilo_lookups(stats: &CacheStats, lookups: u64) -> Result<f64, CacheError> {
    if lookups == 0 {
        return Err(CacheError::ZeroLookups);
    }
    Ok(stats.dram_accesses as f64 * 1000.0 / lookups as f64)
}

/// One set: line numbers ordered LRU-first.
#[derive(Debug, Clone, Default)]
struct CacheSet {
    lines: Vec<u64>,
}

#[derive(Debug, Clone)]
struct LevelState {
    sets: Vec<CacheSet>,
    set_mask: u64,
    ways: usize,
}

impl LevelState {
    fn new(cfg: &CacheLevelConfig) -> Self {
        let sets = cfg.sets();
        Self {
            sets: vec![CacheSet::default(); sets as usize],
            set_mask: sets - 1,
            ways: cfg.associativity as usize,
        }
    }

    fn set_of(&self, line: u64) -> usize {
        (line & self.set_mask) as usize
    }

    /// Hit check that refreshes recency.
    fn probe(&mut self, line: u64) -> bool {
        let set = self.set_of(line);
        let lines = &mut self.sets[set].lines;
        if let Some(pos) = lines.iter().position(|&l| l == line) {
            let l = lines.remove(pos);
            lines.push(l);
            true
        } else {
            false
        }
    }

    /// Residency check without touching recency.
    fn contains(&self, line: u64) -> bool {
        self.sets[self.set_of(line)].lines.contains(&line)
    }

    /// Installs a line as MRU, returning the evicted victim if the set was
    /// full. The caller guarantees the line is not already resident.
    fn insert(&mut self, line: u64) -> Option<u64> {
        let set = self.set_of(line);
        let lines = &mut self.sets[set].lines;
        debug_assert!(!lines.contains(&line));
        let victim = if lines.len() == self.ways { Some(lines.remove(0)) } else { None };
        lines.push(line);
        victim
    }

    fn remove(&mut self, line: u64) -> bool {
        let set = self.set_of(line);
        let lines = &mut self.sets[set].lines;
        if let Some(pos) = lines.iter().position(|&l| l == line) {
            lines.remove(pos);
            true
        } else {
            false
        }
    }

    fn iter_lines(&self) -> impl Iterator<Item = u64> + '_ {
        self.sets.iter().flat_map(|s| s.lines.iter().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheLevelId {
    L2,
    L3,
}

/// Stepwise simulator exposing residency so tests can check the inclusion
/// and exclusion invariants after every access.
#[derive(Debug, Clone)]
pub struct HierarchySim {
    policy: InclusionPolicy,
    line_size: u64,
    l2: LevelState,
    l3: LevelState,
    stats: CacheStats,
}

impl HierarchySim {
    pub fn new(cfg: &HierarchyConfig) -> Result<Self, CacheError> {
        cfg.validate()?;
        Ok(Self {
            policy: cfg.policy,
            line_size: cfg.l2.line_size,
            l2: LevelState::new(&cfg.l2),
            l3: LevelState::new(&cfg.l3),
            stats: CacheStats::default(),
        })
    }

    pub fn access(&mut self, addr: u64) {
        let line = addr / self.line_size;
        self.stats.l2.accesses += 1;
        if self.l2.probe(line) {
            self.stats.l2.hits += 1;
            return;
        }
        self.stats.l2.misses += 1;
        self.stats.l3.accesses += 1;
        match self.policy {
            InclusionPolicy::Inclusive => {
                if self.l3.probe(line) {
                    self.stats.l3.hits += 1;
                } else {
                    self.stats.l3.misses += 1;
                    self.stats.dram_accesses += 1;
                    if let Some(victim) = self.l3.insert(line) {
                        self.stats.l3.evictions += 1;
                        // Inclusion forces the victim out of L2 as well.
                        if self.l2.remove(victim) {
                            self.stats.back_invalidations += 1;
                        }
                    }
                }
                if self.l2.insert(line).is_some() {
                    self.stats.l2.evictions += 1;
                }
            }
            InclusionPolicy::Exclusive => {
                if self.l3.remove(line) {
                    self.stats.l3.hits += 1;
                } else {
                    self.stats.l3.misses += 1;
                    self.stats.dram_accesses += 1;
                }
                // Fills land in L2 only; the displaced L2 line drops into
                // L3 as a victim.
                if let Some(victim) = self.l2.insert(line) {
                    self.stats.l2.evictions += 1;
                    if self.l3.insert(victim).is_some() {
                        self.stats.l3.evictions += 1;
                    }
                }
            }
        }
    }

    pub fn resident(&self, level: CacheLevelId, addr: u64) -> bool {
        let line = addr / self.line_size;
        match level {
            CacheLevelId::L2 => self.l2.contains(line),
            CacheLevelId::L3 => self.l3.contains(line),
        }
    }

    /// True when the current contents satisfy the configured policy:
    /// inclusive means L2 is a subset of L3; exclusive means the levels
    /// are disjoint.
    pub fn policy_invariant_holds(&self) -> bool {
        match self.policy {
            InclusionPolicy::Inclusive => self.l2.iter_lines().all(|l| self.l3.contains(l)),
            InclusionPolicy::Exclusive => !self.l2.iter_lines().any(|l| self.l3.contains(l)),
        }
    }

    pub fn stats(&self) -> &CacheStats {
        &self.stats
    }
}

/// Runs a whole trace through a fresh hierarchy.
pub fn simulate(cfg: &HierarchyConfig, trace: &AccessTrace) -> Result<CacheStats, CacheError> {
    let mut sim = HierarchySim::new(cfg)?;
    for &addr in trace.addresses() {
        sim.access(addr);
    }
    Ok(*sim.stats())
}

/// Row-major address map over a sequence of embedding tables.
///
/// Table bases are line-aligned and non-overlapping; element `(row, col)`
/// of a table sits at `base + (row * dim + col) * 4`.
#[derive(Debug, Clone)]
pub struct TableAddressMap {
    line_size: u64,
    tables: Vec<TableExtent>,
}

#[derive(Debug, Clone, Copy)]
struct TableExtent {
    base: u64,
    rows: u64,
    dim: u64,
}

impl TableAddressMap {
    pub fn new(tables: &[(u64, u64)], line_size: u64) -> Self {
        let mut extents = Vec::with_capacity(tables.len());
        let mut base = 0u64;
        for &(rows, dim) in tables {
            extents.push(TableExtent { base, rows, dim });
            let bytes = rows * dim * 4;
            base += bytes.div_ceil(line_size) * line_size;
        }
        Self { line_size, tables: extents }
    }

    pub fn from_config(config: &RecModelConfig, line_size: u64) -> Self {
        let dims: Vec<(u64, u64)> = config.tables.iter().map(|t| (t.rows, t.dim)).collect();
        Self::new(&dims, line_size)
    }

    pub fn table_count(&self) -> usize {
        self.tables.len()
    }

    pub fn table_base(&self, table: usize) -> Result<u64, CacheError> {
        self.tables.get(table).map(|t| t.base).ok_or(CacheError::UnknownTable { table })
    }

    pub fn addr_of(&self, table: usize, row: u64, col: u64) -> Result<u64, CacheError> {
        let t = self.tables.get(table).ok_or(CacheError::UnknownTable { table })?;
        if row >= t.rows || col >= t.dim {
            return Err(CacheError::OutOfBounds { table, row, col });
        }
        Ok(t.base + (row * t.dim + col) * 4)
    }

    /// Addresses of the cache lines covering one full row, in order.
    pub fn row_line_addresses(&self, table: usize, row: u64) -> Result<Vec<u64>, CacheError> {
        let t = self.tables.get(table).ok_or(CacheError::UnknownTable { table })?;
        if row >= t.rows {
            return Err(CacheError::OutOfBounds { table, row, col: 0 });
        }
        let start = t.base + row * t.dim * 4;
        let end = start + t.dim * 4;
        let first = start / self.line_size;
        let last = (end - 1) / self.line_size;
        Ok((first..=last).map(|l| l * self.line_size).collect())
    }
}

/// Expands the embedding lookups of a request sequence into a byte-address
/// trace, one address per cache line each looked-up row touches, in lookup
/// order.
pub fn trace_from_lookups(
    config: &RecModelConfig,
    requests: &[InferenceRequest],
) -> Result<AccessTrace, CacheError> {
    let map = TableAddressMap::from_config(config, DEFAULT_LINE_SIZE);
    let mut trace = AccessTrace::new();
    for req in requests {
        for (t, sparse) in req.sparse.iter().enumerate() {
            for &id in sparse.ids() {
                for addr in map.row_line_addresses(t, id)? {
                    trace.push(addr);
                }
            }
        }
    }
    Ok(trace)
}

/// Round-robin interleaving in chunks of `granularity` accesses;
/// exhausted traces are skipped, so the output length is the sum of the
/// input lengths.
pub fn interleave(traces: &[AccessTrace], granularity: usize) -> AccessTrace {
    let granularity = granularity.max(1);
    let total: usize = traces.iter().map(|t| t.len()).sum();
    let mut out = Vec::with_capacity(total);
    let mut cursors = vec![0usize; traces.len()];
    while out.len() < total {
        for (trace, cursor) in traces.iter().zip(cursors.iter_mut()) {
            let end = (*cursor + granularity).min(trace.len());
            out.extend_from_slice(&trace.addresses()[*cursor..end]);
            *cursor = end;
        }
    }
    AccessTrace::from_addresses(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(policy: InclusionPolicy, l2_lines: u64, l3_lines: u64) -> HierarchyConfig {
        // fully associative toy levels with 64-byte lines
        HierarchyConfig {
            l2: CacheLevelConfig::lru(l2_lines * 64, 64, l2_lines as u32),
            l3: CacheLevelConfig::lru(l3_lines * 64, 64, l3_lines as u32),
            policy,
        }
    }

    fn line_trace(lines: &[u64]) -> AccessTrace {
        AccessTrace::from_addresses(lines.iter().map(|&l| l * 64).collect())
    }

    #[test]
    fn lru_hand_case_two_lines() {
        // A, B, A on a 2-line L2: two cold misses then a hit
        let cfg = toy(InclusionPolicy::Inclusive, 2, 4);
        let stats = simulate(&cfg, &line_trace(&[0, 1, 0])).unwrap();
        assert_eq!(stats.l2.accesses, 3);
        assert_eq!(stats.l2.misses, 2);
        assert_eq!(stats.l2.hits, 1);
        assert_eq!(stats.dram_accesses, 2);
    }

    #[test]
    fn lru_evicts_least_recent() {
        // 2-line L2; A B A C A -> C evicts B (LRU), then A still hits
        let cfg = toy(InclusionPolicy::Inclusive, 2, 8);
        let mut sim = HierarchySim::new(&cfg).unwrap();
        for l in [0u64, 1, 0, 2, 0] {
            sim.access(l * 64);
        }
        assert!(sim.resident(CacheLevelId::L2, 0));
        assert!(sim.resident(CacheLevelId::L2, 2 * 64));
        assert!(!sim.resident(CacheLevelId::L2, 64));
        assert_eq!(sim.stats().l2.hits, 2);
    }

    #[test]
    fn set_mapping_respects_modulus() {
        // 2 sets, 1 way: lines 0 and 2 collide, line 1 does not
        let cfg = HierarchyConfig {
            l2: CacheLevelConfig::lru(2 * 64, 64, 1),
            l3: CacheLevelConfig::lru(4 * 64, 64, 1),
            policy: InclusionPolicy::Inclusive,
        };
        let stats = simulate(&cfg, &line_trace(&[0, 1, 2, 0])).unwrap();
        // 0 miss, 1 miss, 2 miss (evicts 0), 0 miss again
        assert_eq!(stats.l2.misses, 4);
    }

    #[test]
    fn hits_in_l3_after_l2_eviction() {
        let cfg = toy(InclusionPolicy::Inclusive, 1, 4);
        let stats = simulate(&cfg, &line_trace(&[0, 1, 0])).unwrap();
        assert_eq!(stats.l3.hits, 1); // final access to 0
        assert_eq!(stats.dram_accesses, 2);
    }

    #[test]
    fn inclusive_steady_state_in_l3_capacity() {
        let cfg = toy(InclusionPolicy::Inclusive, 1, 4);
        let mut sim = HierarchySim::new(&cfg).unwrap();
        let lines = [0u64, 1, 2];
        for &l in &lines {
            sim.access(l * 64);
        }
        let cold = sim.stats().dram_accesses;
        assert_eq!(cold, 3);
        for _ in 0..5 {
            for &l in &lines {
                sim.access(l * 64);
            }
        }
        assert_eq!(sim.stats().dram_accesses, cold, "working set fits L3, no new DRAM traffic");
    }

    #[test]
    fn working_set_between_l3_and_union_separates_policies() {
        // 4-line L2, 8-line L3, cyclic working set of 12 lines:
        // L3 < W <= L2 + L3.
        let lines: Vec<u64> = (0..12).collect();
        let passes = 6;
        let mut trace = Vec::new();
        for _ in 0..passes {
            trace.extend(&lines);
        }
        let trace = line_trace(&trace);

        let excl = simulate(&toy(InclusionPolicy::Exclusive, 4, 8), &trace).unwrap();
        // cold pass only; steady state is fully cached across both levels
        assert_eq!(excl.dram_accesses, 12, "exclusive union holds the working set");
        assert_eq!(excl.back_invalidations, 0);

        let incl = simulate(&toy(InclusionPolicy::Inclusive, 4, 8), &trace).unwrap();
        assert!(
            incl.dram_accesses > 12 * (passes as u64 - 1),
            "inclusive effective capacity is L3 only; got {} dram accesses",
            incl.dram_accesses
        );
    }

    #[test]
    fn policy_invariants_hold_after_every_access() {
        let mut rng = crate::rng::SplitMix64::new(99);
        for policy in [InclusionPolicy::Inclusive, InclusionPolicy::Exclusive] {
            // set-associative toy: 8 sets x 2 ways L2, 8 sets x 4 ways L3
            let cfg = HierarchyConfig {
                l2: CacheLevelConfig::lru(16 * 64, 64, 2),
                l3: CacheLevelConfig::lru(32 * 64, 64, 4),
                policy,
            };
            let mut sim = HierarchySim::new(&cfg).unwrap();
            for _ in 0..4_000 {
                sim.access(rng.next_u64_below(96) * 64);
                assert!(sim.policy_invariant_holds(), "{policy:?} violated");
            }
            if policy == InclusionPolicy::Exclusive {
                assert_eq!(sim.stats().back_invalidations, 0);
            } else {
                assert!(sim.stats().back_invalidations > 0, "toy workload should back-invalidate");
            }
        }
    }

    #[test]
    fn per_level_hit_miss_accounting_balances() {
        let mut rng = crate::rng::SplitMix64::new(5);
        let addrs: Vec<u64> = (0..2_000).map(|_| rng.next_u64_below(256) * 8).collect();
        for policy in [InclusionPolicy::Inclusive, InclusionPolicy::Exclusive] {
            let cfg = toy(policy, 4, 16);
            let stats = simulate(&cfg, &AccessTrace::from_addresses(addrs.clone())).unwrap();
            assert_eq!(stats.l2.hits + stats.l2.misses, stats.l2.accesses);
            assert_eq!(stats.l3.hits + stats.l3.misses, stats.l3.accesses);
            assert_eq!(stats.l3.accesses, stats.l2.misses);
            assert_eq!(stats.dram_accesses, stats.l3.misses);
        }
    }

    #[test]
    fn doubling_l3_never_hurts_on_full_assoc_toys() {
        let mut rng = crate::rng::SplitMix64::new(31);
        for policy in [InclusionPolicy::Inclusive, InclusionPolicy::Exclusive] {
            for case in 0..40 {
                let span = 4 + rng.next_u64_below(60);
                let n = 500;
                let addrs: Vec<u64> =
                    (0..n).map(|_| rng.next_u64_below(span) * 64).collect();
                let trace = AccessTrace::from_addresses(addrs);
                let small = simulate(&toy(policy, 4, 8), &trace).unwrap();
                let big = simulate(&toy(policy, 4, 16), &trace).unwrap();
                assert!(
                    big.dram_accesses <= small.dram_accesses,
                    "{policy:?} case {case}: doubling L3 raised dram {} -> {}",
                    small.dram_accesses,
                    big.dram_accesses
                );
            }
        }
    }

    #[test]
    fn simulate_is_deterministic() {
        let mut rng = crate::rng::SplitMix64::new(123);
        let addrs: Vec<u64> = (0..3_000).map(|_| rng.next_u64_below(512) * 4).collect();
        let trace = AccessTrace::from_addresses(addrs);
        let cfg = toy(InclusionPolicy::Inclusive, 8, 16);
        assert_eq!(simulate(&cfg, &trace).unwrap(), simulate(&cfg, &trace).unwrap());
    }

    #[test]
    fn hierarchy_validation() {
        let mut cfg = toy(InclusionPolicy::Inclusive, 8, 4);
        assert!(cfg.validate().is_err(), "L3 smaller than L2");
        cfg = toy(InclusionPolicy::Inclusive, 4, 8);
        cfg.l3.line_size = 128;
        assert!(cfg.validate().is_err(), "line sizes differ");
        let bad = CacheLevelConfig::lru(3 * 64, 64, 1);
        assert!(bad.validate().is_err(), "3 sets is not a power of two");
        let bad_line = CacheLevelConfig::lru(256, 48, 1);
        assert!(bad_line.validate().is_err(), "line size not a power of two");
    }

    #[test]
    fn address_map_layout() {
        let map = TableAddressMap::new(&[(10, 4), (10, 4)], 64);
        assert_eq!(map.addr_of(0, 0, 0).unwrap(), 0);
        assert_eq!(map.addr_of(0, 0, 1).unwrap(), 4);
        assert_eq!(map.addr_of(0, 1, 0).unwrap(), 16);
        // table 0 spans 160 bytes -> table 1 starts at the next line
        let base1 = map.table_base(1).unwrap();
        assert_eq!(base1, 192);
        assert_eq!(base1 % 64, 0);
        assert!(map.addr_of(0, 10, 0).is_err());
        assert!(map.addr_of(0, 0, 4).is_err());
        assert!(map.addr_of(2, 0, 0).is_err());
    }

    #[test]
    fn table_extents_never_overlap() {
        let tables = [(100, 32), (7, 5), (1, 1), (33, 24)];
        let map = TableAddressMap::new(&tables, 64);
        for t in 0..tables.len() - 1 {
            let (rows, dim) = tables[t];
            let last = map.addr_of(t, rows - 1, dim - 1).unwrap();
            let next_base = map.table_base(t + 1).unwrap();
            assert!(last + 4 <= next_base, "table {t} bleeds into table {}", t + 1);
        }
    }

    #[test]
    fn row_spans_expected_line_count() {
        // dim 16 -> 64 bytes -> exactly one 64-byte line
        let map = TableAddressMap::new(&[(4, 16)], 64);
        assert_eq!(map.row_line_addresses(0, 2).unwrap().len(), 1);
        // dim 32 -> 128 bytes -> two lines
        let map = TableAddressMap::new(&[(4, 32)], 64);
        assert_eq!(map.row_line_addresses(0, 1).unwrap().len(), 2);
    }

    #[test]
    fn interleave_alternates_and_conserves_length() {
        let a = line_trace(&[1, 1, 1]);
        let b = line_trace(&[2, 2]);
        let out = interleave(&[a.clone(), b.clone()], 1);
        assert_eq!(out.len(), 5);
        assert_eq!(
            out.addresses(),
            &[64, 128, 64, 128, 64],
            "round-robin with the short trace exhausted"
        );
        let solo = interleave(std::slice::from_ref(&a), 3);
        assert_eq!(solo, a);
        assert_eq!(interleave(&[], 1).len(), 0);
    }

    #[test]
    fn mpk_definition() {
        let mut stats = CacheStats { dram_accesses: 8, ..CacheStats::default() };
        assert_eq!(misses_per_kilo_lookups(&stats, 1000).unwrap(), 8.0);
        stats.dram_accesses = 0;
        assert_eq!(misses_per_kilo_lookups(&stats, 500).unwrap(), 0.0);
        assert!(misses_per_kilo_lookups(&stats, 0).is_err());
    }

    #[test]
    fn lookup_trace_examples() {
        use crate::config::{preset, ModelClass};
        use crate::workload::gen_request;
        let mut config = preset(ModelClass::Rmc1, 1e-3).unwrap();
        config.tables.truncate(1);
        config.tables[0].dim = 16; // one 64-byte line per row
        config.top_fc.input_width = config.concat_width();
        let req = gen_request(&config, 1, 3).unwrap();
        let trace = trace_from_lookups(&config, std::slice::from_ref(&req)).unwrap();
        // 80 lookups, each spanning exactly one line
        assert_eq!(trace.len(), 80);
        // repeated request -> repeated addresses
        let twice = trace_from_lookups(&config, &[req.clone(), req]).unwrap();
        assert_eq!(&twice.addresses()[..80], trace.addresses());
        assert_eq!(&twice.addresses()[80..], trace.addresses());
    }

    #[test]
    fn interleaving_uniform_traces_raises_miss_rate() {
        // two disjoint-address uniform traces, each fitting the hierarchy
        // alone but not together
        let tables = [(48u64, 16u64), (48, 16)];
        let map = TableAddressMap::new(&tables, 64);
        let cfg = toy(InclusionPolicy::Inclusive, 16, 64);
        let mut rng = crate::rng::SplitMix64::new(77);
        let mut traces = Vec::new();
        let mut solo = Vec::new();
        for t in 0..2 {
            let mut trace = AccessTrace::new();
            for _ in 0..30_000 {
                let row = rng.next_u64_below(48);
                for addr in map.row_line_addresses(t, row).unwrap() {
                    trace.push(addr);
                }
            }
            let stats = simulate(&cfg, &trace).unwrap();
            solo.push(misses_per_kilo_lookups(&stats, 30_000).unwrap());
            traces.push(trace);
        }
        let combined = simulate(&cfg, &interleave(&traces, 1)).unwrap();
        let combined_mpk = misses_per_kilo_lookups(&combined, 60_000).unwrap();
        for (t, s) in solo.iter().enumerate() {
            assert!(
                combined_mpk >= *s,
                "trace {t}: solo mpk {s:.2} vs interleaved {combined_mpk:.2}"
            );
        }
    }

    #[test]
    fn distinct_rows_give_distinct_line_addresses() {
        // dim * 4 == line size: row i occupies exactly line i
        let map = TableAddressMap::new(&[(32, 16)], 64);
        let mut addrs: Vec<u64> = (0..32)
            .map(|r| {
                let lines = map.row_line_addresses(0, r).unwrap();
                assert_eq!(lines.len(), 1);
                lines[0]
            })
            .collect();
        addrs.dedup();
        assert_eq!(addrs.len(), 32);
    }
}
