use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use ruint::aliases::U256;

use super::seed::Seed;
use crate::vm::ExecutionTrace;

/// Slots each function has been seen writing and reading.
#[derive(Clone, Debug, Default)]
pub struct RawIndex {
    writes: BTreeMap<[u8; 4], BTreeSet<U256>>,
    reads: BTreeMap<[u8; 4], BTreeSet<U256>>,
}

impl RawIndex {
    pub fn observe(&mut self, trace: &ExecutionTrace) {
        let sel = trace.tx.selector;
        let w: Vec<U256> = trace.committed_writes().map(|a| a.slot).collect();
        if !w.is_empty() {
            self.writes.entry(sel).or_default().extend(w);
        }
        if !trace.storage_reads.is_empty() {
            self.reads.entry(sel).or_default().extend(trace.storage_reads.iter().map(|a| a.slot));
        }
    }

    pub fn record(&mut self, selector: [u8; 4], writes: &[U256], reads: &[U256]) {
        self.writes.entry(selector).or_default().extend(writes.iter().copied());
        self.reads.entry(selector).or_default().extend(reads.iter().copied());
    }

    fn slots<'a>(map: &'a BTreeMap<[u8; 4], BTreeSet<U256>>, seed: &Seed) -> BTreeSet<&'a U256> {
        seed.txs.iter().filter_map(|t| map.get(&t.selector)).flatten().collect()
    }

    /// `writer` writes some slot `reader` reads.
    pub fn feeds(&self, writer: &Seed, reader: &Seed) -> bool {
        let w = Self::slots(&self.writes, writer);
        !w.is_empty() && Self::slots(&self.reads, reader).iter().any(|s| w.contains(s))
    }
}

/// `a ‖ b`. When that exceeds `max_len`, a random-length tail of `a` is
/// joined to a head of `b`, so the junction between the parents survives.
pub fn concat<R: Rng + ?Sized>(a: &Seed, b: &Seed, max_len: usize, rng: &mut R) -> Seed {
    let (na, nb) = (a.txs.len(), b.txs.len());
    let txs = if na + nb <= max_len {
        a.txs.iter().chain(&b.txs).cloned().collect()
    } else {
        let lo = max_len.saturating_sub(nb).max(1);
        let hi = na.min(max_len.saturating_sub(1));
        let ka = if lo <= hi { rng.gen_range(lo..=hi) } else { na.min(max_len) };
        a.txs[na - ka..].iter().chain(&b.txs[..(max_len - ka).min(nb)]).cloned().collect()
    };
    Seed { id: 0, txs, lineage: vec![a.id, b.id] }
}

/// RAW-ordered concatenation when one parent feeds the other; otherwise
/// both orders with probability `prob`, else the parents unchanged.
pub fn crossover<R: Rng + ?Sized>(
    s1: &Seed,
    s2: &Seed,
    raw: &RawIndex,
    prob: f64,
    max_len: usize,
    rng: &mut R,
) -> (Seed, Seed) {
    match (raw.feeds(s1, s2), raw.feeds(s2, s1)) {
        (true, true) => (concat(s1, s2, max_len, rng), concat(s2, s1, max_len, rng)),
        (true, false) => (concat(s1, s2, max_len, rng), s2.clone()),
        (false, true) => (concat(s2, s1, max_len, rng), s1.clone()),
        (false, false) => {
            if rng.gen_bool(prob) {
                (concat(s1, s2, max_len, rng), concat(s2, s1, max_len, rng))
            } else {
                (s1.clone(), s2.clone())
            }
        }
    }
}
