use std::collections::BTreeSet;

use rand::Rng;
use ruint::aliases::U256;
use serde::{Deserialize, Serialize};

use crate::state::StateTarget;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    StateTargetBound,
    ObservedTxValue,
    ObservedStorageValue,
}

impl Provenance {
    const ALL: [Provenance; 3] =
        [Provenance::StateTargetBound, Provenance::ObservedTxValue, Provenance::ObservedStorageValue];

    fn index(self) -> usize {
        self as usize
    }
}

/// Deduplicated value store; a value keeps the provenance it arrived with.
#[derive(Clone, Debug, Default)]
pub struct MutationPool {
    by_class: [Vec<U256>; 3],
    seen: BTreeSet<U256>,
}

impl MutationPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interval endpoints and midpoints of every alternative of every active target.
    pub fn seed_from_state_targets(&mut self, targets: &[StateTarget]) {
        for t in targets.iter().filter(|t| t.is_active()) {
            let boxes = t.alternatives.iter().map(|a| &a.ranges).chain(std::iter::once(&t.ranges));
            for ranges in boxes {
                for set in ranges.values() {
                    for v in set.landmarks() {
                        self.insert(v, Provenance::StateTargetBound);
                    }
                }
            }
        }
    }

    /// Returns whether the value was new.
    pub fn insert(&mut self, v: U256, p: Provenance) -> bool {
        if !self.seen.insert(v) {
            return false;
        }
        self.by_class[p.index()].push(v);
        true
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }

    pub fn contains(&self, v: U256) -> bool {
        self.seen.contains(&v)
    }

    pub fn class(&self, p: Provenance) -> &[U256] {
        &self.by_class[p.index()]
    }

    /// A class, then a uniform value within it. State-target bounds are
    /// picked with probability `bound_weight` when present; the remaining
    /// non-empty classes share the rest evenly.
    pub fn sample<R: Rng + ?Sized>(&self, bound_weight: f64, rng: &mut R) -> Option<U256> {
        self.sample_with(bound_weight, &[], 0.0, rng)
    }

    /// As [`sample`](Self::sample), with `extra` values standing in for the
    /// observed classes with probability `extra_weight`.
    pub fn sample_with<R: Rng + ?Sized>(
        &self,
        bound_weight: f64,
        extra: &[U256],
        extra_weight: f64,
        rng: &mut R,
    ) -> Option<U256> {
        let bounds = self.class(Provenance::StateTargetBound);
        let others: Vec<Provenance> =
            Provenance::ALL[1..].iter().copied().filter(|p| !self.class(*p).is_empty()).collect();
        let pick = |vals: &[U256], rng: &mut R| vals[rng.gen_range(0..vals.len())];
        if !bounds.is_empty() && (others.is_empty() && extra.is_empty() || rng.gen_bool(bound_weight)) {
            return Some(pick(bounds, rng));
        }
        if !extra.is_empty() && (others.is_empty() || rng.gen_bool(extra_weight)) {
            return Some(pick(extra, rng));
        }
        if others.is_empty() {
            return None;
        }
        let class = others[rng.gen_range(0..others.len())];
        Some(pick(self.class(class), rng))
    }
}
