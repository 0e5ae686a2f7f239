//! Harmonic-mean block distances, seed code/state distances and fitness.
//!
//! Everything is generic over [`Scalar`] so the same code runs in `f64`
//! during campaigns and in exact rationals under test.

use std::collections::{BTreeSet, VecDeque};

use ruint::aliases::U256;
use serde::{Deserialize, Serialize};

use crate::bytecode::{BlockId, Cfg};
use crate::error::{Error, Result};
use crate::scalar::{Scalar, UnsignedWord};
use crate::state::{IntervalSet, SlotRanges, StateTarget};

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMap<S> {
    /// `None` where no target is reachable.
    pub dist: Vec<Option<S>>,
    pub targets: BTreeSet<BlockId>,
}

impl<S: Scalar> DistanceMap<S> {
    pub fn get(&self, b: BlockId) -> Option<&S> {
        self.dist.get(b).and_then(Option::as_ref)
    }
}

/// Shortest edge counts from every block to `target`.
pub fn edge_distances(cfg: &Cfg, target: BlockId) -> Vec<Option<u64>> {
    let preds = cfg.predecessors();
    let mut d = vec![None; cfg.len()];
    d[target] = Some(0);
    let mut q = VecDeque::from([target]);
    while let Some(b) = q.pop_front() {
        let next = d[b].unwrap() + 1;
        for &p in &preds[b] {
            if d[p].is_none() {
                d[p] = Some(next);
                q.push_back(p);
            }
        }
    }
    d
}

/// `|Q| · (Σ 1/d)^-1` over the per-target distances of one block; unreachable
/// targets add nothing to the sum. `None` if no target is reachable.
pub fn harmonic_block_distance<S: Scalar>(dists: &[Option<u64>]) -> Option<S> {
    if dists.contains(&Some(0)) {
        return Some(S::zero());
    }
    let mut sum = S::zero();
    let mut any = false;
    for d in dists.iter().flatten() {
        sum = sum + S::ratio(1, *d);
        any = true;
    }
    any.then(|| S::from_count(dists.len() as u64) / sum)
}

pub fn block_distances<S: Scalar>(cfg: &Cfg, targets: &BTreeSet<BlockId>) -> DistanceMap<S> {
    let per_target: Vec<Vec<Option<u64>>> = targets.iter().map(|&t| edge_distances(cfg, t)).collect();
    let dist = (0..cfg.len())
        .map(|b| {
            let ds: Vec<Option<u64>> = per_target.iter().map(|v| v[b]).collect();
            harmonic_block_distance(&ds)
        })
        .collect();
    DistanceMap { dist, targets: targets.clone() }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NPolicy {
    /// `max(1, ceil(fraction · m))` for `m` distinct executed blocks with a
    /// defined distance.
    Fraction(f64),
    Fixed(usize),
}

impl Default for NPolicy {
    fn default() -> Self {
        NPolicy::Fraction(0.1)
    }
}

impl NPolicy {
    pub fn n(self, m: usize) -> usize {
        match self {
            NPolicy::Fraction(f) => ((f * m as f64).ceil() as usize).max(1),
            NPolicy::Fixed(n) => n.max(1),
        }
    }
}

/// Mean of the `n` smallest defined block distances over the distinct
/// executed blocks, or `max_dist` when none is defined.
pub fn code_distance<S: Scalar>(
    executed: impl IntoIterator<Item = BlockId>,
    map: &DistanceMap<S>,
    policy: NPolicy,
    max_dist: S,
) -> S {
    let distinct: BTreeSet<BlockId> = executed.into_iter().collect();
    let mut ds: Vec<S> = distinct.iter().filter_map(|&b| map.get(b).cloned()).collect();
    if ds.is_empty() {
        return max_dist;
    }
    ds.sort_by(|a, b| a.partial_cmp(b).expect("distances are ordered"));
    let n = policy.n(ds.len()).min(ds.len());
    let sum = ds[..n].iter().cloned().fold(S::zero(), |a, b| a + b);
    sum / S::from_count(n as u64)
}

/// Bit length of the gap from the closest observed value to the set; 0 if
/// any observed value lies inside. `None` when nothing was observed.
pub fn range_distance(observed: impl IntoIterator<Item = U256>, set: &IntervalSet<U256>) -> Option<u64> {
    observed
        .into_iter()
        .filter_map(|v| set.gap(v))
        .map(|g| g.bit_len() as u64)
        .min()
}

/// Sum of per-slot range distances over one box of slot ranges; 0 when empty.
pub fn box_distance(ranges: &SlotRanges, observed: &dyn Fn(U256) -> Vec<U256>) -> u64 {
    ranges
        .iter()
        .map(|(slot, set)| range_distance(observed(*slot), set).unwrap_or(U256::BITS as u64))
        .sum()
}

/// Distance to the nearest per-path box of a target, falling back to its
/// hull when it carries no alternatives.
pub fn state_target_distance(target: &StateTarget, observed: &dyn Fn(U256) -> Vec<U256>) -> u64 {
    if target.alternatives.is_empty() {
        return box_distance(&target.ranges, observed);
    }
    target.alternatives.iter().map(|a| box_distance(&a.ranges, observed)).min().unwrap_or(0)
}

/// Harmonic mean of per-target distances, short-circuiting to 0 when any is 0.
pub fn harmonic_state_distance<S: Scalar>(ds: &[u64]) -> S {
    if ds.is_empty() || ds.contains(&0) {
        return S::zero();
    }
    let sum = ds.iter().fold(S::zero(), |a, &d| a + S::ratio(1, d));
    S::from_count(ds.len() as u64) / sum
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitnessParams<S> {
    pub alpha: S,
    pub beta: S,
    pub gamma: S,
    pub use_code: bool,
    pub use_state: bool,
}

impl<S: Scalar> FitnessParams<S> {
    pub fn new(gamma: S) -> Self {
        Self { alpha: S::ratio(1, 2), beta: S::ratio(1, 10), gamma, use_code: true, use_state: true }
    }
}

impl<S: Scalar> Default for FitnessParams<S> {
    fn default() -> Self {
        Self::new(S::ratio(7, 10))
    }
}

/// Raw inputs for scoring one transaction.
#[derive(Clone, Debug, PartialEq)]
pub struct TxScore<S> {
    pub code_distance: S,
    pub state_distance: S,
    pub new_branch_edges: usize,
    pub state_writes: usize,
}

/// Per-generation min-max normalizer. A constant population maps to 0.
#[derive(Clone, Debug)]
pub struct MinMax<S> {
    lo: S,
    hi: S,
}

impl<S: Scalar> MinMax<S> {
    pub fn over<'a>(values: impl IntoIterator<Item = &'a S>) -> Option<Self> {
        let mut it = values.into_iter();
        let first = it.next()?.clone();
        let (mut lo, mut hi) = (first.clone(), first);
        for v in it {
            if *v < lo {
                lo = v.clone();
            }
            if *v > hi {
                hi = v.clone();
            }
        }
        Some(Self { lo, hi })
    }

    pub fn apply(&self, v: &S) -> S {
        if self.hi <= self.lo {
            S::zero()
        } else {
            (v.clone() - self.lo.clone()) / (self.hi.clone() - self.lo.clone())
        }
    }
}

/// Inverse-distance score `(D + β)^-1` for already-normalized distances.
pub fn sc_bug<S: Scalar>(f_code: S, f_state: S, p: &FitnessParams<S>) -> S {
    let code = if p.use_code { p.alpha.clone() * f_code } else { S::zero() };
    let state = if p.use_state { (S::one() - p.alpha.clone()) * f_state } else { S::zero() };
    S::one() / (code + state + p.beta.clone())
}

pub fn combine<S: Scalar>(sc_bug: S, sc_branch: S, sc_dep: S, p: &FitnessParams<S>) -> S {
    p.gamma.clone() * sc_bug + (S::one() - p.gamma.clone()) * (sc_branch + sc_dep)
}

/// Fitness of every seed in a generation; a seed scores as its best transaction.
pub fn generation_fitness<S: Scalar>(seeds: &[Vec<TxScore<S>>], branch_edges: usize, p: &FitnessParams<S>) -> Vec<S> {
    let all = || seeds.iter().flatten();
    let code_norm = MinMax::over(all().map(|t| &t.code_distance));
    let state_norm = MinMax::over(all().map(|t| &t.state_distance));
    let max_writes = all().map(|t| t.state_writes).max().unwrap_or(0);
    seeds
        .iter()
        .map(|txs| {
            txs.iter()
                .map(|t| {
                    let fc = code_norm.as_ref().map_or(S::zero(), |n| n.apply(&t.code_distance));
                    let fs = state_norm.as_ref().map_or(S::zero(), |n| n.apply(&t.state_distance));
                    let branch = if branch_edges == 0 {
                        S::zero()
                    } else {
                        S::ratio(t.new_branch_edges as u64, branch_edges as u64)
                    };
                    let dep = if max_writes == 0 { S::zero() } else { S::ratio(t.state_writes as u64, max_writes as u64) };
                    combine(sc_bug(fc, fs, p), branch, dep, p)
                })
                .fold(None, |best: Option<S>, f| match best {
                    Some(b) if b >= f => Some(b),
                    _ => Some(f),
                })
                .unwrap_or_else(S::zero)
        })
        .collect()
}

/// Fitness-proportional selection probabilities.
pub fn selection_probabilities<S: Scalar>(fitness: &[S]) -> Result<Vec<S>> {
    if fitness.is_empty() {
        return Err(Error::EmptyGeneration);
    }
    let total = fitness.iter().cloned().fold(S::zero(), |a, b| a + b);
    if total <= S::zero() {
        let n = S::from_count(fitness.len() as u64);
        return Ok(fitness.iter().map(|_| S::one() / n.clone()).collect());
    }
    Ok(fitness.iter().map(|f| f.clone() / total.clone()).collect())
}
