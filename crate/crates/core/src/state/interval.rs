//! Sets of disjoint inclusive intervals over a fixed-width unsigned domain.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scalar::UnsignedWord;

/// Sorted, disjoint, non-adjacent inclusive intervals.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalSet<W> {
    ranges: Vec<(W, W)>,
}

impl<W: UnsignedWord> IntervalSet<W> {
    pub fn empty() -> Self {
        Self { ranges: Vec::new() }
    }

    pub fn full() -> Self {
        Self { ranges: vec![(W::zero(), W::max_value())] }
    }

    /// `[lo, hi]`, empty when `lo > hi`.
    pub fn range(lo: W, hi: W) -> Self {
        if lo > hi {
            Self::empty()
        } else {
            Self { ranges: vec![(lo, hi)] }
        }
    }

    pub fn point(v: W) -> Self {
        Self::range(v, v)
    }

    pub fn from_ranges(ranges: impl IntoIterator<Item = (W, W)>) -> Self {
        let mut rs: Vec<(W, W)> = ranges.into_iter().filter(|(lo, hi)| lo <= hi).collect();
        rs.sort_unstable();
        let mut out: Vec<(W, W)> = Vec::with_capacity(rs.len());
        for (lo, hi) in rs {
            if let Some(last) = out.last_mut() {
                // Merge overlapping or adjacent.
                if last.1 == W::max_value() || lo <= last.1.wrapping_add(&W::one()) {
                    if hi > last.1 {
                        last.1 = hi;
                    }
                    continue;
                }
            }
            out.push((lo, hi));
        }
        Self { ranges: out }
    }

    pub fn ranges(&self) -> &[(W, W)] {
        &self.ranges
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.ranges == [(W::zero(), W::max_value())]
    }

    pub fn contains(&self, v: W) -> bool {
        self.ranges.iter().any(|&(lo, hi)| lo <= v && v <= hi)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.ranges.len() && j < other.ranges.len() {
            let (a_lo, a_hi) = self.ranges[i];
            let (b_lo, b_hi) = other.ranges[j];
            let lo = a_lo.max(b_lo);
            let hi = a_hi.min(b_hi);
            if lo <= hi {
                out.push((lo, hi));
            }
            if a_hi < b_hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { ranges: out }
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::from_ranges(self.ranges.iter().chain(&other.ranges).copied())
    }

    pub fn complement(&self) -> Self {
        let mut out = Vec::new();
        let mut next = Some(W::zero());
        for &(lo, hi) in &self.ranges {
            if let Some(start) = next {
                if lo > start {
                    out.push((start, lo.wrapping_sub(&W::one())));
                }
            }
            next = hi.checked_add(&W::one());
        }
        if let Some(start) = next {
            out.push((start, W::max_value()));
        }
        Self { ranges: out }
    }

    /// Image under `x ↦ x + k` (wrapping).
    pub fn shift(&self, k: W) -> Self {
        let mut out = Vec::new();
        for &(lo, hi) in &self.ranges {
            let (nlo, nhi) = (lo.wrapping_add(&k), hi.wrapping_add(&k));
            if nlo <= nhi {
                out.push((nlo, nhi));
            } else {
                out.push((nlo, W::max_value()));
                out.push((W::zero(), nhi));
            }
        }
        Self::from_ranges(out)
    }

    /// Image under `x ↦ -x` (wrapping).
    pub fn negate(&self) -> Self {
        let mut out = Vec::new();
        for &(lo, hi) in &self.ranges {
            let lo = if lo.is_zero() {
                out.push((W::zero(), W::zero()));
                if hi.is_zero() {
                    continue;
                }
                W::one()
            } else {
                lo
            };
            out.push((hi.wrapping_neg(), lo.wrapping_neg()));
        }
        Self::from_ranges(out)
    }

    /// `{x | x < c}`.
    pub fn less_than(c: W) -> Self {
        match c.checked_sub(&W::one()) {
            Some(hi) => Self::range(W::zero(), hi),
            None => Self::empty(),
        }
    }

    /// `{x | x > c}`.
    pub fn greater_than(c: W) -> Self {
        match c.checked_add(&W::one()) {
            Some(lo) => Self::range(lo, W::max_value()),
            None => Self::empty(),
        }
    }

    /// `{x | x <s c}` in two's complement.
    pub fn signed_less_than(c: W) -> Self {
        // Biasing by the sign bit is an order isomorphism signed -> unsigned.
        let sb = W::sign_bit();
        Self::less_than(c.wrapping_add(&sb)).shift(sb)
    }

    /// `{x | x >s c}` in two's complement.
    pub fn signed_greater_than(c: W) -> Self {
        let sb = W::sign_bit();
        Self::greater_than(c.wrapping_add(&sb)).shift(sb)
    }

    /// Distance from `v` to the set: 0 inside, otherwise the smallest
    /// `min(|v - lo|, |v - hi|)` over intervals. `None` for the empty set.
    pub fn gap(&self, v: W) -> Option<W> {
        if self.contains(v) {
            return Some(W::zero());
        }
        let absdiff = |a: W, b: W| if a >= b { a.wrapping_sub(&b) } else { b.wrapping_sub(&a) };
        self.ranges
            .iter()
            .map(|&(lo, hi)| absdiff(v, lo).min(absdiff(v, hi)))
            .min()
    }

    /// Interval endpoints and midpoints, the values worth seeding a mutation pool with.
    pub fn landmarks(&self) -> Vec<W> {
        let mut out = Vec::new();
        for &(lo, hi) in &self.ranges {
            out.push(lo);
            out.push(hi);
            out.push(lo.wrapping_add(&hi.wrapping_sub(&lo).half()));
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Number of disjoint intervals.
    pub fn len(&self) -> usize {
        self.ranges.len()
    }
}

impl<W: UnsignedWord> fmt::Debug for IntervalSet<W> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.ranges.iter().map(|(lo, hi)| format!("[{lo:?},{hi:?}]")))
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use ruint::aliases::U256;

    type S8 = IntervalSet<u8>;

    fn members(s: &S8) -> Vec<u8> {
        (0..=255u8).filter(|&v| s.contains(v)).collect()
    }

    fn set_strategy() -> impl Strategy<Value = S8> {
        prop::collection::vec((any::<u8>(), any::<u8>()), 0..4).prop_map(S8::from_ranges)
    }

    proptest! {
        #[test]
        fn normalised(s in set_strategy()) {
            for w in s.ranges().windows(2) {
                prop_assert!(w[0].1 < w[1].0);
                prop_assert!(w[0].1.wrapping_add(1) != w[1].0);
            }
        }

        #[test]
        fn set_algebra_matches_enumeration(a in set_strategy(), b in set_strategy()) {
            let ia = a.intersect(&b);
            let ua = a.union(&b);
            let ca = a.complement();
            for v in 0..=255u8 {
                prop_assert_eq!(ia.contains(v), a.contains(v) && b.contains(v));
                prop_assert_eq!(ua.contains(v), a.contains(v) || b.contains(v));
                prop_assert_eq!(ca.contains(v), !a.contains(v));
            }
        }

        #[test]
        fn shift_and_negate_are_images(a in set_strategy(), k in any::<u8>()) {
            let sh = a.shift(k);
            let ng = a.negate();
            let mut want_sh: Vec<u8> = members(&a).iter().map(|v| v.wrapping_add(k)).collect();
            want_sh.sort_unstable();
            let mut want_ng: Vec<u8> = members(&a).iter().map(|v| v.wrapping_neg()).collect();
            want_ng.sort_unstable();
            prop_assert_eq!(members(&sh), want_sh);
            prop_assert_eq!(members(&ng), want_ng);
        }

        #[test]
        fn comparisons_match_enumeration(c in any::<u8>()) {
            let lt = S8::less_than(c);
            let gt = S8::greater_than(c);
            let slt = S8::signed_less_than(c);
            let sgt = S8::signed_greater_than(c);
            for v in 0..=255u8 {
                prop_assert_eq!(lt.contains(v), v < c);
                prop_assert_eq!(gt.contains(v), v > c);
                prop_assert_eq!(slt.contains(v), (v as i8) < (c as i8));
                prop_assert_eq!(sgt.contains(v), (v as i8) > (c as i8));
            }
        }

        #[test]
        fn gap_matches_brute_force(a in set_strategy(), v in any::<u8>()) {
            let want = a.ranges().iter()
                .map(|&(lo, hi)| if lo <= v && v <= hi { 0 } else { v.abs_diff(lo).min(v.abs_diff(hi)) })
                .min();
            prop_assert_eq!(a.gap(v), want);
        }
    }

    #[test]
    fn wide_word_edges() {
        let s = IntervalSet::<U256>::less_than(U256::from(5));
        assert_eq!(s.ranges(), &[(U256::ZERO, U256::from(4))]);
        assert!(IntervalSet::<U256>::less_than(U256::ZERO).is_empty());
        assert!(IntervalSet::<U256>::greater_than(U256::MAX).is_empty());
        assert!(IntervalSet::<U256>::full().complement().is_empty());
        assert!(IntervalSet::<U256>::empty().complement().is_full());
        let s = IntervalSet::range(U256::from(31), U256::from(39));
        assert_eq!(s.landmarks(), vec![U256::from(31), U256::from(35), U256::from(39)]);
    }
}
