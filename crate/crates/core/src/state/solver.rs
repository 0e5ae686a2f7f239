//! Interval propagation over concrete storage slots.

use std::collections::BTreeMap;

use ruint::aliases::U256;

use super::constraint::{CmpOp, Conjunct, Constraint, DNF_LIMIT};
use super::interval::IntervalSet;
use crate::symbolic::SymExpr;
use crate::word::{signed_lt, BinOp, UnOp};

pub type SlotRanges = BTreeMap<U256, IntervalSet<U256>>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Solution {
    /// One box of slot ranges per satisfiable conjunct of the DNF.
    pub alternatives: Vec<SlotRanges>,
    /// Some conjunct was satisfiable.
    pub satisfiable: bool,
    /// DNF exceeded its size cap; state was left unconstrained.
    pub overflowed: bool,
}

impl Solution {
    /// Per-slot union over alternatives, restricted to slots every
    /// alternative constrains. Empty if any alternative is unconstrained.
    pub fn hull(&self) -> SlotRanges {
        let Some(first) = self.alternatives.first() else { return SlotRanges::new() };
        let mut out = SlotRanges::new();
        for (slot, set) in first {
            let mut acc = set.clone();
            let mut everywhere = true;
            for alt in &self.alternatives[1..] {
                match alt.get(slot) {
                    Some(s) => acc = acc.union(s),
                    None => {
                        everywhere = false;
                        break;
                    }
                }
            }
            if everywhere && !acc.is_full() {
                out.insert(*slot, acc);
            }
        }
        out
    }
}

/// `e` as `±x + k` for a concrete storage slot `x`.
fn linear(e: &SymExpr) -> Option<(U256, bool, U256)> {
    match e {
        SymExpr::Storage(slot) => SymExpr::concrete_slot(slot).map(|s| (s, false, U256::ZERO)),
        SymExpr::Binary(BinOp::Add, a, b) => match (a.as_const(), b.as_const()) {
            (Some(c), None) => linear(b).map(|(s, n, k)| (s, n, k.wrapping_add(c))),
            (None, Some(c)) => linear(a).map(|(s, n, k)| (s, n, k.wrapping_add(c))),
            _ => None,
        },
        // Operand order: a - b.
        SymExpr::Binary(BinOp::Sub, a, b) => match (a.as_const(), b.as_const()) {
            (None, Some(c)) => linear(a).map(|(s, n, k)| (s, n, k.wrapping_sub(c))),
            (Some(c), None) => linear(b).map(|(s, n, k)| (s, !n, c.wrapping_sub(k))),
            _ => None,
        },
        // ~y = -y - 1
        SymExpr::Unary(UnOp::Not, a) => linear(a).map(|(s, n, k)| (s, !n, U256::ZERO.wrapping_sub(k).wrapping_sub(U256::from(1)))),
        _ => None,
    }
}

fn holds(op: CmpOp, a: U256, b: U256) -> bool {
    match op {
        CmpOp::Lt => a < b,
        CmpOp::Le => a <= b,
        CmpOp::Gt => a > b,
        CmpOp::Ge => a >= b,
        CmpOp::Slt => signed_lt(a, b),
        CmpOp::Sle => !signed_lt(b, a),
        CmpOp::Sgt => signed_lt(b, a),
        CmpOp::Sge => !signed_lt(a, b),
        CmpOp::Eq => a == b,
        CmpOp::Ne => a != b,
    }
}

/// `{v | v op c}`.
pub fn relation_set(op: CmpOp, c: U256) -> IntervalSet<U256> {
    type S = IntervalSet<U256>;
    match op {
        CmpOp::Lt => S::less_than(c),
        CmpOp::Le => S::greater_than(c).complement(),
        CmpOp::Gt => S::greater_than(c),
        CmpOp::Ge => S::less_than(c).complement(),
        CmpOp::Slt => S::signed_less_than(c),
        CmpOp::Sle => S::signed_greater_than(c).complement(),
        CmpOp::Sgt => S::signed_greater_than(c),
        CmpOp::Sge => S::signed_less_than(c).complement(),
        CmpOp::Eq => S::point(c),
        CmpOp::Ne => S::point(c).complement(),
    }
}

enum Atom {
    Trivial(bool),
    Slot(U256, IntervalSet<U256>),
    /// Not expressible over a single concrete slot; treated as true.
    Opaque,
}

fn atom(c: &Constraint) -> Atom {
    let Constraint::Cmp(op, a, b) = c else {
        return match c {
            Constraint::True => Atom::Trivial(true),
            Constraint::False => Atom::Trivial(false),
            _ => Atom::Opaque,
        };
    };
    let (op, term, k) = match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => return Atom::Trivial(holds(*op, x, y)),
        (None, Some(y)) => (*op, a, y),
        (Some(x), None) => (op.flip(), b, x),
        (None, None) => return Atom::Opaque,
    };
    match linear(term) {
        Some((slot, neg, off)) => {
            // ±x + off ∈ E  ⇔  x ∈ ±(E - off)
            let e = relation_set(op, k).shift(U256::ZERO.wrapping_sub(off));
            Atom::Slot(slot, if neg { e.negate() } else { e })
        }
        None => Atom::Opaque,
    }
}

/// Slot box for one conjunct, `None` if it is contradictory.
pub fn solve_conjunct(conj: &Conjunct) -> Option<SlotRanges> {
    let mut out = SlotRanges::new();
    for c in conj {
        match atom(c) {
            Atom::Trivial(true) | Atom::Opaque => {}
            Atom::Trivial(false) => return None,
            Atom::Slot(slot, set) => {
                let cur = out.entry(slot).or_insert_with(IntervalSet::full);
                *cur = cur.intersect(&set);
                if cur.is_empty() {
                    return None;
                }
            }
        }
    }
    out.retain(|_, s| !s.is_full());
    Some(out)
}

pub fn solve(constraint: &Constraint) -> Solution {
    let Some(dnf) = constraint.simplify().to_dnf(DNF_LIMIT) else {
        return Solution { alternatives: vec![SlotRanges::new()], satisfiable: true, overflowed: true };
    };
    let mut alternatives: Vec<SlotRanges> = Vec::new();
    for conj in &dnf {
        if let Some(b) = solve_conjunct(conj) {
            if !alternatives.contains(&b) {
                alternatives.push(b);
            }
        }
    }
    Solution { satisfiable: !alternatives.is_empty(), alternatives, overflowed: false }
}
