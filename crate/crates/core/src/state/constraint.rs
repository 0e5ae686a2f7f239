use std::fmt;

use serde::{Deserialize, Serialize};

use crate::symbolic::SymExpr;
use crate::word::{BinOp, UnOp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Slt,
    Sle,
    Sgt,
    Sge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn negate(self) -> CmpOp {
        use CmpOp::*;
        match self {
            Lt => Ge,
            Le => Gt,
            Gt => Le,
            Ge => Lt,
            Slt => Sge,
            Sle => Sgt,
            Sgt => Sle,
            Sge => Slt,
            Eq => Ne,
            Ne => Eq,
        }
    }

    /// The relation with its operands exchanged: `a op b` iff `b op.flip() a`.
    pub fn flip(self) -> CmpOp {
        use CmpOp::*;
        match self {
            Lt => Gt,
            Le => Ge,
            Gt => Lt,
            Ge => Le,
            Slt => Sgt,
            Sle => Sge,
            Sgt => Slt,
            Sge => Sle,
            Eq => Eq,
            Ne => Ne,
        }
    }

    fn from_binop(op: BinOp) -> Option<CmpOp> {
        Some(match op {
            BinOp::Lt => CmpOp::Lt,
            BinOp::Gt => CmpOp::Gt,
            BinOp::Slt => CmpOp::Slt,
            BinOp::Sgt => CmpOp::Sgt,
            BinOp::Eq => CmpOp::Eq,
            _ => return None,
        })
    }
}

/// Relations over symbolic expressions. `Cmp(op, a, b)` reads `a op b`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Constraint {
    True,
    False,
    NonZero(SymExpr),
    Zero(SymExpr),
    Cmp(CmpOp, SymExpr, SymExpr),
    And(Vec<Constraint>),
    Or(Vec<Constraint>),
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::True => f.write_str("TRUE"),
            Constraint::False => f.write_str("FALSE"),
            Constraint::NonZero(e) => write!(f, "{e:?} != 0"),
            Constraint::Zero(e) => write!(f, "{e:?} == 0"),
            Constraint::Cmp(op, a, b) => write!(f, "{op:?}({a:?}, {b:?})"),
            Constraint::And(cs) => f.debug_tuple("And").field(cs).finish(),
            Constraint::Or(cs) => f.debug_tuple("Or").field(cs).finish(),
        }
    }
}

pub type Conjunct = Vec<Constraint>;

/// Cap on conjuncts produced by DNF conversion.
pub const DNF_LIMIT: usize = 4096;

impl Constraint {
    pub fn and(cs: Vec<Constraint>) -> Constraint {
        Constraint::And(cs)
    }

    pub fn or(cs: Vec<Constraint>) -> Constraint {
        Constraint::Or(cs)
    }

    /// Whether any leaf reads storage.
    pub fn is_state_related(&self) -> bool {
        match self {
            Constraint::True | Constraint::False => false,
            Constraint::NonZero(e) | Constraint::Zero(e) => e.mentions_storage(),
            Constraint::Cmp(_, a, b) => a.mentions_storage() || b.mentions_storage(),
            Constraint::And(cs) | Constraint::Or(cs) => cs.iter().any(Constraint::is_state_related),
        }
    }

    pub fn has_unknown(&self) -> bool {
        match self {
            Constraint::True | Constraint::False => false,
            Constraint::NonZero(e) | Constraint::Zero(e) => e.has_unknown(),
            Constraint::Cmp(_, a, b) => a.has_unknown() || b.has_unknown(),
            Constraint::And(cs) | Constraint::Or(cs) => cs.iter().any(Constraint::has_unknown),
        }
    }

    /// Push zero tests through boolean structure down to comparison atoms.
    pub fn simplify(&self) -> Constraint {
        match self {
            Constraint::NonZero(e) => truth(&e.normalize(), true),
            Constraint::Zero(e) => truth(&e.normalize(), false),
            Constraint::Cmp(op, a, b) => Constraint::Cmp(*op, a.normalize(), b.normalize()),
            Constraint::And(cs) => Constraint::And(cs.iter().map(Constraint::simplify).collect()),
            Constraint::Or(cs) => Constraint::Or(cs.iter().map(Constraint::simplify).collect()),
            c => c.clone(),
        }
    }

    /// Disjunctive normal form; `None` if it would exceed `limit` conjuncts.
    pub fn to_dnf(&self, limit: usize) -> Option<Vec<Conjunct>> {
        match self {
            Constraint::True => Some(vec![vec![]]),
            Constraint::False => Some(vec![]),
            Constraint::Or(cs) => {
                let mut out = Vec::new();
                for c in cs {
                    out.extend(c.to_dnf(limit)?);
                    if out.len() > limit {
                        return None;
                    }
                }
                Some(out)
            }
            Constraint::And(cs) => {
                let mut acc: Vec<Conjunct> = vec![vec![]];
                for c in cs {
                    let d = c.to_dnf(limit)?;
                    if acc.len().saturating_mul(d.len()) > limit {
                        return None;
                    }
                    acc = acc
                        .iter()
                        .flat_map(|a| d.iter().map(move |b| a.iter().chain(b).cloned().collect()))
                        .collect();
                }
                Some(acc)
            }
            atom => Some(vec![vec![atom.clone()]]),
        }
    }
}

/// Constraint that `e` is nonzero (`want`) or zero (`!want`).
fn truth(e: &SymExpr, want: bool) -> Constraint {
    match e {
        SymExpr::Const(v) => {
            if v.is_zero() != want {
                Constraint::True
            } else {
                Constraint::False
            }
        }
        SymExpr::Unary(UnOp::IsZero, a) => truth(a, !want),
        SymExpr::Binary(op, a, b) if op.is_comparison() => {
            let cmp = CmpOp::from_binop(*op).unwrap();
            let cmp = if want { cmp } else { cmp.negate() };
            Constraint::Cmp(cmp, (**a).clone(), (**b).clone())
        }
        SymExpr::Binary(BinOp::And, a, b) if a.is_boolean() && b.is_boolean() => {
            let parts = vec![truth(a, want), truth(b, want)];
            if want {
                Constraint::And(parts)
            } else {
                Constraint::Or(parts)
            }
        }
        SymExpr::Binary(BinOp::Or, a, b) if a.is_boolean() && b.is_boolean() => {
            let parts = vec![truth(a, want), truth(b, want)];
            if want {
                Constraint::Or(parts)
            } else {
                Constraint::And(parts)
            }
        }
        SymExpr::Binary(BinOp::Or, a, b) if !want => Constraint::And(vec![truth(a, false), truth(b, false)]),
        _ => {
            let zero = SymExpr::Const(ruint::aliases::U256::ZERO);
            Constraint::Cmp(if want { CmpOp::Ne } else { CmpOp::Eq }, e.clone(), zero)
        }
    }
}
