//! 256-bit machine-word semantics shared by the VM and constant folding.

use ruint::aliases::U256;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Mul,
    Sub,
    Div,
    Mod,
    Lt,
    Gt,
    Slt,
    Sgt,
    Eq,
    And,
    Or,
    Xor,
    Shl,
    Shr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnOp {
    IsZero,
    Not,
}

impl BinOp {
    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Gt | BinOp::Slt | BinOp::Sgt | BinOp::Eq)
    }
}

fn bool_word(b: bool) -> U256 {
    if b {
        U256::from(1)
    } else {
        U256::ZERO
    }
}

const SIGN: U256 = U256::from_limbs([0, 0, 0, 1 << 63]);

/// Two's-complement signed less-than.
pub fn signed_lt(a: U256, b: U256) -> bool {
    (a ^ SIGN) < (b ^ SIGN)
}

/// Apply `op` with EVM operand order: `a` is the top of the stack.
pub fn apply_binary(op: BinOp, a: U256, b: U256) -> U256 {
    match op {
        BinOp::Add => a.wrapping_add(b),
        BinOp::Mul => a.wrapping_mul(b),
        BinOp::Sub => a.wrapping_sub(b),
        BinOp::Div => a.checked_div(b).unwrap_or(U256::ZERO),
        BinOp::Mod => a.checked_rem(b).unwrap_or(U256::ZERO),
        BinOp::Lt => bool_word(a < b),
        BinOp::Gt => bool_word(a > b),
        BinOp::Slt => bool_word(signed_lt(a, b)),
        BinOp::Sgt => bool_word(signed_lt(b, a)),
        BinOp::Eq => bool_word(a == b),
        BinOp::And => a & b,
        BinOp::Or => a | b,
        BinOp::Xor => a ^ b,
        // SHL/SHR take the shift amount on top.
        BinOp::Shl => shift_amount(a).map_or(U256::ZERO, |s| b << s),
        BinOp::Shr => shift_amount(a).map_or(U256::ZERO, |s| b >> s),
    }
}

fn shift_amount(a: U256) -> Option<usize> {
    usize::try_from(a).ok().filter(|&s| s < 256)
}

pub fn apply_unary(op: UnOp, a: U256) -> U256 {
    match op {
        UnOp::IsZero => bool_word(a.is_zero()),
        UnOp::Not => !a,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operand_order_matches_evm() {
        let (five, three) = (U256::from(5), U256::from(3));
        assert_eq!(apply_binary(BinOp::Sub, five, three), U256::from(2));
        assert_eq!(apply_binary(BinOp::Gt, five, three), U256::from(1));
        assert_eq!(apply_binary(BinOp::Shl, U256::from(4), U256::from(1)), U256::from(16));
        assert_eq!(apply_binary(BinOp::Div, five, U256::ZERO), U256::ZERO);
    }

    #[test]
    fn signed_compare() {
        let minus_one = U256::MAX;
        assert!(signed_lt(minus_one, U256::ZERO));
        assert_eq!(apply_binary(BinOp::Sgt, U256::ZERO, minus_one), U256::from(1));
        assert!(!signed_lt(U256::from(1), minus_one));
    }
}
