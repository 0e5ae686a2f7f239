//! Symbolic expressions over stack values, and a forward symbolic machine.

use std::fmt;

use ruint::aliases::U256;
use serde::{Deserialize, Serialize};

use crate::bytecode::{Instruction, Opcode};
use crate::word::{apply_binary, apply_unary, BinOp, UnOp};

pub const DEFAULT_DEPTH_BOUND: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BlockField {
    Timestamp,
    Number,
    Coinbase,
    PrevRandao,
    GasLimit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EnvField {
    Address,
    CallDataSize,
    Gas,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SymExpr {
    Const(U256),
    /// Value of the storage slot addressed by the inner expression.
    Storage(Box<SymExpr>),
    /// 32-byte calldata word at the inner offset.
    Calldata(Box<SymExpr>),
    Caller,
    CallValue,
    Block(BlockField),
    Env(EnvField),
    Unary(UnOp, Box<SymExpr>),
    /// Operands in EVM order: the first was on top of the stack.
    Binary(BinOp, Box<SymExpr>, Box<SymExpr>),
    /// Hash of consecutive 32-byte memory words (mapping-slot idiom).
    Sha3(Vec<SymExpr>),
    Unknown,
}

impl SymExpr {
    pub fn konst(v: u64) -> Self {
        SymExpr::Const(U256::from(v))
    }

    pub fn storage(slot: SymExpr) -> Self {
        Self::bounded(SymExpr::Storage(Box::new(slot)))
    }

    pub fn calldata(offset: SymExpr) -> Self {
        Self::bounded(SymExpr::Calldata(Box::new(offset)))
    }

    pub fn unary(op: UnOp, a: SymExpr) -> Self {
        Self::bounded(SymExpr::Unary(op, Box::new(a)))
    }

    pub fn binary(op: BinOp, a: SymExpr, b: SymExpr) -> Self {
        Self::bounded(SymExpr::Binary(op, Box::new(a), Box::new(b)))
    }

    pub fn sha3(words: Vec<SymExpr>) -> Self {
        Self::bounded(SymExpr::Sha3(words))
    }

    fn bounded(e: SymExpr) -> Self {
        if e.depth() > DEFAULT_DEPTH_BOUND {
            SymExpr::Unknown
        } else {
            e
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            SymExpr::Storage(a) | SymExpr::Calldata(a) | SymExpr::Unary(_, a) => 1 + a.depth(),
            SymExpr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
            SymExpr::Sha3(ws) => 1 + ws.iter().map(SymExpr::depth).max().unwrap_or(0),
            _ => 1,
        }
    }

    pub fn as_const(&self) -> Option<U256> {
        match self {
            SymExpr::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn children(&self) -> Vec<&SymExpr> {
        match self {
            SymExpr::Storage(a) | SymExpr::Calldata(a) | SymExpr::Unary(_, a) => vec![a],
            SymExpr::Binary(_, a, b) => vec![a, b],
            SymExpr::Sha3(ws) => ws.iter().collect(),
            _ => vec![],
        }
    }

    /// True if `pred` holds for this node or any descendant.
    pub fn any(&self, pred: &impl Fn(&SymExpr) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.any(pred))
    }

    pub fn has_unknown(&self) -> bool {
        self.any(&|e| matches!(e, SymExpr::Unknown))
    }

    pub fn mentions_storage(&self) -> bool {
        self.any(&|e| matches!(e, SymExpr::Storage(_)))
    }

    pub fn mentions_calldata(&self) -> bool {
        self.any(&|e| matches!(e, SymExpr::Calldata(_) | SymExpr::Env(EnvField::CallDataSize)))
    }

    pub fn mentions_caller(&self) -> bool {
        self.any(&|e| matches!(e, SymExpr::Caller))
    }

    pub fn mentions_callvalue(&self) -> bool {
        self.any(&|e| matches!(e, SymExpr::CallValue))
    }

    pub fn mentions_block(&self) -> bool {
        self.any(&|e| matches!(e, SymExpr::Block(_)))
    }

    /// A storage read whose slot depends on the caller (`mapping[msg.sender]`).
    pub fn mentions_caller_indexed_storage(&self) -> bool {
        self.any(&|e| matches!(e, SymExpr::Storage(slot) if slot.mentions_caller()))
    }

    /// An `EQ` one of whose operands depends on `CALLER`.
    pub fn mentions_caller_equality(&self) -> bool {
        self.any(&|e| {
            matches!(e, SymExpr::Binary(BinOp::Eq, a, b) if a.mentions_caller() || b.mentions_caller())
        })
    }

    /// Values known to be 0 or 1.
    pub fn is_boolean(&self) -> bool {
        match self {
            SymExpr::Binary(op, _, _) => op.is_comparison(),
            SymExpr::Unary(UnOp::IsZero, _) => true,
            SymExpr::Const(v) => *v <= U256::from(1),
            _ => false,
        }
    }

    /// Fold constant sub-expressions bottom-up.
    pub fn normalize(&self) -> SymExpr {
        match self {
            SymExpr::Storage(a) => SymExpr::Storage(Box::new(a.normalize())),
            SymExpr::Calldata(a) => SymExpr::Calldata(Box::new(a.normalize())),
            SymExpr::Unary(op, a) => match a.normalize() {
                SymExpr::Const(v) => SymExpr::Const(apply_unary(*op, v)),
                a => SymExpr::Unary(*op, Box::new(a)),
            },
            SymExpr::Binary(op, a, b) => match (a.normalize(), b.normalize()) {
                (SymExpr::Const(x), SymExpr::Const(y)) => SymExpr::Const(apply_binary(*op, x, y)),
                (a, b) => SymExpr::Binary(*op, Box::new(a), Box::new(b)),
            },
            SymExpr::Sha3(ws) => SymExpr::Sha3(ws.iter().map(SymExpr::normalize).collect()),
            other => other.clone(),
        }
    }

    /// Concrete storage slot, if the slot expression folds to a constant.
    pub fn concrete_slot(slot: &SymExpr) -> Option<U256> {
        slot.normalize().as_const()
    }
}

impl fmt::Debug for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymExpr::Const(v) => write!(f, "{v}"),
            SymExpr::Storage(s) => write!(f, "storage[{s:?}]"),
            SymExpr::Calldata(o) => write!(f, "calldata[{o:?}]"),
            SymExpr::Caller => f.write_str("caller"),
            SymExpr::CallValue => f.write_str("callvalue"),
            SymExpr::Block(b) => write!(f, "{b:?}"),
            SymExpr::Env(e) => write!(f, "{e:?}"),
            SymExpr::Unary(op, a) => write!(f, "{op:?}({a:?})"),
            SymExpr::Binary(op, a, b) => write!(f, "{op:?}({a:?}, {b:?})"),
            SymExpr::Sha3(ws) => write!(f, "sha3{ws:?}"),
            SymExpr::Unknown => f.write_str("?"),
        }
    }
}

/// Expression produced by a pure (non-memory, non-storage) opcode, given
/// its operands in pop order. `None` for opcodes this helper does not model.
pub fn pure_result(op: Opcode, args: &[SymExpr]) -> Option<SymExpr> {
    let bin = |o| Some(SymExpr::binary(o, args[0].clone(), args[1].clone()));
    match op {
        Opcode::Add => bin(BinOp::Add),
        Opcode::Mul => bin(BinOp::Mul),
        Opcode::Sub => bin(BinOp::Sub),
        Opcode::Div => bin(BinOp::Div),
        Opcode::Mod => bin(BinOp::Mod),
        Opcode::Lt => bin(BinOp::Lt),
        Opcode::Gt => bin(BinOp::Gt),
        Opcode::Slt => bin(BinOp::Slt),
        Opcode::Sgt => bin(BinOp::Sgt),
        Opcode::Eq => bin(BinOp::Eq),
        Opcode::And => bin(BinOp::And),
        Opcode::Or => bin(BinOp::Or),
        Opcode::Xor => bin(BinOp::Xor),
        Opcode::Shl => bin(BinOp::Shl),
        Opcode::Shr => bin(BinOp::Shr),
        Opcode::IsZero => Some(SymExpr::unary(UnOp::IsZero, args[0].clone())),
        Opcode::Not => Some(SymExpr::unary(UnOp::Not, args[0].clone())),
        Opcode::Caller => Some(SymExpr::Caller),
        Opcode::CallValue => Some(SymExpr::CallValue),
        Opcode::CallDataLoad => Some(SymExpr::calldata(args[0].clone())),
        Opcode::Timestamp => Some(SymExpr::Block(BlockField::Timestamp)),
        Opcode::Number => Some(SymExpr::Block(BlockField::Number)),
        Opcode::Coinbase => Some(SymExpr::Block(BlockField::Coinbase)),
        Opcode::PrevRandao => Some(SymExpr::Block(BlockField::PrevRandao)),
        Opcode::GasLimit => Some(SymExpr::Block(BlockField::GasLimit)),
        Opcode::Address => Some(SymExpr::Env(EnvField::Address)),
        Opcode::CallDataSize => Some(SymExpr::Env(EnvField::CallDataSize)),
        Opcode::Gas => Some(SymExpr::Env(EnvField::Gas)),
        Opcode::SLoad => Some(SymExpr::storage(args[0].clone())),
        _ => None,
    }
}

/// Side effects surfaced by [`SymMachine::step`], with symbolic operands.
#[derive(Clone, Debug)]
pub enum Effect {
    None,
    SLoad { slot: SymExpr },
    SStore { slot: SymExpr, value: SymExpr },
    Call {
        kind: Opcode,
        gas: SymExpr,
        target: SymExpr,
        value: SymExpr,
        /// Whether the argument memory region may hold calldata-derived bytes.
        args_from_calldata: bool,
    },
    SelfDestruct { beneficiary: SymExpr },
    Branch { cond: SymExpr, dest: SymExpr },
    Jump { dest: SymExpr },
    Halt,
}

/// One write to symbolic memory. Offsets and lengths are `None` when not constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MemWrite {
    Word { off: Option<U256>, value: SymExpr },
    Byte { off: Option<U256>, from_calldata: bool },
    Calldata { dest: Option<U256>, src: SymExpr, len: Option<U256> },
    /// Bytes we do not model, such as call return data.
    Opaque { off: Option<U256>, len: Option<U256> },
}

const WORD: u64 = 32;

fn overlaps(a: U256, len: U256, o: U256) -> bool {
    a < o.saturating_add(U256::from(WORD)) && o < a.saturating_add(len)
}

/// Value of the 32-byte word at constant offset `o` after the writes in `log`.
pub fn resolve_load(log: &[MemWrite], o: U256) -> SymExpr {
    let word = U256::from(WORD);
    for w in log.iter().rev() {
        match w {
            MemWrite::Word { off: None, .. }
            | MemWrite::Byte { off: None, .. }
            | MemWrite::Calldata { dest: None, .. }
            | MemWrite::Calldata { len: None, .. }
            | MemWrite::Opaque { off: None, .. }
            | MemWrite::Opaque { len: None, .. } => return SymExpr::Unknown,
            MemWrite::Word { off: Some(a), value } => {
                if *a == o {
                    return value.clone();
                }
                if overlaps(*a, word, o) {
                    return SymExpr::Unknown;
                }
            }
            MemWrite::Byte { off: Some(a), .. } => {
                if overlaps(*a, U256::from(1), o) {
                    return SymExpr::Unknown;
                }
            }
            MemWrite::Calldata { dest: Some(d), src, len: Some(l) } => {
                if l.is_zero() {
                    continue;
                }
                let inside = o >= *d && o.checked_add(word).is_some_and(|e| e <= d.saturating_add(*l));
                if inside && ((o - *d) % word).is_zero() {
                    let rel = o - *d;
                    let at = if rel.is_zero() {
                        src.clone()
                    } else {
                        SymExpr::binary(BinOp::Add, SymExpr::Const(rel), src.clone())
                    };
                    return SymExpr::calldata(at);
                }
                if overlaps(*d, *l, o) {
                    return SymExpr::Unknown;
                }
            }
            MemWrite::Opaque { off: Some(a), len: Some(l) } => {
                if overlaps(*a, *l, o) {
                    return SymExpr::Unknown;
                }
            }
        }
    }
    SymExpr::Const(U256::ZERO)
}

/// Symbolic `SHA3(off, len)` after `log`: a hash of whole words, else Unknown.
pub fn resolve_sha3(log: &[MemWrite], off: Option<U256>, len: Option<U256>) -> SymExpr {
    match (off, len) {
        (Some(o), Some(l)) if l > U256::ZERO && l <= U256::from(256) && (l % U256::from(WORD)).is_zero() => {
            let n = l.to::<u64>() / WORD;
            SymExpr::sha3((0..n).map(|i| resolve_load(log, o + U256::from(i * WORD))).collect())
        }
        _ => SymExpr::Unknown,
    }
}

/// Whether any byte of the region may derive from calldata after `log`.
pub fn region_from_calldata(log: &[MemWrite], off: Option<U256>, len: Option<U256>) -> bool {
    if len.is_some_and(|l| l.is_zero()) {
        return false;
    }
    log.iter().any(|w| {
        let (start, wlen, tainted) = match w {
            MemWrite::Word { off, value } => (*off, Some(U256::from(WORD)), value.mentions_calldata()),
            MemWrite::Byte { off, from_calldata } => (*off, Some(U256::from(1)), *from_calldata),
            MemWrite::Calldata { dest, len, .. } => (*dest, *len, true),
            MemWrite::Opaque { .. } => (None, None, false),
        };
        if !tainted {
            return false;
        }
        match (start, wlen, off, len) {
            (Some(a), Some(wl), Some(o), Some(l)) => a < o.saturating_add(l) && o < a.saturating_add(wl),
            _ => true,
        }
    })
}

/// Forward symbolic interpreter over a stack of [`SymExpr`] and a memory
/// write log.
#[derive(Clone, Debug, Default)]
pub struct SymMachine {
    pub stack: Vec<SymExpr>,
    pub memory: Vec<MemWrite>,
}

impl SymMachine {
    pub fn new() -> Self {
        Self::default()
    }

    fn pop(&mut self) -> SymExpr {
        self.stack.pop().unwrap_or(SymExpr::Unknown)
    }

    pub fn region_from_calldata(&self, offset: &SymExpr, len: &SymExpr) -> bool {
        region_from_calldata(&self.memory, SymExpr::concrete_slot(offset), SymExpr::concrete_slot(len))
    }

    pub fn step(&mut self, ins: &Instruction) -> Effect {
        let op = ins.opcode;
        match op {
            Opcode::Push(_) => {
                self.stack.push(SymExpr::Const(ins.push_value().unwrap()));
                return Effect::None;
            }
            Opcode::Dup(n) => {
                let n = n as usize;
                let v = if self.stack.len() >= n {
                    self.stack[self.stack.len() - n].clone()
                } else {
                    SymExpr::Unknown
                };
                self.stack.push(v);
                return Effect::None;
            }
            Opcode::Swap(n) => {
                let n = n as usize;
                while self.stack.len() < n + 1 {
                    self.stack.insert(0, SymExpr::Unknown);
                }
                let len = self.stack.len();
                self.stack.swap(len - 1, len - 1 - n);
                return Effect::None;
            }
            _ => {}
        }
        let (pops, _) = op.stack_io();
        let args: Vec<SymExpr> = (0..pops).map(|_| self.pop()).collect();
        if let Some(e) = pure_result(op, &args) {
            self.stack.push(e);
            return match op {
                Opcode::SLoad => Effect::SLoad { slot: args[0].clone() },
                _ => Effect::None,
            };
        }
        let k = |e: &SymExpr| SymExpr::concrete_slot(e);
        match op {
            Opcode::MLoad => {
                let v = match k(&args[0]) {
                    Some(o) => resolve_load(&self.memory, o),
                    None => SymExpr::Unknown,
                };
                self.stack.push(v);
                Effect::None
            }
            Opcode::MStore => {
                self.memory.push(MemWrite::Word { off: k(&args[0]), value: args[1].clone() });
                Effect::None
            }
            Opcode::MStore8 => {
                self.memory.push(MemWrite::Byte { off: k(&args[0]), from_calldata: args[1].mentions_calldata() });
                Effect::None
            }
            Opcode::CallDataCopy => {
                self.memory.push(MemWrite::Calldata { dest: k(&args[0]), src: args[1].clone(), len: k(&args[2]) });
                Effect::None
            }
            Opcode::Sha3 => {
                let v = resolve_sha3(&self.memory, k(&args[0]), k(&args[1]));
                self.stack.push(v);
                Effect::None
            }
            Opcode::SStore => Effect::SStore { slot: args[0].clone(), value: args[1].clone() },
            Opcode::JumpI => Effect::Branch { dest: args[0].clone(), cond: args[1].clone() },
            Opcode::Jump => Effect::Jump { dest: args[0].clone() },
            Opcode::Call | Opcode::DelegateCall | Opcode::StaticCall => {
                let (value, a, r) = if op == Opcode::Call {
                    (args[2].clone(), 3, 5)
                } else {
                    (SymExpr::Const(U256::ZERO), 2, 4)
                };
                let args_from_calldata = self.region_from_calldata(&args[a], &args[a + 1]);
                self.memory.push(MemWrite::Opaque { off: k(&args[r]), len: k(&args[r + 1]) });
                self.stack.push(SymExpr::Unknown);
                Effect::Call {
                    kind: op,
                    gas: args[0].clone(),
                    target: args[1].clone(),
                    value,
                    args_from_calldata,
                }
            }
            Opcode::SelfDestruct => Effect::SelfDestruct { beneficiary: args[0].clone() },
            Opcode::Stop | Opcode::Return | Opcode::Revert | Opcode::Invalid => Effect::Halt,
            Opcode::Log(_) | Opcode::Pop | Opcode::JumpDest => Effect::None,
            other => {
                let (_, pushes) = other.stack_io();
                for _ in 0..pushes {
                    self.stack.push(SymExpr::Unknown);
                }
                Effect::None
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bytecode::{assemble, disassemble};

    fn run(src: &str) -> (SymMachine, Vec<Effect>) {
        let mut m = SymMachine::new();
        let effects = disassemble(&assemble(src).unwrap()).iter().map(|i| m.step(i)).collect();
        (m, effects)
    }

    #[test]
    fn guard_condition_expression() {
        let (_, eff) = run("PUSH1 2 / SLOAD / PUSH2 5 / GT / PUSH2 0x20 / JUMPI");
        let Effect::Branch { cond, .. } = eff.last().unwrap() else { panic!() };
        let want = SymExpr::binary(BinOp::Gt, SymExpr::konst(5), SymExpr::storage(SymExpr::konst(2)));
        assert_eq!(cond, &want);
    }

    #[test]
    fn mapping_slot_through_memory() {
        let (m, _) = run("CALLER / PUSH1 0 / MSTORE / PUSH1 7 / PUSH1 32 / MSTORE / PUSH1 64 / PUSH1 0 / SHA3 / SLOAD");
        let top = m.stack.last().unwrap();
        assert!(top.mentions_caller_indexed_storage());
        assert_eq!(
            top,
            &SymExpr::storage(SymExpr::sha3(vec![SymExpr::Caller, SymExpr::konst(7)]))
        );
    }

    #[test]
    fn calldata_copy_marks_region() {
        let (m, _) = run("PUSH1 36 / PUSH1 4 / PUSH1 0 / CALLDATACOPY");
        assert!(m.region_from_calldata(&SymExpr::konst(0), &SymExpr::konst(36)));
        assert!(!m.region_from_calldata(&SymExpr::konst(128), &SymExpr::konst(32)));
    }

    #[test]
    fn depth_bound_collapses_to_unknown() {
        let mut e = SymExpr::Caller;
        let mut collapsed = false;
        for _ in 0..100 {
            e = SymExpr::binary(BinOp::Add, e, SymExpr::konst(1));
            assert!(e.depth() <= DEFAULT_DEPTH_BOUND);
            collapsed |= matches!(e, SymExpr::Unknown);
        }
        assert!(collapsed);
    }

    #[test]
    fn normalisation_folds_constants() {
        let e = SymExpr::binary(BinOp::Add, SymExpr::konst(2), SymExpr::konst(3));
        assert_eq!(e.normalize(), SymExpr::konst(5));
    }
}
