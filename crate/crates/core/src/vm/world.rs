use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use ruint::aliases::U256;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bytecode::{build_cfg, disassemble, BlockId, BlockKind, Cfg, Instruction, Opcode};

/// Addresses live in the low 160 bits of a word.
pub type Address = U256;

pub const DEPLOYER: Address = U256::from_limbs([0xde91_0000, 0, 0, 0]);
pub const ATTACKER_A: Address = U256::from_limbs([0xa77a_c0a0, 0, 0, 0]);
pub const ATTACKER_B: Address = U256::from_limbs([0xa77a_c0b0, 0, 0, 0]);

/// Balance given to every harness account in a fresh world.
pub const HARNESS_BALANCE: U256 = U256::from_limbs([0, 1 << 16, 0, 0]);

pub fn to_address(w: U256) -> Address {
    w & (U256::MAX >> 96)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockEnv {
    pub timestamp: U256,
    pub number: U256,
    pub coinbase: U256,
    pub prevrandao: U256,
    pub gaslimit: U256,
}

impl Default for BlockEnv {
    fn default() -> Self {
        Self {
            timestamp: U256::from(1_000_000u64),
            number: U256::from(1_000u64),
            coinbase: U256::ZERO,
            prevrandao: U256::ZERO,
            gaslimit: U256::ZERO,
        }
    }
}

/// Decoded runtime code with the lookups the interpreter needs.
#[derive(Debug)]
pub struct Program {
    pub code: Vec<u8>,
    pub instructions: Vec<Instruction>,
    pub cfg: Cfg,
    index_of_pc: HashMap<usize, usize>,
    block_at_pc: HashMap<usize, BlockId>,
}

impl Program {
    pub fn new(code: Vec<u8>) -> Self {
        let instructions = disassemble(&code);
        let cfg = build_cfg(&instructions);
        let index_of_pc = instructions.iter().enumerate().map(|(i, ins)| (ins.pc, i)).collect();
        let block_at_pc = cfg
            .blocks
            .iter()
            .filter(|b| b.kind == BlockKind::Code)
            .map(|b| (b.start_pc, b.id))
            .collect();
        Self { code, instructions, cfg, index_of_pc, block_at_pc }
    }

    pub fn index_of(&self, pc: usize) -> Option<usize> {
        self.index_of_pc.get(&pc).copied()
    }

    pub fn block_starting_at(&self, pc: usize) -> Option<BlockId> {
        self.block_at_pc.get(&pc).copied()
    }

    pub fn is_jumpdest(&self, pc: usize) -> bool {
        self.index_of(pc).is_some_and(|i| self.instructions[i].opcode == Opcode::JumpDest)
    }

    pub fn code_hash(&self) -> String {
        hex::encode(Sha256::digest(&self.code))
    }
}

#[derive(Clone, Debug, Default)]
pub struct WorldState {
    pub storage: BTreeMap<(Address, U256), U256>,
    pub balances: BTreeMap<Address, U256>,
    pub deployed: BTreeMap<Address, Arc<Program>>,
    pub block_env: BlockEnv,
    /// Externally owned accounts controlled by the fuzzing harness.
    pub harness: BTreeSet<Address>,
    next_address: u64,
}

impl WorldState {
    pub fn new() -> Self {
        Self { next_address: 1, ..Self::default() }
    }

    /// Fresh world with the deployer and both attacker accounts funded.
    pub fn with_harness() -> Self {
        let mut w = Self::new();
        for a in [DEPLOYER, ATTACKER_A, ATTACKER_B] {
            w.harness.insert(a);
            w.balances.insert(a, HARNESS_BALANCE);
        }
        w
    }

    /// Install runtime code at a fresh counter-derived address.
    pub fn deploy(&mut self, code: Vec<u8>) -> Address {
        self.deploy_program(Arc::new(Program::new(code)))
    }

    pub fn deploy_program(&mut self, program: Arc<Program>) -> Address {
        let addr = U256::from(self.next_address.max(1));
        self.next_address = self.next_address.max(1) + 1;
        self.deployed.insert(addr, program);
        addr
    }

    pub fn sload(&self, addr: Address, slot: U256) -> U256 {
        self.storage.get(&(addr, slot)).copied().unwrap_or(U256::ZERO)
    }

    pub fn sstore(&mut self, addr: Address, slot: U256, value: U256) {
        if value.is_zero() {
            self.storage.remove(&(addr, slot));
        } else {
            self.storage.insert((addr, slot), value);
        }
    }

    pub fn balance(&self, addr: Address) -> U256 {
        self.balances.get(&addr).copied().unwrap_or(U256::ZERO)
    }

    pub fn set_balance(&mut self, addr: Address, v: U256) {
        if v.is_zero() {
            self.balances.remove(&addr);
        } else {
            self.balances.insert(addr, v);
        }
    }

    /// Move `value` between accounts; `false` (and no change) if `from` is short.
    pub fn transfer(&mut self, from: Address, to: Address, value: U256) -> bool {
        let fb = self.balance(from);
        if fb < value {
            return false;
        }
        if from != to {
            self.set_balance(from, fb - value);
            let tb = self.balance(to);
            self.set_balance(to, tb.saturating_add(value));
        }
        true
    }

    pub fn storage_of(&self, addr: Address) -> BTreeMap<U256, U256> {
        self.storage
            .range((addr, U256::ZERO)..=(addr, U256::MAX))
            .map(|(&(_, s), &v)| (s, v))
            .collect()
    }

    /// Digest of all observable state, for before/after comparisons.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for ((a, s), v) in &self.storage {
            h.update(b"s");
            h.update(a.to_be_bytes::<32>());
            h.update(s.to_be_bytes::<32>());
            h.update(v.to_be_bytes::<32>());
        }
        for (a, v) in &self.balances {
            h.update(b"b");
            h.update(a.to_be_bytes::<32>());
            h.update(v.to_be_bytes::<32>());
        }
        for (a, p) in &self.deployed {
            h.update(b"c");
            h.update(a.to_be_bytes::<32>());
            h.update(&p.code);
        }
        h.update(self.block_env.timestamp.to_be_bytes::<32>());
        h.update(self.block_env.number.to_be_bytes::<32>());
        h.finalize().into()
    }

    /// Structural equality of storage, balances, code and environment.
    pub fn same_state(&self, other: &Self) -> bool {
        self.storage == other.storage
            && self.balances == other.balances
            && self.block_env == other.block_env
            && self.deployed.len() == other.deployed.len()
            && self.deployed.iter().zip(&other.deployed).all(|((a, p), (b, q))| a == b && p.code == q.code)
    }
}
