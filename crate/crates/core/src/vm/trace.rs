use std::collections::{BTreeMap, BTreeSet};

use ruint::aliases::U256;
use serde::{Deserialize, Serialize};

use super::world::{Address, BlockEnv};
use crate::bytecode::{BlockId, EdgeKind};

/// Provenance bits carried by stack values and memory bytes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Taint(pub u8);

impl Taint {
    pub const NONE: Taint = Taint(0);
    pub const CALLDATA: Taint = Taint(1);
    pub const STORAGE: Taint = Taint(2);
    pub const CALLER: Taint = Taint(4);
    pub const BLOCK: Taint = Taint(8);
    pub const CALLVALUE: Taint = Taint(16);
    pub const ENV: Taint = Taint(32);

    pub fn has(self, other: Taint) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn class(self) -> TaintClass {
        if self.has(Taint::CALLDATA) {
            TaintClass::Calldata
        } else if self.has(Taint::CALLER) {
            TaintClass::Caller
        } else if self.has(Taint::STORAGE) {
            TaintClass::Storage
        } else if self.has(Taint::BLOCK) {
            TaintClass::BlockData
        } else if self.is_empty() {
            TaintClass::Constant
        } else {
            TaintClass::Other
        }
    }
}

impl std::ops::BitOr for Taint {
    type Output = Taint;
    fn bitor(self, rhs: Taint) -> Taint {
        Taint(self.0 | rhs.0)
    }
}

impl std::ops::BitOrAssign for Taint {
    fn bitor_assign(&mut self, rhs: Taint) {
        self.0 |= rhs.0;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaintClass {
    Constant,
    Calldata,
    Storage,
    Caller,
    BlockData,
    Other,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CallKind {
    Call,
    DelegateCall,
    StaticCall,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Stop,
    Return,
    SelfDestruct,
    Revert,
    InvalidOpcode,
    StackUnderflow,
    StackOverflow,
    BadJump,
    StepBudget,
    MemoryLimit,
    InsufficientBalance,
    StaticViolation,
}

impl Status {
    pub fn is_success(self) -> bool {
        matches!(self, Status::Stop | Status::Return | Status::SelfDestruct)
    }

    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub sender: Address,
    #[serde(with = "hex_bytes4")]
    pub selector: [u8; 4],
    #[serde(with = "hex_vec")]
    pub args: Vec<u8>,
    pub value: U256,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_env_override: Option<BlockEnv>,
}

impl Transaction {
    pub fn calldata(&self) -> Vec<u8> {
        let mut v = self.selector.to_vec();
        v.extend_from_slice(&self.args);
        v
    }
}

mod hex_vec {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s.trim_start_matches("0x")).map_err(serde::de::Error::custom)
    }
}

mod hex_bytes4 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8; 4], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 4], D::Error> {
        let s = String::deserialize(d)?;
        let v = hex::decode(s.trim_start_matches("0x")).map_err(serde::de::Error::custom)?;
        v.try_into().map_err(|_| serde::de::Error::custom("selector must be 4 bytes"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StorageAccess {
    pub seq: u64,
    pub pc: usize,
    pub depth: usize,
    pub slot: U256,
    pub value: U256,
    /// Undone by a revert of an enclosing frame.
    pub rolled_back: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchEvent {
    pub seq: u64,
    pub block: BlockId,
    pub pc: usize,
    pub taken: bool,
    pub depth: usize,
}

impl BranchEvent {
    pub fn edge(&self) -> (BlockId, EdgeKind) {
        (self.block, if self.taken { EdgeKind::BranchTrue } else { EdgeKind::BranchFalse })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub seq: u64,
    /// Sequence number after the callee (and any re-entry) returned.
    pub seq_end: u64,
    pub pc: usize,
    pub depth: usize,
    pub kind: CallKind,
    pub target: Address,
    pub target_class: TaintClass,
    pub args_from_calldata: bool,
    pub value: U256,
    pub gas: U256,
    pub success: bool,
    pub reentered: bool,
    /// Value the contract sent out while re-entered from this call.
    pub reentry_value_out: U256,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransferKind {
    Call,
    SelfDestruct,
}

/// Value leaving the analyzed contract.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transfer {
    pub seq: u64,
    pub pc: usize,
    pub depth: usize,
    pub to: Address,
    pub value: U256,
    pub kind: TransferKind,
    pub rolled_back: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelfDestructRecord {
    pub seq: u64,
    pub pc: usize,
    pub depth: usize,
    pub beneficiary: Address,
    pub rolled_back: bool,
}

/// Everything observed while executing one transaction against the analyzed contract.
///
/// Block ids refer to the contract's pre-unroll CFG. Events from re-entered
/// frames of the same contract are included with their depth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub tx: Transaction,
    pub contract: Address,
    pub executed_blocks: Vec<BlockId>,
    pub branches: Vec<BranchEvent>,
    pub storage_reads: Vec<StorageAccess>,
    pub storage_writes: Vec<StorageAccess>,
    pub calls: Vec<CallRecord>,
    pub selfdestructs: Vec<SelfDestructRecord>,
    pub transfers: Vec<Transfer>,
    /// Committed value that left the contract.
    pub outgoing_value: U256,
    pub reverted: bool,
    pub status: Status,
    /// Post-transaction values of every slot the trace touched.
    pub final_storage: BTreeMap<U256, U256>,
    pub steps: usize,
}

impl ExecutionTrace {
    pub fn branch_edges(&self) -> BTreeSet<(BlockId, EdgeKind)> {
        self.branches.iter().map(BranchEvent::edge).collect()
    }

    /// Every value observed for `slot`: reads, writes and the final snapshot.
    pub fn observed_values(&self, slot: U256) -> impl Iterator<Item = U256> + '_ {
        self.storage_reads
            .iter()
            .chain(&self.storage_writes)
            .filter(move |a| a.slot == slot)
            .map(|a| a.value)
            .chain(self.final_storage.get(&slot).copied())
    }

    pub fn committed_writes(&self) -> impl Iterator<Item = &StorageAccess> {
        self.storage_writes.iter().filter(|w| !w.rolled_back && !self.reverted)
    }

    pub fn committed_transfers(&self) -> impl Iterator<Item = &Transfer> {
        self.transfers.iter().filter(|t| !t.rolled_back && !self.reverted)
    }

    pub fn touched_slots(&self) -> BTreeSet<U256> {
        self.storage_reads.iter().chain(&self.storage_writes).map(|a| a.slot).collect()
    }
}
