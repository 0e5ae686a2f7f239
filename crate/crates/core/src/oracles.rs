//! Dynamic vulnerability oracles over execution traces.
//!
//! Each class is decided by its own predicate. None of them change the
//! world they are given; differential re-execution runs on a clone.

use std::collections::BTreeMap;

use ruint::aliases::U256;
use serde::{Deserialize, Serialize};

use crate::targets::BugClass;
use crate::vm::{
    execute, Address, BlockEnv, CallKind, ExecConfig, ExecutionTrace, TaintClass, Transaction, TransferKind, WorldState,
    DEPLOYER,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub bug_class: BugClass,
    pub anchor_pc: usize,
    pub description: String,
}

impl Finding {
    fn new(bug_class: BugClass, anchor_pc: usize, description: impl Into<String>) -> Self {
        Self { bug_class, anchor_pc, description: description.into() }
    }

    pub fn key(&self) -> (BugClass, usize) {
        (self.bug_class, self.anchor_pc)
    }
}

/// Running per-seed value accounting; each seed starts from deployment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeedLedger {
    pub deposited: BTreeMap<Address, U256>,
    pub received: BTreeMap<Address, U256>,
}

impl SeedLedger {
    /// Account for a finished transaction.
    pub fn record(&mut self, trace: &ExecutionTrace) {
        if !trace.reverted && !trace.tx.value.is_zero() {
            let d = self.deposited.entry(trace.tx.sender).or_default();
            *d = d.saturating_add(trace.tx.value);
        }
        for t in trace.committed_transfers() {
            let r = self.received.entry(t.to).or_default();
            *r = r.saturating_add(t.value);
        }
    }
}

/// Block fields are shifted by these amounts in both directions.
pub const TIMESTAMP_SHIFT: u64 = 3600;
pub const NUMBER_SHIFT: u64 = 100;

fn perturbations(env: BlockEnv) -> Vec<BlockEnv> {
    let ts = U256::from(TIMESTAMP_SHIFT);
    let num = U256::from(NUMBER_SHIFT);
    let mut out = Vec::new();
    for (dt, dn) in [(true, true), (true, false), (false, true), (false, false)] {
        let mut e = env;
        e.timestamp = if dt { env.timestamp.saturating_add(ts) } else { env.timestamp.saturating_sub(ts) };
        e.number = if dn { env.number.saturating_add(num) } else { env.number.saturating_sub(num) };
        out.push(e);
    }
    out
}

fn transfer_summary(trace: &ExecutionTrace) -> Vec<(usize, Address, U256, TransferKind)> {
    trace.committed_transfers().map(|t| (t.pc, t.to, t.value, t.kind)).collect()
}

/// Evaluate every per-transaction oracle on `trace`, which was produced by
/// running its transaction on `before`. `ledger` must already include it.
pub fn check_trace(trace: &ExecutionTrace, before: &WorldState, ledger: &SeedLedger, config: &ExecConfig) -> Vec<Finding> {
    let mut out = Vec::new();
    if !trace.reverted {
        reentrancy(trace, &mut out);
        suicidal(trace, &mut out);
        ether_leak(trace, ledger, &mut out);
        delegatecalls(trace, &mut out);
    }
    block_dependency(trace, before, config, &mut out);
    out.sort_by_key(Finding::key);
    out.dedup_by_key(|f| f.key());
    out
}

fn reentrancy(trace: &ExecutionTrace, out: &mut Vec<Finding>) {
    for call in &trace.calls {
        if call.kind != CallKind::Call || call.value.is_zero() || !call.reentered || call.reentry_value_out.is_zero() {
            continue;
        }
        let stale = trace.storage_reads.iter().filter(|r| r.seq < call.seq && r.depth == call.depth).any(|r| {
            trace.committed_writes().any(|w| w.slot == r.slot && w.depth == call.depth && w.seq > call.seq_end)
        });
        if stale {
            out.push(Finding::new(
                BugClass::Reentrancy,
                call.pc,
                "value re-sent during re-entry before the balance slot was updated",
            ));
        }
    }
}

fn suicidal(trace: &ExecutionTrace, out: &mut Vec<Finding>) {
    if trace.tx.sender == DEPLOYER {
        return;
    }
    for s in trace.selfdestructs.iter().filter(|s| !s.rolled_back) {
        out.push(Finding::new(BugClass::Suicidal, s.pc, "selfdestruct executed by a non-deployer sender"));
    }
}

fn ether_leak(trace: &ExecutionTrace, ledger: &SeedLedger, out: &mut Vec<Finding>) {
    let sender = trace.tx.sender;
    if sender == DEPLOYER {
        return;
    }
    let deposited = ledger.deposited.get(&sender).copied().unwrap_or_default();
    let received = ledger.received.get(&sender).copied().unwrap_or_default();
    if received <= deposited {
        return;
    }
    if let Some(t) = trace.committed_transfers().filter(|t| t.to == sender && !t.value.is_zero()).last() {
        out.push(Finding::new(BugClass::EtherLeak, t.pc, "sender received more value than it deposited"));
    }
}

fn delegatecalls(trace: &ExecutionTrace, out: &mut Vec<Finding>) {
    for call in trace.calls.iter().filter(|c| c.kind == CallKind::DelegateCall) {
        if call.target_class == TaintClass::Calldata {
            out.push(Finding::new(BugClass::ControlledDelegatecall, call.pc, "delegatecall target taken from calldata"));
        }
        if call.args_from_calldata {
            out.push(Finding::new(BugClass::DangerousDelegatecall, call.pc, "delegatecall arguments taken from calldata"));
        }
    }
}

fn block_dependency(trace: &ExecutionTrace, before: &WorldState, config: &ExecConfig, out: &mut Vec<Finding>) {
    let moved: Vec<_> = trace.committed_transfers().filter(|t| !t.value.is_zero()).collect();
    if moved.is_empty() {
        return;
    }
    let env = trace.tx.block_env_override.unwrap_or(before.block_env);
    let edges = trace.branch_edges();
    let transfers = transfer_summary(trace);
    for e in perturbations(env) {
        let tx = Transaction { block_env_override: Some(e), ..trace.tx.clone() };
        let (alt, _) = execute(before, trace.contract, &tx, config);
        if alt.branch_edges() != edges && transfer_summary(&alt) != transfers {
            let t = moved[0];
            out.push(Finding::new(BugClass::BlockDependency, t.pc, "value transfer flips under perturbed block fields"));
            return;
        }
    }
}

/// Campaign-wide facts the LockEther decision needs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutflowSummary {
    /// Some successful transaction carried value into the contract.
    pub received_value: bool,
    /// Some trace attempted a value-bearing CALL or a SELFDESTRUCT.
    pub attempted_outflow: bool,
}

impl OutflowSummary {
    pub fn observe(&mut self, trace: &ExecutionTrace) {
        if !trace.reverted && !trace.tx.value.is_zero() {
            self.received_value = true;
        }
        if trace.calls.iter().any(|c| c.kind == CallKind::Call && !c.value.is_zero()) || !trace.selfdestructs.is_empty() {
            self.attempted_outflow = true;
        }
    }

    pub fn merge(&mut self, other: &OutflowSummary) {
        self.received_value |= other.received_value;
        self.attempted_outflow |= other.attempted_outflow;
    }
}

pub fn check_campaign_end(summary: &OutflowSummary, entry_pc: usize) -> Option<Finding> {
    (summary.received_value && !summary.attempted_outflow)
        .then(|| Finding::new(BugClass::LockEther, entry_pc, "value received but never sent out"))
}
