//! Code-target identification by bytecode-level hazard patterns.
//!
//! A bounded symbolic walk over the CFG supplies, per path, the slot
//! expressions of storage accesses, call operands and branch conditions.
//! Patterns are over-approximate: a match only marks a block worth steering
//! the fuzzer toward.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use ruint::aliases::U256;
use serde::{Deserialize, Serialize};

use crate::abi::AbiDescriptor;
use crate::bytecode::{BlockId, BlockKind, Cfg, EdgeKind, Opcode};
use crate::symbolic::{Effect, SymExpr, SymMachine};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BugClass {
    EtherLeak,
    BlockDependency,
    Reentrancy,
    ControlledDelegatecall,
    DangerousDelegatecall,
    Suicidal,
    LockEther,
}

impl BugClass {
    pub const ALL: [BugClass; 7] = [
        BugClass::EtherLeak,
        BugClass::BlockDependency,
        BugClass::Reentrancy,
        BugClass::ControlledDelegatecall,
        BugClass::DangerousDelegatecall,
        BugClass::Suicidal,
        BugClass::LockEther,
    ];
}

impl fmt::Display for BugClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub pc: usize,
    pub role: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeTarget {
    pub block_id: BlockId,
    pub bug_class: BugClass,
    pub anchor_pc: usize,
    pub evidence: Vec<Evidence>,
    /// Target concerns the whole contract rather than one block.
    #[serde(default)]
    pub whole_contract: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct ExploreLimits {
    /// Visits of one block along a single path.
    pub block_visits: usize,
    pub max_paths: usize,
    pub max_steps: usize,
}

impl Default for ExploreLimits {
    fn default() -> Self {
        Self { block_visits: 2, max_paths: 10_000, max_steps: 2_000_000 }
    }
}

/// Stipend-sized gas cannot re-enter; anything else counts as forwarded.
fn forwards_gas(gas: &SymExpr) -> bool {
    SymExpr::concrete_slot(gas).is_none_or(|g| g > U256::from(2300))
}

fn provably_zero(v: &SymExpr) -> bool {
    SymExpr::concrete_slot(v).is_some_and(|v| v.is_zero())
}

fn ev(pc: usize, role: &str) -> Evidence {
    Evidence { pc, role: role.to_string() }
}

#[derive(Clone)]
struct CallSite {
    pc: usize,
    block: BlockId,
    reads_before: Vec<(usize, SymExpr)>,
}

#[derive(Clone, Default)]
struct PathFacts {
    reads: Vec<(usize, SymExpr)>,
    reentrant_calls: Vec<CallSite>,
    block_guard: Option<usize>,
}

#[derive(Clone)]
struct Walker {
    block: BlockId,
    machine: SymMachine,
    visits: BTreeMap<BlockId, usize>,
    facts: PathFacts,
}

#[derive(Default)]
struct Observations {
    found: Vec<CodeTarget>,
    /// Branch conditions seen at each JUMPI-terminated block.
    conds: BTreeMap<BlockId, Vec<SymExpr>>,
    /// (block, pc, beneficiary) of each SELFDESTRUCT reached.
    selfdestructs: Vec<(BlockId, usize, SymExpr)>,
    /// (block, pc, target, value) of each value-bearing CALL reached.
    value_calls: Vec<(BlockId, usize, SymExpr, SymExpr)>,
    /// Every CALL pc whose value was seen, and whether it was always zero.
    call_values: BTreeMap<usize, bool>,
}

pub fn find_code_targets(cfg: &Cfg, abi: &AbiDescriptor) -> Vec<CodeTarget> {
    find_code_targets_with(cfg, abi, ExploreLimits::default())
}

pub fn find_code_targets_with(cfg: &Cfg, abi: &AbiDescriptor, limits: ExploreLimits) -> Vec<CodeTarget> {
    let mut obs = Observations::default();
    if !cfg.is_empty() {
        explore(cfg, limits, &mut obs);
    }
    let dom = cfg.dominators();
    let guarded_by = |block: BlockId, pred: &dyn Fn(&SymExpr) -> bool| {
        dom[block]
            .iter()
            .any(|d| obs.conds.get(d).is_some_and(|cs| cs.iter().any(pred)))
    };

    let mut out = std::mem::take(&mut obs.found);
    for (block, pc, _) in &obs.selfdestructs {
        if !guarded_by(*block, &|c: &SymExpr| c.mentions_caller_equality()) {
            out.push(CodeTarget {
                block_id: *block,
                bug_class: BugClass::Suicidal,
                anchor_pc: *pc,
                evidence: vec![ev(*pc, "selfdestruct")],
                whole_contract: false,
            });
        }
    }
    for (block, pc, target, value) in &obs.value_calls {
        let beneficiary_controlled = target.mentions_caller() || target.mentions_calldata();
        let protected = guarded_by(*block, &|c: &SymExpr| {
            c.mentions_caller_indexed_storage() || c.mentions_caller_equality()
        });
        if beneficiary_controlled && !protected && !value.mentions_callvalue() {
            out.push(CodeTarget {
                block_id: *block,
                bug_class: BugClass::EtherLeak,
                anchor_pc: *pc,
                evidence: vec![ev(*pc, "call")],
                whole_contract: false,
            });
        }
    }

    // LockEther: value can come in, and no instruction can send it out.
    let has_selfdestruct = cfg.instructions().any(|i| i.opcode == Opcode::SelfDestruct);
    let may_send = cfg
        .instructions()
        .filter(|i| i.opcode == Opcode::Call)
        .any(|i| obs.call_values.get(&i.pc).is_none_or(|&zero| !zero));
    if abi.has_payable() && !has_selfdestruct && !may_send && !cfg.is_empty() {
        out.push(CodeTarget {
            block_id: cfg.entry,
            bug_class: BugClass::LockEther,
            anchor_pc: cfg.block(cfg.entry).start_pc,
            evidence: Vec::new(),
            whole_contract: true,
        });
    }

    out.sort_by_key(|t| (t.bug_class, t.anchor_pc));
    out.dedup_by_key(|t| (t.bug_class, t.anchor_pc));
    out
}

fn explore(cfg: &Cfg, limits: ExploreLimits, obs: &mut Observations) {
    let mut stack = vec![Walker {
        block: cfg.entry,
        machine: SymMachine::new(),
        visits: BTreeMap::new(),
        facts: PathFacts::default(),
    }];
    let mut steps = 0usize;
    let mut paths = 0usize;
    while let Some(mut w) = stack.pop() {
        if paths >= limits.max_paths || steps >= limits.max_steps {
            break;
        }
        let bb = cfg.block(w.block);
        if bb.kind != BlockKind::Code {
            paths += 1;
            continue;
        }
        let count = w.visits.entry(w.block).or_insert(0);
        *count += 1;
        if *count > limits.block_visits {
            paths += 1;
            continue;
        }
        let mut cond = None;
        for ins in &bb.instructions {
            steps += 1;
            let effect = w.machine.step(ins);
            on_effect(bb.id, ins.pc, effect, &mut w.facts, obs, &mut cond);
        }
        let last = bb.last().unwrap().opcode;
        let mut succ: Vec<(BlockId, EdgeKind)> = bb.successors.clone();
        if last == Opcode::JumpI {
            if let Some(c) = cond.as_ref().and_then(SymExpr::concrete_slot) {
                let keep = if c.is_zero() { EdgeKind::BranchFalse } else { EdgeKind::BranchTrue };
                succ.retain(|&(_, k)| k == keep);
            }
            if cond.as_ref().is_some_and(SymExpr::mentions_block) {
                w.facts.block_guard.get_or_insert(bb.end_pc);
            }
        }
        if succ.is_empty() {
            paths += 1;
            continue;
        }
        // Reverse so the first successor is explored first.
        for &(s, _) in succ.iter().rev() {
            let mut next = w.clone();
            next.block = s;
            stack.push(next);
        }
    }
}

fn on_effect(
    block: BlockId,
    pc: usize,
    effect: Effect,
    facts: &mut PathFacts,
    obs: &mut Observations,
    cond_out: &mut Option<SymExpr>,
) {
    match effect {
        Effect::SLoad { slot } => facts.reads.push((pc, slot.normalize())),
        Effect::SStore { slot, .. } => {
            let slot = slot.normalize();
            for call in &facts.reentrant_calls {
                if let Some((rpc, _)) = call.reads_before.iter().find(|(_, s)| *s == slot) {
                    obs.found.push(CodeTarget {
                        block_id: call.block,
                        bug_class: BugClass::Reentrancy,
                        anchor_pc: call.pc,
                        evidence: vec![ev(*rpc, "sload"), ev(call.pc, "call"), ev(pc, "sstore")],
                        whole_contract: false,
                    });
                }
            }
        }
        Effect::Call { kind, gas, target, value, args_from_calldata } => match kind {
            Opcode::Call => {
                let zero = provably_zero(&value);
                let e = obs.call_values.entry(pc).or_insert(true);
                *e &= zero;
                let const_target = SymExpr::concrete_slot(&target).is_some();
                if forwards_gas(&gas) && !const_target {
                    facts.reentrant_calls.push(CallSite { pc, block, reads_before: facts.reads.clone() });
                }
                if !zero {
                    obs.value_calls.push((block, pc, target, value));
                    if let Some(j) = facts.block_guard {
                        obs.found.push(CodeTarget {
                            block_id: block,
                            bug_class: BugClass::BlockDependency,
                            anchor_pc: pc,
                            evidence: vec![ev(j, "jumpi"), ev(pc, "call")],
                            whole_contract: false,
                        });
                    }
                }
            }
            Opcode::DelegateCall => {
                if target.mentions_calldata() {
                    obs.found.push(CodeTarget {
                        block_id: block,
                        bug_class: BugClass::ControlledDelegatecall,
                        anchor_pc: pc,
                        evidence: vec![ev(pc, "delegatecall")],
                        whole_contract: false,
                    });
                }
                if args_from_calldata {
                    obs.found.push(CodeTarget {
                        block_id: block,
                        bug_class: BugClass::DangerousDelegatecall,
                        anchor_pc: pc,
                        evidence: vec![ev(pc, "delegatecall")],
                        whole_contract: false,
                    });
                }
            }
            _ => {}
        },
        Effect::SelfDestruct { beneficiary } => {
            obs.selfdestructs.push((block, pc, beneficiary));
            if let Some(j) = facts.block_guard {
                obs.found.push(CodeTarget {
                    block_id: block,
                    bug_class: BugClass::BlockDependency,
                    anchor_pc: pc,
                    evidence: vec![ev(j, "jumpi"), ev(pc, "selfdestruct")],
                    whole_contract: false,
                });
            }
        }
        Effect::Branch { cond, .. } => {
            let c = cond.normalize();
            let seen = obs.conds.entry(block).or_default();
            if !seen.contains(&c) {
                seen.push(c.clone());
            }
            *cond_out = Some(c);
        }
        Effect::None | Effect::Jump { .. } | Effect::Halt => {}
    }
}

/// Distinct target blocks of a target list.
pub fn target_blocks(targets: &[CodeTarget]) -> BTreeSet<BlockId> {
    targets.iter().map(|t| t.block_id).collect()
}
