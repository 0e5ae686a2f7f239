use std::sync::Arc;

use ruint::aliases::U256;
use sha3::{Digest, Keccak256};

use super::trace::*;
use super::world::{to_address, Address, BlockEnv, Program, WorldState};
use crate::bytecode::{BlockId, Opcode};
use crate::word::{apply_binary, apply_unary, BinOp, UnOp};

pub const DEFAULT_MAX_STEPS: usize = 100_000;
const STACK_LIMIT: usize = 1024;
const MEMORY_LIMIT: usize = 1 << 20;
/// Gas stipend below which a callee cannot do anything but log.
const STIPEND: u64 = 2300;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReentryPolicy {
    #[default]
    Disabled,
    /// The first value-bearing CALL to a harness account that forwards more
    /// than the stipend re-enters the contract once with the outer calldata.
    Once,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExecConfig {
    pub max_steps: usize,
    pub reentry: ReentryPolicy,
}

impl Default for ExecConfig {
    fn default() -> Self {
        Self { max_steps: DEFAULT_MAX_STEPS, reentry: ReentryPolicy::Disabled }
    }
}

/// Run `tx` against `contract` on a copy of `world`.
pub fn execute(
    world: &WorldState,
    contract: Address,
    tx: &Transaction,
    config: &ExecConfig,
) -> (ExecutionTrace, WorldState) {
    let mut w = world.clone();
    let trace = execute_in_place(&mut w, contract, tx, config);
    (trace, w)
}

/// Run `tx` against `contract`, committing its effects to `world` unless it reverts.
pub fn execute_in_place(
    world: &mut WorldState,
    contract: Address,
    tx: &Transaction,
    config: &ExecConfig,
) -> ExecutionTrace {
    let env = tx.block_env_override.unwrap_or(world.block_env);
    let calldata = Arc::new(tx.calldata());
    let snapshot = world.clone();
    let mut ex = Exec {
        world,
        env,
        contract,
        calldata: calldata.clone(),
        config,
        steps: 0,
        seq: 0,
        reentered: false,
        trace: ExecutionTrace {
            tx: tx.clone(),
            contract,
            executed_blocks: Vec::new(),
            branches: Vec::new(),
            storage_reads: Vec::new(),
            storage_writes: Vec::new(),
            calls: Vec::new(),
            selfdestructs: Vec::new(),
            transfers: Vec::new(),
            outgoing_value: U256::ZERO,
            reverted: false,
            status: Status::Stop,
            final_storage: Default::default(),
            steps: 0,
        },
    };

    let status = if !ex.world.transfer(tx.sender, contract, tx.value) {
        Status::InsufficientBalance
    } else {
        match ex.world.deployed.get(&contract).cloned() {
            Some(program) => {
                let frame = Frame {
                    program,
                    address: contract,
                    code_address: contract,
                    caller: tx.sender,
                    value: tx.value,
                    calldata,
                    depth: 0,
                    is_static: false,
                };
                ex.run(&frame).0
            }
            None => Status::Stop,
        }
    };

    let mut trace = ex.trace;
    trace.steps = ex.steps;
    trace.status = status;
    if !status.is_success() {
        *world = snapshot;
        trace.reverted = true;
        mark_rolled_back(&mut trace, 0);
    }
    trace.outgoing_value =
        trace.committed_transfers().fold(U256::ZERO, |acc, t| acc.saturating_add(t.value));
    trace.final_storage = trace.touched_slots().into_iter().map(|s| (s, world.sload(contract, s))).collect();
    trace
}

fn mark_rolled_back(trace: &mut ExecutionTrace, from_seq: u64) {
    for w in trace.storage_writes.iter_mut().filter(|w| w.seq >= from_seq) {
        w.rolled_back = true;
    }
    for t in trace.transfers.iter_mut().filter(|t| t.seq >= from_seq) {
        t.rolled_back = true;
    }
    for s in trace.selfdestructs.iter_mut().filter(|s| s.seq >= from_seq) {
        s.rolled_back = true;
    }
}

struct Frame {
    program: Arc<Program>,
    /// Storage and balance context.
    address: Address,
    code_address: Address,
    caller: Address,
    value: U256,
    calldata: Arc<Vec<u8>>,
    depth: usize,
    is_static: bool,
}

struct Exec<'a> {
    world: &'a mut WorldState,
    env: BlockEnv,
    contract: Address,
    calldata: Arc<Vec<u8>>,
    config: &'a ExecConfig,
    steps: usize,
    seq: u64,
    reentered: bool,
    trace: ExecutionTrace,
}

type Value = (U256, Taint);

struct Machine {
    stack: Vec<Value>,
    mem: Vec<u8>,
    mem_taint: Vec<Taint>,
}

impl Machine {
    fn pop(&mut self) -> Result<Value, Status> {
        self.stack.pop().ok_or(Status::StackUnderflow)
    }

    fn pop_word(&mut self) -> Result<U256, Status> {
        self.pop().map(|(v, _)| v)
    }

    fn push(&mut self, v: U256, t: Taint) -> Result<(), Status> {
        if self.stack.len() >= STACK_LIMIT {
            return Err(Status::StackOverflow);
        }
        self.stack.push((v, t));
        Ok(())
    }

    /// Bounds-checked byte range, growing memory to cover it.
    fn region(&mut self, off: U256, len: U256) -> Result<(usize, usize), Status> {
        if len.is_zero() {
            return Ok((0, 0));
        }
        let (off, len) = match (usize::try_from(off), usize::try_from(len)) {
            (Ok(o), Ok(l)) if o.saturating_add(l) <= MEMORY_LIMIT => (o, l),
            _ => return Err(Status::MemoryLimit),
        };
        let end = (off + len).div_ceil(32) * 32;
        if self.mem.len() < end {
            self.mem.resize(end, 0);
            self.mem_taint.resize(end, Taint::NONE);
        }
        Ok((off, len))
    }

    fn read(&mut self, off: U256, len: U256) -> Result<(Vec<u8>, Taint), Status> {
        let (o, l) = self.region(off, len)?;
        let taint = self.mem_taint[o..o + l].iter().fold(Taint::NONE, |a, &t| a | t);
        Ok((self.mem[o..o + l].to_vec(), taint))
    }

    fn write(&mut self, off: usize, bytes: &[u8], taint: Taint) {
        self.mem[off..off + bytes.len()].copy_from_slice(bytes);
        self.mem_taint[off..off + bytes.len()].fill(taint);
    }
}

fn binop(op: Opcode) -> Option<BinOp> {
    Some(match op {
        Opcode::Add => BinOp::Add,
        Opcode::Mul => BinOp::Mul,
        Opcode::Sub => BinOp::Sub,
        Opcode::Div => BinOp::Div,
        Opcode::Mod => BinOp::Mod,
        Opcode::Lt => BinOp::Lt,
        Opcode::Gt => BinOp::Gt,
        Opcode::Slt => BinOp::Slt,
        Opcode::Sgt => BinOp::Sgt,
        Opcode::Eq => BinOp::Eq,
        Opcode::And => BinOp::And,
        Opcode::Or => BinOp::Or,
        Opcode::Xor => BinOp::Xor,
        Opcode::Shl => BinOp::Shl,
        Opcode::Shr => BinOp::Shr,
        _ => return None,
    })
}

fn calldata_word(data: &[u8], off: U256) -> U256 {
    let mut buf = [0u8; 32];
    if let Ok(o) = usize::try_from(off) {
        for (i, b) in buf.iter_mut().enumerate() {
            if let Some(&x) = o.checked_add(i).and_then(|j| data.get(j)) {
                *b = x;
            }
        }
    }
    U256::from_be_bytes(buf)
}

impl Exec<'_> {
    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    fn record_transfer(&mut self, frame: &Frame, pc: usize, to: Address, value: U256, kind: TransferKind) {
        if frame.address == self.contract && !value.is_zero() {
            let seq = self.next_seq();
            self.trace.transfers.push(Transfer {
                seq,
                pc,
                depth: frame.depth,
                to,
                value,
                kind,
                rolled_back: false,
            });
        }
    }

    /// Execute a nested frame, undoing its effects if it fails.
    fn nested(&mut self, frame: Frame) -> (bool, Vec<u8>) {
        let snapshot = self.world.clone();
        let start = self.seq + 1;
        let (status, ret) = self.run(&frame);
        if status.is_success() {
            (true, ret)
        } else {
            *self.world = snapshot;
            mark_rolled_back(&mut self.trace, start);
            (false, Vec::new())
        }
    }

    fn run(&mut self, frame: &Frame) -> (Status, Vec<u8>) {
        let mut m = Machine { stack: Vec::new(), mem: Vec::new(), mem_taint: Vec::new() };
        match self.interpret(frame, &mut m) {
            Ok((status, ret)) => (status, ret),
            Err(status) => (status, Vec::new()),
        }
    }

    fn interpret(&mut self, frame: &Frame, m: &mut Machine) -> Result<(Status, Vec<u8>), Status> {
        let program = frame.program.clone();
        let track_code = frame.code_address == self.contract;
        let track_storage = frame.address == self.contract;
        let mut pc = 0usize;
        let mut block: BlockId = 0;
        loop {
            let Some(idx) = program.index_of(pc) else {
                return Ok((Status::Stop, Vec::new()));
            };
            if self.steps >= self.config.max_steps {
                return Err(Status::StepBudget);
            }
            self.steps += 1;
            if let Some(b) = program.block_starting_at(pc) {
                block = b;
                if track_code {
                    self.trace.executed_blocks.push(b);
                }
            }
            let ins = &program.instructions[idx];
            let op = ins.opcode;
            let mut next = ins.next_pc();

            if let Some(b) = binop(op) {
                let (a, ta) = m.pop()?;
                let (c, tc) = m.pop()?;
                m.push(apply_binary(b, a, c), ta | tc)?;
                pc = next;
                continue;
            }

            match op {
                Opcode::Stop => return Ok((Status::Stop, Vec::new())),
                Opcode::IsZero | Opcode::Not => {
                    let (a, t) = m.pop()?;
                    let u = if op == Opcode::IsZero { UnOp::IsZero } else { UnOp::Not };
                    m.push(apply_unary(u, a), t)?;
                }
                Opcode::Sha3 => {
                    let off = m.pop_word()?;
                    let len = m.pop_word()?;
                    let (bytes, t) = m.read(off, len)?;
                    let h = U256::from_be_bytes::<32>(Keccak256::digest(&bytes).into());
                    m.push(h, t)?;
                }
                Opcode::Address => m.push(frame.address, Taint::ENV)?,
                Opcode::Balance => {
                    let a = to_address(m.pop_word()?);
                    m.push(self.world.balance(a), Taint::ENV)?;
                }
                Opcode::Caller => m.push(frame.caller, Taint::CALLER)?,
                Opcode::CallValue => m.push(frame.value, Taint::CALLVALUE)?,
                Opcode::CallDataLoad => {
                    let (off, t) = m.pop()?;
                    m.push(calldata_word(&frame.calldata, off), Taint::CALLDATA | t)?;
                }
                Opcode::CallDataSize => m.push(U256::from(frame.calldata.len()), Taint::CALLDATA)?,
                Opcode::CallDataCopy => {
                    let dest = m.pop_word()?;
                    let off = m.pop_word()?;
                    let len = m.pop_word()?;
                    let (d, l) = m.region(dest, len)?;
                    let bytes: Vec<u8> = (0..l)
                        .map(|i| {
                            usize::try_from(off)
                                .ok()
                                .and_then(|o| o.checked_add(i))
                                .and_then(|j| frame.calldata.get(j).copied())
                                .unwrap_or(0)
                        })
                        .collect();
                    m.write(d, &bytes, Taint::CALLDATA);
                }
                Opcode::Coinbase => m.push(self.env.coinbase, Taint::BLOCK)?,
                Opcode::Timestamp => m.push(self.env.timestamp, Taint::BLOCK)?,
                Opcode::Number => m.push(self.env.number, Taint::BLOCK)?,
                Opcode::PrevRandao => m.push(self.env.prevrandao, Taint::BLOCK)?,
                Opcode::GasLimit => m.push(self.env.gaslimit, Taint::BLOCK)?,
                Opcode::Gas => {
                    let left = self.config.max_steps.saturating_sub(self.steps);
                    m.push(U256::from(left), Taint::ENV)?;
                }
                Opcode::Pop => {
                    m.pop()?;
                }
                Opcode::MLoad => {
                    let off = m.pop_word()?;
                    let (bytes, t) = m.read(off, U256::from(32))?;
                    m.push(U256::from_be_slice(&bytes), t)?;
                }
                Opcode::MStore => {
                    let off = m.pop_word()?;
                    let (v, t) = m.pop()?;
                    let (o, _) = m.region(off, U256::from(32))?;
                    m.write(o, &v.to_be_bytes::<32>(), t);
                }
                Opcode::MStore8 => {
                    let off = m.pop_word()?;
                    let (v, t) = m.pop()?;
                    let (o, _) = m.region(off, U256::from(1))?;
                    m.write(o, &[v.to_be_bytes::<32>()[31]], t);
                }
                Opcode::SLoad => {
                    let slot = m.pop_word()?;
                    let v = self.world.sload(frame.address, slot);
                    if track_storage {
                        let seq = self.next_seq();
                        self.trace.storage_reads.push(StorageAccess {
                            seq,
                            pc,
                            depth: frame.depth,
                            slot,
                            value: v,
                            rolled_back: false,
                        });
                    }
                    m.push(v, Taint::STORAGE)?;
                }
                Opcode::SStore => {
                    if frame.is_static {
                        return Err(Status::StaticViolation);
                    }
                    let slot = m.pop_word()?;
                    let v = m.pop_word()?;
                    self.world.sstore(frame.address, slot, v);
                    if track_storage {
                        let seq = self.next_seq();
                        self.trace.storage_writes.push(StorageAccess {
                            seq,
                            pc,
                            depth: frame.depth,
                            slot,
                            value: v,
                            rolled_back: false,
                        });
                    }
                }
                Opcode::Jump => {
                    let dest = m.pop_word()?;
                    next = self.jump_target(&program, dest)?;
                }
                Opcode::JumpI => {
                    let dest = m.pop_word()?;
                    let cond = m.pop_word()?;
                    let taken = !cond.is_zero();
                    if track_code {
                        let seq = self.next_seq();
                        self.trace.branches.push(BranchEvent { seq, block, pc, taken, depth: frame.depth });
                    }
                    if taken {
                        next = self.jump_target(&program, dest)?;
                    }
                }
                Opcode::JumpDest => {}
                Opcode::Push(_) => m.push(ins.push_value().unwrap(), Taint::NONE)?,
                Opcode::Dup(n) => {
                    let n = n as usize;
                    if m.stack.len() < n {
                        return Err(Status::StackUnderflow);
                    }
                    let v = m.stack[m.stack.len() - n];
                    m.push(v.0, v.1)?;
                }
                Opcode::Swap(n) => {
                    let n = n as usize;
                    let len = m.stack.len();
                    if len < n + 1 {
                        return Err(Status::StackUnderflow);
                    }
                    m.stack.swap(len - 1, len - 1 - n);
                }
                Opcode::Log(n) => {
                    if frame.is_static {
                        return Err(Status::StaticViolation);
                    }
                    let off = m.pop_word()?;
                    let len = m.pop_word()?;
                    for _ in 0..n {
                        m.pop()?;
                    }
                    m.region(off, len)?;
                }
                Opcode::Call | Opcode::DelegateCall | Opcode::StaticCall => {
                    self.call(frame, m, op, pc)?;
                }
                Opcode::Return => {
                    let off = m.pop_word()?;
                    let len = m.pop_word()?;
                    let (bytes, _) = m.read(off, len)?;
                    return Ok((Status::Return, bytes));
                }
                Opcode::Revert => {
                    let off = m.pop_word()?;
                    let len = m.pop_word()?;
                    m.region(off, len)?;
                    return Err(Status::Revert);
                }
                Opcode::SelfDestruct => {
                    if frame.is_static {
                        return Err(Status::StaticViolation);
                    }
                    let beneficiary = to_address(m.pop_word()?);
                    let bal = self.world.balance(frame.address);
                    self.world.transfer(frame.address, beneficiary, bal);
                    if track_storage {
                        let seq = self.next_seq();
                        self.trace.selfdestructs.push(SelfDestructRecord {
                            seq,
                            pc,
                            depth: frame.depth,
                            beneficiary,
                            rolled_back: false,
                        });
                    }
                    self.record_transfer(frame, pc, beneficiary, bal, TransferKind::SelfDestruct);
                    self.world.deployed.remove(&frame.address);
                    let addr = frame.address;
                    self.world.storage.retain(|(a, _), _| *a != addr);
                    return Ok((Status::SelfDestruct, Vec::new()));
                }
                Opcode::Invalid => return Err(Status::InvalidOpcode),
                _ => unreachable!("binary opcodes handled above"),
            }
            pc = next;
        }
    }

    fn jump_target(&self, program: &Program, dest: U256) -> Result<usize, Status> {
        usize::try_from(dest)
            .ok()
            .filter(|&d| program.is_jumpdest(d))
            .ok_or(Status::BadJump)
    }

    fn call(&mut self, frame: &Frame, m: &mut Machine, op: Opcode, pc: usize) -> Result<(), Status> {
        let gas = m.pop_word()?;
        let (target, target_taint) = m.pop()?;
        let target = to_address(target);
        let value = if op == Opcode::Call { m.pop_word()? } else { U256::ZERO };
        let a_off = m.pop_word()?;
        let a_len = m.pop_word()?;
        let r_off = m.pop_word()?;
        let r_len = m.pop_word()?;
        let (args, args_taint) = m.read(a_off, a_len)?;
        let (r_off, r_len) = m.region(r_off, r_len)?;
        if frame.is_static && !value.is_zero() {
            return Err(Status::StaticViolation);
        }
        let kind = match op {
            Opcode::Call => CallKind::Call,
            Opcode::DelegateCall => CallKind::DelegateCall,
            _ => CallKind::StaticCall,
        };

        let record = frame.address == self.contract;
        let seq = self.next_seq();
        let rec_idx = record.then(|| {
            self.trace.calls.push(CallRecord {
                seq,
                seq_end: seq,
                pc,
                depth: frame.depth,
                kind,
                target,
                target_class: target_taint.class(),
                args_from_calldata: args_taint.has(Taint::CALLDATA),
                value,
                gas,
                success: false,
                reentered: false,
                reentry_value_out: U256::ZERO,
            });
            self.trace.calls.len() - 1
        });

        let mut reentered = false;
        let mut reentry_value_out = U256::ZERO;
        let (success, ret) = if self.world.balance(frame.address) < value {
            (false, Vec::new())
        } else if let Some(callee) = self.world.deployed.get(&target).cloned() {
            let inner = match kind {
                CallKind::DelegateCall => Frame {
                    program: callee,
                    address: frame.address,
                    code_address: target,
                    caller: frame.caller,
                    value: frame.value,
                    calldata: Arc::new(args),
                    depth: frame.depth + 1,
                    is_static: frame.is_static,
                },
                _ => Frame {
                    program: callee,
                    address: target,
                    code_address: target,
                    caller: frame.address,
                    value,
                    calldata: Arc::new(args),
                    depth: frame.depth + 1,
                    is_static: frame.is_static || kind == CallKind::StaticCall,
                },
            };
            let snapshot = self.world.clone();
            let start = self.seq + 1;
            self.world.transfer(frame.address, target, value);
            self.record_transfer(frame, pc, target, value, TransferKind::Call);
            let (status, ret) = self.run(&inner);
            if status.is_success() {
                (true, ret)
            } else {
                *self.world = snapshot;
                mark_rolled_back(&mut self.trace, start);
                (false, Vec::new())
            }
        } else {
            // Undeployed account: the call succeeds with zeroed return data.
            if kind == CallKind::Call {
                self.world.transfer(frame.address, target, value);
                self.record_transfer(frame, pc, target, value, TransferKind::Call);
            }
            let reenter = kind == CallKind::Call
                && self.config.reentry == ReentryPolicy::Once
                && !self.reentered
                && record
                && self.world.harness.contains(&target)
                && !value.is_zero()
                && gas > U256::from(STIPEND);
            if reenter {
                if let Some(program) = self.world.deployed.get(&self.contract).cloned() {
                    self.reentered = true;
                    reentered = true;
                    let start = self.seq + 1;
                    let inner = Frame {
                        program,
                        address: self.contract,
                        code_address: self.contract,
                        caller: target,
                        value: U256::ZERO,
                        calldata: self.calldata.clone(),
                        depth: frame.depth + 1,
                        is_static: false,
                    };
                    let (ok, _) = self.nested(inner);
                    if ok {
                        reentry_value_out = self
                            .trace
                            .transfers
                            .iter()
                            .filter(|t| t.seq >= start && !t.rolled_back)
                            .fold(U256::ZERO, |a, t| a.saturating_add(t.value));
                    }
                }
            }
            (true, vec![0u8; r_len])
        };

        let n = ret.len().min(r_len);
        m.mem[r_off..r_off + n].copy_from_slice(&ret[..n]);
        m.mem_taint[r_off..r_off + n].fill(Taint::ENV);
        if let Some(i) = rec_idx {
            let end = self.seq;
            let rec = &mut self.trace.calls[i];
            rec.success = success;
            rec.seq_end = end;
            rec.reentered = reentered;
            rec.reentry_value_out = reentry_value_out;
        }
        m.push(U256::from(success as u8), Taint::ENV)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bytecode::{assemble, EdgeKind};
    use crate::vm::{ATTACKER_A, DEPLOYER};

    fn tx(sender: Address, args: Vec<u8>, value: u64) -> Transaction {
        Transaction { sender, selector: [0; 4], args, value: U256::from(value), block_env_override: None }
    }

    fn deploy(src: &str) -> (WorldState, Address) {
        let mut w = WorldState::with_harness();
        let a = w.deploy(assemble(src).unwrap());
        (w, a)
    }

    #[test]
    fn sstore_is_traced_and_committed() {
        let (w, a) = deploy("PUSH1 7 / PUSH1 0 / SSTORE / STOP");
        let (t, w2) = execute(&w, a, &tx(DEPLOYER, vec![], 0), &ExecConfig::default());
        assert!(!t.reverted);
        assert_eq!(w2.sload(a, U256::ZERO), U256::from(7));
        let writes: Vec<_> = t.storage_writes.iter().map(|s| (s.slot, s.value)).collect();
        assert_eq!(writes, vec![(U256::ZERO, U256::from(7))]);
    }

    #[test]
    fn guard_takes_true_branch_when_slot_small() {
        let (mut w, a) = deploy("PUSH1 2 / SLOAD / PUSH2 5 / GT / PUSH2 @t / JUMPI / STOP / t: JUMPDEST / STOP");
        w.sstore(a, U256::from(2), U256::from(3));
        let (t, _) = execute(&w, a, &tx(DEPLOYER, vec![], 0), &ExecConfig::default());
        assert_eq!(t.branches.len(), 1);
        assert_eq!(t.branch_edges().into_iter().next().unwrap().1, EdgeKind::BranchTrue);
    }

    #[test]
    fn revert_leaves_world_untouched() {
        let (w, a) = deploy("PUSH1 7 / PUSH1 0 / SSTORE / PUSH1 0 / PUSH1 0 / REVERT");
        let (t, w2) = execute(&w, a, &tx(ATTACKER_A, vec![], 5), &ExecConfig::default());
        assert!(t.reverted);
        assert_eq!(t.status, Status::Revert);
        assert!(w.same_state(&w2));
        assert!(t.storage_writes[0].rolled_back);
    }

    #[test]
    fn deploy_addresses_are_counter_derived() {
        let mut w = WorldState::new();
        assert_eq!(w.deploy(vec![0]), U256::from(1));
        assert_eq!(w.deploy(vec![0]), U256::from(2));
    }

    #[test]
    fn step_budget_halts_loops() {
        let (w, a) = deploy("l: JUMPDEST / PUSH @l / JUMP");
        let cfg = ExecConfig { max_steps: 50, ..Default::default() };
        let (t, _) = execute(&w, a, &tx(DEPLOYER, vec![], 0), &cfg);
        assert_eq!(t.status, Status::StepBudget);
        assert!(t.reverted);
    }

    #[test]
    fn stubbed_call_credits_recipient() {
        let (mut w, a) = deploy(
            "PUSH1 0 / PUSH1 0 / PUSH1 0 / PUSH1 0 / PUSH1 10 / PUSH4 0xabcdef / GAS / CALL / STOP",
        );
        w.set_balance(a, U256::from(100));
        let (t, w2) = execute(&w, a, &tx(DEPLOYER, vec![], 0), &ExecConfig::default());
        assert_eq!(w2.balance(U256::from(0xabcdefu64)), U256::from(10));
        assert_eq!(t.outgoing_value, U256::from(10));
        assert!(t.calls[0].success);
        assert_eq!(t.calls[0].target_class, TaintClass::Constant);
    }
}
