//! Basic-block partitioning and jump resolution.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use ruint::aliases::U256;
use serde::{Deserialize, Serialize};

use super::disasm::Instruction;
use super::opcode::Opcode;

pub type BlockId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    Fallthrough,
    Jump,
    BranchTrue,
    BranchFalse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockKind {
    Code,
    /// Destination of a jump whose target could not be resolved.
    UnknownSink,
    /// Destination of a jump to a constant that is not a JUMPDEST.
    BadJumpSink,
    /// Fall-through of a JUMPI that is the last instruction of the code.
    ExitSink,
}

#[derive(Clone, Debug)]
pub struct BasicBlock {
    pub id: BlockId,
    pub kind: BlockKind,
    pub start_pc: usize,
    /// pc of the last instruction (inclusive).
    pub end_pc: usize,
    pub instructions: Vec<Instruction>,
    pub successors: Vec<(BlockId, EdgeKind)>,
    /// Block this one was copied from (itself for an un-unrolled graph).
    pub origin: BlockId,
    /// Loop iteration of the innermost loop this copy belongs to.
    pub iteration: u32,
    pub reachable: bool,
}

impl BasicBlock {
    pub fn last(&self) -> Option<&Instruction> {
        self.instructions.last()
    }

    pub fn ends_in_jumpi(&self) -> bool {
        self.last().is_some_and(|i| i.opcode == Opcode::JumpI)
    }

    pub fn successor(&self, kind: EdgeKind) -> Option<BlockId> {
        self.successors.iter().find(|(_, k)| *k == kind).map(|(b, _)| *b)
    }

    pub fn contains_pc(&self, pc: usize) -> bool {
        self.instructions.iter().any(|i| i.pc == pc)
    }
}

#[derive(Clone, Debug)]
pub struct Cfg {
    pub blocks: Vec<BasicBlock>,
    pub entry: BlockId,
    /// Bound used to unroll this graph, if it was unrolled.
    pub unroll_bound: Option<usize>,
}

impl Cfg {
    pub fn block(&self, id: BlockId) -> &BasicBlock {
        &self.blocks[id]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Code block whose instruction range covers `pc` (original graphs only).
    pub fn block_of_pc(&self, pc: usize) -> Option<BlockId> {
        self.blocks
            .iter()
            .find(|b| b.kind == BlockKind::Code && b.start_pc <= pc && pc <= b.end_pc)
            .map(|b| b.id)
    }

    pub fn instructions(&self) -> impl Iterator<Item = &Instruction> {
        self.blocks.iter().flat_map(|b| b.instructions.iter())
    }

    pub fn predecessors(&self) -> Vec<Vec<BlockId>> {
        let mut preds = vec![Vec::new(); self.blocks.len()];
        for b in &self.blocks {
            for &(s, _) in &b.successors {
                if !preds[s].contains(&b.id) {
                    preds[s].push(b.id);
                }
            }
        }
        preds
    }

    pub fn edges(&self) -> impl Iterator<Item = (BlockId, BlockId, EdgeKind)> + '_ {
        self.blocks
            .iter()
            .flat_map(|b| b.successors.iter().map(move |&(s, k)| (b.id, s, k)))
    }

    /// Number of conditional (block, direction) edges.
    pub fn branch_edge_count(&self) -> usize {
        self.blocks.iter().filter(|b| b.ends_in_jumpi()).count() * 2
    }

    /// Copies of an original block in an unrolled graph.
    pub fn copies_of(&self, origin: BlockId) -> Vec<BlockId> {
        self.blocks.iter().filter(|b| b.origin == origin).map(|b| b.id).collect()
    }

    pub fn is_acyclic(&self) -> bool {
        // Kahn's algorithm.
        let mut indeg = vec![0usize; self.blocks.len()];
        for (_, s, _) in self.edges() {
            indeg[s] += 1;
        }
        let mut queue: VecDeque<_> = (0..self.blocks.len()).filter(|&b| indeg[b] == 0).collect();
        let mut seen = 0;
        while let Some(b) = queue.pop_front() {
            seen += 1;
            for &(s, _) in &self.blocks[b].successors {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    queue.push_back(s);
                }
            }
        }
        seen == self.blocks.len()
    }

    /// Blocks reachable from `from` following successor edges.
    pub fn reachable_from(&self, from: BlockId) -> Vec<bool> {
        let mut seen = vec![false; self.blocks.len()];
        let mut stack = vec![from];
        while let Some(b) = stack.pop() {
            if std::mem::replace(&mut seen[b], true) {
                continue;
            }
            stack.extend(self.blocks[b].successors.iter().map(|&(s, _)| s));
        }
        seen
    }

    /// Dominator sets by the iterative data-flow formulation.
    /// `dom[b]` contains every block dominating `b` (including `b`).
    pub fn dominators(&self) -> Vec<BTreeSet<BlockId>> {
        let n = self.blocks.len();
        let reach = self.reachable_from(self.entry);
        let preds = self.predecessors();
        let all: BTreeSet<_> = (0..n).collect();
        let mut dom: Vec<BTreeSet<BlockId>> = (0..n)
            .map(|b| if b == self.entry { BTreeSet::from([b]) } else { all.clone() })
            .collect();
        let mut changed = true;
        while changed {
            changed = false;
            for b in 0..n {
                if b == self.entry || !reach[b] {
                    continue;
                }
                let mut new: Option<BTreeSet<BlockId>> = None;
                for &p in preds[b].iter().filter(|&&p| reach[p]) {
                    new = Some(match new {
                        None => dom[p].clone(),
                        Some(acc) => acc.intersection(&dom[p]).copied().collect(),
                    });
                }
                let mut new = new.unwrap_or_default();
                new.insert(b);
                if new != dom[b] {
                    dom[b] = new;
                    changed = true;
                }
            }
        }
        dom
    }
}

const MAX_ABSTRACT_DEPTH: usize = 64;
const MAX_STATES_PER_BLOCK: usize = 16;

/// Partition instructions into basic blocks and resolve jump edges.
///
/// Jump targets come from a PUSH immediately preceding the jump or, failing
/// that, from a bounded constant-stack propagation from the entry block.
/// Unresolved dynamic jumps get an edge to an `UnknownSink`; jumps to a
/// constant that is not a JUMPDEST get an edge to a `BadJumpSink`.
pub fn build_cfg(instructions: &[Instruction]) -> Cfg {
    let mut blocks: Vec<BasicBlock> = Vec::new();
    let mut current: Vec<Instruction> = Vec::new();
    let flush = |current: &mut Vec<Instruction>, blocks: &mut Vec<BasicBlock>| {
        if current.is_empty() {
            return;
        }
        let id = blocks.len();
        let ins = std::mem::take(current);
        blocks.push(BasicBlock {
            id,
            kind: BlockKind::Code,
            start_pc: ins[0].pc,
            end_pc: ins.last().unwrap().pc,
            instructions: ins,
            successors: Vec::new(),
            origin: id,
            iteration: 0,
            reachable: false,
        });
    };
    for ins in instructions {
        if ins.opcode == Opcode::JumpDest {
            flush(&mut current, &mut blocks);
        }
        current.push(ins.clone());
        if ins.opcode.ends_block() {
            flush(&mut current, &mut blocks);
        }
    }
    flush(&mut current, &mut blocks);

    let code_end = instructions.last().map_or(0, Instruction::next_pc);
    let jumpdest: BTreeMap<usize, BlockId> = blocks
        .iter()
        .filter(|b| b.instructions[0].opcode == Opcode::JumpDest)
        .map(|b| (b.start_pc, b.id))
        .collect();
    let n_code = blocks.len();

    // Statically known jump targets per block.
    let mut targets: Vec<BTreeSet<U256>> = vec![BTreeSet::new(); n_code];
    let mut unresolved = vec![false; n_code];
    let mut needs_stack = vec![false; n_code];
    for b in &blocks {
        let ins = &b.instructions;
        let last = ins.last().unwrap();
        if matches!(last.opcode, Opcode::Jump | Opcode::JumpI) {
            match ins.len().checked_sub(2).map(|i| &ins[i]) {
                Some(prev) if prev.push_value().is_some() => {
                    targets[b.id].insert(prev.push_value().unwrap());
                }
                _ => needs_stack[b.id] = true,
            }
        }
    }

    if needs_stack.iter().any(|&x| x) && n_code > 0 {
        let mut fallthrough = vec![None; n_code];
        for i in 0..n_code {
            let last = blocks[i].last().unwrap().opcode;
            if !last.is_terminator() && i + 1 < n_code {
                fallthrough[i] = Some(i + 1);
            }
        }
        let mut seen: Vec<HashSet<Vec<Option<U256>>>> = vec![HashSet::new(); n_code];
        let mut work: VecDeque<(BlockId, Vec<Option<U256>>)> = VecDeque::from([(0, Vec::new())]);
        let mut visited = vec![false; n_code];
        while let Some((b, stack)) = work.pop_front() {
            if seen[b].len() >= MAX_STATES_PER_BLOCK {
                if needs_stack[b] {
                    unresolved[b] = true;
                }
                continue;
            }
            if !seen[b].insert(stack.clone()) {
                continue;
            }
            visited[b] = true;
            let mut st = stack;
            let ins = &blocks[b].instructions;
            let (body, last) = ins.split_at(ins.len() - 1);
            for i in body {
                abstract_step(i, &mut st);
            }
            let last = &last[0];
            let mut succ: Vec<BlockId> = Vec::new();
            match last.opcode {
                Opcode::Jump | Opcode::JumpI => {
                    let dst = st.pop().flatten();
                    if last.opcode == Opcode::JumpI {
                        st.pop();
                        succ.extend(fallthrough[b]);
                    }
                    match dst {
                        Some(v) => {
                            if needs_stack[b] {
                                targets[b].insert(v);
                            }
                            if let Some(&t) = usize::try_from(v).ok().and_then(|pc| jumpdest.get(&pc)) {
                                succ.push(t);
                            }
                        }
                        None => {
                            if needs_stack[b] {
                                unresolved[b] = true;
                            }
                            // Fast-path targets are still followed.
                            for v in &targets[b] {
                                if let Some(&t) = usize::try_from(*v).ok().and_then(|pc| jumpdest.get(&pc)) {
                                    succ.push(t);
                                }
                            }
                        }
                    }
                }
                _ => {
                    abstract_step(last, &mut st);
                    succ.extend(fallthrough[b]);
                }
            }
            succ.sort_unstable();
            succ.dedup();
            for s in succ {
                work.push_back((s, st.clone()));
            }
        }
        for b in 0..n_code {
            if needs_stack[b] && !visited[b] {
                unresolved[b] = true;
            }
        }
    }

    let mut sinks: BTreeMap<BlockKind, BlockId> = BTreeMap::new();
    let mut sink = |kind: BlockKind, blocks: &mut Vec<BasicBlock>| -> BlockId {
        *sinks.entry(kind).or_insert_with(|| {
            let id = blocks.len();
            blocks.push(BasicBlock {
                id,
                kind,
                start_pc: code_end,
                end_pc: code_end,
                instructions: Vec::new(),
                successors: Vec::new(),
                origin: id,
                iteration: 0,
                reachable: false,
            });
            id
        })
    };
    for b in 0..n_code {
        let last = blocks[b].last().unwrap().opcode;
        let mut succ: Vec<(BlockId, EdgeKind)> = Vec::new();
        let jump_kind = if last == Opcode::JumpI { EdgeKind::BranchTrue } else { EdgeKind::Jump };
        if matches!(last, Opcode::Jump | Opcode::JumpI) {
            for v in &targets[b] {
                let t = usize::try_from(*v).ok().and_then(|pc| jumpdest.get(&pc).copied());
                let t = t.unwrap_or_else(|| sink(BlockKind::BadJumpSink, &mut blocks));
                succ.push((t, jump_kind));
            }
            if unresolved[b] || targets[b].is_empty() {
                succ.push((sink(BlockKind::UnknownSink, &mut blocks), jump_kind));
            }
        }
        if last == Opcode::JumpI {
            let f = if b + 1 < n_code { b + 1 } else { sink(BlockKind::ExitSink, &mut blocks) };
            succ.push((f, EdgeKind::BranchFalse));
        } else if !last.is_terminator() && b + 1 < n_code {
            succ.push((b + 1, EdgeKind::Fallthrough));
        }
        succ.dedup();
        blocks[b].successors = succ;
    }

    let mut cfg = Cfg { blocks, entry: 0, unroll_bound: None };
    if !cfg.blocks.is_empty() {
        let reach = cfg.reachable_from(cfg.entry);
        for (b, r) in cfg.blocks.iter_mut().zip(reach) {
            b.reachable = r;
        }
    }
    cfg
}

fn abstract_step(ins: &Instruction, st: &mut Vec<Option<U256>>) {
    let pop = |st: &mut Vec<Option<U256>>| st.pop().flatten();
    match ins.opcode {
        Opcode::Push(_) => st.push(ins.push_value()),
        Opcode::Dup(n) => {
            let n = n as usize;
            let v = if st.len() >= n { st[st.len() - n] } else { None };
            st.push(v);
        }
        Opcode::Swap(n) => {
            let n = n as usize;
            let len = st.len();
            if len > n {
                st.swap(len - 1, len - 1 - n);
            } else {
                // Unknown slot below the modelled stack; forget both.
                if let Some(top) = st.last_mut() {
                    *top = None;
                }
                while st.len() < n + 1 {
                    st.insert(0, None);
                }
                let len = st.len();
                st[len - 1 - n] = None;
            }
        }
        Opcode::Add | Opcode::Sub | Opcode::And | Opcode::Or => {
            let a = pop(st);
            let b = pop(st);
            st.push(match (a, b) {
                (Some(a), Some(b)) => Some(match ins.opcode {
                    Opcode::Add => a.wrapping_add(b),
                    Opcode::Sub => a.wrapping_sub(b),
                    Opcode::And => a & b,
                    _ => a | b,
                }),
                _ => None,
            });
        }
        op => {
            let (pops, pushes) = op.stack_io();
            for _ in 0..pops {
                st.pop();
            }
            for _ in 0..pushes {
                st.push(None);
            }
        }
    }
    if st.len() > MAX_ABSTRACT_DEPTH {
        st.remove(0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bytecode::{assemble, disassemble};

    fn cfg_of(src: &str) -> Cfg {
        build_cfg(&disassemble(&assemble(src).unwrap()))
    }

    #[test]
    fn straight_line_is_one_block() {
        let cfg = cfg_of("PUSH1 1 / PUSH1 2 / ADD / STOP");
        assert_eq!(cfg.len(), 1);
        assert!(cfg.blocks[0].successors.is_empty());
    }

    #[test]
    fn guard_fragment_edges() {
        let cfg = cfg_of(
            "PUSH1 2 / SLOAD / PUSH2 5 / GT / PUSH2 @t / JUMPI
             PUSH1 0 / STOP
             t: JUMPDEST / STOP",
        );
        assert_eq!(cfg.len(), 3);
        let b = &cfg.blocks[0];
        assert_eq!(b.successor(EdgeKind::BranchTrue), Some(2));
        assert_eq!(b.successor(EdgeKind::BranchFalse), Some(1));
        assert_eq!(cfg.block(2).instructions[0].opcode, Opcode::JumpDest);
    }

    #[test]
    fn jump_to_non_jumpdest_goes_to_bad_sink() {
        let cfg = cfg_of("PUSH1 4 / JUMP / STOP / STOP / STOP");
        let (t, _) = cfg.blocks[0].successors[0];
        assert_eq!(cfg.block(t).kind, BlockKind::BadJumpSink);
    }

    #[test]
    fn dynamic_jump_resolved_through_constant_stack() {
        // Return-address style: the destination is pushed two instructions earlier.
        let cfg = cfg_of("PUSH @r / PUSH1 1 / POP / JUMP / r: JUMPDEST / STOP");
        let (t, k) = cfg.blocks[0].successors[0];
        assert_eq!(k, EdgeKind::Jump);
        assert_eq!(cfg.block(t).kind, BlockKind::Code);
        assert_eq!(cfg.blocks[0].successors.len(), 1);
    }

    #[test]
    fn unresolvable_jump_goes_to_unknown_sink() {
        let cfg = cfg_of("PUSH1 0 / CALLDATALOAD / JUMP / JUMPDEST / STOP");
        let (t, _) = cfg.blocks[0].successors[0];
        assert_eq!(cfg.block(t).kind, BlockKind::UnknownSink);
    }

    #[test]
    fn backward_loop_is_cyclic() {
        let cfg = cfg_of(
            "PUSH1 0
             head: JUMPDEST / PUSH1 1 / ADD / DUP1 / PUSH1 10 / GT / PUSH @head / JUMPI
             STOP",
        );
        assert!(!cfg.is_acyclic());
    }

    #[test]
    fn partition_covers_every_instruction_once() {
        let code = assemble(
            "PUSH1 0 / CALLDATALOAD / PUSH @a / JUMPI / STOP
             a: JUMPDEST / PUSH1 1 / PUSH @b / JUMP
             b: JUMPDEST / STOP",
        )
        .unwrap();
        let ins = disassemble(&code);
        let cfg = build_cfg(&ins);
        let total: usize = cfg.blocks.iter().map(|b| b.instructions.len()).sum();
        assert_eq!(total, ins.len());
        let mut pcs: Vec<_> = cfg.instructions().map(|i| i.pc).collect();
        pcs.dedup();
        assert_eq!(pcs.len(), ins.len());
    }

    #[test]
    fn dominators_of_diamond() {
        let cfg = cfg_of(
            "PUSH1 0 / CALLDATALOAD / PUSH @a / JUMPI
             PUSH @j / JUMP
             a: JUMPDEST
             j: JUMPDEST / STOP",
        );
        let dom = cfg.dominators();
        let join = cfg.block_of_pc(cfg.blocks.last().unwrap().start_pc).unwrap();
        assert!(dom[join].contains(&0));
        assert!(!dom[join].contains(&1));
    }
}
