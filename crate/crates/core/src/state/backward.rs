//! Backward stack reconstruction from a branch point.
//!
//! Starting at a JUMPI, the walk keeps a trace-back list mapping stack
//! positions (0 = top) to the symbolic variables still to be explained.
//! Each earlier instruction either defines traced variables from fresh
//! variables for its own operands, or just shifts positions. Once a memory
//! read is pending, earlier memory writes are traced too and the reads are
//! resolved against them afterwards.

use std::collections::{BTreeMap, HashMap};

use ruint::aliases::U256;
use serde::Serialize;

use crate::bytecode::{Cfg, EdgeKind, Instruction, Opcode};
use crate::symbolic::{pure_result, resolve_load, resolve_sha3, MemWrite, SymExpr};

use super::constraint::Constraint;
use super::paths::Path;

type Var = usize;

#[derive(Clone, Debug)]
enum Def {
    Const(U256),
    Op(Opcode, Vec<Var>),
    Alias(Var),
    MLoad { at: usize, off: Var },
    Sha3 { at: usize, off: Var, len: Var },
    Unknown,
}

#[derive(Clone, Debug)]
enum Write {
    Word { off: Var, value: Var },
    Byte { off: Var, value: Var },
    Calldata { dest: Var, src: Var, len: Var },
    Opaque { off: Var, len: Var },
}

/// One row of the walk: the instruction and the trace-back list before it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BackwardStep {
    pub pc: usize,
    pub instruction: String,
    /// (stack position, variable) pairs still being traced, top first.
    pub traceback: Vec<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub condition: SymExpr,
    pub steps: Vec<BackwardStep>,
}

struct Walk {
    defs: Vec<Option<Def>>,
    writes: Vec<(usize, Write)>,
    memo: HashMap<Var, SymExpr>,
}

impl Walk {
    fn fresh(&mut self) -> Var {
        self.defs.push(None);
        self.defs.len() - 1
    }

    fn resolve(&mut self, v: Var) -> SymExpr {
        if let Some(e) = self.memo.get(&v) {
            return e.clone();
        }
        let e = match self.defs[v].clone() {
            None | Some(Def::Unknown) => SymExpr::Unknown,
            Some(Def::Const(c)) => SymExpr::Const(c),
            Some(Def::Alias(w)) => self.resolve(w),
            Some(Def::Op(op, ins)) => {
                let args: Vec<SymExpr> = ins.iter().map(|&i| self.resolve(i)).collect();
                pure_result(op, &args).unwrap_or(SymExpr::Unknown)
            }
            Some(Def::MLoad { at, off }) => match SymExpr::concrete_slot(&self.resolve(off)) {
                Some(o) => {
                    let log = self.log_before(at);
                    resolve_load(&log, o)
                }
                None => SymExpr::Unknown,
            },
            Some(Def::Sha3 { at, off, len }) => {
                let (o, l) = (self.resolve(off), self.resolve(len));
                let log = self.log_before(at);
                resolve_sha3(&log, SymExpr::concrete_slot(&o), SymExpr::concrete_slot(&l))
            }
        };
        self.memo.insert(v, e.clone());
        e
    }

    /// Memory writes strictly before instruction position `at`, in program order.
    fn log_before(&mut self, at: usize) -> Vec<MemWrite> {
        let mut ws: Vec<(usize, Write)> = self.writes.iter().filter(|(t, _)| *t < at).cloned().collect();
        ws.sort_by_key(|(t, _)| *t);
        ws.into_iter()
            .map(|(_, w)| match w {
                Write::Word { off, value } => {
                    let off = SymExpr::concrete_slot(&self.resolve(off));
                    MemWrite::Word { off, value: self.resolve(value) }
                }
                Write::Byte { off, value } => {
                    let off = SymExpr::concrete_slot(&self.resolve(off));
                    MemWrite::Byte { off, from_calldata: self.resolve(value).mentions_calldata() }
                }
                Write::Calldata { dest, src, len } => MemWrite::Calldata {
                    dest: SymExpr::concrete_slot(&self.resolve(dest)),
                    src: self.resolve(src),
                    len: SymExpr::concrete_slot(&self.resolve(len)),
                },
                Write::Opaque { off, len } => MemWrite::Opaque {
                    off: SymExpr::concrete_slot(&self.resolve(off)),
                    len: SymExpr::concrete_slot(&self.resolve(len)),
                },
            })
            .collect()
    }
}

/// Reconstruct the operand at stack position `pos` just before instruction
/// `prefix.len()`, given the straight-line instruction sequence `prefix`
/// executed from an empty stack.
pub fn reconstruct_operand(prefix: &[&Instruction], pos: usize) -> Reconstruction {
    let mut walk = Walk { defs: Vec::new(), writes: Vec::new(), memo: HashMap::new() };
    let root = walk.fresh();
    let mut tb: BTreeMap<usize, Var> = BTreeMap::from([(pos, root)]);
    let mut mem_needed = false;
    let mut steps = Vec::new();

    for (t, ins) in prefix.iter().enumerate().rev() {
        if tb.is_empty() && !mem_needed {
            break;
        }
        steps.push(BackwardStep {
            pc: ins.pc,
            instruction: ins.to_string(),
            traceback: tb.iter().map(|(&p, &v)| (p, v)).collect(),
        });
        let op = ins.opcode;
        let mut next: BTreeMap<usize, Var> = BTreeMap::new();
        match op {
            Opcode::Dup(n) => {
                let n = n as usize;
                for (&k, &v) in &tb {
                    let before = if k == 0 { n - 1 } else { k - 1 };
                    match next.get(&before) {
                        Some(&u) => walk.defs[v] = Some(Def::Alias(u)),
                        None => {
                            next.insert(before, v);
                        }
                    }
                }
                // Resolve alias order: the surviving variable must be defined later.
                tb = next;
                continue;
            }
            Opcode::Swap(n) => {
                let n = n as usize;
                for (&k, &v) in &tb {
                    let before = if k == 0 {
                        n
                    } else if k == n {
                        0
                    } else {
                        k
                    };
                    next.insert(before, v);
                }
                tb = next;
                continue;
            }
            _ => {}
        }

        let (p, q) = op.stack_io();
        let defines = (0..q).any(|k| tb.contains_key(&k));
        let writes_memory =
            matches!(op, Opcode::MStore | Opcode::MStore8 | Opcode::CallDataCopy | Opcode::Call | Opcode::DelegateCall | Opcode::StaticCall);
        let trace_inputs = defines || (mem_needed && writes_memory);
        let inputs: Vec<Var> = if trace_inputs { (0..p).map(|_| walk.fresh()).collect() } else { Vec::new() };

        if defines {
            let out = tb[&0];
            let def = match op {
                Opcode::Push(_) => Def::Const(ins.push_value().unwrap()),
                Opcode::MLoad => {
                    mem_needed = true;
                    Def::MLoad { at: t, off: inputs[0] }
                }
                Opcode::Sha3 => {
                    mem_needed = true;
                    Def::Sha3 { at: t, off: inputs[0], len: inputs[1] }
                }
                _ if pure_result(op, &vec![SymExpr::Unknown; p]).is_some() => Def::Op(op, inputs.clone()),
                _ => Def::Unknown,
            };
            walk.defs[out] = Some(def);
        }
        if trace_inputs && writes_memory {
            let w = match op {
                Opcode::MStore => Write::Word { off: inputs[0], value: inputs[1] },
                Opcode::MStore8 => Write::Byte { off: inputs[0], value: inputs[1] },
                Opcode::CallDataCopy => Write::Calldata { dest: inputs[0], src: inputs[1], len: inputs[2] },
                Opcode::Call => Write::Opaque { off: inputs[5], len: inputs[6] },
                _ => Write::Opaque { off: inputs[4], len: inputs[5] },
            };
            walk.writes.push((t, w));
        }
        for (&k, &v) in &tb {
            if k >= q {
                next.insert(k - q + p, v);
            }
        }
        for (i, &v) in inputs.iter().enumerate() {
            next.insert(i, v);
        }
        tb = next;
    }
    // Anything still traced was on the stack before the path began.
    for &v in tb.values() {
        walk.defs[v].get_or_insert(Def::Unknown);
    }

    steps.reverse();
    Reconstruction { condition: walk.resolve(root), steps }
}

/// Instructions from the entry through the JUMPI ending `path.blocks[upto]`.
fn prefix<'a>(cfg: &'a Cfg, path: &Path, upto: usize) -> Vec<&'a Instruction> {
    path.blocks[..=upto].iter().flat_map(|&b| cfg.block(b).instructions.iter()).collect()
}

/// Symbolic condition operand of the JUMPI ending `path.blocks[index]`.
pub fn reconstruct_condition(cfg: &Cfg, path: &Path, index: usize) -> Reconstruction {
    let mut ins = prefix(cfg, path, index);
    let jumpi = ins.pop();
    debug_assert!(jumpi.is_some_and(|i| i.opcode == Opcode::JumpI));
    // JUMPI pops (dest, cond): the condition is one below the top.
    reconstruct_operand(&ins, 1)
}

/// Constraint the branch at `path.blocks[index]` imposes for the direction the path takes.
pub fn backward_branch_constraints(cfg: &Cfg, path: &Path, index: usize) -> Constraint {
    let block = path.blocks[index];
    let dir = path
        .branch_points
        .iter()
        .find(|&&(b, _)| b == block)
        .map(|&(_, k)| k)
        .expect("index names a branch point of the path");
    let cond = reconstruct_condition(cfg, path, index).condition;
    match dir {
        EdgeKind::BranchTrue => Constraint::NonZero(cond),
        _ => Constraint::Zero(cond),
    }
}
