//! Decoding, control-flow recovery, loop unrolling and a mini-assembler.

mod asm;
mod cfg;
mod disasm;
mod opcode;
mod unroll;

pub use asm::assemble;
pub use cfg::{build_cfg, BasicBlock, BlockId, BlockKind, Cfg, EdgeKind};
pub use disasm::{disassemble, parse_hex, Instruction};
pub use opcode::Opcode;
pub use unroll::{unroll_loops, unroll_loops_with_budget, DEFAULT_BLOCK_BUDGET, DEFAULT_UNROLL_BOUND};
