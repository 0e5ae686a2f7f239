use std::fmt;

use ruint::aliases::U256;

use super::opcode::Opcode;
use crate::error::Error;

/// One decoded instruction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instruction {
    pub pc: usize,
    pub opcode: Opcode,
    /// Present only for PUSH1..PUSH32, with exactly the push width.
    pub immediate: Option<Vec<u8>>,
}

impl Instruction {
    /// The pushed value, for PUSH instructions.
    pub fn push_value(&self) -> Option<U256> {
        self.immediate
            .as_ref()
            .map(|bytes| U256::try_from_be_slice(bytes).expect("push immediate fits in 32 bytes"))
    }

    /// Byte offset of the following instruction.
    pub fn next_pc(&self) -> usize {
        self.pc + 1 + self.immediate.as_ref().map_or(0, Vec::len)
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.immediate {
            Some(imm) => write!(f, "{:04x}: {} 0x{}", self.pc, self.opcode, hex::encode(imm)),
            None => write!(f, "{:04x}: {}", self.pc, self.opcode),
        }
    }
}

/// Decode `code` into instructions covering every byte.
///
/// Unknown bytes become single-byte `INVALID`s. A PUSH whose immediate runs
/// past the end of the code is decoded as `INVALID` and decoding stops there.
pub fn disassemble(code: &[u8]) -> Vec<Instruction> {
    let mut out = Vec::with_capacity(code.len());
    let mut pc = 0;
    while pc < code.len() {
        let opcode = Opcode::from_byte(code[pc]);
        let width = opcode.immediate_len();
        if width > 0 {
            if pc + width >= code.len() {
                out.push(Instruction { pc, opcode: Opcode::Invalid, immediate: None });
                break;
            }
            let imm = code[pc + 1..pc + 1 + width].to_vec();
            out.push(Instruction { pc, opcode, immediate: Some(imm) });
        } else {
            out.push(Instruction { pc, opcode, immediate: None });
        }
        pc += 1 + width;
    }
    out
}

/// Parse bytecode hex text: optional `0x` prefix, whitespace ignored.
pub fn parse_hex(text: &str) -> Result<Vec<u8>, Error> {
    let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let body = cleaned
        .strip_prefix("0x")
        .or_else(|| cleaned.strip_prefix("0X"))
        .unwrap_or(&cleaned);
    if body.is_empty() {
        return Err(Error::Decode("empty bytecode".into()));
    }
    hex::decode(body).map_err(|e| Error::Decode(format!("bad hex: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_push() {
        let ins = disassemble(&[0x60, 0x05]);
        assert_eq!(
            ins,
            vec![Instruction { pc: 0, opcode: Opcode::Push(1), immediate: Some(vec![5]) }]
        );
    }

    #[test]
    fn guard_fragment_decodes() {
        let code = [0x61, 0x00, 0x05, 0x54, 0x11, 0x61, 0x00, 0x0b, 0x57];
        let ins = disassemble(&code);
        let ops: Vec<_> = ins.iter().map(|i| i.opcode).collect();
        assert_eq!(
            ops,
            vec![Opcode::Push(2), Opcode::SLoad, Opcode::Gt, Opcode::Push(2), Opcode::JumpI]
        );
        assert_eq!(ins[0].push_value(), Some(U256::from(5)));
        assert_eq!(ins[3].push_value(), Some(U256::from(0x0b)));
        assert_eq!(ins.iter().map(|i| i.pc).collect::<Vec<_>>(), vec![0, 3, 4, 5, 8]);
    }

    #[test]
    fn truncated_push_is_invalid() {
        assert_eq!(
            disassemble(&[0x60]),
            vec![Instruction { pc: 0, opcode: Opcode::Invalid, immediate: None }]
        );
        let ins = disassemble(&[0x00, 0x62, 0x01]);
        assert_eq!(ins.len(), 2);
        assert_eq!(ins[1].opcode, Opcode::Invalid);
    }

    #[test]
    fn unknown_bytes_are_single_byte_invalid() {
        let ins = disassemble(&[0x0c, 0x00]);
        assert_eq!(ins[0].opcode, Opcode::Invalid);
        assert_eq!(ins[1].pc, 1);
    }

    #[test]
    fn hex_parsing() {
        assert_eq!(parse_hex("0x60 05\n00").unwrap(), vec![0x60, 0x05, 0x00]);
        assert!(parse_hex("   ").is_err());
        assert!(parse_hex("0xzz").is_err());
    }
}
