//! Mini-assembler used to author benchmark contracts.
//!
//! Grammar (line oriented):
//!
//! ```text
//! line      := statement ( "/" statement )* comment?
//! comment   := ( ";" | "#" ) any*
//! statement := ( label ":" )* instr?
//! instr     := MNEMONIC                 e.g. SSTORE, dup2
//!            | PUSHn imm                explicit width, imm must fit
//!            | PUSH imm                 smallest width that fits (labels: 2 bytes)
//!            | "@" label                sugar for PUSH2 @label
//! imm       := decimal | 0xhex | "@" label
//! ```
//!
//! A label names the pc of the next emitted instruction; it does not emit a
//! JUMPDEST by itself.

use std::collections::HashMap;

use ruint::aliases::U256;

use super::opcode::Opcode;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
enum Imm {
    Value(U256),
    Label(String),
}

#[derive(Debug, Clone)]
struct Item {
    line: usize,
    opcode: Opcode,
    imm: Option<Imm>,
}

pub fn assemble(text: &str) -> Result<Vec<u8>> {
    let mut items: Vec<Item> = Vec::new();
    let mut labels: HashMap<String, usize> = HashMap::new();
    let mut pc = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |msg: String| Error::Asm { line, msg };
        let code = raw.split([';', '#']).next().unwrap_or("");
        for stmt in code.split('/') {
            let mut rest = stmt.trim();
            while let Some((head, tail)) = rest.split_once(':') {
                let head = head.trim();
                if !is_ident(head) {
                    break;
                }
                if labels.insert(head.to_string(), pc).is_some() {
                    return Err(err(format!("duplicate label `{head}`")));
                }
                rest = tail.trim();
            }
            if rest.is_empty() {
                continue;
            }
            let mut parts = rest.split_whitespace();
            let word = parts.next().unwrap();
            let arg = parts.next();
            if let Some(extra) = parts.next() {
                return Err(err(format!("unexpected token `{extra}`")));
            }
            let item = if let Some(label) = word.strip_prefix('@') {
                if arg.is_some() {
                    return Err(err("push-label sugar takes no operand".into()));
                }
                Item { line, opcode: Opcode::Push(2), imm: Some(Imm::Label(label.to_string())) }
            } else if word.eq_ignore_ascii_case("PUSH") {
                let imm = parse_imm(arg.ok_or_else(|| err("PUSH needs an operand".into()))?)
                    .map_err(err)?;
                let width = match &imm {
                    Imm::Label(_) => 2,
                    Imm::Value(v) => v.byte_len().max(1) as u8,
                };
                Item { line, opcode: Opcode::Push(width), imm: Some(imm) }
            } else {
                let opcode = Opcode::from_mnemonic(word)
                    .ok_or_else(|| err(format!("unknown mnemonic `{word}`")))?;
                let imm = match (opcode, arg) {
                    (Opcode::Push(_), Some(a)) => Some(parse_imm(a).map_err(err)?),
                    (Opcode::Push(_), None) => return Err(err(format!("{word} needs an operand"))),
                    (_, Some(a)) => return Err(err(format!("{word} takes no operand, got `{a}`"))),
                    (_, None) => None,
                };
                Item { line, opcode, imm }
            };
            pc += 1 + item.opcode.immediate_len();
            items.push(item);
        }
    }

    let mut out = Vec::with_capacity(pc);
    for item in items {
        out.push(item.opcode.to_byte());
        let width = item.opcode.immediate_len();
        if width == 0 {
            continue;
        }
        let value = match item.imm.expect("push without immediate") {
            Imm::Value(v) => v,
            Imm::Label(l) => U256::from(*labels.get(&l).ok_or_else(|| Error::Asm {
                line: item.line,
                msg: format!("undefined label `{l}`"),
            })?),
        };
        if value.byte_len() > width {
            return Err(Error::Asm {
                line: item.line,
                msg: format!("immediate {value} overflows PUSH{width}"),
            });
        }
        let bytes = value.to_be_bytes::<32>();
        out.extend_from_slice(&bytes[32 - width..]);
    }
    Ok(out)
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

fn parse_imm(s: &str) -> std::result::Result<Imm, String> {
    if let Some(label) = s.strip_prefix('@') {
        return Ok(Imm::Label(label.to_string()));
    }
    let parsed = if let Some(h) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        U256::from_str_radix(h, 16)
    } else {
        U256::from_str_radix(s, 10)
    };
    parsed.map(Imm::Value).map_err(|_| format!("bad immediate `{s}`"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bytecode::disassemble;

    #[test]
    fn push_and_stop() {
        assert_eq!(assemble("PUSH1 5 / STOP").unwrap(), vec![0x60, 0x05, 0x00]);
    }

    #[test]
    fn immediate_overflow() {
        let e = assemble("PUSH1 300").unwrap_err();
        assert!(matches!(e, Error::Asm { line: 1, .. }), "{e}");
        assert!(e.to_string().contains("overflows"));
    }

    #[test]
    fn undefined_label() {
        let e = assemble("PUSH @nowhere / JUMP").unwrap_err();
        assert!(e.to_string().contains("undefined label"));
    }

    #[test]
    fn forward_label_resolves_to_jumpdest_pc() {
        let code = assemble(
            "@end          ; PUSH2 with a forward reference
             JUMP
             PUSH1 0xff
             end: JUMPDEST
             STOP",
        )
        .unwrap();
        let ins = disassemble(&code);
        let dest = ins[0].push_value().unwrap();
        let target = ins.iter().find(|i| U256::from(i.pc) == dest).unwrap();
        assert_eq!(target.opcode, Opcode::JumpDest);
        assert_eq!(ins[0].immediate.as_ref().unwrap().len(), 2);
    }

    #[test]
    fn minimal_width_push() {
        assert_eq!(assemble("PUSH 0").unwrap(), vec![0x60, 0x00]);
        assert_eq!(assemble("PUSH 0x1234").unwrap(), vec![0x61, 0x12, 0x34]);
        let big = assemble("PUSH 0x0102030405060708091011121314151617181920").unwrap();
        assert_eq!(big[0], 0x73); // PUSH20
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = assemble("STOP\nFROB").unwrap_err();
        assert!(matches!(e, Error::Asm { line: 2, .. }));
        assert!(assemble("ADD 1").is_err());
        assert!(assemble("a: STOP\na: STOP").is_err());
    }
}
