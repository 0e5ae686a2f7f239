use std::collections::BTreeSet;

use proptest::prelude::*;
use sdfuzz::bytecode::*;

/// Mnemonic text for `code`, one instruction per line, immediates at full width.
fn to_easm(code: &[u8]) -> String {
    disassemble(code)
        .iter()
        .map(|i| match &i.immediate {
            Some(imm) => format!("{} 0x{}\n", i.opcode.mnemonic(), hex::encode(imm)),
            None => format!("{}\n", i.opcode.mnemonic()),
        })
        .collect()
}

fn known_op() -> impl Strategy<Value = Vec<u8>> {
    (0u8..=255).prop_filter("defined", |b| Opcode::from_byte(*b) != Opcode::Invalid).prop_flat_map(|b| {
        let n = Opcode::from_byte(b).immediate_len();
        prop::collection::vec(any::<u8>(), n).prop_map(move |imm| {
            let mut v = vec![b];
            v.extend(imm);
            v
        })
    })
}

/// Random jump graph over `n` blocks; block 0 is entered from the prologue.
fn looping_program(n: usize) -> impl Strategy<Value = String> {
    prop::collection::vec((0u8..3, 0..n), n).prop_map(move |blocks| {
        let mut s = String::from("@b0 / JUMP\n");
        for (i, (kind, a)) in blocks.iter().enumerate() {
            s.push_str(&format!("b{i}: JUMPDEST / PUSH1 {i} / POP\n"));
            match kind {
                0 => s.push_str("STOP\n"),
                1 => s.push_str(&format!("@b{a} / JUMP\n")),
                _ => s.push_str(&format!("CALLVALUE / @b{a} / JUMPI\n")),
            }
        }
        s.push_str("STOP\n");
        s
    })
}

#[test]
fn hex_prefix_and_whitespace() {
    assert_eq!(parse_hex("0x6001\n").unwrap(), vec![0x60, 0x01]);
    assert_eq!(parse_hex("60 01").unwrap(), vec![0x60, 0x01]);
    assert!(parse_hex("0x600").is_err());
    assert!(parse_hex("zz").is_err());
}

#[test]
fn labels_assemble_to_jumpdest_offsets() {
    let code = assemble("@end / JUMP / end: JUMPDEST / STOP").unwrap();
    let ins = disassemble(&code);
    let target = ins[0].push_value().unwrap();
    let dest = ins.iter().find(|i| i.opcode == Opcode::JumpDest).unwrap();
    assert_eq!(target, ruint::aliases::U256::from(dest.pc));
}

proptest! {
    #[test]
    fn disassemble_then_assemble_round_trips(ops in prop::collection::vec(known_op(), 0..40)) {
        let code: Vec<u8> = ops.concat();
        prop_assert_eq!(assemble(&to_easm(&code)).unwrap(), code);
    }

    #[test]
    fn instructions_tile_the_code(code in prop::collection::vec(any::<u8>(), 0..200)) {
        let ins = disassemble(&code);
        let mut pc = 0;
        for i in &ins {
            prop_assert_eq!(i.pc, pc);
            pc = i.next_pc();
        }
        if pc < code.len() {
            // A PUSH running past the end decodes as a final INVALID.
            let last = ins.last().unwrap();
            prop_assert_eq!(last.opcode, Opcode::Invalid);
            prop_assert!(Opcode::from_byte(code[last.pc]).immediate_len() >= code.len() - last.pc);
        }
        let cfg = build_cfg(&ins);
        let mut seen = BTreeSet::new();
        for b in &cfg.blocks {
            for i in &b.instructions {
                prop_assert!(seen.insert(i.pc));
            }
        }
        prop_assert_eq!(seen.len(), ins.len());
    }

    #[test]
    fn unrolling_is_sound(src in (2usize..9).prop_flat_map(looping_program), bound in 2usize..4) {
        let cfg = build_cfg(&disassemble(&assemble(&src).unwrap()));
        let un = unroll_loops(&cfg, bound).unwrap();
        prop_assert!(un.is_acyclic());
        prop_assert_eq!(un.block(un.entry).origin, cfg.entry);
        let original: BTreeSet<_> = cfg.edges().collect();
        let mut images = BTreeSet::new();
        for b in &un.blocks {
            prop_assert_eq!(&b.instructions, &cfg.block(b.origin).instructions);
            for &(s, k) in &b.successors {
                let e = (b.origin, un.block(s).origin, k);
                prop_assert!(original.contains(&e), "{:?} is not an edge of the original", e);
                images.insert(e);
            }
        }
        // With at least two copies of every loop body, each reachable edge survives somewhere.
        let reach = cfg.reachable_from(cfg.entry);
        for e in original.iter().filter(|e| reach[e.0]) {
            prop_assert!(images.contains(e), "{:?} lost by unrolling", e);
        }
    }
}
