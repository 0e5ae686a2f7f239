use std::fmt;

/// The opcode subset understood by the disassembler, the VM and the static
/// analyses. Anything else decodes as [`Opcode::Invalid`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Opcode {
    Stop,
    Add,
    Mul,
    Sub,
    Div,
    Mod,
    Lt,
    Gt,
    Slt,
    Sgt,
    Eq,
    IsZero,
    And,
    Or,
    Xor,
    Not,
    Shl,
    Shr,
    Sha3,
    Address,
    Balance,
    Caller,
    CallValue,
    CallDataLoad,
    CallDataSize,
    CallDataCopy,
    Coinbase,
    Timestamp,
    Number,
    PrevRandao,
    GasLimit,
    Pop,
    MLoad,
    MStore,
    MStore8,
    SLoad,
    SStore,
    Jump,
    JumpI,
    Gas,
    JumpDest,
    /// PUSH1..PUSH32, carrying the immediate width.
    Push(u8),
    /// DUP1..DUP16.
    Dup(u8),
    /// SWAP1..SWAP16.
    Swap(u8),
    /// LOG0..LOG4.
    Log(u8),
    Call,
    Return,
    DelegateCall,
    StaticCall,
    Revert,
    Invalid,
    SelfDestruct,
}

impl Opcode {
    pub fn from_byte(b: u8) -> Opcode {
        use Opcode::*;
        match b {
            0x00 => Stop,
            0x01 => Add,
            0x02 => Mul,
            0x03 => Sub,
            0x04 => Div,
            0x06 => Mod,
            0x10 => Lt,
            0x11 => Gt,
            0x12 => Slt,
            0x13 => Sgt,
            0x14 => Eq,
            0x15 => IsZero,
            0x16 => And,
            0x17 => Or,
            0x18 => Xor,
            0x19 => Not,
            0x1b => Shl,
            0x1c => Shr,
            0x20 => Sha3,
            0x30 => Address,
            0x31 => Balance,
            0x33 => Caller,
            0x34 => CallValue,
            0x35 => CallDataLoad,
            0x36 => CallDataSize,
            0x37 => CallDataCopy,
            0x41 => Coinbase,
            0x42 => Timestamp,
            0x43 => Number,
            0x44 => PrevRandao,
            0x45 => GasLimit,
            0x50 => Pop,
            0x51 => MLoad,
            0x52 => MStore,
            0x53 => MStore8,
            0x54 => SLoad,
            0x55 => SStore,
            0x56 => Jump,
            0x57 => JumpI,
            0x5a => Gas,
            0x5b => JumpDest,
            0x60..=0x7f => Push(b - 0x5f),
            0x80..=0x8f => Dup(b - 0x7f),
            0x90..=0x9f => Swap(b - 0x8f),
            0xa0..=0xa4 => Log(b - 0xa0),
            0xf1 => Call,
            0xf3 => Return,
            0xf4 => DelegateCall,
            0xfa => StaticCall,
            0xfd => Revert,
            0xff => SelfDestruct,
            _ => Invalid,
        }
    }

    pub fn to_byte(self) -> u8 {
        use Opcode::*;
        match self {
            Stop => 0x00,
            Add => 0x01,
            Mul => 0x02,
            Sub => 0x03,
            Div => 0x04,
            Mod => 0x06,
            Lt => 0x10,
            Gt => 0x11,
            Slt => 0x12,
            Sgt => 0x13,
            Eq => 0x14,
            IsZero => 0x15,
            And => 0x16,
            Or => 0x17,
            Xor => 0x18,
            Not => 0x19,
            Shl => 0x1b,
            Shr => 0x1c,
            Sha3 => 0x20,
            Address => 0x30,
            Balance => 0x31,
            Caller => 0x33,
            CallValue => 0x34,
            CallDataLoad => 0x35,
            CallDataSize => 0x36,
            CallDataCopy => 0x37,
            Coinbase => 0x41,
            Timestamp => 0x42,
            Number => 0x43,
            PrevRandao => 0x44,
            GasLimit => 0x45,
            Pop => 0x50,
            MLoad => 0x51,
            MStore => 0x52,
            MStore8 => 0x53,
            SLoad => 0x54,
            SStore => 0x55,
            Jump => 0x56,
            JumpI => 0x57,
            Gas => 0x5a,
            JumpDest => 0x5b,
            Push(n) => 0x5f + n,
            Dup(n) => 0x7f + n,
            Swap(n) => 0x8f + n,
            Log(n) => 0xa0 + n,
            Call => 0xf1,
            Return => 0xf3,
            DelegateCall => 0xf4,
            StaticCall => 0xfa,
            Revert => 0xfd,
            Invalid => 0xfe,
            SelfDestruct => 0xff,
        }
    }

    /// Parse a mnemonic such as `PUSH2`, `dup1` or `SELFDESTRUCT`.
    pub fn from_mnemonic(s: &str) -> Option<Opcode> {
        use Opcode::*;
        let up = s.to_ascii_uppercase();
        let numbered = |prefix: &str, lo: u8, hi: u8| -> Option<u8> {
            let n: u8 = up.strip_prefix(prefix)?.parse().ok()?;
            (lo..=hi).contains(&n).then_some(n)
        };
        if let Some(n) = numbered("PUSH", 1, 32) {
            return Some(Push(n));
        }
        if let Some(n) = numbered("DUP", 1, 16) {
            return Some(Dup(n));
        }
        if let Some(n) = numbered("SWAP", 1, 16) {
            return Some(Swap(n));
        }
        if let Some(n) = numbered("LOG", 0, 4) {
            return Some(Log(n));
        }
        Some(match up.as_str() {
            "STOP" => Stop,
            "ADD" => Add,
            "MUL" => Mul,
            "SUB" => Sub,
            "DIV" => Div,
            "MOD" => Mod,
            "LT" => Lt,
            "GT" => Gt,
            "SLT" => Slt,
            "SGT" => Sgt,
            "EQ" => Eq,
            "ISZERO" => IsZero,
            "AND" => And,
            "OR" => Or,
            "XOR" => Xor,
            "NOT" => Not,
            "SHL" => Shl,
            "SHR" => Shr,
            "SHA3" | "KECCAK256" => Sha3,
            "ADDRESS" => Address,
            "BALANCE" => Balance,
            "CALLER" => Caller,
            "CALLVALUE" => CallValue,
            "CALLDATALOAD" => CallDataLoad,
            "CALLDATASIZE" => CallDataSize,
            "CALLDATACOPY" => CallDataCopy,
            "COINBASE" => Coinbase,
            "TIMESTAMP" => Timestamp,
            "NUMBER" => Number,
            "PREVRANDAO" | "DIFFICULTY" => PrevRandao,
            "GASLIMIT" => GasLimit,
            "POP" => Pop,
            "MLOAD" => MLoad,
            "MSTORE" => MStore,
            "MSTORE8" => MStore8,
            "SLOAD" => SLoad,
            "SSTORE" => SStore,
            "JUMP" => Jump,
            "JUMPI" => JumpI,
            "GAS" => Gas,
            "JUMPDEST" => JumpDest,
            "CALL" => Call,
            "RETURN" => Return,
            "DELEGATECALL" => DelegateCall,
            "STATICCALL" => StaticCall,
            "REVERT" => Revert,
            "INVALID" => Invalid,
            "SELFDESTRUCT" | "SUICIDE" => SelfDestruct,
            _ => return None,
        })
    }

    /// Immediate width in bytes (non-zero only for PUSH).
    pub fn immediate_len(self) -> usize {
        match self {
            Opcode::Push(n) => n as usize,
            _ => 0,
        }
    }

    /// `(pops, pushes)` stack effect.
    pub fn stack_io(self) -> (usize, usize) {
        use Opcode::*;
        match self {
            Stop | JumpDest | Invalid => (0, 0),
            Add | Mul | Sub | Div | Mod | Lt | Gt | Slt | Sgt | Eq | And | Or | Xor | Shl
            | Shr | Sha3 => (2, 1),
            IsZero | Not | Balance | CallDataLoad | MLoad | SLoad => (1, 1),
            Address | Caller | CallValue | CallDataSize | Coinbase | Timestamp | Number
            | PrevRandao | GasLimit | Gas => (0, 1),
            CallDataCopy => (3, 0),
            Pop | Jump | SelfDestruct => (1, 0),
            MStore | MStore8 | SStore | JumpI | Return | Revert => (2, 0),
            Push(_) => (0, 1),
            Dup(n) => (n as usize, n as usize + 1),
            Swap(n) => (n as usize + 1, n as usize + 1),
            Log(n) => (2 + n as usize, 0),
            Call => (7, 1),
            DelegateCall | StaticCall => (6, 1),
        }
    }

    /// Instructions after which control never falls through.
    pub fn is_terminator(self) -> bool {
        matches!(
            self,
            Opcode::Stop
                | Opcode::Return
                | Opcode::Revert
                | Opcode::SelfDestruct
                | Opcode::Invalid
                | Opcode::Jump
        )
    }

    pub fn ends_block(self) -> bool {
        self.is_terminator() || self == Opcode::JumpI
    }

    pub fn mnemonic(self) -> String {
        match self {
            Opcode::Push(n) => format!("PUSH{n}"),
            Opcode::Dup(n) => format!("DUP{n}"),
            Opcode::Swap(n) => format!("SWAP{n}"),
            Opcode::Log(n) => format!("LOG{n}"),
            other => format!("{other:?}").to_ascii_uppercase(),
        }
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.mnemonic())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_mapping_round_trips_for_known_opcodes() {
        for b in 0u8..=255 {
            let op = Opcode::from_byte(b);
            if op != Opcode::Invalid {
                assert_eq!(op.to_byte(), b, "{op}");
                assert_eq!(Opcode::from_mnemonic(&op.mnemonic()), Some(op));
            }
        }
    }

    #[test]
    fn mnemonic_ranges() {
        assert_eq!(Opcode::from_mnemonic("push32"), Some(Opcode::Push(32)));
        assert_eq!(Opcode::from_mnemonic("PUSH33"), None);
        assert_eq!(Opcode::from_mnemonic("DUP0"), None);
        assert_eq!(Opcode::from_mnemonic("LOG4"), Some(Opcode::Log(4)));
    }
}
