//! Function descriptors with explicit selectors, and calldata encoding.

use std::fmt;
use std::str::FromStr;

use ruint::aliases::U256;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamKind {
    Uint(u16),
    Int(u16),
    Bool,
    Address,
    FixedBytes(u8),
    Bytes,
    String,
}

impl ParamKind {
    pub fn is_dynamic(self) -> bool {
        matches!(self, ParamKind::Bytes | ParamKind::String)
    }

    /// Map an arbitrary word into the valid encoding of this type.
    pub fn coerce(self, v: U256) -> U256 {
        match self {
            ParamKind::Uint(bits) => v & low_mask(bits),
            ParamKind::Int(bits) => sign_extend(v & low_mask(bits), bits),
            ParamKind::Bool => v & U256::from(1),
            ParamKind::Address => v & low_mask(160),
            // Left-aligned: keep the top n bytes.
            ParamKind::FixedBytes(n) => v & !(U256::MAX >> (8 * n as usize)),
            ParamKind::Bytes | ParamKind::String => v,
        }
    }
}

fn low_mask(bits: u16) -> U256 {
    if bits >= 256 {
        U256::MAX
    } else {
        (U256::from(1) << bits as usize) - U256::from(1)
    }
}

fn sign_extend(v: U256, bits: u16) -> U256 {
    if bits >= 256 || !v.bit(bits as usize - 1) {
        v
    } else {
        v | !low_mask(bits)
    }
}

impl FromStr for ParamKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let width = |rest: &str, default: u16| -> Result<u16> {
            if rest.is_empty() {
                return Ok(default);
            }
            rest.parse::<u16>().map_err(|_| Error::Abi(format!("bad width in `{s}`")))
        };
        let k = match s {
            "bool" => ParamKind::Bool,
            "address" => ParamKind::Address,
            "bytes" => ParamKind::Bytes,
            "string" => ParamKind::String,
            _ if s.starts_with("uint") => ParamKind::Uint(width(&s[4..], 256)?),
            _ if s.starts_with("int") => ParamKind::Int(width(&s[3..], 256)?),
            _ if s.starts_with("bytes") => ParamKind::FixedBytes(width(&s[5..], 0)? as u8),
            _ => return Err(Error::Abi(format!("unknown parameter kind `{s}`"))),
        };
        match k {
            ParamKind::Uint(b) | ParamKind::Int(b) if b == 0 || b > 256 || b % 8 != 0 => {
                Err(Error::Abi(format!("bad integer width in `{s}`")))
            }
            ParamKind::FixedBytes(n) if n == 0 || n > 32 => Err(Error::Abi(format!("bad bytes width in `{s}`"))),
            k => Ok(k),
        }
    }
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamKind::Uint(b) => write!(f, "uint{b}"),
            ParamKind::Int(b) => write!(f, "int{b}"),
            ParamKind::Bool => f.write_str("bool"),
            ParamKind::Address => f.write_str("address"),
            ParamKind::FixedBytes(n) => write!(f, "bytes{n}"),
            ParamKind::Bytes => f.write_str("bytes"),
            ParamKind::String => f.write_str("string"),
        }
    }
}

impl Serialize for ParamKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ParamKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub kind: ParamKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Function {
    pub name: String,
    #[serde(with = "selector_hex")]
    pub selector: [u8; 4],
    #[serde(default)]
    pub params: Vec<Param>,
    #[serde(default)]
    pub payable: bool,
}

mod selector_hex {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8; 4], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("0x{}", hex::encode(v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 4], D::Error> {
        let s = String::deserialize(d)?;
        let v = hex::decode(s.trim_start_matches("0x")).map_err(serde::de::Error::custom)?;
        v.try_into().map_err(|_| serde::de::Error::custom("selector must be 4 bytes"))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbiDescriptor {
    pub functions: Vec<Function>,
}

impl AbiDescriptor {
    pub fn from_json(text: &str) -> Result<Self> {
        let abi: AbiDescriptor = serde_json::from_str(text).map_err(|e| Error::Abi(e.to_string()))?;
        abi.validate()?;
        Ok(abi)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for f in &self.functions {
            if !seen.insert(f.selector) {
                return Err(Error::Abi(format!("duplicate selector 0x{}", hex::encode(f.selector))));
            }
        }
        Ok(())
    }

    pub fn function(&self, selector: [u8; 4]) -> Option<&Function> {
        self.functions.iter().find(|f| f.selector == selector)
    }

    pub fn has_payable(&self) -> bool {
        self.functions.iter().any(|f| f.payable)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArgValue {
    Word(U256),
    Dynamic(#[serde(with = "dyn_hex")] Vec<u8>),
}

mod dyn_hex {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        hex::decode(String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Standard head/tail encoding of `args` (selector not included).
pub fn encode_args(args: &[ArgValue]) -> Vec<u8> {
    let head_len = 32 * args.len();
    let mut head = Vec::with_capacity(head_len);
    let mut tail = Vec::new();
    for a in args {
        match a {
            ArgValue::Word(v) => head.extend_from_slice(&v.to_be_bytes::<32>()),
            ArgValue::Dynamic(bytes) => {
                head.extend_from_slice(&U256::from(head_len + tail.len()).to_be_bytes::<32>());
                tail.extend_from_slice(&U256::from(bytes.len()).to_be_bytes::<32>());
                tail.extend_from_slice(bytes);
                tail.resize(tail.len().div_ceil(32) * 32, 0);
            }
        }
    }
    head.extend(tail);
    head
}

/// Inverse of [`encode_args`] for the given parameter list, tolerant of short input.
pub fn decode_args(params: &[Param], data: &[u8]) -> Vec<ArgValue> {
    let word = |off: usize| -> U256 {
        let mut buf = [0u8; 32];
        for (i, b) in buf.iter_mut().enumerate() {
            *b = data.get(off + i).copied().unwrap_or(0);
        }
        U256::from_be_bytes(buf)
    };
    params
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let w = word(32 * i);
            if p.kind.is_dynamic() {
                let off = usize::try_from(w).unwrap_or(usize::MAX).min(data.len());
                let len = usize::try_from(word(off)).unwrap_or(0).min(data.len().saturating_sub(off + 32));
                ArgValue::Dynamic(data.get(off + 32..off + 32 + len).unwrap_or(&[]).to_vec())
            } else {
                ArgValue::Word(w)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_descriptor() {
        let abi = AbiDescriptor::from_json(
            r#"{"functions":[{"name":"f","selector":"0x12345678","params":[{"kind":"uint8"},{"kind":"bytes"}],"payable":true}]}"#,
        )
        .unwrap();
        assert_eq!(abi.functions[0].params[0].kind, ParamKind::Uint(8));
        assert!(abi.has_payable());
        assert!(AbiDescriptor::from_json(r#"{"functions":[{"name":"f","selector":"0x12","params":[]}]}"#).is_err());
        assert!("uint7".parse::<ParamKind>().is_err());
    }

    #[test]
    fn duplicate_selectors_rejected() {
        let text = r#"{"functions":[{"name":"a","selector":"0x00000001"},{"name":"b","selector":"0x00000001"}]}"#;
        assert!(matches!(AbiDescriptor::from_json(text), Err(Error::Abi(_))));
    }

    #[test]
    fn coercion_respects_width() {
        assert_eq!(ParamKind::Uint(8).coerce(U256::from(300)), U256::from(44));
        assert_eq!(ParamKind::Bool.coerce(U256::from(3)), U256::from(1));
        assert_eq!(ParamKind::Int(8).coerce(U256::from(0xff)), U256::MAX);
        assert_eq!(ParamKind::FixedBytes(1).coerce(U256::MAX), U256::from(0xff) << 248);
    }

    #[test]
    fn encoding_round_trips() {
        let params = vec![
            Param { name: String::new(), kind: ParamKind::Uint(256) },
            Param { name: String::new(), kind: ParamKind::Bytes },
        ];
        let args = vec![ArgValue::Word(U256::from(9)), ArgValue::Dynamic(vec![1, 2, 3])];
        let enc = encode_args(&args);
        assert_eq!(enc.len(), 32 * 4);
        assert_eq!(decode_args(&params, &enc), args);
    }
}
