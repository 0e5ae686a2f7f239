use std::path::Path;

use anyhow::{bail, Context, Result};
use sdfuzz::abi::AbiDescriptor;
use sdfuzz::bytecode::{assemble, parse_hex};

/// Runtime code from a `.hex` or `.easm` file.
pub fn load_code(path: &Path) -> Result<Vec<u8>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let code = match path.extension().and_then(|e| e.to_str()) {
        Some("easm") => assemble(&text)?,
        Some("hex") => parse_hex(&text)?,
        _ => bail!("{}: expected a .hex or .easm file", path.display()),
    };
    Ok(code)
}

pub fn load_abi(path: &Path) -> Result<AbiDescriptor> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    AbiDescriptor::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

/// The contract source of a fixture directory: `contract.easm`, else `contract.hex`.
pub fn fixture_code_path(dir: &Path) -> Option<std::path::PathBuf> {
    ["contract.easm", "contract.hex"].iter().map(|f| dir.join(f)).find(|p| p.is_file())
}
