//! The static phase: code targets, then state targets for each.

use serde::{Deserialize, Serialize};

use crate::abi::AbiDescriptor;
use crate::bytecode::Cfg;
use crate::state::{analyze_state_targets, StateAnalysisConfig, StateTarget};
use crate::targets::{find_code_targets, CodeTarget};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticAnalysis {
    pub code_targets: Vec<CodeTarget>,
    pub state_targets: Vec<StateTarget>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

pub fn analyze(cfg: &Cfg, abi: &AbiDescriptor, config: &StateAnalysisConfig) -> StaticAnalysis {
    let code_targets = find_code_targets(cfg, abi);
    let state_targets = analyze_state_targets(cfg, &code_targets, config);
    let mut warnings = Vec::new();
    for st in &state_targets {
        if let Some(d) = &st.diagnostic {
            warnings.push(format!("{} at pc {}: {d}; state guidance disabled", st.bug_class, st.anchor_pc));
        } else if !st.satisfiable {
            warnings.push(format!("{} at pc {}: no satisfiable path", st.bug_class, st.anchor_pc));
        } else if st.paths_truncated {
            warnings.push(format!("{} at pc {}: path enumeration truncated", st.bug_class, st.anchor_pc));
        }
    }
    StaticAnalysis { code_targets, state_targets, warnings }
}
