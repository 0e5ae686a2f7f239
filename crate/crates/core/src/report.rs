//! Campaign reports and witness replay.
//!
//! A report is plain JSON with struct-declared field order and no hash
//! maps, so two runs with the same inputs serialize to the same bytes.
//! Wall time is the one nondeterministic quantity and is only included
//! on request.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::abi::AbiDescriptor;
use crate::analysis::StaticAnalysis;
use crate::error::{Error, Result};
use crate::fuzz::{CampaignConfig, CampaignOutcome, FindingRecord, GenerationMetrics, Harness, StopReason, TargetHit};
use crate::state::StateAnalysisConfig;
use crate::vm::Program;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractInfo {
    pub id: String,
    /// SHA-256 of the runtime code.
    pub code_hash: String,
    pub code_hex: String,
}

impl ContractInfo {
    pub fn new(id: impl Into<String>, program: &Program) -> Self {
        Self { id: id.into(), code_hash: program.code_hash(), code_hex: hex::encode(&program.code) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuidanceFlags {
    pub code: bool,
    pub state: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub test_cases: u64,
    pub generations: u64,
    pub stop_reason: StopReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub schema_version: u32,
    pub contract: ContractInfo,
    pub abi: AbiDescriptor,
    pub config: CampaignConfig,
    pub state_analysis: StateAnalysisConfig,
    pub guidance: GuidanceFlags,
    pub analysis: StaticAnalysis,
    pub generations: Vec<GenerationMetrics>,
    pub findings: Vec<FindingRecord>,
    pub target_hits: Vec<TargetHit>,
    pub totals: Totals,
}

/// Everything a report is built from besides the campaign outcome.
pub struct ReportInputs<'a> {
    pub id: &'a str,
    pub program: &'a Program,
    pub abi: &'a AbiDescriptor,
    pub analysis: &'a StaticAnalysis,
    pub state_config: &'a StateAnalysisConfig,
    pub config: &'a CampaignConfig,
}

impl CampaignReport {
    pub fn new(inputs: ReportInputs<'_>, outcome: CampaignOutcome, timing: bool) -> Self {
        let totals = Totals {
            test_cases: outcome.test_cases,
            generations: outcome.generations.len() as u64,
            stop_reason: outcome.stop_reason,
            wall_time_ms: timing.then_some(outcome.wall_time.as_millis() as u64),
        };
        Self {
            schema_version: SCHEMA_VERSION,
            contract: ContractInfo::new(inputs.id, inputs.program),
            abi: inputs.abi.clone(),
            config: inputs.config.clone(),
            state_analysis: *inputs.state_config,
            guidance: GuidanceFlags {
                code: inputs.config.ablation.code_guidance(),
                state: inputs.config.ablation.state_guidance(),
            },
            analysis: inputs.analysis.clone(),
            generations: outcome.generations,
            findings: outcome.findings,
            target_hits: outcome.target_hits,
            totals,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text)?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::Report(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                report.schema_version
            )));
        }
        Ok(report)
    }

    /// The embedded runtime code, checked against the recorded hash.
    pub fn program(&self) -> Result<Program> {
        let code = hex::decode(&self.contract.code_hex).map_err(|e| Error::Report(format!("code hex: {e}")))?;
        let program = Program::new(code);
        if program.code_hash() != self.contract.code_hash {
            return Err(Error::Report("code does not match the recorded code hash".into()));
        }
        Ok(program)
    }

    /// Re-execute the witness of finding `index` from a fresh deployment.
    pub fn replay(&self, index: usize) -> Result<bool> {
        let record = self
            .findings
            .get(index)
            .ok_or_else(|| Error::Report(format!("finding {index} out of range ({} findings)", self.findings.len())))?;
        let harness = Harness::new(Arc::new(self.program()?));
        Ok(harness.reproduces(&record.witness.txs, record.tx_index, &record.finding, &self.config.exec_config()))
    }
}
