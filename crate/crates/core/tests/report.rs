use std::sync::Arc;

use sdfuzz::abi::AbiDescriptor;
use sdfuzz::analysis::analyze;
use sdfuzz::bytecode::assemble;
use sdfuzz::fuzz::{run_campaign, Ablation, CampaignConfig};
use sdfuzz::report::{CampaignReport, ReportInputs, SCHEMA_VERSION};
use sdfuzz::state::StateAnalysisConfig;
use sdfuzz::vm::Program;

fn report(config: &CampaignConfig, timing: bool) -> CampaignReport {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/motivating/");
    let src = std::fs::read_to_string(format!("{dir}contract.easm")).unwrap();
    let abi = AbiDescriptor::from_json(&std::fs::read_to_string(format!("{dir}contract.abi.json")).unwrap()).unwrap();
    let program = Arc::new(Program::new(assemble(&src).unwrap()));
    let state_config = StateAnalysisConfig::default();
    let analysis = analyze(&program.cfg, &abi, &state_config);
    let outcome = run_campaign(program.clone(), &abi, &analysis, config).unwrap();
    let inputs = ReportInputs {
        id: "motivating",
        program: &program,
        abi: &abi,
        analysis: &analysis,
        state_config: &state_config,
        config,
    };
    CampaignReport::new(inputs, outcome, timing)
}

#[test]
fn json_round_trip_and_replay() {
    let r = report(&CampaignConfig::default(), false);
    assert_eq!(r.schema_version, SCHEMA_VERSION);
    assert!(!r.findings.is_empty());
    let text = r.to_json().unwrap();
    let back = CampaignReport::from_json(&text).unwrap();
    assert_eq!(back, r);
    assert_eq!(back.to_json().unwrap(), text);
    for i in 0..back.findings.len() {
        assert!(back.replay(i).unwrap());
    }
    assert!(back.replay(back.findings.len()).is_err());
}

#[test]
fn wall_time_only_on_request() {
    let config = CampaignConfig { max_test_cases: 60, ..CampaignConfig::default() };
    assert!(!report(&config, false).to_json().unwrap().contains("wall_time_ms"));
    assert!(report(&config, true).totals.wall_time_ms.is_some());
}

#[test]
fn guidance_flags_follow_the_ablation() {
    for (ablation, code, state) in
        [(Ablation::Full, true, true), (Ablation::A, false, true), (Ablation::B, true, false), (Ablation::C, false, false)]
    {
        let r = report(&CampaignConfig { max_test_cases: 30, ablation, ..CampaignConfig::default() }, false);
        assert_eq!((r.guidance.code, r.guidance.state), (code, state), "{ablation:?}");
    }
}

#[test]
fn tampering_is_detected() {
    let r = report(&CampaignConfig::default(), false);
    let mut bad_code = r.clone();
    bad_code.contract.code_hex.replace_range(0..2, "00");
    assert!(bad_code.program().is_err());
    assert!(bad_code.replay(0).is_err());

    let mut bad_version = serde_json::to_value(&r).unwrap();
    bad_version["schema_version"] = serde_json::json!(SCHEMA_VERSION + 1);
    assert!(CampaignReport::from_json(&bad_version.to_string()).is_err());

    let mut no_witness = r.clone();
    let f = &mut no_witness.findings[0];
    f.witness.txs.truncate(f.tx_index);
    assert!(!no_witness.replay(0).unwrap());
}
