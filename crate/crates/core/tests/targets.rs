use sdfuzz::abi::AbiDescriptor;
use sdfuzz::bytecode::{assemble, build_cfg, disassemble};
use sdfuzz::targets::{find_code_targets, BugClass};

fn load(name: &str) -> (sdfuzz::bytecode::Cfg, AbiDescriptor) {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/");
    let src = std::fs::read_to_string(format!("{dir}{name}/contract.easm")).unwrap();
    let abi = std::fs::read_to_string(format!("{dir}{name}/contract.abi.json")).unwrap();
    (build_cfg(&disassemble(&assemble(&src).unwrap())), AbiDescriptor::from_json(&abi).unwrap())
}

#[test]
fn motivating_contract_has_one_reentrancy_target() {
    let (cfg, abi) = load("motivating");
    let t = find_code_targets(&cfg, &abi);
    println!("{t:#?}");
    let re: Vec<_> = t.iter().filter(|t| t.bug_class == BugClass::Reentrancy).collect();
    assert_eq!(re.len(), 1);
    let roles: Vec<_> = re[0].evidence.iter().map(|e| e.role.as_str()).collect();
    assert_eq!(roles, ["sload", "call", "sstore"]);
}
