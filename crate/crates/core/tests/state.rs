use ruint::aliases::U256;
use sdfuzz::abi::AbiDescriptor;
use sdfuzz::bytecode::{assemble, build_cfg, disassemble, unroll_loops, Cfg, EdgeKind};
use sdfuzz::state::*;
use sdfuzz::symbolic::{SymExpr, SymMachine};
use sdfuzz::targets::{find_code_targets, BugClass};
use sdfuzz::word::BinOp;

fn cfg_of(src: &str) -> Cfg {
    build_cfg(&disassemble(&assemble(src).unwrap()))
}

fn corpus(name: &str) -> (Cfg, AbiDescriptor) {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/");
    let src = std::fs::read_to_string(format!("{dir}{name}/contract.easm")).unwrap();
    let abi = std::fs::read_to_string(format!("{dir}{name}/contract.abi.json")).unwrap();
    (cfg_of(&src), AbiDescriptor::from_json(&abi).unwrap())
}

fn u(v: u64) -> U256 {
    U256::from(v)
}

fn ranges(pairs: &[(u64, u64, u64)]) -> SlotRanges {
    pairs.iter().map(|&(s, lo, hi)| (u(s), IntervalSet::range(u(lo), u(hi)))).collect()
}

#[test]
fn guard_yields_slot_below_five() {
    let (cfg, abi) = corpus("slot-guard");
    let targets = find_code_targets(&cfg, &abi);
    let st = analyze_state_targets(&cfg, &targets, &StateAnalysisConfig::default());
    assert_eq!(st.len(), 1);
    assert!(st[0].satisfiable);
    assert_eq!(st[0].ranges, ranges(&[(2, 0, 4)]));
}

#[test]
fn guard_backward_steps_follow_the_stack() {
    let cfg = cfg_of("PUSH1 2 / SLOAD / PUSH2 5 / GT / PUSH2 @t / JUMPI / STOP / t: JUMPDEST / STOP");
    let un = unroll_loops(&cfg, 20).unwrap();
    let paths = find_paths(&un, 2, 100);
    assert_eq!(paths.paths.len(), 1);
    let r = reconstruct_condition(&un, &paths.paths[0], 0);
    let want = SymExpr::binary(BinOp::Gt, SymExpr::konst(5), SymExpr::storage(SymExpr::konst(2)));
    assert_eq!(r.condition, want);
    // PUSH2 dst, GT, PUSH2 5, SLOAD, PUSH1 2, each visited once in reverse.
    let pcs: Vec<usize> = r.steps.iter().map(|s| s.pc).collect();
    assert_eq!(pcs, vec![0, 2, 3, 6, 7]);
    let c = backward_branch_constraints(&un, &paths.paths[0], 0);
    assert_eq!(solve(&c).alternatives, vec![ranges(&[(2, 0, 4)])]);
}

#[test]
fn motivating_withdraw_needs_due_date_and_unlock() {
    let (cfg, abi) = corpus("motivating");
    let targets = find_code_targets(&cfg, &abi);
    let st = analyze_state_targets(&cfg, &targets, &StateAnalysisConfig::default());
    let re = st.iter().find(|s| s.bug_class == BugClass::Reentrancy).unwrap();
    assert!(re.satisfiable);
    assert_eq!(re.ranges, ranges(&[(1, 31, 39), (2, 1, 1)]));
}

#[test]
fn constant_branch_is_true() {
    let cfg = cfg_of("PUSH1 1 / @t / JUMPI / STOP / t: JUMPDEST / STOP");
    let un = unroll_loops(&cfg, 20).unwrap();
    let p = find_paths(&un, 2, 10);
    let c = backward_branch_constraints(&un, &p.paths[0], 0);
    assert_eq!(c.simplify(), Constraint::True);
}

#[test]
fn iszero_eq_false_branch_pins_slot() {
    let src = "PUSH1 7 / PUSH1 0 / SLOAD / EQ / ISZERO / @t / JUMPI / STOP / t: JUMPDEST / STOP";
    let cfg = cfg_of(src);
    let un = unroll_loops(&cfg, 20).unwrap();
    // False branch is the fallthrough STOP block.
    let p = find_paths(&un, 1, 10);
    assert_eq!(p.paths[0].branch_points, vec![(0, EdgeKind::BranchFalse)]);
    let c = backward_branch_constraints(&un, &p.paths[0], 0);
    assert_eq!(solve(&c).alternatives, vec![ranges(&[(0, 7, 7)])]);
    // Forward oracle over the same straight-line prefix.
    let mut m = SymMachine::new();
    let ins = disassemble(&assemble(src).unwrap());
    for i in &ins[..6] {
        m.step(i);
    }
    let back = reconstruct_condition(&un, &p.paths[0], 0).condition;
    assert_eq!(back.normalize(), m.stack[m.stack.len() - 2].normalize());
}

#[test]
fn solver_examples() {
    let s1 = SymExpr::storage(SymExpr::konst(1));
    let s0 = SymExpr::storage(SymExpr::konst(0));
    let c = Constraint::And(vec![
        Constraint::Cmp(CmpOp::Gt, s1.clone(), SymExpr::konst(30)),
        Constraint::Cmp(CmpOp::Lt, s1.clone(), SymExpr::konst(40)),
    ]);
    assert_eq!(solve(&c).alternatives, vec![ranges(&[(1, 31, 39)])]);
    let c = Constraint::And(vec![
        Constraint::Cmp(CmpOp::Eq, s0.clone(), SymExpr::konst(7)),
        Constraint::Cmp(CmpOp::Ne, s0.clone(), SymExpr::konst(7)),
    ]);
    assert!(!solve(&c).satisfiable);
    // Brute force: 5 > storage[D] over a small range.
    let c = Constraint::NonZero(SymExpr::binary(BinOp::Gt, SymExpr::konst(5), s0.clone()));
    let sol = &solve(&c).alternatives[0][&U256::ZERO];
    for v in 0..=10u64 {
        assert_eq!(sol.contains(u(v)), 5 > v);
    }
}

#[test]
fn unconditional_target_has_empty_ranges() {
    let cfg = cfg_of("PUSH1 0 / SELFDESTRUCT");
    let targets = find_code_targets(&cfg, &AbiDescriptor::default());
    let st = analyze_state_targets(&cfg, &targets, &StateAnalysisConfig::default());
    assert!(st[0].satisfiable);
    assert!(st[0].ranges.is_empty());
}
