use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ruint::aliases::U256;
use sdfuzz::abi::{decode_args, AbiDescriptor, ArgValue};
use sdfuzz::analysis::{analyze, StaticAnalysis};
use sdfuzz::bytecode::assemble;
use sdfuzz::fuzz::*;
use sdfuzz::state::StateAnalysisConfig;
use sdfuzz::targets::BugClass;
use sdfuzz::vm::{Program, Transaction, ATTACKER_A};

fn motivating() -> (Arc<Program>, AbiDescriptor, StaticAnalysis) {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/motivating/");
    let src = std::fs::read_to_string(format!("{dir}contract.easm")).unwrap();
    let abi = AbiDescriptor::from_json(&std::fs::read_to_string(format!("{dir}contract.abi.json")).unwrap()).unwrap();
    let program = Arc::new(Program::new(assemble(&src).unwrap()));
    let analysis = analyze(&program.cfg, &abi, &StateAnalysisConfig::default());
    (program, abi, analysis)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn tx(selector: u8, arg: u64) -> Transaction {
    Transaction {
        sender: ATTACKER_A,
        selector: [selector, 0, 0, 0],
        args: U256::from(arg).to_be_bytes::<32>().to_vec(),
        value: U256::ZERO,
        block_env_override: None,
    }
}

fn seed(id: u64, txs: Vec<Transaction>) -> Seed {
    Seed { id, txs, lineage: Vec::new() }
}

fn one_arg_abi() -> AbiDescriptor {
    AbiDescriptor::from_json(r#"{"functions":[{"name":"f","selector":"0x01000000","params":[{"name":"x","kind":"uint256"}]}]}"#)
        .unwrap()
}

fn arg_of(abi: &AbiDescriptor, t: &Transaction) -> U256 {
    let f = abi.function(t.selector).unwrap();
    match decode_args(&f.params, &t.args)[0] {
        ArgValue::Word(w) => w,
        ArgValue::Dynamic(_) => unreachable!(),
    }
}

#[test]
fn init_gives_two_single_tx_seeds_per_function() {
    let (_, abi, _) = motivating();
    let seeds = init_seeds(&abi, &mut rng(1)).unwrap();
    assert_eq!(seeds.len(), 6);
    for (i, s) in seeds.iter().enumerate() {
        assert_eq!(s.txs.len(), 1);
        assert_eq!(s.txs[0].selector, abi.functions[i / 2].selector);
    }
}

#[test]
fn init_rejects_an_empty_abi() {
    let abi = AbiDescriptor::from_json(r#"{"functions":[]}"#).unwrap();
    assert!(init_seeds(&abi, &mut rng(0)).is_err());
}

#[test]
fn crossover_puts_the_writer_first() {
    let mut raw = RawIndex::default();
    raw.record([1, 0, 0, 0], &[U256::from(7)], &[]);
    raw.record([2, 0, 0, 0], &[], &[U256::from(7)]);
    let writer = seed(10, vec![tx(1, 0)]);
    let reader = seed(11, vec![tx(2, 0)]);
    let (a, b) = crossover(&reader, &writer, &raw, 0.0, 5, &mut rng(0));
    assert_eq!(a.txs, vec![tx(1, 0), tx(2, 0)]);
    assert_eq!(a.lineage, vec![10, 11]);
    assert_eq!(b, reader);
}

#[test]
fn unrelated_parents_pass_through_at_zero_probability() {
    let raw = RawIndex::default();
    let s1 = seed(1, vec![tx(1, 0)]);
    let s2 = seed(2, vec![tx(2, 0)]);
    let (a, b) = crossover(&s1, &s2, &raw, 0.0, 5, &mut rng(0));
    assert_eq!((a, b), (s1.clone(), s2.clone()));
    let (a, b) = crossover(&s1, &s2, &raw, 1.0, 5, &mut rng(0));
    assert_eq!(a.txs, vec![tx(1, 0), tx(2, 0)]);
    assert_eq!(b.txs, vec![tx(2, 0), tx(1, 0)]);
}

#[test]
fn pool_probability_one_draws_only_pool_values() {
    let abi = one_arg_abi();
    let mut pool = MutationPool::new();
    let magic = U256::from(0x5eed_1234_u64);
    pool.insert(magic, Provenance::StateTargetBound);
    let params = MutationParams { pool_prob: 1.0, ..MutationParams::default() };
    let s = seed(0, vec![tx(1, 0)]);
    let mut r = rng(3);
    for _ in 0..200 {
        let m = mutate(&s, &abi, &pool, &params, &mut r);
        assert_eq!(arg_of(&abi, &m.txs[0]), magic);
    }
}

#[test]
fn pool_probability_zero_never_draws_pool_values() {
    let abi = one_arg_abi();
    let mut pool = MutationPool::new();
    let magic = U256::from(0x5eed_1234_5678_9abc_u64) << 70;
    pool.insert(magic, Provenance::StateTargetBound);
    let params = MutationParams { pool_prob: 0.0, ..MutationParams::default() };
    let s = seed(0, vec![tx(1, 0)]);
    let mut r = rng(4);
    for _ in 0..500 {
        let m = mutate(&s, &abi, &pool, &params, &mut r);
        assert_ne!(arg_of(&abi, &m.txs[0]), magic);
    }
}

#[test]
fn empty_pool_falls_back_to_random_words() {
    let abi = one_arg_abi();
    let params = MutationParams { pool_prob: 1.0, ..MutationParams::default() };
    let s = seed(0, vec![tx(1, 0)]);
    let m = mutate(&s, &abi, &MutationPool::new(), &params, &mut rng(5));
    assert_eq!(m.txs.len(), 1);
}

#[test]
fn bounds_dominate_pool_sampling() {
    let mut pool = MutationPool::new();
    pool.insert(U256::from(1), Provenance::StateTargetBound);
    pool.insert(U256::from(2), Provenance::ObservedTxValue);
    pool.insert(U256::from(3), Provenance::ObservedStorageValue);
    let mut r = rng(6);
    let n = 20_000;
    let hits = (0..n).filter(|_| pool.sample(0.8, &mut r) == Some(U256::from(1))).count();
    let freq = hits as f64 / n as f64;
    assert!((freq - 0.8).abs() < 0.02, "{freq}");
    assert_eq!(MutationPool::new().sample(0.8, &mut r), None);
}

#[test]
fn selection_follows_fitness_proportions() {
    let pairs = select_parents(&[0.75, 0.25], 10_000, &mut rng(7)).unwrap();
    let firsts = pairs.iter().flat_map(|&(a, b)| [a, b]).filter(|&i| i == 0).count();
    let freq = firsts as f64 / 20_000.0;
    assert!((freq - 0.75).abs() <= 0.02, "{freq}");
}

#[test]
fn campaign_is_deterministic_per_rng_seed() {
    let (program, abi, analysis) = motivating();
    let config = CampaignConfig { max_test_cases: 300, rng_seed: 11, ..CampaignConfig::default() };
    let a = run_campaign(program.clone(), &abi, &analysis, &config).unwrap();
    let b = run_campaign(program, &abi, &analysis, &config).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.final_population, b.final_population);
}

#[test]
fn campaign_finds_the_motivating_reentrancy() {
    let (program, abi, analysis) = motivating();
    let config = CampaignConfig { rng_seed: 0, ..CampaignConfig::default() };
    let out = run_campaign(program.clone(), &abi, &analysis, &config).unwrap();
    assert!(out.has_finding(BugClass::Reentrancy));
    let harness = Harness::new(program);
    for f in &out.findings {
        assert!(harness.reproduces(&f.witness.txs, f.tx_index, &f.finding, &config.exec_config()));
    }
}

#[test]
fn stop_on_targets_ends_early() {
    let (program, abi, analysis) = motivating();
    let config = CampaignConfig { stop_when_targets_hit: true, ..CampaignConfig::default() };
    let out = run_campaign(program, &abi, &analysis, &config).unwrap();
    assert_eq!(out.stop_reason, StopReason::TargetsHit);
    assert!(out.test_cases < config.max_test_cases);
}

#[test]
fn config_validation_rejects_bad_values() {
    let ok = CampaignConfig::default();
    assert!(ok.validate().is_ok());
    for bad in [
        CampaignConfig { max_test_cases: 0, ..ok.clone() },
        CampaignConfig { max_seq_len: 0, ..ok.clone() },
        CampaignConfig { gamma: 1.5, ..ok.clone() },
        CampaignConfig { crossover_prob: -0.1, ..ok.clone() },
        CampaignConfig { population_size: Some(0), ..ok.clone() },
        CampaignConfig { mutation: MutationParams { pool_prob: 2.0, ..ok.mutation }, ..ok.clone() },
    ] {
        assert!(bad.validate().is_err(), "{bad:?}");
    }
}

fn arb_seed(tag: u8) -> impl Strategy<Value = Seed> {
    prop::collection::vec(any::<u64>(), 1..6).prop_map(move |args| {
        seed(tag as u64, args.into_iter().map(|a| tx(tag, a)).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn budget_is_never_exceeded(max in 1u64..120, rng_seed in 0u64..1000) {
        let (program, abi, analysis) = motivating();
        let config = CampaignConfig { max_test_cases: max, rng_seed, ..CampaignConfig::default() };
        let out = run_campaign(program, &abi, &analysis, &config).unwrap();
        prop_assert_eq!(out.test_cases, max);
        prop_assert!(out.generations.last().unwrap().test_cases <= max);
        prop_assert!(out.generations.windows(2).all(|w| w[0].test_cases < w[1].test_cases));
    }

    #[test]
    fn pool_only_grows(values in prop::collection::vec((any::<u64>(), 0usize..3), 0..60)) {
        let classes = [Provenance::StateTargetBound, Provenance::ObservedTxValue, Provenance::ObservedStorageValue];
        let mut pool = MutationPool::new();
        let mut prev: Vec<U256> = Vec::new();
        for (v, c) in values {
            let fresh = pool.insert(U256::from(v), classes[c]);
            prop_assert_eq!(fresh, !prev.contains(&U256::from(v)));
            prev.push(U256::from(v));
            prop_assert!(prev.iter().all(|p| pool.contains(*p)));
            prop_assert_eq!(pool.len(), { let mut d = prev.clone(); d.sort(); d.dedup(); d.len() });
        }
    }

    #[test]
    fn concat_respects_length_and_order(a in arb_seed(1), b in arb_seed(2), max in 2usize..8, r in any::<u64>()) {
        let c = concat(&a, &b, max, &mut rng(r));
        let (na, nb) = (a.txs.len(), b.txs.len());
        prop_assert_eq!(c.txs.len(), (na + nb).min(max));
        let ka = c.txs.iter().take_while(|t| t.selector == [1, 0, 0, 0]).count();
        prop_assert!(ka >= 1 && ka < c.txs.len());
        // A tail of `a` followed by a head of `b`.
        prop_assert_eq!(&c.txs[..ka], &a.txs[na - ka..]);
        prop_assert_eq!(&c.txs[ka..], &b.txs[..c.txs.len() - ka]);
    }

    #[test]
    fn mutation_keeps_selectors(s in arb_seed(1), r in any::<u64>()) {
        let abi = one_arg_abi();
        let m = mutate(&s, &abi, &MutationPool::new(), &MutationParams::default(), &mut rng(r));
        prop_assert!(m.txs.len() == s.txs.len() || m.txs.len() + 1 == s.txs.len());
        prop_assert!(m.txs.iter().all(|t| t.selector == [1, 0, 0, 0] && t.args.len() == 32));
    }
}
