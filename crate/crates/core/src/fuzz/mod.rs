//! The genetic fuzzing loop.
//!
//! Every generation runs each seed from a fresh deployment, scores its
//! transactions against the code and state targets, and breeds the next
//! generation from fitness-proportional parent pairs. Seeds execute in
//! parallel; all randomness is drawn at the generation barrier from one
//! stream, so results do not depend on thread scheduling.

pub mod crossover;
pub mod pool;
pub mod seed;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use ruint::aliases::U256;
use serde::{Deserialize, Serialize};

pub use crossover::{concat, crossover, RawIndex};
pub use pool::{MutationPool, Provenance};
pub use seed::{init_seeds, mutate, random_tx, random_word, MutationParams, Seed, SENDERS};

use crate::abi::AbiDescriptor;
use crate::analysis::StaticAnalysis;
use crate::bytecode::{BlockId, EdgeKind};
use crate::error::{Error, Result};
use crate::guidance::{
    block_distances, code_distance, generation_fitness, harmonic_state_distance, selection_probabilities,
    state_target_distance, DistanceMap, FitnessParams, NPolicy, TxScore,
};
use crate::oracles::{check_campaign_end, check_trace, Finding, OutflowSummary, SeedLedger};
use crate::state::StateTarget;
use crate::targets::BugClass;
use crate::vm::{execute, Address, ExecConfig, ExecutionTrace, Program, ReentryPolicy, WorldState, DEFAULT_MAX_STEPS};

/// Value held by the contract at deployment, standing in for other users' funds.
pub const INITIAL_CONTRACT_BALANCE: U256 = U256::from_limbs([1_000_000_000_000_000_000, 0, 0, 0]);

/// Which guidance signals are active.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    #[default]
    Full,
    /// No code-target distance.
    A,
    /// No state-target distance and no state-target values in the pool.
    B,
    /// Neither.
    C,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [Ablation::Full, Ablation::A, Ablation::B, Ablation::C];

    pub fn code_guidance(self) -> bool {
        matches!(self, Ablation::Full | Ablation::B)
    }

    pub fn state_guidance(self) -> bool {
        matches!(self, Ablation::Full | Ablation::A)
    }

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::A => "A",
            Ablation::B => "B",
            Ablation::C => "C",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    /// Seed executions (each a full transaction sequence) before stopping.
    pub max_test_cases: u64,
    /// Defaults to two per ABI function.
    pub population_size: Option<usize>,
    pub rng_seed: u64,
    pub crossover_prob: f64,
    pub mutation: MutationParams,
    pub gamma: f64,
    pub n_policy: NPolicy,
    pub max_seq_len: usize,
    pub ablation: Ablation,
    /// Wall-clock limit in milliseconds.
    pub timeout_ms: Option<u64>,
    pub max_steps: usize,
    /// Stop once every code target's block has been executed.
    pub stop_when_targets_hit: bool,
    /// Best seeds carried over unchanged each generation.
    pub elites: usize,
    /// Replace trailing children with fresh seeds for functions that dropped out.
    pub reintroduce_functions: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            max_test_cases: 2000,
            population_size: None,
            rng_seed: 0,
            crossover_prob: 0.5,
            mutation: MutationParams::default(),
            gamma: 0.7,
            n_policy: NPolicy::default(),
            max_seq_len: 5,
            ablation: Ablation::Full,
            timeout_ms: None,
            max_steps: DEFAULT_MAX_STEPS,
            stop_when_targets_hit: false,
            elites: 1,
            reintroduce_functions: true,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be in [0, 1], got {p}")))
            }
        };
        prob("crossover probability", self.crossover_prob)?;
        prob("pool probability", self.mutation.pool_prob)?;
        prob("argument mutation rate", self.mutation.arg_rate)?;
        prob("value mutation rate", self.mutation.value_rate)?;
        prob("sender mutation rate", self.mutation.sender_rate)?;
        prob("drop rate", self.mutation.drop_rate)?;
        prob("bound weight", self.mutation.bound_weight)?;
        prob("local weight", self.mutation.local_weight)?;
        prob("gamma", self.gamma)?;
        if self.max_test_cases == 0 {
            return Err(Error::Config("max test cases must be positive".into()));
        }
        if self.max_seq_len == 0 {
            return Err(Error::Config("max sequence length must be positive".into()));
        }
        if self.population_size == Some(0) {
            return Err(Error::Config("population size must be positive".into()));
        }
        Ok(())
    }

    pub fn exec_config(&self) -> ExecConfig {
        ExecConfig { max_steps: self.max_steps, reentry: ReentryPolicy::Once }
    }
}

/// A deployed contract in an otherwise fresh world.
#[derive(Clone, Debug)]
pub struct Harness {
    pub program: Arc<Program>,
    pub contract: Address,
    template: WorldState,
}

impl Harness {
    pub fn new(program: Arc<Program>) -> Self {
        let mut template = WorldState::with_harness();
        let contract = template.deploy_program(program.clone());
        template.set_balance(contract, INITIAL_CONTRACT_BALANCE);
        Self { program, contract, template }
    }

    pub fn fresh_world(&self) -> WorldState {
        self.template.clone()
    }

    /// Run `txs` in order from a fresh world, handing each trace, the
    /// world it started from and the updated seed ledger to `visit`.
    pub fn run_seed(
        &self,
        txs: &[crate::vm::Transaction],
        config: &ExecConfig,
        mut visit: impl FnMut(usize, &ExecutionTrace, &WorldState, &WorldState, &SeedLedger),
    ) {
        let mut world = self.fresh_world();
        let mut ledger = SeedLedger::default();
        for (i, tx) in txs.iter().enumerate() {
            let (trace, after) = execute(&world, self.contract, tx, config);
            ledger.record(&trace);
            visit(i, &trace, &world, &after, &ledger);
            world = after;
        }
    }

    /// Campaign-end evidence gathered from replaying `txs` alone.
    pub fn outflow_of(&self, txs: &[crate::vm::Transaction], config: &ExecConfig) -> OutflowSummary {
        let mut out = OutflowSummary::default();
        self.run_seed(txs, config, |_, trace, _, _, _| out.observe(trace));
        out
    }

    /// Whether replaying `txs` re-triggers `finding` at transaction `index`.
    pub fn reproduces(&self, txs: &[crate::vm::Transaction], index: usize, finding: &Finding, config: &ExecConfig) -> bool {
        if index >= txs.len() {
            return false;
        }
        if finding.bug_class == BugClass::LockEther {
            return check_campaign_end(&self.outflow_of(txs, config), entry_pc(&self.program))
                .is_some_and(|f| f.key() == finding.key());
        }
        self.findings_at(txs, index, config).iter().any(|f| f.key() == finding.key())
    }

    /// Oracle findings of transaction `index` when replaying `txs`.
    pub fn findings_at(&self, txs: &[crate::vm::Transaction], index: usize, config: &ExecConfig) -> Vec<Finding> {
        let mut out = Vec::new();
        self.run_seed(&txs[..=index.min(txs.len().saturating_sub(1))], config, |i, trace, before, _, ledger| {
            if i == index {
                out = check_trace(trace, before, ledger, config);
            }
        });
        out
    }
}

fn entry_pc(program: &Program) -> usize {
    if program.cfg.is_empty() {
        0
    } else {
        program.cfg.block(program.cfg.entry).start_pc
    }
}

/// Distances and target lookups fixed for the whole campaign.
struct Guidance {
    distances: DistanceMap<f64>,
    max_dist: f64,
    state_targets: Vec<StateTarget>,
    total_edges: usize,
}

impl Guidance {
    fn new(program: &Program, analysis: &StaticAnalysis) -> Self {
        let blocks: BTreeSet<BlockId> =
            analysis.code_targets.iter().filter(|t| !t.whole_contract).map(|t| t.block_id).collect();
        let distances = block_distances(&program.cfg, &blocks);
        let state_targets = analysis.state_targets.iter().filter(|t| t.is_active()).cloned().collect();
        Self {
            distances,
            max_dist: program.cfg.len().max(1) as f64,
            state_targets,
            total_edges: program.cfg.edges().count(),
        }
    }

    fn code_distance(&self, trace: &ExecutionTrace, n: NPolicy) -> f64 {
        code_distance(trace.executed_blocks.iter().copied(), &self.distances, n, self.max_dist)
    }

    fn state_distance(&self, trace: &ExecutionTrace, after: &WorldState) -> f64 {
        let observed = |slot: U256| -> Vec<U256> {
            trace.observed_values(slot).chain(std::iter::once(after.sload(trace.contract, slot))).collect()
        };
        let ds: Vec<u64> = self.state_targets.iter().map(|t| state_target_distance(t, &observed)).collect();
        harmonic_state_distance(&ds)
    }
}

/// What one seed's execution contributed.
#[derive(Default)]
struct SeedRun {
    scores: Vec<TxScore<f64>>,
    findings: Vec<(usize, Finding)>,
    edges: BTreeSet<(BlockId, EdgeKind)>,
    blocks: BTreeSet<BlockId>,
    tx_values: Vec<U256>,
    storage_values: Vec<U256>,
    raw: Vec<([u8; 4], Vec<U256>, Vec<U256>)>,
    outflow: OutflowSummary,
}

fn evaluate(
    harness: &Harness,
    guidance: &Guidance,
    seed: &Seed,
    covered: &BTreeSet<(BlockId, EdgeKind)>,
    config: &CampaignConfig,
) -> SeedRun {
    let exec = config.exec_config();
    let mut run = SeedRun::default();
    harness.run_seed(&seed.txs, &exec, |i, trace, before, after, ledger| {
        let edges = trace.branch_edges();
        run.scores.push(TxScore {
            code_distance: guidance.code_distance(trace, config.n_policy),
            state_distance: guidance.state_distance(trace, after),
            new_branch_edges: edges.iter().filter(|e| !covered.contains(e)).count(),
            state_writes: trace.committed_writes().count(),
        });
        for f in check_trace(trace, before, ledger, &exec) {
            run.findings.push((i, f));
        }
        run.edges.extend(edges);
        run.blocks.extend(trace.executed_blocks.iter().copied());
        run.tx_values.extend(trace.tx.args.chunks(32).map(|c| {
            let mut w = [0u8; 32];
            w[..c.len()].copy_from_slice(c);
            U256::from_be_bytes(w)
        }));
        if !trace.tx.value.is_zero() {
            run.tx_values.push(trace.tx.value);
        }
        run.storage_values.extend(trace.storage_reads.iter().chain(&trace.storage_writes).map(|a| a.value));
        run.raw.push((
            trace.tx.selector,
            trace.committed_writes().map(|a| a.slot).collect(),
            trace.storage_reads.iter().map(|a| a.slot).collect(),
        ));
        run.outflow.observe(trace);
    });
    run
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationMetrics {
    pub generation: u64,
    /// Cumulative seed executions.
    pub test_cases: u64,
    pub avg_code_distance: f64,
    pub avg_state_distance: f64,
    /// Distinct branch edges covered so far.
    pub coverage: usize,
    pub best_fitness: f64,
    pub pool_size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FindingRecord {
    #[serde(flatten)]
    pub finding: Finding,
    pub witness: Seed,
    /// Transaction of the witness whose trace fired the oracle.
    pub tx_index: usize,
    pub generation: u64,
    pub test_cases: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetHit {
    pub bug_class: BugClass,
    pub anchor_pc: usize,
    pub block_id: BlockId,
    /// First generation in which the target's block executed.
    pub generation: Option<u64>,
    pub test_cases: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Budget,
    Timeout,
    TargetsHit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignOutcome {
    pub generations: Vec<GenerationMetrics>,
    pub findings: Vec<FindingRecord>,
    pub target_hits: Vec<TargetHit>,
    pub test_cases: u64,
    pub stop_reason: StopReason,
    #[serde(skip)]
    pub wall_time: Duration,
    /// The last generation that was executed.
    #[serde(skip)]
    pub final_population: Vec<Seed>,
}

impl CampaignOutcome {
    pub fn first_hit(&self, class: BugClass) -> Option<u64> {
        self.target_hits.iter().filter(|h| h.bug_class == class).filter_map(|h| h.generation).min()
    }

    pub fn has_finding(&self, class: BugClass) -> bool {
        self.findings.iter().any(|f| f.finding.bug_class == class)
    }
}

/// Fitness-proportional parent pairs, drawn with replacement.
pub fn select_parents<R: Rng + ?Sized>(probs: &[f64], count: usize, rng: &mut R) -> Result<Vec<(usize, usize)>> {
    let dist = WeightedIndex::new(probs).map_err(|e| Error::Config(format!("selection weights: {e}")))?;
    Ok((0..count).map(|_| (dist.sample(rng), dist.sample(rng))).collect())
}

/// Next generation: elites copied unchanged, then mutated crossover
/// children of fitness-proportional pairs, then a fresh seed for every
/// function no longer called by anyone.
#[allow(clippy::too_many_arguments)]
fn breed<R: Rng + ?Sized>(
    seeds: &[Seed],
    fitness: &[f64],
    probs: &[f64],
    abi: &AbiDescriptor,
    pool: &MutationPool,
    raw: &RawIndex,
    config: &CampaignConfig,
    population: usize,
    next_id: &mut u64,
    rng: &mut R,
) -> Result<Vec<Seed>> {
    let mut fresh_id = || {
        *next_id += 1;
        *next_id - 1
    };
    let mut order: Vec<usize> = (0..seeds.len()).collect();
    order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));
    let mut next: Vec<Seed> = order
        .iter()
        .take(config.elites.min(population))
        .map(|&i| Seed { id: fresh_id(), txs: seeds[i].txs.clone(), lineage: vec![seeds[i].id] })
        .collect();
    for (i, j) in select_parents(probs, population, rng)? {
        if next.len() >= population {
            break;
        }
        let (c1, c2) = crossover(&seeds[i], &seeds[j], raw, config.crossover_prob, config.max_seq_len, rng);
        for c in [c1, c2] {
            if next.len() < population {
                let mut m = mutate(&c, abi, pool, &config.mutation, rng);
                if m.lineage.is_empty() {
                    m.lineage = vec![c.id];
                }
                m.id = fresh_id();
                next.push(m);
            }
        }
    }
    if config.reintroduce_functions {
        let called: BTreeSet<[u8; 4]> = next.iter().flat_map(|s| s.txs.iter().map(|t| t.selector)).collect();
        let mut slot = next.len();
        for f in abi.functions.iter().filter(|f| !called.contains(&f.selector)) {
            if slot <= config.elites.min(next.len()) {
                break;
            }
            slot -= 1;
            let fresh = mutate(&Seed::single(random_tx(f, SENDERS[0], rng)), abi, pool, &config.mutation, rng);
            next[slot] = Seed { id: fresh_id(), ..fresh };
        }
    }
    Ok(next)
}

pub fn run_campaign(
    program: Arc<Program>,
    abi: &AbiDescriptor,
    analysis: &StaticAnalysis,
    config: &CampaignConfig,
) -> Result<CampaignOutcome> {
    config.validate()?;
    abi.validate()?;
    let start = Instant::now();
    let deadline = config.timeout_ms.map(|ms| start + Duration::from_millis(ms));
    let harness = Harness::new(program.clone());
    let guidance = Guidance::new(&program, analysis);
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut pool = MutationPool::new();
    if config.ablation.state_guidance() {
        pool.seed_from_state_targets(&guidance.state_targets);
    }
    let fitness_params = FitnessParams {
        use_code: config.ablation.code_guidance(),
        use_state: config.ablation.state_guidance(),
        ..FitnessParams::new(config.gamma)
    };

    let mut seeds = init_seeds(abi, &mut rng)?;
    let population = config.population_size.unwrap_or(seeds.len());
    let mut k = 0;
    while seeds.len() < population {
        let f = &abi.functions[k % abi.functions.len()];
        seeds.push(Seed::single(random_tx(f, SENDERS[0], &mut rng)));
        k += 1;
    }
    seeds.truncate(population);
    let mut next_id = 0u64;
    for s in &mut seeds {
        s.id = next_id;
        next_id += 1;
    }

    let mut hits: Vec<TargetHit> = analysis
        .code_targets
        .iter()
        .filter(|t| !t.whole_contract)
        .map(|t| TargetHit {
            bug_class: t.bug_class,
            anchor_pc: t.anchor_pc,
            block_id: t.block_id,
            generation: None,
            test_cases: None,
        })
        .collect();
    let mut covered: BTreeSet<(BlockId, EdgeKind)> = BTreeSet::new();
    let mut raw = RawIndex::default();
    let mut outflow = OutflowSummary::default();
    let mut findings: Vec<FindingRecord> = Vec::new();
    let mut seen_findings: BTreeMap<(BugClass, usize), ()> = BTreeMap::new();
    let mut lock_witness: Option<Seed> = None;
    let mut generations = Vec::new();
    let mut test_cases = 0u64;
    let mut generation = 0u64;

    let stop_reason = loop {
        generation += 1;
        seeds.truncate((config.max_test_cases - test_cases) as usize);
        let runs: Vec<SeedRun> =
            seeds.par_iter().map(|s| evaluate(&harness, &guidance, s, &covered, config)).collect();
        test_cases += seeds.len() as u64;

        let scores: Vec<Vec<TxScore<f64>>> = runs.iter().map(|r| r.scores.clone()).collect();
        let fitness = generation_fitness(&scores, guidance.total_edges, &fitness_params);

        for (seed, run) in seeds.iter().zip(&runs) {
            for (i, f) in &run.findings {
                if seen_findings.insert(f.key(), ()).is_none() {
                    findings.push(FindingRecord {
                        finding: f.clone(),
                        witness: seed.clone(),
                        tx_index: *i,
                        generation,
                        test_cases,
                    });
                }
            }
            for h in hits.iter_mut().filter(|h| h.generation.is_none()) {
                if run.blocks.contains(&h.block_id) {
                    h.generation = Some(generation);
                    h.test_cases = Some(test_cases);
                }
            }
            covered.extend(run.edges.iter().copied());
            for v in &run.tx_values {
                pool.insert(*v, Provenance::ObservedTxValue);
            }
            for v in &run.storage_values {
                pool.insert(*v, Provenance::ObservedStorageValue);
            }
            for (sel, w, r) in &run.raw {
                raw.record(*sel, w, r);
            }
            if lock_witness.is_none() && run.outflow.received_value {
                lock_witness = Some(seed.clone());
            }
            outflow.merge(&run.outflow);
        }

        let seed_min = |f: fn(&TxScore<f64>) -> f64| -> f64 {
            let per: Vec<f64> = scores.iter().map(|s| s.iter().map(f).fold(f64::INFINITY, f64::min)).collect();
            per.iter().sum::<f64>() / per.len().max(1) as f64
        };
        generations.push(GenerationMetrics {
            generation,
            test_cases,
            avg_code_distance: seed_min(|t| t.code_distance),
            avg_state_distance: seed_min(|t| t.state_distance),
            coverage: covered.len(),
            best_fitness: fitness.iter().copied().fold(0.0, f64::max),
            pool_size: pool.len(),
        });

        if test_cases >= config.max_test_cases {
            break StopReason::Budget;
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break StopReason::Timeout;
        }
        if config.stop_when_targets_hit && !hits.is_empty() && hits.iter().all(|h| h.generation.is_some()) {
            break StopReason::TargetsHit;
        }

        let probs = selection_probabilities(&fitness)?;
        seeds = breed(&seeds, &fitness, &probs, abi, &pool, &raw, config, population, &mut next_id, &mut rng)?;
    };

    let lock_target = analysis.code_targets.iter().any(|t| t.bug_class == BugClass::LockEther);
    let lock = check_campaign_end(&outflow, entry_pc(&program)).filter(|_| lock_target);
    if let (Some(f), Some(witness)) = (lock, lock_witness) {
        findings.push(FindingRecord { finding: f, tx_index: witness.txs.len() - 1, witness, generation, test_cases });
    }

    Ok(CampaignOutcome {
        generations,
        findings,
        target_hits: hits,
        test_cases,
        stop_reason,
        wall_time: start.elapsed(),
        final_population: seeds,
    })
}
