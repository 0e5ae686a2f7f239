use rand::Rng;
use ruint::aliases::U256;
use serde::{Deserialize, Serialize};

use super::pool::MutationPool;
use crate::abi::{decode_args, encode_args, AbiDescriptor, ArgValue, Function, ParamKind};
use crate::error::{Error, Result};
use crate::vm::{Address, Transaction, ATTACKER_A, ATTACKER_B, DEPLOYER};

/// Accounts a transaction may be sent from.
pub const SENDERS: [Address; 3] = [ATTACKER_A, ATTACKER_B, DEPLOYER];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seed {
    #[serde(default)]
    pub id: u64,
    pub txs: Vec<Transaction>,
    /// Ids of the parents this seed was bred from.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lineage: Vec<u64>,
}

impl Seed {
    pub fn single(tx: Transaction) -> Self {
        Self { id: 0, txs: vec![tx], lineage: Vec::new() }
    }
}

fn random_u256<R: Rng + ?Sized>(rng: &mut R) -> U256 {
    U256::from_limbs([rng.gen(), rng.gen(), rng.gen(), rng.gen()])
}

/// A byte-sized, a log-uniform 64-bit or (one time in five) a full-width magnitude.
fn random_magnitude<R: Rng + ?Sized>(rng: &mut R) -> U256 {
    match rng.gen_range(0..5) {
        0 | 1 => U256::from(rng.gen_range(0u64..=255)),
        2 | 3 => U256::from(rng.gen::<u64>() >> rng.gen_range(0..64)),
        _ => random_u256(rng),
    }
}

/// A random word valid for `kind`.
pub fn random_word<R: Rng + ?Sized>(kind: ParamKind, rng: &mut R) -> U256 {
    match kind {
        ParamKind::Uint(_) => kind.coerce(random_magnitude(rng)),
        ParamKind::Int(_) => {
            let m = random_magnitude(rng);
            kind.coerce(if rng.gen_bool(0.5) { m } else { U256::ZERO.wrapping_sub(m) })
        }
        ParamKind::Bool => U256::from(rng.gen_range(0u64..2)),
        ParamKind::Address => {
            if rng.gen_bool(0.75) {
                SENDERS[rng.gen_range(0..SENDERS.len())]
            } else {
                kind.coerce(random_u256(rng))
            }
        }
        ParamKind::FixedBytes(_) | ParamKind::Bytes | ParamKind::String => kind.coerce(random_u256(rng)),
    }
}

pub fn random_arg<R: Rng + ?Sized>(kind: ParamKind, rng: &mut R) -> ArgValue {
    if kind.is_dynamic() {
        let len = rng.gen_range(1..=64);
        ArgValue::Dynamic((0..len).map(|_| rng.gen()).collect())
    } else {
        ArgValue::Word(random_word(kind, rng))
    }
}

/// A positive amount for a payable call.
pub fn random_value<R: Rng + ?Sized>(rng: &mut R) -> U256 {
    if rng.gen_bool(0.5) {
        U256::from(rng.gen_range(1u64..=255))
    } else {
        U256::from((rng.gen::<u64>() >> rng.gen_range(0..64)).max(1))
    }
}

pub fn random_tx<R: Rng + ?Sized>(f: &Function, sender: Address, rng: &mut R) -> Transaction {
    let args: Vec<ArgValue> = f.params.iter().map(|p| random_arg(p.kind, rng)).collect();
    Transaction {
        sender,
        selector: f.selector,
        args: encode_args(&args),
        value: if f.payable { random_value(rng) } else { U256::ZERO },
        block_env_override: None,
    }
}

/// Two single-transaction seeds per function, sent from the default attacker.
pub fn init_seeds<R: Rng + ?Sized>(abi: &AbiDescriptor, rng: &mut R) -> Result<Vec<Seed>> {
    if abi.functions.is_empty() {
        return Err(Error::Abi("descriptor has no functions".into()));
    }
    let mut out = Vec::with_capacity(2 * abi.functions.len());
    for f in &abi.functions {
        for _ in 0..2 {
            out.push(Seed::single(random_tx(f, ATTACKER_A, rng)));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MutationParams {
    /// Probability a re-drawn argument comes from the pool.
    pub pool_prob: f64,
    /// Probability each argument is re-drawn at all.
    pub arg_rate: f64,
    /// Probability a payable value is re-drawn.
    pub value_rate: f64,
    /// Probability the sender is re-drawn.
    pub sender_rate: f64,
    /// Share of pool draws taken from state-target bounds.
    pub bound_weight: f64,
    /// Probability one transaction is removed from a multi-transaction seed.
    pub drop_rate: f64,
    /// Share of observed-value pool draws taken instead from words of
    /// earlier transactions in the same seed.
    pub local_weight: f64,
}

impl Default for MutationParams {
    fn default() -> Self {
        Self { pool_prob: 0.5, arg_rate: 1.0, value_rate: 0.3, sender_rate: 0.1, bound_weight: 0.8, drop_rate: 0.2, local_weight: 0.5 }
    }
}

fn redraw<R: Rng + ?Sized>(
    kind: ParamKind,
    pool: &MutationPool,
    local: &[U256],
    p: &MutationParams,
    rng: &mut R,
) -> ArgValue {
    if !kind.is_dynamic() && rng.gen_bool(p.pool_prob) {
        if let Some(v) = pool_word(pool, local, p, rng) {
            return ArgValue::Word(kind.coerce(v));
        }
    }
    random_arg(kind, rng)
}

fn pool_word<R: Rng + ?Sized>(pool: &MutationPool, local: &[U256], p: &MutationParams, rng: &mut R) -> Option<U256> {
    pool.sample_with(p.bound_weight, local, p.local_weight, rng)
}

/// Static argument words and values of `txs`.
fn words_of(txs: &[Transaction], abi: &AbiDescriptor) -> Vec<U256> {
    let mut out = Vec::new();
    for tx in txs {
        if let Some(f) = abi.function(tx.selector) {
            out.extend(decode_args(&f.params, &tx.args).into_iter().filter_map(|a| match a {
                ArgValue::Word(w) => Some(w),
                ArgValue::Dynamic(_) => None,
            }));
        }
        if !tx.value.is_zero() {
            out.push(tx.value);
        }
    }
    out
}

/// Re-draw arguments, value and sender of one uniformly chosen
/// transaction, after possibly dropping another. Selectors are kept.
pub fn mutate<R: Rng + ?Sized>(
    seed: &Seed,
    abi: &AbiDescriptor,
    pool: &MutationPool,
    p: &MutationParams,
    rng: &mut R,
) -> Seed {
    let mut out = seed.clone();
    if out.txs.len() > 1 && rng.gen_bool(p.drop_rate) {
        out.txs.remove(rng.gen_range(0..out.txs.len()));
    }
    if out.txs.is_empty() {
        return out;
    }
    let k = rng.gen_range(0..out.txs.len());
    let local = words_of(&out.txs[..k], abi);
    let tx = &mut out.txs[k];
    let Some(f) = abi.function(tx.selector) else { return out };
    let mut args = decode_args(&f.params, &tx.args);
    for (a, param) in args.iter_mut().zip(&f.params) {
        if rng.gen_bool(p.arg_rate) {
            *a = redraw(param.kind, pool, &local, p, rng);
        }
    }
    tx.args = encode_args(&args);
    if f.payable {
        if rng.gen_bool(p.value_rate) {
            let from_pool = if rng.gen_bool(p.pool_prob) { pool_word(pool, &local, p, rng) } else { None };
            tx.value = from_pool.filter(|v| !v.is_zero() && v.bit_len() <= 64).unwrap_or_else(|| random_value(rng));
        }
    } else {
        tx.value = U256::ZERO;
    }
    if rng.gen_bool(p.sender_rate) {
        tx.sender = SENDERS[rng.gen_range(0..SENDERS.len())];
    }
    out
}
