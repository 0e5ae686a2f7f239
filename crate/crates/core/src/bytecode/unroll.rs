//! Loop unrolling by per-loop iteration contexts.
//!
//! Each copy of a block is identified by its original id plus an iteration
//! counter for every loop it currently sits in. Following a back edge bumps
//! the counter of that loop; a back edge that would reach `bound` is dropped.
//! Entering a loop from outside starts a fresh counter and leaving a loop
//! forgets it, so nested loops multiply (outer × inner) exactly like a
//! bounded unrolling of the source program would.

use std::collections::{BTreeSet, HashMap, VecDeque};

use super::cfg::{BasicBlock, BlockId, Cfg};
use crate::error::{Error, Result};

pub const DEFAULT_UNROLL_BOUND: usize = 20;
pub const DEFAULT_BLOCK_BUDGET: usize = 50_000;

type Context = Vec<(BlockId, u32)>;

pub fn unroll_loops(cfg: &Cfg, bound: usize) -> Result<Cfg> {
    unroll_loops_with_budget(cfg, bound, DEFAULT_BLOCK_BUDGET)
}

pub fn unroll_loops_with_budget(cfg: &Cfg, bound: usize, budget: usize) -> Result<Cfg> {
    let bound = bound.max(1) as u32;
    let back_edges = dfs_back_edges(cfg);
    let preds = cfg.predecessors();

    // Loop bodies keyed by header.
    let mut bodies: HashMap<BlockId, BTreeSet<BlockId>> = HashMap::new();
    for &(tail, head) in &back_edges {
        let body = bodies.entry(head).or_insert_with(|| BTreeSet::from([head]));
        let mut stack = vec![tail];
        while let Some(b) = stack.pop() {
            if body.insert(b) {
                stack.extend(preds[b].iter().copied());
            }
        }
    }
    let in_loop = |h: BlockId, b: BlockId| bodies.get(&h).is_some_and(|s| s.contains(&b));

    let mut ids: HashMap<(BlockId, Context), BlockId> = HashMap::new();
    let mut out: Vec<BasicBlock> = Vec::new();
    let mut queue: VecDeque<(BlockId, Context, BlockId)> = VecDeque::new();

    let mut intern = |orig: BlockId,
                      ctx: Context,
                      out: &mut Vec<BasicBlock>,
                      queue: &mut VecDeque<(BlockId, Context, BlockId)>|
     -> Result<BlockId> {
        if let Some(&id) = ids.get(&(orig, ctx.clone())) {
            return Ok(id);
        }
        if out.len() >= budget {
            return Err(Error::UnrollBudget { budget });
        }
        let id = out.len();
        let src = cfg.block(orig);
        // Innermost loop = the one with the smallest body.
        let iteration = ctx
            .iter()
            .min_by_key(|(h, _)| bodies[h].len())
            .map_or(0, |&(_, c)| c);
        out.push(BasicBlock {
            id,
            successors: Vec::new(),
            origin: src.origin,
            iteration,
            reachable: true,
            ..src.clone()
        });
        ids.insert((orig, ctx.clone()), id);
        queue.push_back((orig, ctx, id));
        Ok(id)
    };

    let entry_ctx: Context = if bodies.contains_key(&cfg.entry) { vec![(cfg.entry, 0)] } else { vec![] };
    let entry = intern(cfg.entry, entry_ctx, &mut out, &mut queue)?;

    while let Some((orig, ctx, from)) = queue.pop_front() {
        let mut succ = Vec::new();
        'edges: for &(s, kind) in &cfg.block(orig).successors {
            let is_back = back_edges.contains(&(orig, s));
            let mut next: Context = Vec::with_capacity(ctx.len() + 1);
            for &(h, c) in &ctx {
                if !in_loop(h, s) {
                    continue;
                }
                if is_back && h == s {
                    if c + 1 >= bound {
                        continue 'edges;
                    }
                    next.push((h, c + 1));
                } else {
                    next.push((h, c));
                }
            }
            if bodies.contains_key(&s) && !next.iter().any(|&(h, _)| h == s) {
                next.push((s, 0));
            }
            next.sort_unstable();
            let to = intern(s, next, &mut out, &mut queue)?;
            succ.push((to, kind));
        }
        out[from].successors = succ;
    }

    let mut unrolled = Cfg { blocks: out, entry, unroll_bound: Some(bound as usize) };
    if !unrolled.is_acyclic() {
        // Irreducible regions can re-enter a loop without passing its
        // header; cut whatever cycles remain.
        for (t, h) in dfs_back_edges(&unrolled) {
            unrolled.blocks[t].successors.retain(|&(s, _)| s != h);
        }
    }
    Ok(unrolled)
}

/// Edges `(tail, head)` whose head is on the DFS stack when the edge is seen.
fn dfs_back_edges(cfg: &Cfg) -> BTreeSet<(BlockId, BlockId)> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut mark = vec![Mark::White; cfg.len()];
    let mut back = BTreeSet::new();
    if cfg.is_empty() {
        return back;
    }
    let mut stack: Vec<(BlockId, usize)> = vec![(cfg.entry, 0)];
    mark[cfg.entry] = Mark::Grey;
    while let Some(&mut (b, ref mut i)) = stack.last_mut() {
        if let Some(&(s, _)) = cfg.block(b).successors.get(*i) {
            *i += 1;
            match mark[s] {
                Mark::White => {
                    mark[s] = Mark::Grey;
                    stack.push((s, 0));
                }
                Mark::Grey => {
                    back.insert((b, s));
                }
                Mark::Black => {}
            }
        } else {
            mark[b] = Mark::Black;
            stack.pop();
        }
    }
    back
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bytecode::{assemble, build_cfg, disassemble};

    fn cfg_of(src: &str) -> Cfg {
        build_cfg(&disassemble(&assemble(src).unwrap()))
    }

    #[test]
    fn acyclic_graph_is_a_fixpoint() {
        let cfg = cfg_of("PUSH1 0 / CALLDATALOAD / PUSH @a / JUMPI / STOP / a: JUMPDEST / STOP");
        let un = unroll_loops(&cfg, 20).unwrap();
        assert_eq!(un.len(), cfg.len());
        for b in &un.blocks {
            let orig = cfg.block(b.origin);
            let succ: Vec<_> = b.successors.iter().map(|&(s, k)| (un.block(s).origin, k)).collect();
            assert_eq!(succ, orig.successors);
        }
    }

    #[test]
    fn self_loop_bound_two() {
        let cfg = cfg_of("l: JUMPDEST / PUSH1 0 / CALLDATALOAD / PUSH @l / JUMPI / STOP");
        assert!(!cfg.is_acyclic());
        let un = unroll_loops(&cfg, 2).unwrap();
        assert!(un.is_acyclic());
        assert_eq!(un.copies_of(0).len(), 2);
        let iters: BTreeSet<_> = un.copies_of(0).iter().map(|&b| un.block(b).iteration).collect();
        assert_eq!(iters, BTreeSet::from([0, 1]));
    }

    #[test]
    fn budget_is_enforced() {
        let cfg = cfg_of("l: JUMPDEST / PUSH1 0 / CALLDATALOAD / PUSH @l / JUMPI / STOP");
        assert!(matches!(
            unroll_loops_with_budget(&cfg, 20, 5),
            Err(Error::UnrollBudget { budget: 5 })
        ));
    }
}
