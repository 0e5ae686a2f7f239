use serde::{Deserialize, Serialize};

use crate::bytecode::{BlockId, Cfg, EdgeKind};

pub const DEFAULT_PATH_LIMIT: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    /// Unrolled block ids from entry to target.
    pub blocks: Vec<BlockId>,
    /// JUMPI-terminated blocks on the path with the direction taken.
    pub branch_points: Vec<(BlockId, EdgeKind)>,
}

#[derive(Clone, Debug, Default)]
pub struct PathSet {
    pub paths: Vec<Path>,
    pub truncated: bool,
}

/// All entry-to-target paths in an acyclic graph, where a target is any
/// copy of the original block `target`.
pub fn find_paths(cfg: &Cfg, target: BlockId, limit: usize) -> PathSet {
    let n = cfg.len();
    let is_target = |b: BlockId| cfg.block(b).origin == target;
    // Blocks from which a target copy is reachable.
    let preds = cfg.predecessors();
    let mut useful = vec![false; n];
    let mut stack: Vec<BlockId> = (0..n).filter(|&b| is_target(b)).collect();
    while let Some(b) = stack.pop() {
        if std::mem::replace(&mut useful[b], true) {
            continue;
        }
        stack.extend(preds[b].iter().copied());
    }

    let mut out = PathSet::default();
    if n == 0 || !useful[cfg.entry] {
        return out;
    }
    let mut blocks = vec![cfg.entry];
    let mut edges: Vec<EdgeKind> = Vec::new();
    // Iterator position into each path block's successor list.
    let mut cursor = vec![0usize];
    while let Some(&b) = blocks.last() {
        if is_target(b) && *cursor.last().unwrap() == 0 {
            if out.paths.len() >= limit {
                out.truncated = true;
                break;
            }
            let branch_points = blocks
                .iter()
                .zip(&edges)
                .filter(|&(_, k)| matches!(k, EdgeKind::BranchTrue | EdgeKind::BranchFalse))
                .map(|(&b, &k)| (b, k))
                .collect();
            out.paths.push(Path { blocks: blocks.clone(), branch_points });
            // A target copy ends the path.
            blocks.pop();
            cursor.pop();
            edges.pop();
            continue;
        }
        let i = cursor.last_mut().unwrap();
        let succ = &cfg.block(b).successors;
        match succ.get(*i) {
            Some(&(s, k)) => {
                *i += 1;
                if useful[s] {
                    blocks.push(s);
                    edges.push(k);
                    cursor.push(0);
                }
            }
            None => {
                blocks.pop();
                cursor.pop();
                edges.pop();
            }
        }
    }
    out
}
