//! State targets: storage value ranges under which a code target is reachable.
//!
//! Every entry-to-target path through the unrolled CFG contributes the
//! conjunction of its branch constraints; the per-path solutions together
//! form the disjunction over paths.

mod backward;
mod constraint;
mod interval;
mod paths;
mod solver;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use backward::{
    backward_branch_constraints, reconstruct_condition, reconstruct_operand, BackwardStep, Reconstruction,
};
pub use constraint::{CmpOp, Conjunct, Constraint, DNF_LIMIT};
pub use interval::IntervalSet;
pub use paths::{find_paths, Path, PathSet, DEFAULT_PATH_LIMIT};
pub use solver::{relation_set, solve, solve_conjunct, SlotRanges, Solution};

use crate::bytecode::{unroll_loops_with_budget, BlockId, Cfg, EdgeKind, DEFAULT_BLOCK_BUDGET, DEFAULT_UNROLL_BOUND};
use crate::symbolic::SymExpr;
use crate::targets::{BugClass, CodeTarget};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alternative {
    /// Index of the contributing path.
    pub path: usize,
    pub ranges: SlotRanges,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateTarget {
    pub bug_class: BugClass,
    pub anchor_pc: usize,
    pub block_id: BlockId,
    /// Per-slot hull of the alternatives, over slots all of them constrain.
    pub ranges: SlotRanges,
    pub satisfiable: bool,
    pub alternatives: Vec<Alternative>,
    pub paths: usize,
    pub paths_truncated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl StateTarget {
    fn empty(t: &CodeTarget, satisfiable: bool) -> Self {
        Self {
            bug_class: t.bug_class,
            anchor_pc: t.anchor_pc,
            block_id: t.block_id,
            ranges: SlotRanges::new(),
            satisfiable,
            alternatives: Vec::new(),
            paths: 0,
            paths_truncated: false,
            diagnostic: None,
        }
    }

    /// Usable for state guidance.
    pub fn is_active(&self) -> bool {
        self.satisfiable && self.diagnostic.is_none()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateAnalysisConfig {
    pub unroll_bound: usize,
    pub block_budget: usize,
    pub path_limit: usize,
}

impl Default for StateAnalysisConfig {
    fn default() -> Self {
        Self { unroll_bound: DEFAULT_UNROLL_BOUND, block_budget: DEFAULT_BLOCK_BUDGET, path_limit: DEFAULT_PATH_LIMIT }
    }
}

/// Conjunction of the branch constraints along `path`.
pub fn path_constraint(cfg: &Cfg, path: &Path) -> Constraint {
    path_constraint_cached(cfg, path, &mut HashMap::new())
}

fn path_constraint_cached(cfg: &Cfg, path: &Path, cache: &mut HashMap<Vec<BlockId>, SymExpr>) -> Constraint {
    let mut parts = Vec::new();
    for &(b, dir) in &path.branch_points {
        let idx = path.blocks.iter().position(|&x| x == b).unwrap();
        let key = path.blocks[..=idx].to_vec();
        let cond = cache
            .entry(key)
            .or_insert_with(|| reconstruct_condition(cfg, path, idx).condition)
            .clone();
        parts.push(if dir == EdgeKind::BranchTrue { Constraint::NonZero(cond) } else { Constraint::Zero(cond) });
    }
    Constraint::And(parts)
}

pub fn derive_state_target(unrolled: &Cfg, target: &CodeTarget, path_limit: usize) -> StateTarget {
    if target.whole_contract {
        return StateTarget::empty(target, true);
    }
    let set = find_paths(unrolled, target.block_id, path_limit);
    let mut st = StateTarget::empty(target, false);
    st.paths = set.paths.len();
    st.paths_truncated = set.truncated;
    let mut cache = HashMap::new();
    for (i, p) in set.paths.iter().enumerate() {
        let sol = solve(&path_constraint_cached(unrolled, p, &mut cache));
        for ranges in sol.alternatives {
            if !st.alternatives.iter().any(|a| a.ranges == ranges) {
                st.alternatives.push(Alternative { path: i, ranges });
            }
        }
    }
    st.satisfiable = !st.alternatives.is_empty();
    let hull = Solution { alternatives: st.alternatives.iter().map(|a| a.ranges.clone()).collect(), ..Default::default() };
    st.ranges = hull.hull();
    st
}

/// State targets for every code target; an unrolling failure degrades each
/// affected target to code-only guidance with a diagnostic.
pub fn analyze_state_targets(cfg: &Cfg, targets: &[CodeTarget], config: &StateAnalysisConfig) -> Vec<StateTarget> {
    match unroll_loops_with_budget(cfg, config.unroll_bound, config.block_budget) {
        Ok(unrolled) => targets.par_iter().map(|t| derive_state_target(&unrolled, t, config.path_limit)).collect(),
        Err(e) => targets
            .iter()
            .map(|t| {
                let mut st = StateTarget::empty(t, t.whole_contract);
                if !t.whole_contract {
                    st.diagnostic = Some(e.to_string());
                }
                st
            })
            .collect(),
    }
}
