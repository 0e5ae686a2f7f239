//! Deterministic interpreter for the supported opcode subset.
//!
//! Calls to accounts without code succeed with zeroed return data. Calls to
//! harness accounts can synchronously re-enter the analyzed contract under
//! [`ReentryPolicy::Once`]. Stack values and memory bytes carry [`Taint`]
//! bits so call records can classify where targets and arguments came from.

mod interp;
mod trace;
mod world;

pub use interp::{execute, execute_in_place, ExecConfig, ReentryPolicy, DEFAULT_MAX_STEPS};
pub use trace::*;
pub use world::*;
