//! Transparent defect-reduction planning from mined action rules.
//!
//! The crate mines classification rules over discretized software metrics,
//! pairs them into action rules (`stable ∧ (from → to) ⇒ bug → no-bug`) and
//! turns matching rules into per-region improvement plans. Plans are scored
//! against what developers actually changed in the next release or commit.

mod error;

pub mod actionable;
pub mod dataset;
pub mod eval;
pub mod llm;
pub mod mining;
pub mod pipeline;
pub mod planner;
pub mod preprocess;
pub mod synth;

pub use error::{Error, Result};
