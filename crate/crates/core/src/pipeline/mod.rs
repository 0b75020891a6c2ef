//! End-to-end runs: ingest, actionable selection, discretization, SMOTE,
//! mining, planning and evaluation, with every artifact written to one run
//! directory alongside a `manifest.json`.
//!
//! All randomness flows from the single master seed through [`stage_seed`].

mod config;
mod llm_cmd;
mod prepare;
mod run;
mod stages;
mod sweep;

pub use config::{stage_seed, Level, PlannerKind, RunConfig};
pub use llm_cmd::{cmd_llm_experiment, cmd_llm_prompt, llm_experiment_with, load_cases, AUDIT, EXPERIMENT};
pub use prepare::{Change, Instance, Outcome, Prepared};
pub use run::{
    cmd_compare, cmd_evaluate, cmd_mine, cmd_plan, evaluate_prepared, mine_prepared, plan_prepared, run_all,
    run_prepared, sha256_hex, Manifest, MineSummary, ACTIONABLE, COMPARISON, MANIFEST, PLANS, REPORT_JSON,
    REPORT_MD, RULES, SCHEME,
};
pub use stages::{evaluate, mine, plan_all, InstancePlan, MinedModel, PlanSet, PlannerPlans, Skipped};
pub use sweep::{planted_sweep, SweepRun, SweepSummary};

/// Exit code when a run completed but evaluated no instance.
pub const EXIT_NOTHING_EVALUATED: i32 = 1;
