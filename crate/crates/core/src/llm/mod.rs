//! Turning plans into bug-fix prompts for a code model, and comparing
//! plan-guided against plain prompts on the same bugs.

mod client;
mod experiment;
mod prompt;

pub use client::{parse_choices, CompletionSource, EndpointConfig, HttpCompletionSource};
pub use experiment::{
    run_experiment, scrub, AuditRecord, CaseResult, CommandTester, ContingencyTable, ErroredCase, ExperimentCase,
    ExperimentConfig, ExperimentResult, Tester,
};
pub use prompt::{render_prompt, transition_lines, PromptCase, DEFAULT_TEMPLATE, TEMPLATES};
