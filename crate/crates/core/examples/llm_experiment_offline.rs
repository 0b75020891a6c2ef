//! The guided-vs-vanilla experiment with an in-process model and tester.
//!
//! A real run points `HttpCompletionSource` at an OpenAI-compatible endpoint
//! and uses `CommandTester`; see `counteract llm-experiment --help`.
//!
//! `cargo run --example llm_experiment_offline`

use std::collections::BTreeMap;

use counteract::llm::{run_experiment, CompletionSource, ExperimentCase, ExperimentConfig, PromptCase, Tester};
use counteract::planner::{Directive, Plan, PlanOrigin};
use counteract::preprocess::Interval;

/// Pretends to be a model that only fixes the bug when told which metric to change.
struct ToyModel;

impl CompletionSource for ToyModel {
    fn complete(&self, prompt: &str, n: usize) -> counteract::Result<Vec<String>> {
        let fix = if prompt.contains("NUMPAR:") { "fixed" } else { "unchanged" };
        Ok(vec![fix.to_string(); n])
    }
}

struct Grep;

impl Tester for Grep {
    fn test(&self, case: &PromptCase, completion: &str) -> counteract::Result<bool> {
        // Every third bug is easy enough for either condition.
        let easy = case.case_id.ends_with(['0', '3', '6', '9']);
        Ok(easy || completion == "fixed")
    }
}

fn main() -> counteract::Result<()> {
    let cases: Vec<ExperimentCase> = (0..20)
        .map(|i| {
            let mut directives = BTreeMap::new();
            directives.insert(
                "NUMPAR".to_string(),
                Directive::move_to(Interval::new(1.025, 2.005).expect("valid interval")),
            );
            ExperimentCase::from_guided(PromptCase {
                case_id: format!("bug{i:02}"),
                buggy_code: format!("int f{i}(int a) {{ return a / 0; }}"),
                commit_message: "Avoid division by zero".into(),
                plan: Some(Plan { directives, origin: PlanOrigin::planner("counteract") }),
                template: "counteract-v1".into(),
            })
        })
        .collect::<counteract::Result<_>>()?;
    let mut audit = Vec::new();
    let r = run_experiment(&cases, &ToyModel, &Grep, ExperimentConfig::default(), &mut audit)?;
    let t = r.table;
    println!("                 vanilla pass  vanilla fail");
    println!("guided pass      {:>12}  {:>12}", t.pass_pass, t.pass_fail);
    println!("guided fail      {:>12}  {:>12}", t.fail_pass, t.fail_fail);
    println!("McNemar exact p = {:.4e}", r.mcnemar.p_value);
    println!("{} audit lines", String::from_utf8_lossy(&audit).lines().count());
    Ok(())
}
