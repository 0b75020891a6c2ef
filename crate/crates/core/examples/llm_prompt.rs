//! Guided and vanilla bug-fix prompts for one plan.
//!
//! `cargo run --example llm_prompt`

use counteract::llm::{render_prompt, PromptCase};
use counteract::planner::{Directive, Plan, PlanOrigin};
use counteract::preprocess::Interval;

fn main() -> counteract::Result<()> {
    let features = vec!["NUMPAR".to_string(), "LOC".to_string()];
    let mut plan = Plan::no_change(&features, PlanOrigin::planner("counteract"));
    plan.directives.insert(
        "NUMPAR".into(),
        Directive::MoveTo {
            target: Interval::new(1.025, 2.005)?,
            from: Some(Interval::new(0.995, 1.005)?),
        },
    );
    let case = PromptCase {
        case_id: "KAFKA-0001".into(),
        buggy_code: "public void close() {\n    close(Long.MAX_VALUE);\n}".into(),
        commit_message: "Make close() honour the configured timeout".into(),
        plan: Some(plan),
        template: "counteract-v1".into(),
    };
    println!("--- guided ---\n{}", render_prompt(&case)?);
    println!("--- vanilla ---\n{}", render_prompt(&case.vanilla())?);
    Ok(())
}
