//! Candidate plans from action rules, plan selection against past fixes,
//! and scoring a plan by overlap with what happened next.
//!
//! `cargo run --example plan_and_overlap`

use counteract::planner::{candidate_plans, overlap, select_plan, Directive, PastFix, Plan, PlanOrigin, RuleModel};
use counteract::preprocess::{DiscretizationScheme, Interval};

fn main() -> counteract::Result<()> {
    // A four-metric region and what it looked like one release later.
    let features: Vec<String> = ["AMC", "LOC", "LCOM", "CBO"].iter().map(|s| s.to_string()).collect();
    let scheme = DiscretizationScheme::new(
        features.clone(),
        vec![vec![1.5], vec![470.0, 520.0], vec![0.4], vec![3.0]],
    )?;
    let mut plan = Plan::no_change(&features, PlanOrigin::planner("hand"));
    plan.directives.insert("LOC".into(), Directive::move_to(Interval::new(470.0, 520.0)?));
    plan.directives.insert("LCOM".into(), Directive::move_to(Interval::new(0.0, 0.4)?));
    let before = [2.13, 504.0, 0.9, 5.0];
    let after = [2.13, 530.0, 0.3, 2.0];
    println!("plan:\n{}", plan.render());
    println!("overlap with the next release: {}", overlap(&plan, &before, &after, &scheme));

    // Two rules of the toy data set give two candidates for one region.
    let toy = counteract::synth::two_rule_toy();
    let data = counteract::preprocess::discretize(&toy.scheme, &toy.features, &toy.rows, &toy.labels)?;
    let rules = counteract::mining::mine_rules(&data, &counteract::mining::MiningConfig {
        min_confidence: 0.3,
        ..Default::default()
    })?;
    let actions = counteract::mining::pair_action_rules(&rules, &[0, 1].into(), true, false)?;
    let model = RuleModel::new(toy.features.clone(), &toy.scheme, actions)?;
    let region = [2.0, 30.0];
    let candidates = candidate_plans(&model, &region);
    println!("\n{} candidate plans for avg_cc=2.0, cbo=30:", candidates.len());
    // Past fixes lowered cbo and left avg_cc alone.
    let fixes = vec![
        PastFix { before: vec![2.2, 25.0], after: vec![2.1, 9.0] },
        PastFix { before: vec![1.8, 31.0], after: vec![1.9, 12.0] },
        PastFix { before: vec![2.5, 18.0], after: vec![1.2, 6.0] },
    ];
    let sel = select_plan(&candidates, &fixes, &toy.scheme, 0)?;
    for (i, (p, s)) in candidates.iter().zip(&sel.scores).enumerate() {
        let mark = if i == sel.index { "*" } else { " " };
        println!("{mark} median overlap {s:.2}: {}", p.render().replace('\n', "; "));
    }
    Ok(())
}
