//! Commit-level run: chronological split, fix pairing, chunked actionable
//! selection and correlation pruning before mining.
//!
//! `cargo run --example commit_pipeline`

use counteract::pipeline::{evaluate, mine, plan_all, Level, Prepared, RunConfig};
use counteract::synth::{planted_commits, PlantedCommitConfig};

fn main() -> counteract::Result<()> {
    let log = planted_commits(&PlantedCommitConfig::default());
    let config = RunConfig {
        level: Level::Commit,
        test_size: 60,
        holdout_months: 2,
        ..RunConfig::default()
    };
    let prepared = Prepared::from_commits("planted-commits", &log, &config)?;
    if let Some(p) = &prepared.pruning {
        println!("retained {:?}, dropped {:?}", p.retained, p.dropped);
    }
    println!(
        "{} training records, {} test commits, {} paired with a fix, actionable {:?}",
        prepared.train_rows.len(),
        prepared.instances.len(),
        prepared.outcomes.len(),
        prepared.actionable.selected
    );
    let model = mine(&prepared, &config)?;
    println!("{} action rules", model.rules.len());
    let plans = plan_all(&prepared, &model.scheme, &model.rules, &config)?;
    let report = evaluate(&prepared, &model.scheme, &plans, &config)?;
    print!("{}", report.to_markdown());
    Ok(())
}
