//! The three threshold planners fitted on one planted release.
//!
//! `cargo run --example threshold_baselines`

use counteract::planner::{
    alves_thresholds, oliveira_thresholds, shatnawi_thresholds, threshold_plan, AlvesConfig, OliveiraConfig,
    ShatnawiConfig,
};
use counteract::synth::{planted_releases, PlantedConfig};

fn main() -> counteract::Result<()> {
    let [release, _, _] = planted_releases(&PlantedConfig { features: 4, ..PlantedConfig::default() });
    let (features, rows, labels) = (&release.features, release.rows(), release.labels());
    let fitted = [
        alves_thresholds(features, &rows, &AlvesConfig { weight_feature: None, ..AlvesConfig::default() })?,
        shatnawi_thresholds(features, &rows, &labels, &ShatnawiConfig::default())?,
        oliveira_thresholds(features, &rows, &OliveiraConfig::default())?,
    ];
    for t in &fitted {
        println!("{:?}", t.method);
        for (f, g) in &t.thresholds {
            println!("  {f} <= {g:.3}");
        }
        for (f, why) in &t.exempt {
            println!("  {f}: no threshold ({why})");
        }
    }
    let buggy = release.records.iter().find(|r| r.bug_count > 0).expect("planted data has bugs");
    println!("\nplans for {} {:?}:", buggy.region_id, buggy.metrics);
    for t in &fitted {
        println!("{:?}:\n{}", t.method, threshold_plan(features, &buggy.metrics, t).render());
    }
    Ok(())
}
