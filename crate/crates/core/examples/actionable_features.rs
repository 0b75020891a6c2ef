//! Ranking metrics by how much developers changed them between releases.
//!
//! `cargo run --example actionable_features`

use counteract::actionable::{select_actionable, RankBy};
use counteract::synth::{planted_releases, PlantedConfig};

fn main() -> counteract::Result<()> {
    let [prev, test, _] = planted_releases(&PlantedConfig::default());
    let sel = select_actionable(&prev.features, &prev.rows(), &test.rows(), 3, RankBy::HedgesG)?;
    println!("feature   mean(t-1)  mean(t)   sd(t-1)  sd(t)    g");
    for s in &sel.ranked {
        println!(
            "{:<8} {:>9.3} {:>8.3} {:>8.3} {:>7.3} {:>7.3}",
            s.feature, s.mu_a, s.mu_b, s.sigma_a, s.sigma_b, s.g
        );
    }
    println!("\ntop 3 by |g|: {:?}", sel.selected);
    Ok(())
}
