//! Classification rules and action rules on the two-rule toy set.
//!
//! `cargo run --example mine_action_rules`

use std::collections::BTreeSet;

use counteract::mining::{mine_rules, pair_action_rules, score_uplift, MiningConfig};
use counteract::preprocess::discretize;
use counteract::synth::two_rule_toy;

fn main() -> counteract::Result<()> {
    let toy = two_rule_toy();
    let data = discretize(&toy.scheme, &toy.features, &toy.rows, &toy.labels)?;
    let rules = mine_rules(&data, &MiningConfig::default())?;
    println!("{} classification rules (min_supp 0.05, min_conf 0.55):", rules.len());
    for r in &rules {
        let ante: Vec<String> = r
            .antecedent
            .iter()
            .map(|it| format!("{}={}", toy.features[it.feature], toy.scheme.interval(it.feature, it.bin)))
            .collect();
        let class = if r.consequent { "bug" } else { "clean" };
        println!("  #{:<2} {} => {class}  supp {:.3} conf {:.3}", r.id, ante.join(" ∧ "), r.support, r.confidence);
    }

    // Only `cbo` may change; `avg_cc` must stay put.
    let flexible = BTreeSet::from([1]);
    let mut actions = pair_action_rules(&rules, &flexible, true, false)?;
    score_uplift(&mut actions, &data);
    println!("\n{} action rules (bug -> clean):", actions.len());
    for a in &actions {
        let stable: Vec<String> = a
            .stable
            .iter()
            .map(|it| format!("{}={}", toy.features[it.feature], toy.scheme.interval(it.feature, it.bin)))
            .collect();
        let moves: Vec<String> = a
            .flexible
            .iter()
            .map(|t| {
                format!(
                    "{}: {} -> {}",
                    toy.features[t.feature],
                    toy.scheme.interval(t.feature, t.from),
                    toy.scheme.interval(t.feature, t.to)
                )
            })
            .collect();
        println!(
            "  [{}] {}  supp {:.4} conf {:.4} uplift {:.3}",
            stable.join(" ∧ "),
            moves.join(", "),
            a.support,
            a.confidence,
            a.uplift.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
