//! MDLP cut points and SMOTE rebalancing on a planted release.
//!
//! `cargo run --example discretize_and_rebalance`

use counteract::preprocess::{discretize, fit_scheme, smote, MdlpMode, SmoteConfig};
use counteract::synth::{planted_releases, PlantedConfig};

fn main() -> counteract::Result<()> {
    let [release, _, _] = planted_releases(&PlantedConfig::default());
    let rows = release.rows();
    let labels = release.labels();
    let buggy = labels.iter().filter(|l| **l).count();
    println!("{}: {} regions, {} buggy", release.project, rows.len(), buggy);

    for mode in [MdlpMode::Strict, MdlpMode::Relaxed] {
        let scheme = fit_scheme(&release.features, &rows, &labels, mode)?;
        println!("\nMDLP {mode:?}, fingerprint {}", &scheme.fingerprint()[..12]);
        for (j, f) in release.features.iter().enumerate() {
            let bins: Vec<String> = (0..scheme.n_bins(j)).map(|b| scheme.interval(j, b).to_string()).collect();
            println!("  {f}: {}", bins.join(" "));
        }
    }

    let scheme = fit_scheme(&release.features, &rows, &labels, MdlpMode::Strict)?;
    let balanced = smote(&rows, &labels, SmoteConfig { seed: 7, ..SmoteConfig::default() })?;
    let pos = balanced.labels.iter().filter(|l| **l).count();
    println!(
        "\nSMOTE k=5: {} synthetic rows, classes now {} / {}",
        balanced.n_synthetic,
        pos,
        balanced.labels.len() - pos
    );
    let data = discretize(&scheme, &release.features, &balanced.rows, &balanced.labels)?;
    let high_f0 = data.rows.iter().zip(&data.labels).filter(|(r, l)| **l && r[0] == 1).count();
    println!("buggy rows with f0 in its top bin after rebalancing: {high_f0} of {pos}");
    Ok(())
}
